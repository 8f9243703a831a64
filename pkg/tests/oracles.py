"""Independent reference implementations the engine is checked against.

Deliberately written the dumb, obvious way — explicit loops, explicit padding,
no shared code with the package — so agreement actually means something.
"""

import numpy as np


def covariance_brute(values):
    """O(C^2 N) double loop over channel pairs, (N-1)-normalized."""
    v = np.asarray(values, dtype=np.float64)
    c, n = v.shape
    means = [sum(v[i]) / n for i in range(c)]
    out = np.zeros((c, c))
    for i in range(c):
        for j in range(c):
            acc = 0.0
            for k in range(n):
                acc += (v[i, k] - means[i]) * (v[j, k] - means[j])
            out[i, j] = acc / (n - 1)
    return out


def conv3x3_reference(x, weight, bias, pad_mode):
    """Per-output-pixel window sums over an explicitly padded input."""
    x = np.asarray(x, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    if pad_mode == "zero":
        padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    else:
        padded = np.pad(x, ((0, 0), (1, 1), (1, 1)), mode="reflect")
    co = weight.shape[0]
    _, h, w = x.shape
    out = np.zeros((co, h, w))
    for o in range(co):
        for y in range(h):
            for xx in range(w):
                out[o, y, xx] = np.sum(weight[o] * padded[:, y : y + 3, xx : xx + 3])
            out[o, y] += bias[o]
    return out


def maxpool2_reference(x):
    x = np.asarray(x)
    c, h, w = x.shape
    out = np.empty((c, h // 2, w // 2), dtype=x.dtype)
    for ch in range(c):
        for y in range(h // 2):
            for xx in range(w // 2):
                out[ch, y, xx] = x[ch, 2 * y : 2 * y + 2, 2 * xx : 2 * xx + 2].max()
    return out


def top_eigenvalues(sym, k, seed=0, max_iters=200_000, tol=1e-13):
    """Top-k eigenvalues by shifted power iteration with deflation.

    The Gershgorin shift makes the matrix PSD so the dominant eigenvalue of the
    shifted matrix is the algebraically largest of the original. Each found
    eigenvector is projected out of all later iterates. Iteration stops on the
    residual ||Bv - rho v||, which for symmetric B directly bounds the distance
    from rho to the nearest true eigenvalue (Rayleigh increments flatten out
    long before convergence when the shift compresses the spectral gap).
    """
    s = np.asarray(sym, dtype=np.float64)
    n = s.shape[0]
    shift = float(np.abs(s).sum(axis=1).max())
    b = s + shift * np.eye(n)
    rng = np.random.default_rng(seed)
    basis = []
    found = []
    for _ in range(min(k, n)):
        v = rng.standard_normal(n)
        for u in basis:
            v -= (u @ v) * u
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iters):
            w = b @ v
            for u in basis:
                w -= (u @ w) * u
            rayleigh = float(v @ w)
            resid = float(np.linalg.norm(w - rayleigh * v))
            nrm = float(np.linalg.norm(w))
            if nrm == 0.0:
                lam = 0.0
                break
            v = w / nrm
            lam = rayleigh
            if resid <= tol * max(1.0, abs(rayleigh)):
                break
        basis.append(v)
        found.append(lam - shift)
    return np.array(found)


def quantile_map_reference(sorted_style, positions):
    """Linear interpolation between order statistics, written out by hand."""
    out = np.empty(len(positions))
    last = len(sorted_style) - 1
    for i, p in enumerate(positions):
        lo = int(np.floor(p))
        hi = min(lo + 1, last)
        frac = p - lo
        out[i] = sorted_style[lo] * (1.0 - frac) + sorted_style[hi] * frac
    return out
