"""Declarative layer specs and the feed-forward engine (encoders and decoders).

A network is a text spec, one layer per line:

    preprocess
    conv3x3 reflect conv1_1.weight conv1_1.bias 3->64
    relu
    maxpool2
    upsample_nearest2
    postprocess

Encoders map an (H, W, 3) image to a (C, H', W') feature tensor; decoders map
features back to an image. conv3x3 is stride-1, pad-1 ("same" size) and is
evaluated as nine shifted GEMMs. Everything is float32 and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidArgumentError
from .validation import check_image, check_tensor3
from .weights import WeightStore

__all__ = [
    "LayerSpec",
    "Network",
    "parse_netspec",
    "build_network",
    "conv3x3",
    "relu",
    "maxpool2",
    "upsample_nearest2",
    "preprocess_image",
    "postprocess_tensor",
    "run_network",
    "encode",
    "decode",
    "reconstruction_loss",
]

_KINDS = ("preprocess", "postprocess", "conv3x3", "relu", "maxpool2", "upsample_nearest2")
_PAD_MODES = ("reflect", "zero")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    pad_mode: str | None = None
    weight_name: str | None = None
    bias_name: str | None = None
    in_channels: int | None = None
    out_channels: int | None = None


@dataclass(frozen=True)
class Network:
    """A parsed spec bound to a weight store's tensors and preprocessing metadata."""

    direction: str
    level: int
    layers: tuple[LayerSpec, ...]
    mean: np.ndarray
    channel_order: str


def parse_netspec(text: str, direction: str, level: int) -> tuple[LayerSpec, ...]:
    """Parse one network spec; validates grammar and channel chaining only."""
    if direction not in ("encoder", "decoder"):
        raise InvalidArgumentError(f"direction must be encoder or decoder, got {direction!r}")
    layers: list[LayerSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        if kind not in _KINDS:
            raise InvalidArgumentError(
                f"{direction}{level} line {lineno}: unknown layer kind {kind!r}"
            )
        if kind == "conv3x3":
            if len(fields) != 5:
                raise InvalidArgumentError(
                    f"{direction}{level} line {lineno}: conv3x3 needs "
                    f"'conv3x3 <pad> <weight> <bias> <in>-><out>', got {line!r}"
                )
            pad = fields[1]
            if pad not in _PAD_MODES:
                raise InvalidArgumentError(
                    f"{direction}{level} line {lineno}: pad mode must be one of "
                    f"{_PAD_MODES}, got {pad!r}"
                )
            if "->" not in fields[4]:
                raise InvalidArgumentError(
                    f"{direction}{level} line {lineno}: expected <in>-><out>, got {fields[4]!r}"
                )
            cin_s, cout_s = fields[4].split("->", 1)
            try:
                cin, cout = int(cin_s), int(cout_s)
            except ValueError:
                raise InvalidArgumentError(
                    f"{direction}{level} line {lineno}: bad channel counts {fields[4]!r}"
                ) from None
            if cin < 1 or cout < 1:
                raise InvalidArgumentError(
                    f"{direction}{level} line {lineno}: channel counts must be positive"
                )
            layers.append(LayerSpec("conv3x3", pad, fields[2], fields[3], cin, cout))
        else:
            if len(fields) != 1:
                raise InvalidArgumentError(
                    f"{direction}{level} line {lineno}: {kind} takes no arguments"
                )
            layers.append(LayerSpec(kind))
    _validate_chain(layers, direction, level)
    return tuple(layers)


def _validate_chain(layers: list[LayerSpec], direction: str, level: int) -> None:
    where = f"{direction}{level}"
    if not layers:
        raise InvalidArgumentError(f"{where}: network spec is empty")
    if direction == "encoder":
        if layers[0].kind != "preprocess" or any(l.kind == "preprocess" for l in layers[1:]):
            raise InvalidArgumentError(f"{where}: encoder must start with exactly one preprocess")
        if any(l.kind in ("postprocess", "upsample_nearest2") for l in layers):
            raise InvalidArgumentError(f"{where}: encoder cannot contain decoder layers")
        pools = sum(l.kind == "maxpool2" for l in layers)
    else:
        if layers[-1].kind != "postprocess" or any(l.kind == "postprocess" for l in layers[:-1]):
            raise InvalidArgumentError(f"{where}: decoder must end with exactly one postprocess")
        if any(l.kind in ("preprocess", "maxpool2") for l in layers):
            raise InvalidArgumentError(f"{where}: decoder cannot contain encoder layers")
        pools = sum(l.kind == "upsample_nearest2" for l in layers)
    if pools != level - 1:
        raise InvalidArgumentError(
            f"{where}: expected {level - 1} resolution changes for level {level}, found {pools}"
        )
    convs = [l for l in layers if l.kind == "conv3x3"]
    if not convs:
        raise InvalidArgumentError(f"{where}: network spec has no convolutions")
    # Encoders consume a 3-channel image; decoders start at whatever feature
    # width their first convolution declares and must land back on 3.
    channels = 3 if direction == "encoder" else convs[0].in_channels
    for l in convs:
        if l.in_channels != channels:
            raise InvalidArgumentError(
                f"{where}: conv {l.weight_name} expects {l.in_channels} input "
                f"channels but the chain carries {channels}"
            )
        channels = l.out_channels
    if direction == "decoder" and channels != 3:
        raise InvalidArgumentError(f"{where}: decoder must end at 3 channels, got {channels}")


def build_network(store: WeightStore, direction: str, level: int) -> Network:
    """Bind a spec to a store: checks tensors exist with the declared shapes."""
    if level not in (1, 2, 3, 4, 5):
        raise InvalidArgumentError(f"level must be 1..5, got {level}")
    layers = parse_netspec(store.netspec(direction, level), direction, level)
    for l in layers:
        if l.kind != "conv3x3":
            continue
        w = store.tensor(l.weight_name)
        b = store.tensor(l.bias_name)
        want = (l.out_channels, l.in_channels, 3, 3)
        if w.shape != want:
            raise ConfigurationError(
                f"{direction}{level}: tensor {l.weight_name!r} has shape {w.shape}, "
                f"spec demands {want}"
            )
        if b.shape != (l.out_channels,):
            raise ConfigurationError(
                f"{direction}{level}: tensor {l.bias_name!r} has shape {b.shape}, "
                f"spec demands ({l.out_channels},)"
            )
    return Network(direction, level, layers, store.mean(), store.channel_order())


def _network(store: WeightStore, direction: str, level: int) -> Network:
    key = (direction, level)
    net = store.networks_cache.get(key)
    if net is None:
        net = build_network(store, direction, level)
        store.networks_cache[key] = net
    return net


def conv3x3(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, pad_mode: str = "reflect") -> np.ndarray:
    """Stride-1 3x3 convolution with 1-pixel padding, as nine shifted GEMMs.

    Output position (y, x) sees input rows y-1..y+1 after padding, so spatial
    size is preserved. Reflect padding mirrors without repeating the edge pixel
    (falls back to edge replication on axes of length 1, where true reflection
    is undefined).
    """
    x = check_tensor3(x, "conv input")
    weight = np.asarray(weight, dtype=np.float32)
    bias = np.asarray(bias, dtype=np.float32)
    if weight.ndim != 4 or weight.shape[2:] != (3, 3):
        raise InvalidArgumentError(
            f"conv3x3 weight must be (out, in, 3, 3), got {weight.shape}"
        )
    cout, cin = weight.shape[:2]
    if x.shape[0] != cin:
        raise InvalidArgumentError(
            f"conv3x3 input has {x.shape[0]} channels, weight expects {cin}"
        )
    if bias.shape != (cout,):
        raise InvalidArgumentError(f"conv3x3 bias must be ({cout},), got {bias.shape}")
    if pad_mode not in _PAD_MODES:
        raise InvalidArgumentError(f"pad_mode must be one of {_PAD_MODES}, got {pad_mode!r}")
    _, h, w = x.shape
    if pad_mode == "zero":
        xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    else:
        mode_h = "reflect" if h > 1 else "edge"
        mode_w = "reflect" if w > 1 else "edge"
        xp = np.pad(x, ((0, 0), (1, 1), (0, 0)), mode=mode_h)
        xp = np.pad(xp, ((0, 0), (0, 0), (1, 1)), mode=mode_w)
    acc = np.zeros((cout, h * w), dtype=np.float32)
    for dy in range(3):
        for dx in range(3):
            patch = xp[:, dy : dy + h, dx : dx + w].reshape(cin, h * w)
            acc += weight[:, :, dy, dx] @ patch
    acc += bias[:, None]
    return acc.reshape(cout, h, w)


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(x, 0)."""
    return np.maximum(check_tensor3(x, "relu input"), np.float32(0.0))


def maxpool2(x: np.ndarray) -> np.ndarray:
    """2x2 max pooling, stride 2; an odd trailing row/column is dropped."""
    x = check_tensor3(x, "maxpool input")
    c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    if h2 == 0 or w2 == 0:
        raise InvalidArgumentError(
            f"maxpool2 needs at least 2x2 spatial input, got {h}x{w}"
        )
    blocks = x[:, : h2 * 2, : w2 * 2].reshape(c, h2, 2, w2, 2)
    return blocks.max(axis=(2, 4))


def upsample_nearest2(x: np.ndarray) -> np.ndarray:
    """Nearest-neighbor 2x upsampling: every pixel becomes a 2x2 block."""
    x = check_tensor3(x, "upsample input")
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def _channel_indices(order: str) -> tuple[int, int, int]:
    return (0, 1, 2) if order == "rgb" else (2, 1, 0)


def preprocess_image(img: np.ndarray, mean: np.ndarray, channel_order: str = "rgb") -> np.ndarray:
    """(H, W, 3) RGB image in [0, 1] -> mean-subtracted (3, H, W) network tensor."""
    img = check_image(img)
    idx = _channel_indices(channel_order)
    t = np.ascontiguousarray(img[:, :, idx].transpose(2, 0, 1))
    return t - np.asarray(mean, dtype=np.float32)[:, None, None]


def postprocess_tensor(x: np.ndarray, mean: np.ndarray, channel_order: str = "rgb") -> np.ndarray:
    """Inverse of preprocess_image, clamped to [0, 1]."""
    x = check_tensor3(x, "postprocess input")
    if x.shape[0] != 3:
        raise InvalidArgumentError(f"postprocess expects 3 channels, got {x.shape[0]}")
    t = x + np.asarray(mean, dtype=np.float32)[:, None, None]
    img = np.empty((x.shape[1], x.shape[2], 3), dtype=np.float32)
    for c, src in enumerate(_channel_indices(channel_order)):
        img[:, :, src] = t[c]
    return np.clip(img, 0.0, 1.0)


def run_network(net: Network, x: np.ndarray, store: WeightStore) -> np.ndarray:
    """Run the layer chain. Encoders take an image; decoders take a feature tensor."""
    for l in net.layers:
        if l.kind == "preprocess":
            x = preprocess_image(x, net.mean, net.channel_order)
        elif l.kind == "postprocess":
            x = postprocess_tensor(x, net.mean, net.channel_order)
        elif l.kind == "conv3x3":
            x = conv3x3(x, store.tensor(l.weight_name), store.tensor(l.bias_name), l.pad_mode)
        elif l.kind == "relu":
            x = relu(x)
        elif l.kind == "maxpool2":
            x = maxpool2(x)
        else:
            x = upsample_nearest2(x)
    return x


def encode(img: np.ndarray, level: int, store: WeightStore) -> np.ndarray:
    """Image -> deep feature tensor at the given level (1 = shallowest)."""
    net = _network(store, "encoder", level)
    return run_network(net, check_image(img), store)


def decode(feat: np.ndarray, level: int, store: WeightStore) -> np.ndarray:
    """Deep feature tensor at a level -> image in [0, 1]."""
    net = _network(store, "decoder", level)
    feat = check_tensor3(feat, "decoder input")
    first_conv = next(l for l in net.layers if l.kind == "conv3x3")
    if feat.shape[0] != first_conv.in_channels:
        raise InvalidArgumentError(
            f"decoder{level} expects {first_conv.in_channels} channels, "
            f"got {feat.shape[0]}"
        )
    return run_network(net, feat, store)


def reconstruction_loss(
    original: np.ndarray,
    reconstructed: np.ndarray,
    lam: float = 1.0,
    level: int = 5,
    store: WeightStore | None = None,
) -> float:
    """Pixel squared error plus lam * feature squared error at ``level``.

    Both terms are plain sums of squared differences (float64). With lam = 0
    the store is not touched; otherwise both images are encoded at ``level``.
    The default lam = 1.0 weights the two terms equally.
    """
    a = check_image(original, "original")
    b = check_image(reconstructed, "reconstructed")
    if a.shape != b.shape:
        raise InvalidArgumentError(f"image shapes differ: {a.shape} vs {b.shape}")
    lam = float(lam)
    if lam < 0:
        raise InvalidArgumentError(f"lam must be nonnegative, got {lam}")
    diff = b.astype(np.float64) - a.astype(np.float64)
    loss = float(np.sum(diff * diff))
    if lam > 0.0:
        if store is None:
            raise InvalidArgumentError("feature term requires a weight store")
        fa = encode(a, level, store).astype(np.float64)
        fb = encode(b, level, store).astype(np.float64)
        fdiff = fb - fa
        loss += lam * float(np.sum(fdiff * fdiff))
    return loss
