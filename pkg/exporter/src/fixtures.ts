/**
 * Deterministic generator for the reduced-width test model: a 13-conv encoder
 * stack (8/16/16/32/32 channels) whose decoders are exact linear inverses, so
 * reconstruction tests have a tight oracle without real checkpoints.
 *
 * Everything is seeded mulberry32 and plain double-precision arithmetic in a
 * fixed operation order — only the four basic operations and sqrt — with
 * float32 rounding applied once at serialization. Regenerating with the same
 * seed must reproduce the committed fixture files byte for byte.
 */

import {
  ChannelPlan,
  ENC_ORDER,
  FIXTURE_CHANNELS,
  LEVELS,
  allSpecs,
  decoderOrder,
} from "./netspec.js";
import { Tensor, writeContainer } from "./format.js";

export const DEFAULT_SEED = 1234;

export const FIXTURE_METADATA: [string, string][] = [
  ["mean", "0.42,0.48,0.45"],
  ["channel_order", "bgr"],
  ["note", "reduced-width synthetic test model"],
];

/** mulberry32: tiny 32-bit PRNG, identical across JS/Python ports. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1) >>> 0;
    t = (((t + (Math.imul(t ^ (t >>> 7), t | 61) >>> 0)) >>> 0) ^ t) >>> 0;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

type Rng = () => number;
type Matrix = number[][];

function uniform(rand: Rng, lo: number, hi: number): number {
  return lo + (hi - lo) * rand();
}

function mat(rows: number, cols: number, fill: () => number): Matrix {
  const out: Matrix = [];
  for (let i = 0; i < rows; i++) {
    const row: number[] = [];
    for (let j = 0; j < cols; j++) {
      row.push(fill());
    }
    out.push(row);
  }
  return out;
}

export function matmul(a: Matrix, b: Matrix): Matrix {
  const n = a.length;
  const k = b.length;
  const m = b[0].length;
  const out: Matrix = [];
  for (let i = 0; i < n; i++) {
    const row = new Array<number>(m).fill(0);
    for (let j = 0; j < m; j++) {
      let acc = 0;
      for (let t = 0; t < k; t++) {
        acc += a[i][t] * b[t][j];
      }
      row[j] = acc;
    }
    out.push(row);
  }
  return out;
}

export function transpose(a: Matrix): Matrix {
  const out: Matrix = [];
  for (let j = 0; j < a[0].length; j++) {
    const col: number[] = [];
    for (let i = 0; i < a.length; i++) {
      col.push(a[i][j]);
    }
    out.push(col);
  }
  return out;
}

/** Gauss-Jordan inverse with partial pivoting. Throws on a singular matrix. */
export function gaussJordanInverse(a: Matrix): Matrix {
  const n = a.length;
  const aug: Matrix = a.map((row, i) => {
    const r = row.slice();
    for (let j = 0; j < n; j++) {
      r.push(j === i ? 1 : 0);
    }
    return r;
  });
  for (let col = 0; col < n; col++) {
    let pivot = col;
    let best = Math.abs(aug[col][col]);
    for (let r = col + 1; r < n; r++) {
      const v = Math.abs(aug[r][col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best === 0) {
      throw new Error("singular matrix");
    }
    if (pivot !== col) {
      const tmp = aug[col];
      aug[col] = aug[pivot];
      aug[pivot] = tmp;
    }
    const pv = aug[col][col];
    const row = aug[col];
    for (let j = 0; j < 2 * n; j++) {
      row[j] /= pv;
    }
    for (let r = 0; r < n; r++) {
      if (r === col) {
        continue;
      }
      const f = aug[r][col];
      if (f === 0) {
        continue;
      }
      const rr = aug[r];
      for (let j = 0; j < 2 * n; j++) {
        rr[j] -= f * row[j];
      }
    }
  }
  return aug.map((row) => row.slice(n));
}

/** Gram-Schmidt on uniform(-1,1) columns, in column order. Returns rows x cols. */
export function orthonormalColumns(
  rand: Rng,
  rows: number,
  cols: number,
): Matrix {
  const a = mat(rows, cols, () => uniform(rand, -1, 1));
  const colsList = transpose(a);
  const q: Matrix = [];
  for (const src of colsList) {
    const v = src.slice();
    for (const u of q) {
      let dot = 0;
      for (let i = 0; i < rows; i++) {
        dot += u[i] * v[i];
      }
      for (let i = 0; i < rows; i++) {
        v[i] -= dot * u[i];
      }
    }
    let normSq = 0;
    for (const x of v) {
      normSq += x * x;
    }
    const norm = Math.sqrt(normSq);
    q.push(v.map((x) => x / norm));
  }
  return transpose(q);
}

/** 0.7*I + 0.3*S with S row-stochastic uniform: nonnegative, invertible. */
export function diagDominant(rand: Rng, n: number): Matrix {
  const s = mat(n, n, () => uniform(rand, 0, 1));
  for (const row of s) {
    let total = 0;
    for (const x of row) {
      total += x;
    }
    for (let j = 0; j < n; j++) {
      row[j] = (row[j] / total) * 0.3;
    }
  }
  for (let i = 0; i < n; i++) {
    s[i][i] += 0.7;
  }
  return s;
}

function biasVec(rand: Rng, n: number): number[] {
  const out: number[] = [];
  for (let i = 0; i < n; i++) {
    out.push(uniform(rand, 0, 0.04));
  }
  return out;
}

function negMatvec(m: Matrix, v: number[]): number[] {
  const out: number[] = [];
  for (let i = 0; i < m.length; i++) {
    let acc = 0;
    for (let j = 0; j < v.length; j++) {
      acc += m[i][j] * v[j];
    }
    out.push(-acc);
  }
  return out;
}

function stack(a: Matrix, b: Matrix): Matrix {
  return a.map((r) => r.slice()).concat(b.map((r) => r.slice()));
}

/** (E^T E)^-1 E^T for a tall full-column-rank E. */
export function pinvTall(e: Matrix): Matrix {
  const et = transpose(e);
  return matmul(gaussJordanInverse(matmul(et, e)), et);
}

/** Embed an (out, in) matrix as the center tap of a float32 3x3 kernel. */
function centerTap(matrix: Matrix): Tensor["data"] {
  const outC = matrix.length;
  const inC = matrix[0].length;
  const data = new Float32Array(outC * inC * 9);
  for (let o = 0; o < outC; o++) {
    for (let i = 0; i < inC; i++) {
      data[((o * inC + i) * 3 + 1) * 3 + 1] = matrix[o][i];
    }
  }
  return data;
}

function kernelShape(matrix: Matrix): number[] {
  return [matrix.length, matrix[0].length, 3, 3];
}

/** All 88 tensors of the fixture model, in serialization order. */
export function fixtureTensors(seed: number): Tensor[] {
  const rand = mulberry32(seed);

  const m = orthonormalColumns(rand, 4, 3); // conv1_1 half
  const enc = new Map<string, { w: Matrix; b: number[] }>();
  // [M; -M] splits each input channel into +/- relu lanes, losslessly
  enc.set("conv1_1", {
    w: stack(
      m,
      m.map((row) => row.map((x) => -x)),
    ),
    b: [0, 0, 0, 0, 0, 0, 0, 0],
  });
  enc.set("conv1_2", { w: diagDominant(rand, 8), b: biasVec(rand, 8) });
  enc.set("conv2_1", {
    w: stack(diagDominant(rand, 8), diagDominant(rand, 8)),
    b: biasVec(rand, 16),
  });
  enc.set("conv2_2", { w: diagDominant(rand, 16), b: biasVec(rand, 16) });
  enc.set("conv3_1", { w: diagDominant(rand, 16), b: biasVec(rand, 16) });
  enc.set("conv3_2", { w: diagDominant(rand, 16), b: biasVec(rand, 16) });
  enc.set("conv3_3", { w: diagDominant(rand, 16), b: biasVec(rand, 16) });
  enc.set("conv3_4", { w: diagDominant(rand, 16), b: biasVec(rand, 16) });
  enc.set("conv4_1", {
    w: stack(diagDominant(rand, 16), diagDominant(rand, 16)),
    b: biasVec(rand, 32),
  });
  enc.set("conv4_2", { w: diagDominant(rand, 32), b: biasVec(rand, 32) });
  enc.set("conv4_3", { w: diagDominant(rand, 32), b: biasVec(rand, 32) });
  enc.set("conv4_4", { w: diagDominant(rand, 32), b: biasVec(rand, 32) });
  enc.set("conv5_1", { w: diagDominant(rand, 32), b: biasVec(rand, 32) });

  const mirror = (name: string): { w: Matrix; b: number[] } => {
    const { w, b } = enc.get(name)!;
    if (name === "conv1_1") {
      // [M^T | -M^T] undoes the [M; -M] relu coding exactly
      const inv = transpose(m).map((r) => r.concat(r.map((x) => -x)));
      return { w: inv, b: [0, 0, 0] };
    }
    const inv =
      w.length === w[0].length ? gaussJordanInverse(w) : pinvTall(w);
    return { w: inv, b: negMatvec(inv, b) };
  };

  const tensors: Tensor[] = [];
  for (const name of ENC_ORDER) {
    const { w, b } = enc.get(name)!;
    tensors.push({
      name: `${name}.weight`,
      shape: kernelShape(w),
      data: centerTap(w),
    });
    tensors.push({
      name: `${name}.bias`,
      shape: [b.length],
      data: Float32Array.from(b),
    });
  }
  for (const level of LEVELS) {
    const order = decoderOrder(level);
    for (let j = 1; j <= order.length; j++) {
      const { w, b } = mirror(order[j - 1]);
      tensors.push({
        name: `dec${level}.conv${j}.weight`,
        shape: kernelShape(w),
        data: centerTap(w),
      });
      tensors.push({
        name: `dec${level}.conv${j}.bias`,
        shape: [b.length],
        data: Float32Array.from(b),
      });
    }
  }
  return tensors;
}

/** Container bytes for the fixture model at a seed. */
export function fixtureContainer(seed: number): Buffer {
  return writeContainer(fixtureTensors(seed), FIXTURE_METADATA);
}

/** The model-directory files: weights.wctw plus the ten reduced-width specs. */
export function fixtureFiles(
  seed: number,
  plan: ChannelPlan = FIXTURE_CHANNELS,
): Map<string, Buffer> {
  const out = new Map<string, Buffer>();
  out.set("weights.wctw", fixtureContainer(seed));
  for (const [stem, text] of allSpecs(plan)) {
    out.set(`${stem}.txt`, Buffer.from(text, "utf-8"));
  }
  return out;
}
