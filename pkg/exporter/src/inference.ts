/**
 * Reference encoder: a straightforward nested-loop evaluation of the layer
 * chain, independent of the engine's GEMM formulation, used to dump activation
 * tensors that cross-implementation tolerance tests compare against.
 *
 * Accumulation is double precision (the comparison tolerance absorbs the
 * difference from the engine's float32 accumulation); values are rounded to
 * float32 at every layer boundary, matching the engine's storage dtype.
 */

import { Tensor } from "./format.js";
import { Layer } from "./netspec.js";

export interface Image {
  height: number;
  width: number;
  /** Row-major H*W*3 RGB floats in [0, 1]. */
  data: Float32Array;
}

export interface Feature {
  c: number;
  h: number;
  w: number;
  /** Row-major (c, h, w) floats. */
  data: Float32Array;
}

export type ChannelOrder = "rgb" | "bgr";

/** 8-bit RGB bytes -> float image in [0, 1]. */
export function imageFromBytes(
  width: number,
  height: number,
  rgb: Uint8Array,
): Image {
  const data = new Float32Array(width * height * 3);
  for (let i = 0; i < data.length; i++) {
    data[i] = rgb[i] / 255;
  }
  return { height, width, data };
}

/** Image -> mean-subtracted (3, H, W) tensor in network channel order. */
export function preprocess(
  img: Image,
  mean: [number, number, number],
  order: ChannelOrder,
): Feature {
  const { height: h, width: w } = img;
  const idx = order === "rgb" ? [0, 1, 2] : [2, 1, 0];
  const data = new Float32Array(3 * h * w);
  for (let c = 0; c < 3; c++) {
    const src = idx[c];
    const m = Math.fround(mean[c]);
    for (let y = 0; y < h; y++) {
      for (let x = 0; x < w; x++) {
        data[(c * h + y) * w + x] = img.data[(y * w + x) * 3 + src] - m;
      }
    }
  }
  return { c: 3, h, w, data };
}

/** Mirror index for 1-pixel reflect padding (edge replication when n == 1). */
function reflect(i: number, n: number): number {
  if (n === 1) {
    return 0;
  }
  if (i < 0) {
    return -i;
  }
  if (i >= n) {
    return 2 * n - 2 - i;
  }
  return i;
}

/** Stride-1 3x3 convolution, 1-pixel padding, spatial size preserved. */
export function conv3x3(
  x: Feature,
  weight: Tensor,
  bias: Tensor,
  pad: "reflect" | "zero",
): Feature {
  const [cout, cin, kh, kw] = weight.shape;
  if (weight.shape.length !== 4 || kh !== 3 || kw !== 3) {
    throw new Error(`conv3x3 weight must be (out, in, 3, 3), got [${weight.shape}]`);
  }
  if (x.c !== cin) {
    throw new Error(`conv3x3 input has ${x.c} channels, weight expects ${cin}`);
  }
  if (bias.shape.length !== 1 || bias.shape[0] !== cout) {
    throw new Error(`conv3x3 bias must be (${cout},), got [${bias.shape}]`);
  }
  const { h, w } = x;
  const out = new Float32Array(cout * h * w);
  for (let co = 0; co < cout; co++) {
    for (let y = 0; y < h; y++) {
      for (let xx = 0; xx < w; xx++) {
        let acc = bias.data[co];
        for (let ci = 0; ci < cin; ci++) {
          const plane = ci * h;
          const wBase = ((co * cin + ci) * 3) * 3;
          for (let dy = 0; dy < 3; dy++) {
            let sy = y + dy - 1;
            if (pad === "zero") {
              if (sy < 0 || sy >= h) {
                continue;
              }
            } else {
              sy = reflect(sy, h);
            }
            const row = (plane + sy) * w;
            for (let dx = 0; dx < 3; dx++) {
              let sx = xx + dx - 1;
              if (pad === "zero") {
                if (sx < 0 || sx >= w) {
                  continue;
                }
              } else {
                sx = reflect(sx, w);
              }
              acc += weight.data[wBase + dy * 3 + dx] * x.data[row + sx];
            }
          }
        }
        out[(co * h + y) * w + xx] = acc;
      }
    }
  }
  return { c: cout, h, w, data: out };
}

export function relu(x: Feature): Feature {
  const data = new Float32Array(x.data.length);
  for (let i = 0; i < data.length; i++) {
    data[i] = x.data[i] > 0 ? x.data[i] : 0;
  }
  return { ...x, data };
}

/** 2x2 max pooling, stride 2; an odd trailing row/column is dropped. */
export function maxpool2(x: Feature): Feature {
  const h2 = Math.floor(x.h / 2);
  const w2 = Math.floor(x.w / 2);
  if (h2 === 0 || w2 === 0) {
    throw new Error(`maxpool2 needs at least 2x2 spatial input, got ${x.h}x${x.w}`);
  }
  const data = new Float32Array(x.c * h2 * w2);
  for (let c = 0; c < x.c; c++) {
    for (let y = 0; y < h2; y++) {
      for (let xx = 0; xx < w2; xx++) {
        const base = (c * x.h + 2 * y) * x.w + 2 * xx;
        const m1 = Math.max(x.data[base], x.data[base + 1]);
        const m2 = Math.max(x.data[base + x.w], x.data[base + x.w + 1]);
        data[(c * h2 + y) * w2 + xx] = Math.max(m1, m2);
      }
    }
  }
  return { c: x.c, h: h2, w: w2, data };
}

/** Run an encoder layer chain (preprocess/conv3x3/relu/maxpool2) on an image. */
export function runEncoder(
  layers: Layer[],
  img: Image,
  tensors: Map<string, Tensor>,
  mean: [number, number, number],
  order: ChannelOrder,
): Feature {
  let x: Feature | null = null;
  for (const layer of layers) {
    switch (layer.kind) {
      case "preprocess":
        x = preprocess(img, mean, order);
        break;
      case "conv3x3": {
        const w = tensors.get(layer.weight);
        const b = tensors.get(layer.bias);
        if (!w || !b) {
          throw new Error(
            `weight store has no tensor named "${!w ? layer.weight : layer.bias}"`,
          );
        }
        x = conv3x3(x!, w, b, layer.pad);
        break;
      }
      case "relu":
        x = relu(x!);
        break;
      case "maxpool2":
        x = maxpool2(x!);
        break;
      default:
        throw new Error(`layer kind "${layer.kind}" is not an encoder layer`);
    }
  }
  if (!x) {
    throw new Error("empty layer chain");
  }
  return x;
}
