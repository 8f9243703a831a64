/**
 * Reference-activation dumps: run the reference encoder on a probe image and
 * write each level's relu output as raw little-endian float32 with a JSON
 * sidecar carrying shapes. The engine's test suite compares its own encode
 * against these files within tolerance.
 */

import { copyFileSync, existsSync, readFileSync, statSync } from "node:fs";
import { basename, join } from "node:path";

import { Container, Tensor, f32leBytes, readContainer } from "./format.js";
import { ChannelOrder, Image, imageFromBytes, runEncoder } from "./inference.js";
import { Level, VGG19_CHANNELS, encoderSpec, parseNetspec } from "./netspec.js";
import { decodePng } from "./png.js";

export interface Model {
  container: Container;
  /** Encoder spec text per level. */
  encoderSpecs: Map<Level, string>;
  mean: [number, number, number];
  channelOrder: ChannelOrder;
}

export interface ActivationEntry {
  level: Level;
  file: string;
  shape: number[];
}

export interface ActivationsManifest {
  image: string;
  height: number;
  width: number;
  tensors: ActivationEntry[];
}

const WEIGHTS_FILENAME = "weights.wctw";

/**
 * Load a model for encoding: either a bare .wctw file (VGG-19 specs are
 * implied) or a model directory whose encoderN.txt files override them.
 */
export function loadModel(path: string): Model {
  const isDir = statSync(path).isDirectory();
  const weightsPath = isDir ? join(path, WEIGHTS_FILENAME) : path;
  const container = readContainer(readFileSync(weightsPath));

  const encoderSpecs = new Map<Level, string>();
  for (const level of [1, 2, 3, 4, 5] as Level[]) {
    const override = isDir ? join(path, `encoder${level}.txt`) : "";
    if (override && existsSync(override)) {
      encoderSpecs.set(level, readFileSync(override, "utf-8"));
    } else {
      encoderSpecs.set(
        level,
        encoderSpec(level, VGG19_CHANNELS, `# image -> relu${level}_1 features`),
      );
    }
  }

  const meanText = container.metadata.get("mean") ?? "0,0,0";
  const parts = meanText.split(",").map(Number);
  if (parts.length !== 3 || parts.some((p) => !Number.isFinite(p))) {
    throw new Error(`metadata 'mean' must be three floats, got "${meanText}"`);
  }
  const orderText = container.metadata.get("channel_order") ?? "rgb";
  if (orderText !== "rgb" && orderText !== "bgr") {
    throw new Error(
      `metadata 'channel_order' must be 'rgb' or 'bgr', got "${orderText}"`,
    );
  }
  return {
    container,
    encoderSpecs,
    mean: [parts[0], parts[1], parts[2]],
    channelOrder: orderText,
  };
}

export function loadImage(path: string): Image {
  const png = decodePng(readFileSync(path));
  return imageFromBytes(png.width, png.height, png.data);
}

/** Encode an image at one level with the reference implementation. */
export function referenceEncode(model: Model, img: Image, level: Level) {
  const layers = parseNetspec(model.encoderSpecs.get(level)!, `encoder${level}`);
  const tensors = new Map<string, Tensor>(
    model.container.tensors.map((t) => [t.name, t]),
  );
  return runEncoder(layers, img, tensors, model.mean, model.channelOrder);
}

/**
 * Compute and serialize activations for the given levels. Returns the files
 * to write: reluN_1.bin per level plus manifest.json, and the probe image's
 * basename so callers can copy it alongside.
 */
export function referenceActivations(
  model: Model,
  img: Image,
  imageName: string,
  levels: Level[],
): { files: Map<string, Buffer>; manifest: ActivationsManifest } {
  const entries: ActivationEntry[] = [];
  const files = new Map<string, Buffer>();
  for (const level of levels) {
    const feat = referenceEncode(model, img, level);
    const file = `relu${level}_1.bin`;
    files.set(file, f32leBytes(feat.data));
    entries.push({ level, file, shape: [feat.c, feat.h, feat.w] });
  }
  const manifest: ActivationsManifest = {
    image: imageName,
    height: img.height,
    width: img.width,
    tensors: entries,
  };
  files.set("manifest.json", Buffer.from(JSON.stringify(manifest, null, 2) + "\n"));
  return { files, manifest };
}

/** Copy the probe image into the output dir unless it already lives there. */
export function copyProbeImage(imagePath: string, outDir: string): string {
  const name = basename(imagePath);
  const dest = join(outDir, name);
  if (!existsSync(dest) || statSync(dest).ino !== statSync(imagePath).ino) {
    copyFileSync(imagePath, dest);
  }
  return name;
}
