/**
 * Export manifests: a JSON description mapping source checkpoint blobs to
 * engine tensor names, plus the preprocessing metadata to embed. Source blobs
 * are raw little-endian float32 files (community checkpoint conversions vary;
 * whatever tool produced them states names and shapes here).
 *
 *     {
 *       "metadata": { "mean": "0.485,0.458,0.408", "channel_order": "rgb" },
 *       "netspecs": "vgg19",
 *       "tensors": [
 *         { "name": "conv1_1.weight", "source": "blobs/enc1_1w.bin",
 *           "source_name": "features.0.weight", "shape": [64, 3, 3, 3] }
 *       ]
 *     }
 *
 * "netspecs" picks the channel plan the tensor set must satisfy — "vgg19"
 * (default) or "fixture" — and makes the export also emit the ten network
 * spec files; "none" skips plan checks for ad-hoc tensor sets.
 */

import { readFileSync } from "node:fs";
import { dirname, resolve } from "node:path";

import { Tensor, writeContainer } from "./format.js";
import {
  ChannelPlan,
  FIXTURE_CHANNELS,
  VGG19_CHANNELS,
  allSpecs,
  requiredTensors,
} from "./netspec.js";

export type NetspecMode = "vgg19" | "fixture" | "none";

export interface TensorSpec {
  name: string;
  source: string;
  sourceName?: string;
  shape: number[];
}

export interface ExportManifest {
  metadata: [string, string][];
  netspecs: NetspecMode;
  tensors: TensorSpec[];
}

export class ExportError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ExportError";
  }
}

export function planFor(mode: NetspecMode): ChannelPlan | null {
  if (mode === "vgg19") {
    return VGG19_CHANNELS;
  }
  if (mode === "fixture") {
    return FIXTURE_CHANNELS;
  }
  return null;
}

function isPositiveInt(v: unknown): v is number {
  return typeof v === "number" && Number.isInteger(v) && v > 0;
}

export function parseManifest(text: string): ExportManifest {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new ExportError(`manifest is not valid JSON: ${(e as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new ExportError("manifest must be a JSON object");
  }
  const obj = doc as Record<string, unknown>;

  const metadata: [string, string][] = [];
  if (obj.metadata !== undefined) {
    if (
      typeof obj.metadata !== "object" ||
      obj.metadata === null ||
      Array.isArray(obj.metadata)
    ) {
      throw new ExportError("manifest 'metadata' must be an object of strings");
    }
    for (const [key, value] of Object.entries(obj.metadata)) {
      if (typeof value !== "string") {
        throw new ExportError(`metadata value for '${key}' must be a string`);
      }
      if (key.includes(":") || key.includes("\n") || value.includes("\n")) {
        throw new ExportError(
          `metadata entry '${key}' may not contain ':' in the key or newlines`,
        );
      }
      metadata.push([key, value]);
    }
  }
  const meta = new Map(metadata);
  const mean = meta.get("mean");
  if (mean !== undefined) {
    const parts = mean.split(",");
    if (parts.length !== 3 || parts.some((p) => !Number.isFinite(Number(p)))) {
      throw new ExportError(`metadata 'mean' must be three floats, got "${mean}"`);
    }
  }
  const order = meta.get("channel_order");
  if (order !== undefined && order !== "rgb" && order !== "bgr") {
    throw new ExportError(
      `metadata 'channel_order' must be 'rgb' or 'bgr', got "${order}"`,
    );
  }

  let netspecs: NetspecMode = "vgg19";
  if (obj.netspecs !== undefined) {
    if (
      obj.netspecs !== "vgg19" &&
      obj.netspecs !== "fixture" &&
      obj.netspecs !== "none"
    ) {
      throw new ExportError(
        `manifest 'netspecs' must be "vgg19", "fixture", or "none", got ${JSON.stringify(obj.netspecs)}`,
      );
    }
    netspecs = obj.netspecs;
  }

  if (!Array.isArray(obj.tensors) || obj.tensors.length === 0) {
    throw new ExportError("manifest 'tensors' must be a non-empty array");
  }
  const tensors: TensorSpec[] = [];
  const seen = new Set<string>();
  for (let i = 0; i < obj.tensors.length; i++) {
    const entry = obj.tensors[i] as Record<string, unknown>;
    if (typeof entry !== "object" || entry === null) {
      throw new ExportError(`tensors[${i}] must be an object`);
    }
    const { name, source, shape } = entry;
    if (typeof name !== "string" || !name) {
      throw new ExportError(`tensors[${i}] needs a string 'name'`);
    }
    if (typeof source !== "string" || !source) {
      throw new ExportError(`tensor "${name}": needs a string 'source' path`);
    }
    if (!Array.isArray(shape) || shape.length === 0 || !shape.every(isPositiveInt)) {
      throw new ExportError(
        `tensor "${name}": 'shape' must be a non-empty array of positive integers`,
      );
    }
    if (entry.source_name !== undefined && typeof entry.source_name !== "string") {
      throw new ExportError(`tensor "${name}": 'source_name' must be a string`);
    }
    if (seen.has(name)) {
      throw new ExportError(`tensor "${name}" appears more than once`);
    }
    seen.add(name);
    tensors.push({
      name,
      source,
      shape: shape as number[],
      sourceName: entry.source_name as string | undefined,
    });
  }

  const plan = planFor(netspecs);
  if (plan) {
    const required = requiredTensors(plan);
    const missing = [...required.keys()].filter((n) => !seen.has(n));
    if (missing.length > 0) {
      const shown = missing.slice(0, 4).join(", ");
      const more = missing.length > 4 ? ` and ${missing.length - 4} more` : "";
      throw new ExportError(
        `manifest is missing ${missing.length} tensor(s) the ${netspecs} specs require: ${shown}${more}`,
      );
    }
    for (const t of tensors) {
      const want = required.get(t.name);
      if (want && !shapesEqual(t.shape, want)) {
        throw new ExportError(
          `tensor "${t.name}": shape [${t.shape}] does not match the ${netspecs} plan's [${want}]`,
        );
      }
    }
  }
  return { metadata, netspecs, tensors };
}

function shapesEqual(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

/** Read one source blob, validating length and finiteness. */
function loadBlob(spec: TensorSpec, baseDir: string): Tensor {
  const path = resolve(baseDir, spec.source);
  let raw: Buffer;
  try {
    raw = readFileSync(path);
  } catch (e) {
    throw new ExportError(
      `tensor "${spec.name}": cannot read source "${spec.source}": ${(e as NodeJS.ErrnoException).message}`,
    );
  }
  const count = spec.shape.reduce((a, b) => a * b, 1);
  if (raw.length !== count * 4) {
    throw new ExportError(
      `tensor "${spec.name}": source "${spec.source}" holds ${raw.length} bytes, ` +
        `shape [${spec.shape}] needs ${count * 4}`,
    );
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = raw.readFloatLE(i * 4);
    if (!Number.isFinite(data[i])) {
      throw new ExportError(
        `tensor "${spec.name}": source data contains non-finite values`,
      );
    }
  }
  return { name: spec.name, shape: spec.shape, data };
}

/** Load every tensor a manifest names, in manifest order. */
export function loadManifestTensors(
  manifest: ExportManifest,
  baseDir: string,
): Tensor[] {
  return manifest.tensors.map((t) => loadBlob(t, baseDir));
}

/** Container bytes for a manifest (sources resolved relative to baseDir). */
export function exportContainer(
  manifest: ExportManifest,
  baseDir: string,
): Buffer {
  return writeContainer(loadManifestTensors(manifest, baseDir), manifest.metadata);
}

/** The netspec .txt files an export should ship, empty for mode "none". */
export function exportSpecFiles(manifest: ExportManifest): Map<string, Buffer> {
  const plan = planFor(manifest.netspecs);
  const out = new Map<string, Buffer>();
  if (!plan) {
    return out;
  }
  const withHeaders = manifest.netspecs === "vgg19";
  for (const [stem, text] of allSpecs(plan, withHeaders)) {
    out.set(`${stem}.txt`, Buffer.from(text, "utf-8"));
  }
  return out;
}

/** Parse a manifest file; sources resolve relative to its directory. */
export function readManifestFile(path: string): {
  manifest: ExportManifest;
  baseDir: string;
} {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (e) {
    throw new ExportError(
      `cannot read manifest "${path}": ${(e as NodeJS.ErrnoException).message}`,
    );
  }
  return { manifest: parseManifest(text), baseDir: dirname(resolve(path)) };
}
