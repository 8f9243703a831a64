import { existsSync, readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import {
  loadImage,
  loadModel,
  referenceActivations,
  referenceEncode,
} from "../src/activations.js";
import { Level } from "../src/netspec.js";

const MODEL = fileURLToPath(new URL("../../tests/fixtures/model", import.meta.url));
const REFS = fileURLToPath(new URL("../../tests/fixtures/refs/", import.meta.url));
const hasRefs = existsSync(`${REFS}manifest.json`);

describe("loadModel", () => {
  it("reads the committed fixture model directory", () => {
    const model = loadModel(MODEL);
    expect(model.container.tensors.length).toBe(88);
    expect(model.channelOrder).toBe("bgr");
    expect(model.mean).toEqual([0.42, 0.48, 0.45]);
    for (const level of [1, 2, 3, 4, 5]) {
      expect(model.encoderSpecs.get(level as Level)).toContain("preprocess");
    }
  });

  it("falls back to VGG-19 specs for a bare weight file", () => {
    const model = loadModel(`${MODEL}/weights.wctw`);
    expect(model.encoderSpecs.get(1)).toContain("3->64");
  });
});

describe("reference encoding", () => {
  const model = loadModel(MODEL);

  it("halves spatial size per level and follows the channel plan", () => {
    const img = loadImage(`${REFS}input.png`);
    const want: Record<number, [number, number, number]> = {
      1: [8, 48, 64],
      2: [16, 24, 32],
      3: [16, 12, 16],
      4: [32, 6, 8],
      5: [32, 3, 4],
    };
    for (const level of [1, 2, 3, 4, 5] as Level[]) {
      const feat = referenceEncode(model, img, level);
      expect([feat.c, feat.h, feat.w], `level ${level}`).toEqual(want[level]);
      // relu output: nonnegative everywhere
      let min = Infinity;
      for (const v of feat.data) {
        min = Math.min(min, v);
      }
      expect(min).toBeGreaterThanOrEqual(0);
    }
  });

  it("is deterministic across runs", () => {
    const img = loadImage(`${REFS}input.png`);
    const a = referenceActivations(model, img, "input.png", [1, 3, 5]);
    const b = referenceActivations(model, img, "input.png", [1, 3, 5]);
    for (const [name, data] of a.files) {
      expect(b.files.get(name)!.equals(data), name).toBe(true);
    }
  });
});

describe.skipIf(!hasRefs)("committed reference bundle", () => {
  it("matches a fresh recomputation byte for byte", () => {
    const model = loadModel(MODEL);
    const manifest = JSON.parse(readFileSync(`${REFS}manifest.json`, "utf-8"));
    const img = loadImage(`${REFS}${manifest.image}`);
    expect([img.height, img.width]).toEqual([manifest.height, manifest.width]);

    const levels = manifest.tensors.map((t: { level: Level }) => t.level);
    const fresh = referenceActivations(model, img, manifest.image, levels);
    for (const entry of manifest.tensors) {
      const committed = readFileSync(`${REFS}${entry.file}`);
      const rebuilt = fresh.files.get(entry.file)!;
      console.log(`${entry.file}: ${committed.length} bytes`);
      expect(rebuilt.equals(committed), entry.file).toBe(true);
    }
  });
});
