/**
 * Command-line front end.
 *
 *     wctw-exporter export --manifest m.json --out weights.wctw
 *     wctw-exporter activations --image probe.png --weights MODEL --out DIR [--levels 5,4,3]
 *     wctw-exporter fixtures --out DIR [--seed N]
 *
 * Exit codes: 0 success, 1 operational failure (bad file, failed check),
 * 2 usage error.
 */

import { mkdirSync, realpathSync, writeFileSync } from "node:fs";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { parseArgs } from "node:util";

import {
  copyProbeImage,
  loadImage,
  loadModel,
  referenceActivations,
} from "./activations.js";
import { DEFAULT_SEED, fixtureFiles } from "./fixtures.js";
import { exportContainer, exportSpecFiles, readManifestFile } from "./manifest.js";
import { Level } from "./netspec.js";

const USAGE = `usage: wctw-exporter <command> [options]

commands:
  export       --manifest FILE --out FILE.wctw
               convert checkpoint blobs into an engine weight container
               (plan modes also write the ten netspec .txt files next to it)
  activations  --image FILE.png --weights PATH --out DIR [--levels 1,2,3,4,5]
               dump reference encoder activations for tolerance tests
  fixtures     --out DIR [--seed N]
               write the deterministic reduced-width test model (default seed ${DEFAULT_SEED})
`;

class UsageError extends Error {}

function parsed(
  argv: string[],
  options: Record<string, { type: "string"; short?: string }>,
  required: string[],
): Record<string, string> {
  let values: Record<string, string | undefined>;
  try {
    values = parseArgs({ args: argv, options, strict: true }).values as Record<
      string,
      string | undefined
    >;
  } catch (e) {
    throw new UsageError((e as Error).message);
  }
  for (const name of required) {
    if (values[name] === undefined) {
      throw new UsageError(`--${name} is required`);
    }
  }
  return values as Record<string, string>;
}

function writeAll(dir: string, files: Map<string, Buffer>): string[] {
  mkdirSync(dir, { recursive: true });
  const written: string[] = [];
  for (const [name, data] of files) {
    const path = join(dir, name);
    writeFileSync(path, data);
    written.push(path);
  }
  return written;
}

function cmdExport(argv: string[]): number {
  const args = parsed(
    argv,
    { manifest: { type: "string" }, out: { type: "string" } },
    ["manifest", "out"],
  );
  const { manifest, baseDir } = readManifestFile(args.manifest);
  const container = exportContainer(manifest, baseDir);
  const outPath = resolve(args.out);
  mkdirSync(dirname(outPath), { recursive: true });
  writeFileSync(outPath, container);
  console.log(
    `wrote ${outPath} (${manifest.tensors.length} tensors, ${container.length} bytes)`,
  );
  for (const [name, data] of exportSpecFiles(manifest)) {
    const path = join(dirname(outPath), name);
    writeFileSync(path, data);
    console.log(`wrote ${path}`);
  }
  return 0;
}

function parseLevels(text: string): Level[] {
  const parts = text.split(",").map((p) => Number(p.trim()));
  if (
    parts.length === 0 ||
    parts.some((p) => !Number.isInteger(p) || p < 1 || p > 5)
  ) {
    throw new UsageError(`--levels must be comma-separated values in 1..5, got "${text}"`);
  }
  return parts as Level[];
}

function cmdActivations(argv: string[]): number {
  const args = parsed(
    argv,
    {
      image: { type: "string" },
      weights: { type: "string" },
      out: { type: "string" },
      levels: { type: "string" },
    },
    ["image", "weights", "out"],
  );
  const levels = parseLevels(args.levels ?? "1,2,3,4,5");
  const model = loadModel(args.weights);
  const img = loadImage(args.image);
  mkdirSync(args.out, { recursive: true });
  const imageName = copyProbeImage(args.image, args.out);
  const { files, manifest } = referenceActivations(model, img, imageName, levels);
  for (const path of writeAll(args.out, files)) {
    console.log(`wrote ${path}`);
  }
  for (const entry of manifest.tensors) {
    console.log(`  relu${entry.level}_1 shape ${entry.shape.join("x")}`);
  }
  return 0;
}

function cmdFixtures(argv: string[]): number {
  const args = parsed(
    argv,
    { out: { type: "string" }, seed: { type: "string" } },
    ["out"],
  );
  let seed = DEFAULT_SEED;
  if (args.seed !== undefined) {
    seed = Number(args.seed);
    if (!Number.isInteger(seed) || seed < 0 || seed > 0xffffffff) {
      throw new UsageError(`--seed must be a 32-bit unsigned integer, got "${args.seed}"`);
    }
  }
  for (const path of writeAll(args.out, fixtureFiles(seed))) {
    console.log(`wrote ${path}`);
  }
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "export":
        return cmdExport(rest);
      case "activations":
        return cmdActivations(rest);
      case "fixtures":
        return cmdFixtures(rest);
      case undefined:
      case "--help":
      case "-h":
      case "help":
        process.stdout.write(USAGE);
        return command === undefined ? 2 : 0;
      default:
        throw new UsageError(`unknown command "${command}"`);
    }
  } catch (e) {
    if (e instanceof UsageError) {
      process.stderr.write(`error: ${e.message}\n\n${USAGE}`);
      return 2;
    }
    process.stderr.write(`error: ${(e as Error).message}\n`);
    return 1;
  }
}

const invokedAs = process.argv[1] ? safeRealpath(process.argv[1]) : "";
if (invokedAs && invokedAs === safeRealpath(fileURLToPath(import.meta.url))) {
  process.exit(main(process.argv.slice(2)));
}

function safeRealpath(path: string): string {
  try {
    return realpathSync(path);
  } catch {
    return path;
  }
}
