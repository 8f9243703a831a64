/**
 * Network layer specs: the text format the engine consumes, generators for
 * the encoder/decoder chains at each feature level, and the tensor census a
 * weight file must satisfy for a given channel plan.
 *
 * One layer per line:
 *
 *     preprocess
 *     conv3x3 reflect conv1_1.weight conv1_1.bias 3->64
 *     relu
 *     maxpool2
 *     upsample_nearest2
 *     postprocess
 *
 * "#" starts a comment. Encoders run image -> features, decoders the reverse.
 */

export type Level = 1 | 2 | 3 | 4 | 5;
export const LEVELS: Level[] = [1, 2, 3, 4, 5];

export type PadMode = "reflect" | "zero";

export type Layer =
  | { kind: "preprocess" }
  | { kind: "postprocess" }
  | { kind: "relu" }
  | { kind: "maxpool2" }
  | { kind: "upsample_nearest2" }
  | {
      kind: "conv3x3";
      pad: PadMode;
      weight: string;
      bias: string;
      cin: number;
      cout: number;
    };

/** Layer name -> [input channels, output channels]. */
export type ChannelPlan = Record<string, [number, number]>;

/** Encoder conv layers in forward order (VGG-19 truncated at relu5_1). */
export const ENC_ORDER = [
  "conv1_1",
  "conv1_2",
  "conv2_1",
  "conv2_2",
  "conv3_1",
  "conv3_2",
  "conv3_3",
  "conv3_4",
  "conv4_1",
  "conv4_2",
  "conv4_3",
  "conv4_4",
  "conv5_1",
] as const;

/** The last encoder conv for each feature level (its relu is the output). */
export const LEVEL_LAST: Record<Level, string> = {
  1: "conv1_1",
  2: "conv2_1",
  3: "conv3_1",
  4: "conv4_1",
  5: "conv5_1",
};

export const VGG19_CHANNELS: ChannelPlan = {
  conv1_1: [3, 64],
  conv1_2: [64, 64],
  conv2_1: [64, 128],
  conv2_2: [128, 128],
  conv3_1: [128, 256],
  conv3_2: [256, 256],
  conv3_3: [256, 256],
  conv3_4: [256, 256],
  conv4_1: [256, 512],
  conv4_2: [512, 512],
  conv4_3: [512, 512],
  conv4_4: [512, 512],
  conv5_1: [512, 512],
};

/** Reduced-width plan used by the committed test model. */
export const FIXTURE_CHANNELS: ChannelPlan = {
  conv1_1: [3, 8],
  conv1_2: [8, 8],
  conv2_1: [8, 16],
  conv2_2: [16, 16],
  conv3_1: [16, 16],
  conv3_2: [16, 16],
  conv3_3: [16, 16],
  conv3_4: [16, 16],
  conv4_1: [16, 32],
  conv4_2: [32, 32],
  conv4_3: [32, 32],
  conv4_4: [32, 32],
  conv5_1: [32, 32],
};

/** VGG block number of an encoder conv name, e.g. conv3_2 -> 3. */
function block(name: string): number {
  return Number(name[4]);
}

/** Encoder conv names feeding level `level`, forward order. */
export function encoderLayers(level: Level): string[] {
  const last = LEVEL_LAST[level];
  const out: string[] = [];
  for (const name of ENC_ORDER) {
    out.push(name);
    if (name === last) {
      break;
    }
  }
  return out;
}

/** Source encoder layers each decoder conv mirrors, deepest first. */
export function decoderOrder(level: Level): string[] {
  return encoderLayers(level).reverse();
}

export function encoderSpec(
  level: Level,
  plan: ChannelPlan,
  header?: string,
): string {
  const lines: string[] = header ? [header] : [];
  lines.push("preprocess");
  const layers = encoderLayers(level);
  for (let i = 0; i < layers.length; i++) {
    const name = layers[i];
    const [cin, cout] = plan[name];
    lines.push(`conv3x3 reflect ${name}.weight ${name}.bias ${cin}->${cout}`);
    lines.push("relu");
    if (i + 1 < layers.length && block(layers[i + 1]) > block(name)) {
      lines.push("maxpool2");
    }
  }
  return lines.join("\n") + "\n";
}

export function decoderSpec(
  level: Level,
  plan: ChannelPlan,
  header?: string,
): string {
  const order = decoderOrder(level);
  const lines: string[] = header ? [header] : [];
  for (let j = 1; j <= order.length; j++) {
    const src = order[j - 1];
    const [cin, cout] = plan[src];
    lines.push(
      `conv3x3 reflect dec${level}.conv${j}.weight dec${level}.conv${j}.bias ${cout}->${cin}`,
    );
    if (j < order.length) {
      lines.push("relu");
      if (block(src) > block(order[j])) {
        lines.push("upsample_nearest2");
      }
    }
  }
  lines.push("postprocess");
  return lines.join("\n") + "\n";
}

/** The ten spec texts for a plan, keyed by file stem (encoder1 .. decoder5). */
export function allSpecs(
  plan: ChannelPlan,
  withHeaders = false,
): Map<string, string> {
  const out = new Map<string, string>();
  for (const level of LEVELS) {
    const encHeader = withHeaders
      ? `# image -> relu${level}_1 features`
      : undefined;
    const decHeader = withHeaders
      ? `# relu${level}_1 features -> image`
      : undefined;
    out.set(`encoder${level}`, encoderSpec(level, plan, encHeader));
    out.set(`decoder${level}`, decoderSpec(level, plan, decHeader));
  }
  return out;
}

/**
 * Every tensor name any of the ten specs references, with its required shape
 * ([out, in, 3, 3] for weights, [out] for biases), in encoder-then-decoder
 * order.
 */
export function requiredTensors(plan: ChannelPlan): Map<string, number[]> {
  const out = new Map<string, number[]>();
  for (const name of ENC_ORDER) {
    const [cin, cout] = plan[name];
    out.set(`${name}.weight`, [cout, cin, 3, 3]);
    out.set(`${name}.bias`, [cout]);
  }
  for (const level of LEVELS) {
    const order = decoderOrder(level);
    for (let j = 1; j <= order.length; j++) {
      const [cin, cout] = plan[order[j - 1]];
      out.set(`dec${level}.conv${j}.weight`, [cin, cout, 3, 3]);
      out.set(`dec${level}.conv${j}.bias`, [cin]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing (the subset of validation the reference runner needs)

const KINDS = new Set([
  "preprocess",
  "postprocess",
  "conv3x3",
  "relu",
  "maxpool2",
  "upsample_nearest2",
]);

export function parseNetspec(text: string, where = "netspec"): Layer[] {
  const layers: Layer[] = [];
  const rawLines = text.split("\n");
  for (let i = 0; i < rawLines.length; i++) {
    const line = rawLines[i].split("#", 1)[0].trim();
    if (!line) {
      continue;
    }
    const fields = line.split(/\s+/);
    const kind = fields[0];
    if (!KINDS.has(kind)) {
      throw new Error(`${where} line ${i + 1}: unknown layer kind "${kind}"`);
    }
    if (kind === "conv3x3") {
      if (fields.length !== 5) {
        throw new Error(
          `${where} line ${i + 1}: conv3x3 needs '<pad> <weight> <bias> <in>-><out>'`,
        );
      }
      const pad = fields[1];
      if (pad !== "reflect" && pad !== "zero") {
        throw new Error(`${where} line ${i + 1}: bad pad mode "${pad}"`);
      }
      const arrow = fields[4].split("->");
      const cin = Number(arrow[0]);
      const cout = Number(arrow[1]);
      if (
        arrow.length !== 2 ||
        !Number.isInteger(cin) ||
        !Number.isInteger(cout) ||
        cin < 1 ||
        cout < 1
      ) {
        throw new Error(
          `${where} line ${i + 1}: expected <in>-><out>, got "${fields[4]}"`,
        );
      }
      layers.push({ kind, pad, weight: fields[2], bias: fields[3], cin, cout });
    } else {
      if (fields.length !== 1) {
        throw new Error(`${where} line ${i + 1}: ${kind} takes no arguments`);
      }
      layers.push({ kind } as Layer);
    }
  }
  if (layers.length === 0) {
    throw new Error(`${where}: network spec is empty`);
  }
  return layers;
}
