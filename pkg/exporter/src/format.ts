/**
 * Reader/writer for the "WCTW" weight container consumed by the wctransfer
 * engine. Layout, all little-endian:
 *
 *     magic  "WCTW"
 *     u32    version (currently 1)
 *     u32    metadata length, then that many UTF-8 bytes of "key: value" lines
 *     u32    tensor count
 *     per tensor:
 *         u16  name length, then UTF-8 name
 *         u8   dtype code (0 = float32)
 *         u8   rank, then rank x u32 dims
 *         raw  row-major float32 data
 *         u32  CRC32 of the raw data
 *     u32    CRC32 of the whole file up to this point
 *
 * The writer must stay byte-compatible with the Python engine's reader; the
 * reader here exists so round trips can be checked without the engine.
 */

export const MAGIC = "WCTW";
export const VERSION = 1;
export const DTYPE_FLOAT32 = 0;

export interface Tensor {
  name: string;
  /** Row-major dims, e.g. [64, 3, 3, 3] for a conv weight. */
  shape: number[];
  data: Float32Array;
}

export interface Container {
  tensors: Tensor[];
  /** Key/value pairs in file order. */
  metadata: Map<string, string>;
}

export class FormatError extends Error {
  offset: number;
  constructor(message: string, offset: number) {
    super(`${message} (at byte ${offset})`);
    this.name = "FormatError";
    this.offset = offset;
  }
}

// ---------------------------------------------------------------------------
// CRC32 (IEEE 802.3, reflected, init/final 0xFFFFFFFF) — the polynomial zlib
// uses. node:zlib only grew a crc32 binding in v22, so compute it here.

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(data: Uint8Array, seed = 0): number {
  let c = ~seed >>> 0;
  for (let i = 0; i < data.length; i++) {
    c = CRC_TABLE[(c ^ data[i]) & 0xff] ^ (c >>> 8);
  }
  return ~c >>> 0;
}

// ---------------------------------------------------------------------------
// Writing

function u32le(value: number): Buffer {
  const b = Buffer.alloc(4);
  b.writeUInt32LE(value >>> 0, 0);
  return b;
}

function u16le(value: number): Buffer {
  const b = Buffer.alloc(2);
  b.writeUInt16LE(value, 0);
  return b;
}

/** Little-endian raw bytes of a float32 array, regardless of host endianness. */
export function f32leBytes(data: Float32Array): Buffer {
  const out = Buffer.alloc(data.length * 4);
  for (let i = 0; i < data.length; i++) {
    out.writeFloatLE(data[i], i * 4);
  }
  return out;
}

export function writeContainer(
  tensors: Tensor[],
  metadata: Iterable<[string, string]> = [],
): Buffer {
  const parts: Buffer[] = [Buffer.from(MAGIC, "ascii"), u32le(VERSION)];
  let metaText = "";
  for (const [key, value] of metadata) {
    metaText += `${key}: ${value}\n`;
  }
  const metaBytes = Buffer.from(metaText, "utf-8");
  parts.push(u32le(metaBytes.length), metaBytes);
  parts.push(u32le(tensors.length));
  for (const t of tensors) {
    const count = t.shape.reduce((a, b) => a * b, 1);
    if (count !== t.data.length) {
      throw new Error(
        `tensor ${t.name}: shape [${t.shape}] implies ${count} elements, data has ${t.data.length}`,
      );
    }
    const nameBytes = Buffer.from(t.name, "utf-8");
    parts.push(u16le(nameBytes.length), nameBytes);
    parts.push(Buffer.from([DTYPE_FLOAT32, t.shape.length]));
    for (const dim of t.shape) {
      parts.push(u32le(dim));
    }
    const raw = f32leBytes(t.data);
    parts.push(raw, u32le(crc32(raw)));
  }
  const body = Buffer.concat(parts);
  return Buffer.concat([body, u32le(crc32(body))]);
}

// ---------------------------------------------------------------------------
// Reading

class Reader {
  buf: Buffer;
  pos = 0;

  constructor(buf: Buffer) {
    this.buf = buf;
  }

  take(n: number, what: string): Buffer {
    if (this.pos + n > this.buf.length) {
      throw new FormatError(`file truncated while reading ${what}`, this.pos);
    }
    const out = this.buf.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }

  u8(what: string): number {
    return this.take(1, what)[0];
  }

  u16(what: string): number {
    return this.take(2, what).readUInt16LE(0);
  }

  u32(what: string): number {
    return this.take(4, what).readUInt32LE(0);
  }
}

export function parseMetadata(text: string): Map<string, string> {
  const out = new Map<string, string>();
  for (let line of text.split("\n")) {
    line = line.trim();
    if (!line || line.startsWith("#") || !line.includes(":")) {
      continue;
    }
    const at = line.indexOf(":");
    out.set(line.slice(0, at).trim(), line.slice(at + 1).trim());
  }
  return out;
}

export function readContainer(buf: Buffer): Container {
  if (buf.length < 20) {
    throw new FormatError("file too short to be a weight container", 0);
  }
  const stored = buf.readUInt32LE(buf.length - 4);
  if (stored !== crc32(buf.subarray(0, buf.length - 4))) {
    throw new FormatError(
      "file checksum mismatch: container is corrupt or truncated",
      buf.length - 4,
    );
  }
  const r = new Reader(buf.subarray(0, buf.length - 4));
  if (r.take(4, "magic").toString("ascii") !== MAGIC) {
    throw new FormatError(`bad magic: expected "${MAGIC}"`, 0);
  }
  const version = r.u32("version");
  if (version !== VERSION) {
    throw new FormatError(
      `unsupported container version ${version} (supported: ${VERSION})`,
      4,
    );
  }
  const metaLen = r.u32("metadata length");
  const metadata = parseMetadata(r.take(metaLen, "metadata").toString("utf-8"));

  const count = r.u32("tensor count");
  const tensors: Tensor[] = [];
  const seen = new Set<string>();
  for (let i = 0; i < count; i++) {
    const nameAt = r.pos;
    const nameLen = r.u16(`tensor ${i} name length`);
    const name = r.take(nameLen, `tensor ${i} name`).toString("utf-8");
    if (seen.has(name)) {
      throw new FormatError(`duplicate tensor name "${name}"`, nameAt);
    }
    seen.add(name);
    const dtype = r.u8(`tensor ${name} dtype`);
    if (dtype !== DTYPE_FLOAT32) {
      throw new FormatError(
        `tensor "${name}" has unsupported dtype code ${dtype}`,
        r.pos - 1,
      );
    }
    const rank = r.u8(`tensor ${name} rank`);
    const shape: number[] = [];
    let elems = 1;
    for (let j = 0; j < rank; j++) {
      const dim = r.u32(`tensor ${name} dim ${j}`);
      if (dim === 0) {
        throw new FormatError(`tensor "${name}" has a zero dimension`, r.pos);
      }
      shape.push(dim);
      elems *= dim;
    }
    const dataAt = r.pos;
    const raw = r.take(4 * elems, `tensor ${name} data`);
    const crc = r.u32(`tensor ${name} checksum`);
    if (crc !== crc32(raw)) {
      throw new FormatError(`tensor "${name}" data fails its checksum`, dataAt);
    }
    const data = new Float32Array(elems);
    for (let j = 0; j < elems; j++) {
      data[j] = raw.readFloatLE(j * 4);
      if (!Number.isFinite(data[j])) {
        throw new FormatError(`tensor "${name}" contains non-finite values`, dataAt);
      }
    }
    tensors.push({ name, shape, data });
  }
  if (r.pos !== r.buf.length) {
    throw new FormatError(
      `${r.buf.length - r.pos} trailing bytes after the last tensor`,
      r.pos,
    );
  }
  return { tensors, metadata };
}
