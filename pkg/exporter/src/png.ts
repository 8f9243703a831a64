/**
 * Minimal PNG codec over node:zlib — just enough to read probe images and
 * write deterministic outputs. Writes 8-bit RGB with filter 0 on every
 * scanline; reads 8-bit grayscale/RGB/RGBA, non-interlaced, any scanline
 * filter (None/Sub/Up/Average/Paeth). Nothing else.
 */

import { deflateSync, inflateSync } from "node:zlib";

import { crc32 } from "./format.js";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

export interface Rgb {
  width: number;
  height: number;
  /** Row-major RGB bytes, length width * height * 3. */
  data: Uint8Array;
}

export class PngError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PngError";
  }
}

function chunk(type: string, data: Buffer): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(data.length, 0);
  head.write(type, 4, "ascii");
  // the CRC covers type + data but not the length field
  const body = Buffer.concat([head.subarray(4), data]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body), 0);
  return Buffer.concat([head.subarray(0, 4), body, crc]);
}

export function encodePng(img: Rgb): Buffer {
  const { width, height, data } = img;
  if (width < 1 || height < 1 || data.length !== width * height * 3) {
    throw new PngError(
      `image data length ${data.length} does not match ${width}x${height} RGB`,
    );
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // color type: truecolor
  ihdr[10] = 0; // compression
  ihdr[11] = 0; // filter method
  ihdr[12] = 0; // interlace
  const stride = width * 3;
  const raw = Buffer.alloc((stride + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0; // filter type None
    raw.set(data.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  return Buffer.concat([
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(raw, { level: 9 })),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) {
    return a;
  }
  return pb <= pc ? b : c;
}

export function decodePng(buf: Buffer): Rgb {
  if (buf.length < 8 || !buf.subarray(0, 8).equals(SIGNATURE)) {
    throw new PngError("not a PNG file (bad signature)");
  }
  let pos = 8;
  let width = 0;
  let height = 0;
  let channels = 0;
  let sawIhdr = false;
  const idats: Buffer[] = [];
  while (pos < buf.length) {
    if (pos + 8 > buf.length) {
      throw new PngError("truncated chunk header");
    }
    const len = buf.readUInt32BE(pos);
    const type = buf.subarray(pos + 4, pos + 8).toString("ascii");
    if (pos + 12 + len > buf.length) {
      throw new PngError(`truncated ${type} chunk`);
    }
    const data = buf.subarray(pos + 8, pos + 8 + len);
    const stored = buf.readUInt32BE(pos + 8 + len);
    if (stored !== crc32(buf.subarray(pos + 4, pos + 8 + len))) {
      throw new PngError(`${type} chunk fails its CRC`);
    }
    pos += 12 + len;
    if (type === "IHDR") {
      if (len !== 13) {
        throw new PngError("IHDR must be 13 bytes");
      }
      width = data.readUInt32BE(0);
      height = data.readUInt32BE(4);
      const depth = data[8];
      const color = data[9];
      if (depth !== 8) {
        throw new PngError(`unsupported bit depth ${depth} (only 8)`);
      }
      if (color === 0) {
        channels = 1;
      } else if (color === 2) {
        channels = 3;
      } else if (color === 6) {
        channels = 4;
      } else {
        throw new PngError(`unsupported color type ${color} (0, 2, or 6)`);
      }
      if (data[10] !== 0 || data[11] !== 0) {
        throw new PngError("unsupported compression/filter method");
      }
      if (data[12] !== 0) {
        throw new PngError("interlaced PNGs are not supported");
      }
      sawIhdr = true;
    } else if (type === "IDAT") {
      idats.push(data);
    } else if (type === "IEND") {
      break;
    }
    // ancillary chunks are skipped
  }
  if (!sawIhdr || width < 1 || height < 1) {
    throw new PngError("missing or empty IHDR");
  }
  if (idats.length === 0) {
    throw new PngError("no IDAT chunks");
  }
  const raw = inflateSync(Buffer.concat(idats));
  const stride = width * channels;
  if (raw.length !== (stride + 1) * height) {
    throw new PngError(
      `decompressed size ${raw.length}, expected ${(stride + 1) * height}`,
    );
  }
  // Unfilter in place into `pixels`, one scanline at a time.
  const pixels = Buffer.alloc(stride * height);
  const bpp = channels;
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const line = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const out = y * stride;
    const prev = (y - 1) * stride;
    for (let i = 0; i < stride; i++) {
      const x = line[i];
      const a = i >= bpp ? pixels[out + i - bpp] : 0;
      const b = y > 0 ? pixels[prev + i] : 0;
      const c = y > 0 && i >= bpp ? pixels[prev + i - bpp] : 0;
      let v: number;
      switch (filter) {
        case 0:
          v = x;
          break;
        case 1:
          v = x + a;
          break;
        case 2:
          v = x + b;
          break;
        case 3:
          v = x + ((a + b) >> 1);
          break;
        case 4:
          v = x + paeth(a, b, c);
          break;
        default:
          throw new PngError(`scanline ${y} has unknown filter type ${filter}`);
      }
      pixels[out + i] = v & 0xff;
    }
  }
  if (channels === 3) {
    return { width, height, data: pixels };
  }
  // Expand grayscale / drop alpha.
  const rgb = Buffer.alloc(width * height * 3);
  for (let p = 0; p < width * height; p++) {
    const src = p * channels;
    rgb[p * 3] = pixels[src];
    rgb[p * 3 + 1] = pixels[src + (channels === 1 ? 0 : 1)];
    rgb[p * 3 + 2] = pixels[src + (channels === 1 ? 0 : 2)];
  }
  return { width, height, data: rgb };
}
