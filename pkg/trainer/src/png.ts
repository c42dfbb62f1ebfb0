import * as zlib from "zlib";

export interface DecodedImage {
  width: number;
  height: number;
  /** 1 (gray), 2 (gray+alpha), 3 (RGB) or 4 (RGBA). */
  channels: number;
  /** Row-major, interleaved, 8 bits per sample. */
  data: Uint8Array;
}

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CHANNELS_BY_COLOR_TYPE: Record<number, number> = {
  0: 1, // grayscale
  2: 3, // RGB
  4: 2, // grayscale + alpha
  6: 4, // RGBA
};

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

/**
 * Decode the subset of PNG that our pipeline writes: 8-bit depth,
 * grayscale/RGB with optional alpha, non-interlaced. Palette images,
 * 16-bit depth and interlacing are rejected rather than mis-read.
 */
export function decodePng(buf: Buffer): DecodedImage {
  if (buf.length < 8 || !buf.subarray(0, 8).equals(SIGNATURE)) {
    throw new Error("not a PNG file");
  }
  let width = 0;
  let height = 0;
  let channels = 0;
  const idat: Buffer[] = [];
  let sawIhdr = false;

  let off = 8;
  while (off + 8 <= buf.length) {
    const len = buf.readUInt32BE(off);
    const type = buf.toString("latin1", off + 4, off + 8);
    const body = buf.subarray(off + 8, off + 8 + len);
    off += 12 + len; // length + type + data + crc

    if (type === "IHDR") {
      width = body.readUInt32BE(0);
      height = body.readUInt32BE(4);
      const bitDepth = body[8];
      const colorType = body[9];
      const interlace = body[12];
      if (bitDepth !== 8) throw new Error(`unsupported PNG bit depth: ${bitDepth}`);
      if (!(colorType in CHANNELS_BY_COLOR_TYPE)) {
        throw new Error(`unsupported PNG color type: ${colorType}`);
      }
      if (interlace !== 0) throw new Error("interlaced PNG not supported");
      channels = CHANNELS_BY_COLOR_TYPE[colorType];
      sawIhdr = true;
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
  }
  if (!sawIhdr) throw new Error("PNG missing IHDR chunk");
  if (idat.length === 0) throw new Error("PNG has no image data");

  const raw = zlib.inflateSync(Buffer.concat(idat));
  const stride = width * channels;
  if (raw.length < height * (stride + 1)) {
    throw new Error("PNG image data truncated");
  }

  const out = new Uint8Array(height * stride);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const rowIn = (y * (stride + 1)) + 1;
    const rowOut = y * stride;
    for (let x = 0; x < stride; x++) {
      const cur = raw[rowIn + x];
      const left = x >= channels ? out[rowOut + x - channels] : 0;
      const up = y > 0 ? out[rowOut - stride + x] : 0;
      const upLeft = y > 0 && x >= channels ? out[rowOut - stride + x - channels] : 0;
      let value: number;
      switch (filter) {
        case 0: value = cur; break;
        case 1: value = cur + left; break;
        case 2: value = cur + up; break;
        case 3: value = cur + ((left + up) >> 1); break;
        case 4: value = cur + paeth(left, up, upLeft); break;
        default: throw new Error(`unsupported PNG filter type: ${filter}`);
      }
      out[rowOut + x] = value & 0xff;
    }
  }
  return { width, height, channels, data: out };
}

/** Drop alpha and expand grayscale so every image is HxWx3. */
export function toRgb(img: DecodedImage): DecodedImage {
  if (img.channels === 3) return img;
  const { width, height, channels, data } = img;
  const out = new Uint8Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    if (channels === 1 || channels === 2) {
      const g = data[i * channels];
      out[i * 3] = g;
      out[i * 3 + 1] = g;
      out[i * 3 + 2] = g;
    } else {
      out[i * 3] = data[i * 4];
      out[i * 3 + 1] = data[i * 4 + 1];
      out[i * 3 + 2] = data[i * 4 + 2];
    }
  }
  return { width, height, channels: 3, data: out };
}
