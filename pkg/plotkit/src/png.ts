/**
 * Raster backend: a scanline/stamp rasterizer for the draw list plus a
 * minimal PNG encoder (8-bit RGB, filter 0, zlib via node:zlib).  Text uses
 * an embedded 5x7 glyph set covering axis numerals and common label
 * characters; anything else renders as a hollow box.
 */

import { deflateSync } from "node:zlib";
import { Canvas, Polygon, Polyline, TextItem } from "./render.js";

const FONT: Record<string, number[]> = {
  "0": [0x1f, 0x11, 0x11, 0x11, 0x1f],
  "1": [0x00, 0x12, 0x1f, 0x10, 0x00],
  "2": [0x1d, 0x15, 0x15, 0x15, 0x17],
  "3": [0x11, 0x15, 0x15, 0x15, 0x1f],
  "4": [0x07, 0x04, 0x04, 0x1f, 0x04],
  "5": [0x17, 0x15, 0x15, 0x15, 0x1d],
  "6": [0x1f, 0x15, 0x15, 0x15, 0x1d],
  "7": [0x01, 0x01, 0x1d, 0x03, 0x01],
  "8": [0x1f, 0x15, 0x15, 0x15, 0x1f],
  "9": [0x17, 0x15, 0x15, 0x15, 0x1f],
  ".": [0x00, 0x18, 0x18, 0x00, 0x00],
  "-": [0x04, 0x04, 0x04, 0x04, 0x00],
  "+": [0x04, 0x04, 0x1f, 0x04, 0x04],
  e: [0x0e, 0x15, 0x15, 0x15, 0x06],
  E: [0x1f, 0x15, 0x15, 0x15, 0x11],
  t: [0x04, 0x1f, 0x14, 0x10, 0x00],
  P: [0x1f, 0x05, 0x05, 0x05, 0x02],
  n: [0x1c, 0x04, 0x04, 0x18, 0x00],
  _: [0x10, 0x10, 0x10, 0x10, 0x10],
  " ": [0x00, 0x00, 0x00, 0x00, 0x00],
};
const BOX = [0x1f, 0x11, 0x11, 0x11, 0x1f];

type RGB = [number, number, number];

function parseColor(spec: string): RGB {
  const m = spec.match(/^#([0-9a-fA-F]{6})$/);
  if (!m) return [0, 0, 0];
  const v = parseInt(m[1], 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}

class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 3).fill(0xff);
  }

  blend(x: number, y: number, [r, g, b]: RGB, alpha: number): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 3;
    this.data[i] = Math.round(this.data[i] * (1 - alpha) + r * alpha);
    this.data[i + 1] = Math.round(this.data[i + 1] * (1 - alpha) + g * alpha);
    this.data[i + 2] = Math.round(this.data[i + 2] * (1 - alpha) + b * alpha);
  }

  disc(cx: number, cy: number, radius: number, color: RGB, alpha: number): void {
    const r = Math.max(radius, 0.5);
    for (let y = Math.floor(cy - r); y <= Math.ceil(cy + r); y += 1) {
      for (let x = Math.floor(cx - r); x <= Math.ceil(cx + r); x += 1) {
        const d = Math.hypot(x - cx, y - cy);
        if (d <= r) this.blend(x, y, color, alpha);
      }
    }
  }
}

function drawPolyline(img: Raster, item: Polyline): void {
  const color = parseColor(item.color);
  const radius = item.width / 2;
  const dash = item.dash;
  let travelled = 0;
  for (let s = 0; s + 1 < item.points.length; s += 1) {
    const [x0, y0] = item.points[s];
    const [x1, y1] = item.points[s + 1];
    const len = Math.hypot(x1 - x0, y1 - y0);
    const steps = Math.max(1, Math.ceil(len));
    for (let k = 0; k <= steps; k += 1) {
      const f = k / steps;
      if (dash) {
        const pos = travelled + f * len;
        const period = dash[0] + dash[1];
        if (pos % period > dash[0]) continue;
      }
      img.disc(x0 + f * (x1 - x0), y0 + f * (y1 - y0), radius, color, item.alpha);
    }
    travelled += len;
  }
}

function drawPolygon(img: Raster, item: Polygon): void {
  const color = parseColor(item.fill);
  const ys = item.points.map((p) => p[1]);
  const yMin = Math.max(0, Math.floor(Math.min(...ys)));
  const yMax = Math.min(img.height - 1, Math.ceil(Math.max(...ys)));
  const n = item.points.length;
  for (let y = yMin; y <= yMax; y += 1) {
    const xs: number[] = [];
    for (let i = 0; i < n; i += 1) {
      const [xa, ya] = item.points[i];
      const [xb, yb] = item.points[(i + 1) % n];
      if (ya === yb) continue;
      const yc = y + 0.5;
      if ((yc >= ya && yc < yb) || (yc >= yb && yc < ya)) {
        xs.push(xa + ((yc - ya) / (yb - ya)) * (xb - xa));
      }
    }
    xs.sort((a, b) => a - b);
    for (let i = 0; i + 1 < xs.length; i += 2) {
      for (let x = Math.ceil(xs[i]); x <= Math.floor(xs[i + 1]); x += 1) {
        img.blend(x, y, color, item.alpha);
      }
    }
  }
}

function drawText(img: Raster, item: TextItem): void {
  const scale = Math.max(1, Math.round(item.size / 7));
  const advance = 6 * scale;
  const total = item.text.length * advance;
  let x0 = Math.round(item.x);
  if (item.anchor === "middle") x0 -= Math.round(total / 2);
  if (item.anchor === "end") x0 -= total;
  const yTop = Math.round(item.y) - 7 * scale + scale;
  for (const ch of item.text) {
    const glyph = FONT[ch] ?? BOX;
    for (let cx = 0; cx < 5; cx += 1) {
      for (let cy = 0; cy < 7; cy += 1) {
        if ((glyph[cx] >> cy) & 1) {
          for (let sy = 0; sy < scale; sy += 1) {
            for (let sx = 0; sx < scale; sx += 1) {
              img.blend(x0 + cx * scale + sx, yTop + cy * scale + sy, [0, 0, 0], 1);
            }
          }
        }
      }
    }
    x0 += advance;
  }
}

function crc32(buf: Uint8Array): number {
  let crc = ~0;
  for (let i = 0; i < buf.length; i += 1) {
    crc ^= buf[i];
    for (let k = 0; k < 8; k += 1) {
      crc = (crc >>> 1) ^ (0xedb88320 & -(crc & 1));
    }
  }
  return ~crc >>> 0;
}

function chunk(type: string, payload: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + payload.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, payload.length);
  for (let i = 0; i < 4; i += 1) out[4 + i] = type.charCodeAt(i);
  out.set(payload, 8);
  const crcInput = out.subarray(4, 8 + payload.length);
  view.setUint32(8 + payload.length, crc32(crcInput));
  return out;
}

function encodePng(img: Raster): Uint8Array {
  const { width, height, data } = img;
  const ihdr = new Uint8Array(13);
  const v = new DataView(ihdr.buffer);
  v.setUint32(0, width);
  v.setUint32(4, height);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // colour type: truecolour
  const raw = new Uint8Array(height * (1 + width * 3));
  for (let y = 0; y < height; y += 1) {
    raw[y * (1 + width * 3)] = 0; // filter none
    raw.set(data.subarray(y * width * 3, (y + 1) * width * 3), y * (1 + width * 3) + 1);
  }
  const idat = deflateSync(raw, { level: 9 });
  const sig = Uint8Array.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  const parts = [sig, chunk("IHDR", ihdr), chunk("IDAT", idat), chunk("IEND", new Uint8Array(0))];
  const total = parts.reduce((acc, p) => acc + p.length, 0);
  const out = new Uint8Array(total);
  let off = 0;
  for (const p of parts) {
    out.set(p, off);
    off += p.length;
  }
  return out;
}

export function toPng(canvas: Canvas): Uint8Array {
  const img = new Raster(canvas.width, canvas.height);
  for (const item of canvas.items) {
    if (item.kind === "polygon") drawPolygon(img, item);
    else if (item.kind === "polyline") drawPolyline(img, item);
    else drawText(img, item);
  }
  return encodePng(img);
}
