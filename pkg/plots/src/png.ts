/**
 * Dependency-free PNG rendering of the same chart spec the SVG writer takes.
 *
 * Geometry is rasterized onto an RGBA buffer (Bresenham lines, filled
 * rectangles, a built-in 5x7 bitmap font) and encoded as one IDAT chunk with
 * node's zlib, which keeps the bytes reproducible for identical inputs.
 */

import { deflateSync } from "node:zlib";

import { ChartSpec, niceTicks } from "./svg.js";

const MARGIN = { left: 64, right: 16, top: 36, bottom: 46 };

// Each glyph is 7 rows of 5-bit masks, MSB on the left.
const FONT: Record<string, number[]> = {
  "0": [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e],
  "1": [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e],
  "2": [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f],
  "3": [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e],
  "4": [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02],
  "5": [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e],
  "6": [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e],
  "7": [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
  "8": [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e],
  "9": [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c],
  A: [0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11],
  B: [0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e],
  C: [0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e],
  D: [0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c],
  E: [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f],
  F: [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10],
  G: [0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f],
  H: [0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11],
  I: [0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
  J: [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c],
  K: [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
  L: [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f],
  M: [0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11],
  N: [0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11],
  O: [0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e],
  P: [0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10],
  Q: [0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d],
  R: [0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11],
  S: [0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e],
  T: [0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
  U: [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e],
  V: [0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04],
  W: [0x11, 0x11, 0x11, 0x15, 0x15, 0x1b, 0x11],
  X: [0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11],
  Y: [0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04],
  Z: [0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f],
  " ": [0, 0, 0, 0, 0, 0, 0],
  "-": [0, 0, 0, 0x0e, 0, 0, 0],
  ".": [0, 0, 0, 0, 0, 0x0c, 0x0c],
  ",": [0, 0, 0, 0, 0x0c, 0x04, 0x08],
  "(": [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
  ")": [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
  "=": [0, 0, 0x1f, 0, 0x1f, 0, 0],
  "/": [0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10],
  ":": [0, 0x0c, 0x0c, 0, 0x0c, 0x0c, 0],
  "%": [0x19, 0x19, 0x02, 0x04, 0x08, 0x13, 0x13],
  _: [0, 0, 0, 0, 0, 0, 0x1f],
};

type Rgb = [number, number, number];

function parseColor(hex: string): Rgb {
  const h = hex.replace("#", "");
  return [
    parseInt(h.slice(0, 2), 16),
    parseInt(h.slice(2, 4), 16),
    parseInt(h.slice(4, 6), 16),
  ];
}

export class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 4).fill(255);
  }

  set(x: number, y: number, [r, g, b]: Rgb): void {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height) return;
    const o = (yi * this.width + xi) * 4;
    this.data[o] = r;
    this.data[o + 1] = g;
    this.data[o + 2] = b;
    this.data[o + 3] = 255;
  }

  line(x0: number, y0: number, x1: number, y1: number, color: Rgb, thick = 1): void {
    let xa = Math.round(x0);
    let ya = Math.round(y0);
    const xb = Math.round(x1);
    const yb = Math.round(y1);
    const dx = Math.abs(xb - xa);
    const dy = -Math.abs(yb - ya);
    const sx = xa < xb ? 1 : -1;
    const sy = ya < yb ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      for (let ox = 0; ox < thick; ox++) {
        for (let oy = 0; oy < thick; oy++) {
          this.set(xa + ox, ya + oy, color);
        }
      }
      if (xa === xb && ya === yb) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        xa += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ya += sy;
      }
    }
  }

  rect(x: number, y: number, w: number, h: number, color: Rgb): void {
    for (let yi = y; yi < y + h; yi++) {
      for (let xi = x; xi < x + w; xi++) {
        this.set(xi, yi, color);
      }
    }
  }

  text(x: number, y: number, s: string, color: Rgb): void {
    let cx = Math.round(x);
    const cy = Math.round(y);
    for (const raw of s.toUpperCase()) {
      const glyph = FONT[raw] ?? FONT[" "];
      for (let row = 0; row < 7; row++) {
        for (let col = 0; col < 5; col++) {
          if (glyph[row] & (1 << (4 - col))) {
            this.set(cx + col, cy + row, color);
          }
        }
      }
      cx += 6;
    }
  }

  textWidth(s: string): number {
    return s.length * 6;
  }
}

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

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (const byte of buf) {
    c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, payload: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + payload.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, payload.length);
  for (let i = 0; i < 4; i++) out[4 + i] = type.charCodeAt(i);
  out.set(payload, 8);
  view.setUint32(8 + payload.length, crc32(out.subarray(4, 8 + payload.length)));
  return out;
}

export function encodePng(raster: Raster): Buffer {
  const { width, height, data } = raster;
  const ihdr = new Uint8Array(13);
  const view = new DataView(ihdr.buffer);
  view.setUint32(0, width);
  view.setUint32(4, height);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 6; // RGBA
  const raw = new Uint8Array(height * (1 + width * 4));
  for (let y = 0; y < height; y++) {
    raw[y * (1 + width * 4)] = 0; // filter: none
    raw.set(data.subarray(y * width * 4, (y + 1) * width * 4), y * (1 + width * 4) + 1);
  }
  const idat = deflateSync(raw, { level: 9 });
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

const BLACK: Rgb = [34, 34, 34];
const GRID: Rgb = [221, 221, 221];

export function renderChartToPng(spec: ChartSpec): Buffer {
  const width = spec.width ?? 640;
  const height = spec.height ?? 420;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const raster = new Raster(width, height);

  const xs = spec.series.flatMap((s) => s.x);
  const ys = spec.series.flatMap((s) => s.y);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = spec.yMin ?? Math.min(...ys);
  const yHiRaw = spec.yMax ?? Math.max(...ys);
  const yHi = yHiRaw > yLo ? yHiRaw : yLo + 1;
  const px = (x: number) =>
    MARGIN.left + (xHi > xLo ? ((x - xLo) / (xHi - xLo)) * plotW : plotW / 2);
  const py = (y: number) => MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;

  const title = spec.title;
  raster.text((width - raster.textWidth(title)) / 2, 12, title, BLACK);

  for (const t of niceTicks(yLo, yHi)) {
    raster.line(MARGIN.left, py(t), MARGIN.left + plotW, py(t), GRID);
    const label = String(t);
    raster.text(MARGIN.left - 8 - raster.textWidth(label), py(t) - 3, label, BLACK);
  }
  for (const t of niceTicks(xLo, xHi)) {
    raster.line(px(t), MARGIN.top + plotH, px(t), MARGIN.top + plotH + 4, BLACK);
    const label = String(t);
    raster.text(px(t) - raster.textWidth(label) / 2, MARGIN.top + plotH + 8, label, BLACK);
  }
  // frame
  raster.line(MARGIN.left, MARGIN.top, MARGIN.left + plotW, MARGIN.top, BLACK);
  raster.line(MARGIN.left, MARGIN.top + plotH, MARGIN.left + plotW, MARGIN.top + plotH, BLACK);
  raster.line(MARGIN.left, MARGIN.top, MARGIN.left, MARGIN.top + plotH, BLACK);
  raster.line(MARGIN.left + plotW, MARGIN.top, MARGIN.left + plotW, MARGIN.top + plotH, BLACK);

  raster.text(
    MARGIN.left + (plotW - raster.textWidth(spec.xLabel)) / 2,
    height - 16,
    spec.xLabel,
    BLACK
  );
  raster.text(4, 12, spec.yLabel, BLACK);

  for (const s of spec.series) {
    const color = parseColor(s.color);
    for (let i = 1; i < s.x.length; i++) {
      raster.line(px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]), color, 2);
    }
    for (let i = 0; i < s.x.length; i++) {
      raster.rect(Math.round(px(s.x[i])) - 1, Math.round(py(s.y[i])) - 1, 3, 3, color);
    }
  }

  let legendY = MARGIN.top + 8;
  const legendX = MARGIN.left + plotW - 150;
  for (const s of spec.series) {
    raster.line(legendX, legendY, legendX + 20, legendY, parseColor(s.color), 2);
    raster.text(legendX + 26, legendY - 3, s.label, BLACK);
    legendY += 14;
  }
  return encodePng(raster);
}
