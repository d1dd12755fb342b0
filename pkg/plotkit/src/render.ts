/**
 * Tiny deterministic plotting backend: an axes layout produces a draw list
 * of primitives which either the SVG emitter or the PNG rasterizer turns
 * into bytes.  No timestamps or external state enter the output, so a
 * figure is reproducible byte-for-byte.
 */

export interface Polyline {
  kind: "polyline";
  points: Array<[number, number]>;
  color: string;
  width: number;
  alpha: number;
  dash?: number[];
}

export interface Polygon {
  kind: "polygon";
  points: Array<[number, number]>;
  fill: string;
  alpha: number;
}

export interface TextItem {
  kind: "text";
  x: number;
  y: number;
  text: string;
  size: number;
  anchor: "start" | "middle" | "end";
}

export type Primitive = Polyline | Polygon | TextItem;

export interface Canvas {
  width: number;
  height: number;
  items: Primitive[];
}

export interface AxesBox {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  tMin: number;
  tMax: number;
  vMin: number;
  vMax: number;
}

export function makeAxes(
  width: number,
  height: number,
  tMin: number,
  tMax: number,
  vMin: number,
  vMax: number,
): AxesBox {
  return { x0: 56, y0: 18, x1: width - 14, y1: height - 40, tMin, tMax, vMin, vMax };
}

export function toX(ax: AxesBox, t: number): number {
  return ax.x0 + ((t - ax.tMin) / (ax.tMax - ax.tMin)) * (ax.x1 - ax.x0);
}

export function toY(ax: AxesBox, v: number): number {
  return ax.y1 - ((v - ax.vMin) / (ax.vMax - ax.vMin)) * (ax.y1 - ax.y0);
}

export function niceTicks(lo: number, hi: number, target = 6): number[] {
  const span = hi - lo;
  if (!(span > 0)) return [lo];
  const raw = span / target;
  const mag = 10 ** Math.floor(Math.log10(raw));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => span / s <= target) ?? mag * 10;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return ticks;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.01) return v.toExponential(1);
  return String(Number(v.toPrecision(4)));
}

export function drawAxes(canvas: Canvas, ax: AxesBox, xLabel: string, yLabel: string): void {
  const frame: Polyline = {
    kind: "polyline",
    points: [
      [ax.x0, ax.y0],
      [ax.x0, ax.y1],
      [ax.x1, ax.y1],
    ],
    color: "#000000",
    width: 1,
    alpha: 1,
  };
  canvas.items.push(frame);
  for (const t of niceTicks(ax.tMin, ax.tMax)) {
    const x = toX(ax, t);
    canvas.items.push({
      kind: "polyline",
      points: [
        [x, ax.y1],
        [x, ax.y1 + 4],
      ],
      color: "#000000",
      width: 1,
      alpha: 1,
    });
    canvas.items.push({
      kind: "text",
      x,
      y: ax.y1 + 16,
      text: formatTick(t),
      size: 10,
      anchor: "middle",
    });
  }
  for (const v of niceTicks(ax.vMin, ax.vMax)) {
    const y = toY(ax, v);
    canvas.items.push({
      kind: "polyline",
      points: [
        [ax.x0 - 4, y],
        [ax.x0, y],
      ],
      color: "#000000",
      width: 1,
      alpha: 1,
    });
    canvas.items.push({
      kind: "text",
      x: ax.x0 - 7,
      y: y + 3,
      text: formatTick(v),
      size: 10,
      anchor: "end",
    });
  }
  canvas.items.push({
    kind: "text",
    x: (ax.x0 + ax.x1) / 2,
    y: ax.y1 + 32,
    text: xLabel,
    size: 12,
    anchor: "middle",
  });
  canvas.items.push({
    kind: "text",
    x: ax.x0,
    y: ax.y0 - 6,
    text: yLabel,
    size: 12,
    anchor: "start",
  });
}

// ---------------------------------------------------------------------------
// SVG emission

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function pts(points: Array<[number, number]>): string {
  return points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
}

export function toSvg(canvas: Canvas): string {
  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${canvas.width}" height="${canvas.height}" ` +
      `viewBox="0 0 ${canvas.width} ${canvas.height}">`,
  );
  out.push(`<rect width="${canvas.width}" height="${canvas.height}" fill="#ffffff"/>`);
  for (const item of canvas.items) {
    if (item.kind === "polygon") {
      out.push(
        `<polygon points="${pts(item.points)}" fill="${item.fill}" ` +
          `fill-opacity="${item.alpha}" stroke="none"/>`,
      );
    } else if (item.kind === "polyline") {
      const dash = item.dash ? ` stroke-dasharray="${item.dash.join(",")}"` : "";
      out.push(
        `<polyline points="${pts(item.points)}" fill="none" stroke="${item.color}" ` +
          `stroke-width="${item.width}" stroke-opacity="${item.alpha}"${dash}/>`,
      );
    } else {
      const anchor = { start: "start", middle: "middle", end: "end" }[item.anchor];
      out.push(
        `<text x="${item.x.toFixed(2)}" y="${item.y.toFixed(2)}" font-family="monospace" ` +
          `font-size="${item.size}" text-anchor="${anchor}">${esc(item.text)}</text>`,
      );
    }
  }
  out.push("</svg>");
  return out.join("\n") + "\n";
}
