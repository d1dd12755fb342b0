#!/usr/bin/env node
/**
 * plot_fig5: render the benchmark figure from simulator CSV outputs.
 *
 *   plot_fig5 --master m.csv --summary s.csv --traj 'traj_*.csv' \
 *             --obs P_e --out fig.svg [--band-sigma 2] [--traj-alpha 0.28] \
 *             [--check-mean]
 *
 * Layers: squared input envelope (dashed, when the master file provides
 * it), master-equation curve (red dotted), individual grey trajectories,
 * ensemble mean with its shaded error band.  The output format follows the
 * --out extension: .svg (vector) or .png (raster).  Inputs are never
 * modified; identical inputs and options give identical output bytes.
 *
 * Exit codes: 0 success, 1 bad inputs (missing files, mismatched grids,
 * failed consistency check).
 */

import { readdirSync, writeFileSync } from "node:fs";
import { basename, dirname, join } from "node:path";
import { argv, exit, stderr, stdout } from "node:process";

import { readCsv, Table } from "./csv.js";
import { assemble, bandCoverage, DEFAULT_STYLE, FigureData, FigureStyle, meanRecomputeError } from "./figure.js";
import { Canvas, drawAxes, makeAxes, toSvg, toX, toY } from "./render.js";
import { toPng } from "./png.js";

interface Options {
  master: string;
  summary: string;
  traj?: string;
  obs: string;
  out: string;
  bandSigma: number;
  trajAlpha: number;
  checkMean: boolean;
}

function parseArgs(args: string[]): Options {
  const opts: Partial<Options> = { bandSigma: DEFAULT_STYLE.bandSigma, trajAlpha: DEFAULT_STYLE.trajectoryAlpha, checkMean: false };
  for (let i = 0; i < args.length; i += 1) {
    const a = args[i];
    const next = () => {
      i += 1;
      if (i >= args.length) throw new Error(`missing value for ${a}`);
      return args[i];
    };
    switch (a) {
      case "--master": opts.master = next(); break;
      case "--summary": opts.summary = next(); break;
      case "--traj": opts.traj = next(); break;
      case "--obs": opts.obs = next(); break;
      case "--out": opts.out = next(); break;
      case "--band-sigma": opts.bandSigma = Number(next()); break;
      case "--traj-alpha": opts.trajAlpha = Number(next()); break;
      case "--check-mean": opts.checkMean = true; break;
      default: throw new Error(`unknown option ${a}`);
    }
  }
  for (const key of ["master", "summary", "obs", "out"] as const) {
    if (opts[key] === undefined) throw new Error(`--${key} is required`);
  }
  return opts as Options;
}

/** Expand a single-directory glob with '*' wildcards, sorted by name. */
export function expandGlob(pattern: string): string[] {
  const dir = dirname(pattern);
  const base = basename(pattern);
  if (!base.includes("*")) return [pattern];
  const rx = new RegExp("^" + base.split("*").map(escapeRx).join(".*") + "$");
  let names: string[];
  try {
    names = readdirSync(dir);
  } catch {
    return [];
  }
  return names.filter((n) => rx.test(n)).sort().map((n) => join(dir, n));
}

function escapeRx(s: string): string {
  return s.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

export function buildCanvas(data: FigureData, style: FigureStyle): Canvas {
  const canvas: Canvas = { width: style.width, height: style.height, items: [] };
  let vMax = 0;
  const consider = (arr: Float64Array) => {
    for (const v of arr) vMax = Math.max(vMax, v);
  };
  consider(data.master);
  consider(data.mean);
  if (data.envelope) consider(data.envelope);
  data.trajectories.forEach(consider);
  vMax = Math.min(Math.max(vMax * 1.05, 0.1), 1.05);
  const ax = makeAxes(style.width, style.height, data.t[0], data.t[data.t.length - 1], 0, vMax);

  const line = (values: Float64Array) =>
    Array.from(values, (v, i) => [toX(ax, data.t[i]), toY(ax, Math.min(v, ax.vMax))] as [number, number]);

  // error band first so every curve stays visible on top of it
  const upper = Array.from(data.mean, (m, i) =>
    [toX(ax, data.t[i]), toY(ax, Math.min(m + style.bandSigma * data.sem[i], ax.vMax))] as [number, number]);
  const lower = Array.from(data.mean, (m, i) =>
    [toX(ax, data.t[i]), toY(ax, Math.max(m - style.bandSigma * data.sem[i], 0))] as [number, number]);
  canvas.items.push({ kind: "polygon", points: [...upper, ...lower.reverse()], fill: style.bandColor, alpha: 0.55 });

  for (const traj of data.trajectories) {
    canvas.items.push({ kind: "polyline", points: line(traj), color: "#888888", width: 1, alpha: style.trajectoryAlpha });
  }
  if (data.envelope) {
    canvas.items.push({ kind: "polyline", points: line(data.envelope), color: "#3366cc", width: 1.5, alpha: 1, dash: [6, 4] });
  }
  canvas.items.push({ kind: "polyline", points: line(data.master), color: "#cc2222", width: 2, alpha: 1, dash: [2, 3] });
  canvas.items.push({ kind: "polyline", points: line(data.mean), color: "#111111", width: 2, alpha: 1 });

  drawAxes(canvas, ax, "t", data.observable);
  return canvas;
}

export function main(args: string[]): number {
  let opts: Options;
  try {
    opts = parseArgs(args);
  } catch (err) {
    stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const master = readCsv(opts.master);
    const summary = readCsv(opts.summary);
    let trajTables: Table[] = [];
    if (opts.traj !== undefined) {
      const paths = expandGlob(opts.traj);
      if (paths.length === 0) {
        stderr.write(`warning: trajectory glob '${opts.traj}' matched no files; ` +
          "rendering without individual trajectories\n");
      }
      trajTables = paths.map(readCsv);
    }
    const data = assemble(master, summary, trajTables, opts.obs);
    const style: FigureStyle = { ...DEFAULT_STYLE, bandSigma: opts.bandSigma, trajectoryAlpha: opts.trajAlpha };
    if (opts.checkMean) {
      const err = meanRecomputeError(data);
      if (err > 1e-12) {
        stderr.write(`error: summary mean differs from trajectory average by ${err.toExponential(2)}\n`);
        return 1;
      }
      stdout.write(`mean recompute check: max deviation ${err.toExponential(2)}\n`);
    }
    const canvas = buildCanvas(data, style);
    const coverage = bandCoverage(data, style);
    if (opts.out.toLowerCase().endsWith(".png")) {
      writeFileSync(opts.out, toPng(canvas));
    } else {
      writeFileSync(opts.out, toSvg(canvas));
    }
    stdout.write(`wrote ${opts.out} (${trajTables.length} trajectories, ` +
      `master inside band at ${(coverage * 100).toFixed(1)}% of grid points)\n`);
    return 0;
  } catch (err) {
    stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

const isDirect = import.meta.url.endsWith(basename(argv[1] ?? ""));
if (isDirect) {
  exit(main(argv.slice(2)));
}
