import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { column, gridMismatch, readCsv } from "../src/csv.js";
import { assemble, bandCoverage, DEFAULT_STYLE, meanRecomputeError } from "../src/figure.js";
import { buildCanvas, expandGlob, main } from "../src/plot_fig5.js";
import { toSvg } from "../src/render.js";
import { toPng } from "../src/png.js";

const FIX = join(__dirname, "fixtures");
const MASTER = join(FIX, "master.csv");
const SUMMARY = join(FIX, "summary.csv");
const TRAJ_GLOB = join(FIX, "traj_*.csv");

function loadAll() {
  const master = readCsv(MASTER);
  const summary = readCsv(SUMMARY);
  const trajs = expandGlob(TRAJ_GLOB).map(readCsv);
  return { master, summary, trajs };
}

describe("csv", () => {
  it("reads schema and named columns", () => {
    const t = readCsv(MASTER);
    expect(t.schema).toBe("qtraj.master.v1");
    expect(column(t, "t").length).toBe(t.rows);
    expect(column(t, "P_e")[0]).toBe(0);
  });

  it("rejects unknown columns by name", () => {
    const t = readCsv(MASTER);
    expect(() => column(t, "nope")).toThrow(/no column named 'nope'/);
  });

  it("rejects files without a schema line", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "t,y\n0,1\n");
    expect(() => readCsv(bad)).toThrow(/schema/);
  });

  it("measures grid mismatch", () => {
    const a = Float64Array.from([0, 1, 2]);
    expect(gridMismatch(a, Float64Array.from([0, 1, 2.5]))).toBe(0.5);
    expect(gridMismatch(a, Float64Array.from([0, 1]))).toBe(Infinity);
  });
});

describe("figure assembly", () => {
  it("assembles matching grids and finds the envelope", () => {
    const { master, summary, trajs } = loadAll();
    const data = assemble(master, summary, trajs, "P_e");
    expect(data.trajectories.length).toBe(8);
    expect(data.envelope).toBeDefined();
    expect(data.t.length).toBe(data.master.length);
  });

  it("rejects mismatched grids naming the offender", () => {
    const { master, summary } = loadAll();
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    const off = join(dir, "traj_bad.csv");
    const text = readFileSync(join(FIX, "traj_00000.csv"), "utf8")
      .split("\n")
      .filter((l) => l.length > 0);
    writeFileSync(off, text.slice(0, text.length - 1).join("\n") + "\n"); // one row short
    const bad = readCsv(off);
    expect(() => assemble(master, summary, [bad], "P_e")).toThrow(/traj_bad\.csv/);
  });

  it("recomputed mean matches the summary for a full ensemble", () => {
    const { master, summary, trajs } = loadAll();
    const data = assemble(master, summary, trajs, "P_e");
    expect(meanRecomputeError(data)).toBeLessThan(1e-12);
  });

  it("band coverage is a sane fraction", () => {
    const { master, summary, trajs } = loadAll();
    const data = assemble(master, summary, trajs, "P_e");
    const c = bandCoverage(data, DEFAULT_STYLE);
    expect(c).toBeGreaterThan(0.5);
    expect(c).toBeLessThanOrEqual(1.0);
  });
});

describe("rendering", () => {
  it("svg contains the four layers and axes text", () => {
    const { master, summary, trajs } = loadAll();
    const data = assemble(master, summary, trajs, "P_e");
    const svg = toSvg(buildCanvas(data, DEFAULT_STYLE));
    expect(svg).toContain("<polygon"); // error band
    expect((svg.match(/<polyline/g) ?? []).length).toBeGreaterThan(10);
    expect(svg).toContain("P_e");
    expect(svg).toContain("stroke-dasharray"); // envelope and master styles
  });

  it("png bytes carry the signature and are deterministic", () => {
    const { master, summary, trajs } = loadAll();
    const data = assemble(master, summary, trajs, "P_e");
    const canvas = buildCanvas(data, DEFAULT_STYLE);
    const a = toPng(canvas);
    const b = toPng(canvas);
    expect(Array.from(a.subarray(0, 8))).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
    expect(Buffer.compare(Buffer.from(a), Buffer.from(b))).toBe(0);
  });
});

describe("cli", () => {
  it("renders svg and png outputs and reports coverage", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    for (const name of ["fig.svg", "fig.png"]) {
      const code = main([
        "--master", MASTER, "--summary", SUMMARY, "--traj", TRAJ_GLOB,
        "--obs", "P_e", "--out", join(dir, name), "--check-mean",
      ]);
      expect(code).toBe(0);
      expect(readFileSync(join(dir, name)).length).toBeGreaterThan(0);
    }
  });

  it("empty glob degrades to a warning", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    const code = main([
      "--master", MASTER, "--summary", SUMMARY, "--traj", join(dir, "traj_*.csv"),
      "--obs", "P_e", "--out", join(dir, "fig.svg"),
    ]);
    expect(code).toBe(0);
  });

  it("missing required option fails", () => {
    expect(main(["--master", MASTER])).toBe(1);
  });

  it("unknown observable fails cleanly", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    const code = main([
      "--master", MASTER, "--summary", SUMMARY,
      "--obs", "nope", "--out", join(dir, "fig.svg"),
    ]);
    expect(code).toBe(1);
  });
});
