/**
 * Assembly of the benchmark-style figure data: the deterministic master
 * curve, individual grey trajectories, the ensemble mean with its error
 * band, and (when the master file carries it) the squared input envelope.
 *
 * All inputs must share one time grid; the band is mean +/- bandSigma
 * standard errors.  Coverage reports the fraction of grid points where the
 * master curve lies inside the band, counting points that agree to within
 * one device pixel of the rendered axis as covered (a curve cannot leave a
 * band it is visually on top of).
 */

import { Table, column, gridMismatch } from "./csv.js";

export interface FigureData {
  t: Float64Array;
  master: Float64Array;
  envelope?: Float64Array;
  mean: Float64Array;
  sem: Float64Array;
  trajectories: Float64Array[];
  observable: string;
}

export interface FigureStyle {
  width: number;
  height: number;
  bandSigma: number;
  trajectoryAlpha: number;
  bandColor: string;
}

export const DEFAULT_STYLE: FigureStyle = {
  width: 640,
  height: 400,
  bandSigma: 2.0,
  trajectoryAlpha: 0.28,
  bandColor: "#8fd19e",
};

const GRID_TOL = 1e-9;

export function assemble(
  master: Table,
  summary: Table,
  trajTables: Table[],
  observable: string,
): FigureData {
  const t = column(master, "t");
  const offenders: string[] = [];
  for (const tab of [summary, ...trajTables]) {
    if (gridMismatch(t, column(tab, "t")) > GRID_TOL) {
      offenders.push(tab.path);
    }
  }
  if (offenders.length > 0) {
    throw new Error(`time grids differ from ${master.path}: ${offenders.join(", ")}`);
  }
  return {
    t,
    master: column(master, observable),
    envelope: master.columns.get("xi_abs2"),
    mean: column(summary, `mean_${observable}`),
    sem: column(summary, `sem_${observable}`),
    trajectories: trajTables.map((tab) => column(tab, observable)),
    observable,
  };
}

/** Fraction of grid points where the master curve sits inside the band. */
export function bandCoverage(data: FigureData, style: FigureStyle): number {
  const resolution = 1.0 / style.height; // one pixel of the value axis
  let inside = 0;
  for (let i = 0; i < data.t.length; i += 1) {
    const half = Math.max(style.bandSigma * data.sem[i], resolution);
    if (Math.abs(data.master[i] - data.mean[i]) <= half) inside += 1;
  }
  return inside / data.t.length;
}

/** Max-abs difference between the summary mean and the trajectory average. */
export function meanRecomputeError(data: FigureData): number {
  if (data.trajectories.length === 0) {
    throw new Error("cannot recompute the mean without trajectory files");
  }
  let worst = 0;
  for (let i = 0; i < data.t.length; i += 1) {
    let acc = 0;
    for (const traj of data.trajectories) acc += traj[i];
    worst = Math.max(worst, Math.abs(acc / data.trajectories.length - data.mean[i]));
  }
  return worst;
}
