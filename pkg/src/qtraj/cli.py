"""Command-line front end.

    qtraj master       --config cfg.json [--out DIR]
    qtraj trajectory   --config cfg.json [--seed S] [--index I] [--out DIR]
    qtraj ensemble     --config cfg.json [--seed S] [--out DIR] [--parallelism P]
    qtraj oracle-check --config cfg.json [--out DIR]

Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 the
hierarchy/cascade cross-check exceeded its tolerance.  All outputs are
schema-versioned CSV files (see :mod:`qtraj.csvio`); reruns with the same
config and seed are byte-identical regardless of parallelism.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .csvio import write_csv
from .engine import run_ensemble, run_trajectory
from .fields import CatField, PhotonField, VacuumField
from .filters import make_filter_model
from .hierarchy import compare_blocks, run_master, run_oracle

EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_ORACLE = 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(config_path: str) -> ExperimentConfig:
    try:
        return load_config(config_path)
    except ConfigError as e:
        _fail(EXIT_CONFIG, str(e))
    except OSError as e:
        _fail(EXIT_CONFIG, f"cannot read config: {e}")


def _outdir(out: str) -> Path:
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _block_labels(field) -> list:
    if isinstance(field, VacuumField):
        return [("", 0, 0)]
    if isinstance(field, PhotonField):
        return [(f"{j}{k}", j, k) for j in (1, 0) for k in (1, 0)]
    n = field.n
    return [(f"{j + 1}{k + 1}", j, k) for j in range(n) for k in range(n)]


def _trace_columns(field, blocks_series: np.ndarray) -> dict:
    traces = np.einsum("tjkaa->tjk", blocks_series)
    cols = {}
    for label, j, k in _block_labels(field):
        suffix = f"_{label}" if label else ""
        cols[f"tr{suffix}_re"] = traces[:, j, k].real
        cols[f"tr{suffix}_im"] = traces[:, j, k].imag
    return cols


@click.group()
def main():
    """Master equations and quantum filters for non-classical input fields."""


_config_opt = click.option("--config", "config_path", required=True,
                           type=click.Path(exists=True, dir_okay=False),
                           help="JSON experiment description.")
_out_opt = click.option("--out", "out", default=".", show_default=True,
                        help="Output directory.")


@main.command()
@_config_opt
@_out_opt
def master(config_path, out):
    """Deterministic (ensemble-averaged) evolution to CSV."""
    cfg = _load(config_path)
    try:
        run = run_master(cfg.system, cfg.field, cfg.rho0, cfg.grid)
        cols = {"t": run.times}
        for name, A in cfg.observables.items():
            cols[name] = run.expectations(A)
        if isinstance(cfg.field, PhotonField):
            cols["xi_abs2"] = np.abs(cfg.field.wavepacket(run.times)) ** 2
        cols.update(_trace_columns(cfg.field, run.blocks))
        path = _outdir(out) / "master.csv"
        write_csv(path, "qtraj.master.v1", cols)
    except Exception as e:  # noqa: BLE001 - surfaced as exit code contract
        _fail(EXIT_RUNTIME, f"{type(e).__name__}: {e}")
    click.echo(f"wrote {path}")


def _require_scheme(cfg: ExperimentConfig):
    if cfg.scheme is None:
        _fail(EXIT_CONFIG, "/measurement: this subcommand needs a measurement scheme")


@main.command()
@_config_opt
@_out_opt
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--index", type=int, default=0, show_default=True,
              help="Trajectory index within the seed's family.")
def trajectory(config_path, out, seed, index):
    """One conditional trajectory to CSV."""
    cfg = _load(config_path)
    _require_scheme(cfg)
    use_seed = cfg.seed if seed is None else seed
    try:
        fine = cfg.fine_grid()
        model = make_filter_model(cfg.system, cfg.field, cfg.rho0, fine.times(), cfg.scheme)
        rec = run_trajectory(model, fine, cfg.substeps, use_seed, index, cfg.observables)
        cols = {"t": rec.grid.times()}
        cols["dY"] = np.concatenate([[0.0], rec.record])
        cols["dW"] = np.concatenate([[0.0], rec.record - rec.compensator])
        for name in cfg.observables:
            cols[name] = rec.observables[name]
        cols["record_cum"] = rec.observables["record_cum"]
        cols["innovation_cum"] = rec.observables["innovation_cum"]
        path = _outdir(out) / f"traj_{index:05d}.csv"
        write_csv(path, "qtraj.trajectory.v1", cols)
    except Exception as e:  # noqa: BLE001
        _fail(EXIT_RUNTIME, f"{type(e).__name__}: {e}")
    click.echo(f"wrote {path}")


@main.command()
@_config_opt
@_out_opt
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--parallelism", type=int, default=None, help="Override the config parallelism.")
def ensemble(config_path, out, seed, parallelism):
    """Trajectory ensemble: summary CSV plus optional per-trajectory CSVs."""
    cfg = _load(config_path)
    _require_scheme(cfg)
    use_seed = cfg.seed if seed is None else seed
    use_par = cfg.parallelism if parallelism is None else parallelism
    try:
        fine = cfg.fine_grid()
        model = make_filter_model(cfg.system, cfg.field, cfg.rho0, fine.times(), cfg.scheme)
        summary, kept = run_ensemble(
            model, fine, cfg.substeps, use_seed, cfg.n_traj, cfg.observables,
            parallelism=use_par, batch_size=cfg.batch_size,
            keep_records=cfg.save_trajectories)
        outdir = _outdir(out)
        cols = {"t": summary.times}
        for name in list(cfg.observables) + ["record_cum", "innovation_cum"]:
            cols[f"mean_{name}"] = summary.mean[name]
            cols[f"sem_{name}"] = summary.sem[name]
        spath = outdir / "summary.csv"
        write_csv(spath, "qtraj.ensemble_summary.v1", cols)
        if not summary.sem_defined:
            click.echo("note: single trajectory, standard errors undefined", err=True)
        for rec in kept:
            tcols = {"t": rec.grid.times(),
                     "dY": np.concatenate([[0.0], rec.record])}
            for name in cfg.observables:
                tcols[name] = rec.observables[name]
            write_csv(outdir / f"traj_{rec.index:05d}.csv", "qtraj.ensemble_traj.v1", tcols)
    except Exception as e:  # noqa: BLE001
        _fail(EXIT_RUNTIME, f"{type(e).__name__}: {e}")
    click.echo(f"wrote {spath} and {len(kept)} trajectory files")


@main.command(name="oracle-check")
@_config_opt
@_out_opt
def oracle_check(config_path, out):
    """Compare the block hierarchy against the cascaded-pair reconstruction."""
    cfg = _load(config_path)
    if isinstance(cfg.field, VacuumField):
        _fail(EXIT_CONFIG, "/field: the cross-check needs a photon or cat field")
    try:
        run = run_master(cfg.system, cfg.field, cfg.rho0, cfg.grid)
        oracle = run_oracle(cfg.system, cfg.field, cfg.rho0, cfg.grid,
                            weight_floor=cfg.oracle_weight_floor)
        devs = compare_blocks(run, oracle)
    except Exception as e:  # noqa: BLE001
        _fail(EXIT_RUNTIME, f"{type(e).__name__}: {e}")
    worst = max(v for v in devs.values() if not np.isnan(v))
    for (j, k), v in sorted(devs.items()):
        cover = float(np.mean(oracle.valid[:, j, k]))
        click.echo(f"block ({j},{k}): max deviation {v:.3e} over {cover:.0%} of the grid")
    ok = worst <= cfg.oracle_tolerance
    click.echo(f"max deviation {worst:.3e} vs tolerance {cfg.oracle_tolerance:.1e}: "
               f"{'PASS' if ok else 'FAIL'}")
    if not ok:
        sys.exit(EXIT_ORACLE)


if __name__ == "__main__":
    main()
