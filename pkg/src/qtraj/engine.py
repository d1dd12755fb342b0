"""Time grids, reproducible noise streams and trajectory orchestration.

Reproducibility contract: every number emitted by a run is a pure function
of (seed, trajectory count, grid, model configuration) on a given platform.
Trajectory ``i`` draws from a counter-based stream keyed by
``(seed, i)`` (Philox), so trajectories are independent and any subset can
be regenerated in isolation.  Ensembles are processed in fixed-size batches
reduced in index order; the parallelism degree only distributes batches
across worker threads and cannot change results.

Measurement records are generated in innovations form: at each step the
model supplies the record compensator (homodyne) or intensity (counting),
the stream supplies the Wiener increment or the thinning uniform, and

    dY = K dt + dW            (homodyne)
    dY = 1{U < nu dt}         (counting)

is both recorded and fed back into the filter step.  Observables are
sampled at step boundaries after the step, optionally on a coarser
reporting grid (``report_every`` sub-steps per reported row).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "TimeGrid",
    "NoiseStream",
    "gaussian_increment",
    "bernoulli_jump",
    "TrajectoryError",
    "TrajectoryRecord",
    "EnsembleSummary",
    "FilterInvariants",
    "run_trajectory",
    "run_ensemble",
    "MAX_JUMP_PROBABILITY",
    "DEFAULT_BATCH_SIZE",
]

MAX_JUMP_PROBABILITY = 0.1
DEFAULT_BATCH_SIZE = 128


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [t0, t1] with step dt; the step count is rounded."""

    t0: float
    t1: float
    dt: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t1 <= self.t0:
            raise ValueError("need t1 > t0")

    @property
    def n_steps(self) -> int:
        return max(1, int(round((self.t1 - self.t0) / self.dt)))

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    def half_times(self) -> np.ndarray:
        return self.t0 + (0.5 * self.dt) * np.arange(2 * self.n_steps + 1)

    def refined(self, substeps: int) -> "TimeGrid":
        if substeps < 1:
            raise ValueError("substeps must be >= 1")
        return TimeGrid(self.t0, self.t0 + self.n_steps * self.dt, self.dt / substeps)


class NoiseStream:
    """Counter-based random stream for one trajectory.

    The (seed, index) pair keys an independent Philox stream; ``counter``
    counts draws, so recreating the stream and redrawing reproduces any
    value bit-for-bit.
    """

    def __init__(self, seed: int, index: int = 0):
        self.seed = int(seed)
        self.index = int(index)
        self.counter = 0
        key = np.array([self.seed, self.index], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def gaussian_block(self, n: int, dt: float) -> np.ndarray:
        """n increments ~ Normal(0, dt)."""
        self.counter += n
        return self._gen.standard_normal(n) * np.sqrt(dt)

    def uniform_block(self, n: int) -> np.ndarray:
        self.counter += n
        return self._gen.random(n)


def gaussian_increment(stream: NoiseStream, dt: float) -> float:
    """One Wiener increment ~ Normal(0, dt)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return float(stream.gaussian_block(1, dt)[0])


def bernoulli_jump(stream: NoiseStream, intensity: float, dt: float) -> int:
    """One thinning draw: 1 with probability ``intensity * dt``.

    The step size must keep the per-step jump probability at or below
    MAX_JUMP_PROBABILITY so multi-jump events stay negligible.
    """
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    p = intensity * dt
    if p > MAX_JUMP_PROBABILITY:
        raise ValueError(
            f"jump probability {p:.3f} exceeds {MAX_JUMP_PROBABILITY}; reduce dt")
    return int(stream.uniform_block(1)[0] < p)


class TrajectoryError(RuntimeError):
    """A trajectory failed; carries the trajectory index and step."""

    def __init__(self, index: int, step: int, reason: str):
        self.index = index
        self.step = step
        super().__init__(f"trajectory {index} failed at step {step}: {reason}")


@dataclass
class FilterInvariants:
    """Running maxima of pathwise structural defects across a run."""

    pairing: float = 0.0          # |blocks[j,k]^dag - blocks[k,j]|
    combined_trace: float = 0.0   # |unnormalized combined trace - 1|

    def merge(self, other: "FilterInvariants") -> None:
        self.pairing = max(self.pairing, other.pairing)
        self.combined_trace = max(self.combined_trace, other.combined_trace)


@dataclass
class TrajectoryRecord:
    """One simulated trajectory on the reporting grid.

    ``observables[name][i]`` is the conditional expectation at report time
    i; ``record[i]`` is the measurement increment accumulated over report
    window i (so ``record`` has one fewer row than the observables);
    ``compensator`` holds the matching integrated compensator, which makes
    the innovations reconstructible as record - compensator.
    """

    grid: TimeGrid
    observables: dict
    record: np.ndarray
    compensator: np.ndarray
    seed: int
    index: int
    kind: str


@dataclass
class EnsembleSummary:
    """Per-time mean and standard error of observables across trajectories."""

    times: np.ndarray
    n_traj: int
    mean: dict
    sem: dict
    invariants: FilterInvariants
    sem_defined: bool = True


@dataclass
class _BatchResult:
    indices: np.ndarray
    series: dict          # name -> (B, R+1)
    record: np.ndarray    # (B, R)
    compensator: np.ndarray
    invariants: FilterInvariants


def _expect_batch(A: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("ij,...ji->...", A, rho))


def _run_batch(model, fine_grid: TimeGrid, report_every: int, seed: int,
               indices: Sequence[int], observables: dict,
               check_invariants: bool) -> _BatchResult:
    indices = np.asarray(list(indices), dtype=int)
    B = indices.shape[0]
    T = fine_grid.n_steps
    if T % report_every != 0:
        raise ValueError("report_every must divide the number of fine steps")
    R = T // report_every
    dt = fine_grid.dt

    if model.kind == "homodyne":
        noise = np.stack([NoiseStream(seed, i).gaussian_block(T, dt) for i in indices])
    else:
        noise = np.stack([NoiseStream(seed, i).uniform_block(T) for i in indices])

    blocks = model.initial_blocks(B)
    series = {name: np.empty((B, R + 1)) for name in observables}
    series["record_cum"] = np.empty((B, R + 1))
    series["innovation_cum"] = np.empty((B, R + 1))
    record = np.empty((B, R))
    compensator = np.empty((B, R))
    inv = FilterInvariants()

    y_cum = np.zeros(B)
    comp_cum = np.zeros(B)
    win_y = np.zeros(B)
    win_comp = np.zeros(B)

    def sample(r: int):
        rho_c = model.combine(blocks)
        if not np.all(np.isfinite(rho_c)):
            bad = int(np.argwhere(~np.isfinite(rho_c))[0][0])
            raise TrajectoryError(int(indices[bad]), r * report_every, "non-finite state")
        for name, A in observables.items():
            series[name][:, r] = _expect_batch(A, rho_c)
        series["record_cum"][:, r] = y_cum
        series["innovation_cum"][:, r] = y_cum - comp_cum
        if check_invariants:
            swapped = np.conj(np.swapaxes(np.swapaxes(blocks, -1, -2), -3, -4))
            inv.pairing = max(inv.pairing, float(np.max(np.abs(blocks - swapped))))
            inv.combined_trace = max(inv.combined_trace, float(
                np.max(np.abs(model.combined_trace_raw(blocks) - 1.0))))

    sample(0)
    for i in range(T):
        rate, aux = model.rate_aux(i, blocks)
        if model.kind == "homodyne":
            dY = rate * dt + noise[:, i]
        else:
            eff = np.where(rate >= model.floor, rate, 0.0)
            p = eff * dt
            pmax = float(p.max()) if B else 0.0
            if pmax > MAX_JUMP_PROBABILITY:
                bad = int(indices[int(np.argmax(p))])
                raise TrajectoryError(bad, i,
                                      f"jump probability {pmax:.3f} exceeds "
                                      f"{MAX_JUMP_PROBABILITY}; reduce dt")
            dY = (noise[:, i] < p).astype(float)
        blocks = model.step(i, blocks, dt, dY, rate, aux)
        win_y += dY
        win_comp += rate * dt
        y_cum += dY
        comp_cum += rate * dt
        if (i + 1) % report_every == 0:
            r = (i + 1) // report_every
            record[:, r - 1] = win_y
            compensator[:, r - 1] = win_comp
            win_y[:] = 0.0
            win_comp[:] = 0.0
            sample(r)

    return _BatchResult(indices=indices, series=series, record=record,
                        compensator=compensator, invariants=inv)


def run_trajectory(model, fine_grid: TimeGrid, report_every: int, seed: int,
                   index: int, observables: dict,
                   check_invariants: bool = True) -> TrajectoryRecord:
    """Simulate one trajectory and return its record on the reporting grid."""
    res = _run_batch(model, fine_grid, report_every, seed, [index],
                     observables, check_invariants)
    report_grid = TimeGrid(fine_grid.t0,
                           fine_grid.t0 + fine_grid.n_steps * fine_grid.dt,
                           fine_grid.dt * report_every)
    return TrajectoryRecord(
        grid=report_grid,
        observables={k: v[0].copy() for k, v in res.series.items()},
        record=res.record[0].copy(),
        compensator=res.compensator[0].copy(),
        seed=seed, index=index, kind=model.kind,
    )


def run_ensemble(model, fine_grid: TimeGrid, report_every: int, seed: int,
                 n_traj: int, observables: dict, parallelism: int = 1,
                 batch_size: int = DEFAULT_BATCH_SIZE, keep_records: int = 0,
                 check_invariants: bool = True):
    """Simulate ``n_traj`` trajectories and reduce them in index order.

    Returns (EnsembleSummary, list of retained TrajectoryRecord for the
    first ``keep_records`` trajectory indices).  The batch size is fixed
    independently of ``parallelism`` so the reduction order, and therefore
    every output bit, does not depend on the execution schedule.
    """
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    starts = list(range(0, n_traj, batch_size))
    batches = [range(s, min(s + batch_size, n_traj)) for s in starts]

    def job(b):
        return _run_batch(model, fine_grid, report_every, seed, b,
                          observables, check_invariants)

    if parallelism > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(job, batches))
    else:
        results = [job(b) for b in batches]

    names = list(results[0].series.keys())
    R1 = results[0].series[names[0]].shape[1]
    sums = {n: np.zeros(R1) for n in names}
    sumsq = {n: np.zeros(R1) for n in names}
    inv = FilterInvariants()
    kept: list[TrajectoryRecord] = []
    report_grid = TimeGrid(fine_grid.t0,
                           fine_grid.t0 + fine_grid.n_steps * fine_grid.dt,
                           fine_grid.dt * report_every)

    for res in results:
        for n in names:
            sums[n] += res.series[n].sum(axis=0)
            sumsq[n] += (res.series[n] ** 2).sum(axis=0)
        inv.merge(res.invariants)
        for row, idx in enumerate(res.indices):
            if idx < keep_records:
                kept.append(TrajectoryRecord(
                    grid=report_grid,
                    observables={k: v[row].copy() for k, v in res.series.items()},
                    record=res.record[row].copy(),
                    compensator=res.compensator[row].copy(),
                    seed=seed, index=int(idx), kind=model.kind,
                ))

    N = n_traj
    mean = {n: sums[n] / N for n in names}
    if N >= 2:
        sem = {}
        for n in names:
            var = np.clip(sumsq[n] - N * mean[n] ** 2, 0.0, None) / (N - 1)
            sem[n] = np.sqrt(var / N)
        sem_defined = True
    else:
        sem = {n: np.full(R1, np.nan) for n in names}
        sem_defined = False

    summary = EnsembleSummary(times=report_grid.times(), n_traj=N, mean=mean,
                              sem=sem, invariants=inv, sem_defined=sem_defined)
    return summary, kept
