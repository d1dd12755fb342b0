"""Conditional (measurement-driven) evolution: diffusive and jump filters.

Each measurement scheme turns the deterministic hierarchies of
:mod:`qtraj.hierarchy` into stochastic differential equations for
conditional blocks rho[j,k](t):

* homodyne detection of the output quadrature adds a diffusion term
  driven by the innovations Wiener increment dW = dY - K_t dt,
* photon counting adds a jump term driven by the compensated increment
  dN = dY - nu_t dt, where dY in {0, 1} is the raw count.

The drift of every filter is the corresponding hierarchy drift; only the
measurement terms are added here, so the ensemble mean of the conditional
blocks reproduces the deterministic hierarchy by construction.

Normalization convention.  Blocks are never renormalized individually; the
physical conditional state is the weighted combination

    rho_c = sum_jk gamma_kj rho[j,k] / sum_jk gamma_kj tr rho[j,k]

(`conditional_combine`).  The shared scalar in the diffusion (and the jump
intensity) is computed in the weighted-normalized form, which reduces
exactly to the pure-field expressions when the weights select a single
component and keeps the combination's trace pinned at one pathwise.  The
single-field step functions (`photon_homodyne_step` etc.) use the
pure-field scalars directly.

All step helpers broadcast over leading batch axes; the batched models at
the bottom are what the trajectory engine drives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import CatField, PhotonField, VacuumField
from .hierarchy import (
    CompiledOps,
    _cat_drift,
    _photon_drift,
    _photon_gamma_by_index,
    compile_triple,
    liouville_apply,
)

__all__ = [
    "MeasurementScheme",
    "FilterState",
    "vacuum_homodyne_step",
    "vacuum_counting_step",
    "photon_homodyne_step",
    "photon_counting_step",
    "cat_homodyne_step",
    "cat_counting_step",
    "conditional_combine",
    "make_filter_model",
    "VacuumHomodyneModel",
    "VacuumCountingModel",
    "PhotonHomodyneModel",
    "PhotonCountingModel",
    "CatHomodyneModel",
    "CatCountingModel",
    "INTENSITY_FLOOR",
    "COMBINE_FLOOR",
]

INTENSITY_FLOOR = 1e-10
COMBINE_FLOOR = 1e-12


@dataclass(frozen=True)
class MeasurementScheme:
    """Detection choice for the output field."""

    kind: str  # "homodyne" | "counting"
    intensity_floor: float = INTENSITY_FLOOR

    def __post_init__(self):
        if self.kind not in ("homodyne", "counting"):
            raise ValueError(f"unknown measurement scheme {self.kind!r}")
        if self.intensity_floor <= 0:
            raise ValueError("intensity floor must be positive")


@dataclass
class FilterState:
    """Conditional blocks plus measurement bookkeeping for one trajectory."""

    blocks: np.ndarray          # (n, n, d, d)
    t: float
    kind: str                   # vacuum | photon | cat
    last_innovation: float = 0.0
    cumulative_record: float = 0.0

    @property
    def dim(self) -> int:
        return self.blocks.shape[-1]


def _block_traces(blocks: np.ndarray) -> np.ndarray:
    return np.einsum("...jkaa->...jk", blocks)


def _scal(x):
    """Append matrix axes so a batch of scalars multiplies (..., d, d) arrays."""
    x = np.asarray(x)
    return x[..., None, None]


def _bscal(x):
    """Append block and matrix axes so scalars multiply (..., n, n, d, d)."""
    x = np.asarray(x)
    return x[..., None, None, None, None]


# ---------------------------------------------------------------------------
# diffusion and jump numerators (shared between step ops and batched models)


def _vacuum_diffusion(ops: CompiledOps, rho: np.ndarray) -> np.ndarray:
    return ops.L @ rho + rho @ ops.Ld


def _photon_diffusion(ops: CompiledOps, xi_t: complex, blocks: np.ndarray) -> np.ndarray:
    """Per-block diffusion numerators B[j,k] (before the -K rho counterterm)."""
    out = ops.L @ blocks + blocks @ ops.Ld
    if xi_t != 0.0:
        xic = np.conj(xi_t)
        r10 = blocks[..., 1, 0, :, :]
        r01 = blocks[..., 0, 1, :, :]
        r00 = blocks[..., 0, 0, :, :]
        if ops.s_trivial:
            out[..., 1, 1, :, :] += xic * r10 + xi_t * r01
            out[..., 1, 0, :, :] += xi_t * r00
            out[..., 0, 1, :, :] += xic * r00
        else:
            out[..., 1, 1, :, :] += xic * (r10 @ ops.Sd) + xi_t * (ops.S @ r01)
            out[..., 1, 0, :, :] += xi_t * (ops.S @ r00)
            out[..., 0, 1, :, :] += xic * (r00 @ ops.Sd)
    return out


def _photon_jump(ops: CompiledOps, xi_t: complex, blocks: np.ndarray) -> np.ndarray:
    """Per-block jump numerators J[j,k] (applied as J/nu at a count)."""
    L, Ld, S, Sd = ops.L, ops.Ld, ops.S, ops.Sd
    r11 = blocks[..., 1, 1, :, :]
    r10 = blocks[..., 1, 0, :, :]
    r01 = blocks[..., 0, 1, :, :]
    r00 = blocks[..., 0, 0, :, :]
    xic = np.conj(xi_t)
    abs2 = xi_t * xic
    out = np.empty_like(blocks)
    if ops.s_trivial:
        out[..., 1, 1, :, :] = L @ r11 @ Ld + xic * (L @ r10) + xi_t * (r01 @ Ld) + abs2 * r00
        out[..., 1, 0, :, :] = L @ r10 @ Ld + xi_t * (r00 @ Ld)
        out[..., 0, 1, :, :] = L @ r01 @ Ld + xic * (L @ r00)
        out[..., 0, 0, :, :] = L @ r00 @ Ld
    else:
        out[..., 1, 1, :, :] = (L @ r11 @ Ld + xic * (L @ r10 @ Sd)
                                + xi_t * (S @ r01 @ Ld) + abs2 * (S @ r00 @ Sd))
        out[..., 1, 0, :, :] = L @ r10 @ Ld + xi_t * (S @ r00 @ Ld)
        out[..., 0, 1, :, :] = L @ r01 @ Ld + xic * (L @ r00 @ Sd)
        out[..., 0, 0, :, :] = L @ r00 @ Ld
    return out


def _cat_diffusion(ops: CompiledOps, alpha: np.ndarray, blocks: np.ndarray) -> np.ndarray:
    """(L + alpha_j S) rho[j,k] + rho[j,k] (L† + conj(alpha_k) S†)."""
    a_row = alpha[:, None, None, None]
    a_col = np.conj(alpha)[None, :, None, None]
    out = ops.L @ blocks + blocks @ ops.Ld
    if ops.s_trivial:
        out += a_row * blocks + a_col * blocks
    else:
        out += a_row * (ops.S @ blocks) + a_col * (blocks @ ops.Sd)
    return out


def _cat_jump(ops: CompiledOps, alpha: np.ndarray, blocks: np.ndarray) -> np.ndarray:
    """L r L† + alpha_j S r L† + conj(alpha_k) L r S† + alpha_j conj(alpha_k) S r S†."""
    a_row = alpha[:, None, None, None]
    a_col = np.conj(alpha)[None, :, None, None]
    L, Ld, S, Sd = ops.L, ops.Ld, ops.S, ops.Sd
    rLd = blocks @ Ld
    if ops.s_trivial:
        return L @ rLd + a_row * rLd + a_col * (L @ blocks) + (a_row * a_col) * blocks
    return (L @ rLd + a_row * (S @ rLd) + a_col * (L @ blocks @ Sd)
            + (a_row * a_col) * (S @ blocks @ Sd))


def _photon_k_pure(ops: CompiledOps, xi_t: complex, blocks: np.ndarray) -> np.ndarray:
    """Printed single-photon homodyne scalar tr{(L+L†)rho11} + tr{S rho01} xi + tr{S† rho10} xi*."""
    r11 = blocks[..., 1, 1, :, :]
    r10 = blocks[..., 1, 0, :, :]
    r01 = blocks[..., 0, 1, :, :]
    k = np.einsum("ij,...ji->...", ops.L + ops.Ld, r11)
    if ops.s_trivial:
        k = k + xi_t * np.einsum("...aa->...", r01) + np.conj(xi_t) * np.einsum("...aa->...", r10)
    else:
        k = k + xi_t * np.einsum("ij,...ji->...", ops.S, r01) \
            + np.conj(xi_t) * np.einsum("ij,...ji->...", ops.Sd, r10)
    return np.real(k)


def _photon_nu_pure(ops: CompiledOps, xi_t: complex, blocks: np.ndarray) -> np.ndarray:
    """Printed single-photon counting intensity."""
    traces = _block_traces(_photon_jump(ops, xi_t, blocks))
    return np.real(traces[..., 1, 1])


def _weighted_rate(weights_by_index: np.ndarray, numerators: np.ndarray,
                   blocks: np.ndarray) -> np.ndarray:
    """Combination-normalized scalar: sum_kj w tr(num) / sum_kj w tr(rho)."""
    num = np.real(np.einsum("kj,...jk->...", weights_by_index, _block_traces(numerators)))
    den = np.real(np.einsum("kj,...jk->...", weights_by_index, _block_traces(blocks)))
    if np.any(np.abs(den) < COMBINE_FLOOR):
        raise FloatingPointError("conditional normalization collapse")
    return num / den


# ---------------------------------------------------------------------------
# single-field step operations


def vacuum_homodyne_step(G, rho: np.ndarray, dW: float, dt: float) -> np.ndarray:
    """One Euler step of the vacuum homodyne filter; preserves the trace."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho = np.asarray(rho, dtype=complex)
    ops = compile_triple(G)
    diff = _vacuum_diffusion(ops, rho)
    k = np.real(np.einsum("...aa->...", diff))
    h = diff - _scal(k) * rho
    return rho + liouville_apply(ops, rho) * dt + h * _scal(np.asarray(dW))


def vacuum_counting_step(G, rho: np.ndarray, dN: int, dt: float,
                         intensity_floor: float = INTENSITY_FLOOR) -> np.ndarray:
    """One Euler step of the vacuum counting filter.

    ``dN`` is the raw count (0 or 1); the compensated increment
    dN - nu dt drives the jump term, so the no-count branch carries the
    compensator drift.  A requested count below the intensity floor is
    inconsistent with the model and raises.
    """
    if dN not in (0, 1):
        raise ValueError("dN must be 0 or 1")
    rho = np.asarray(rho, dtype=complex)
    ops = compile_triple(G)
    jump = ops.L @ rho @ ops.Ld
    nu = float(np.real(np.einsum("...aa->...", jump)))
    if dN == 1 and nu < intensity_floor:
        raise FloatingPointError(
            f"count requested at intensity {nu:.3e} below floor {intensity_floor:.1e}")
    out = rho + (liouville_apply(ops, rho) - jump + nu * rho) * dt
    if dN == 1:
        out = out + jump / nu - rho
    return out


def photon_homodyne_step(G, xi_t: complex, state: FilterState, dW: float, dt: float) -> FilterState:
    """One Euler step of the single-photon homodyne filter (four blocks)."""
    blocks = state.blocks
    if blocks.shape[-4:-2] != (2, 2):
        raise ValueError(f"photon filter needs 2x2 blocks, got {blocks.shape}")
    ops = compile_triple(G, state.t)
    xi_t = complex(xi_t)
    k = _photon_k_pure(ops, xi_t, blocks)
    drift = _photon_drift(ops, xi_t, blocks)
    diff = _photon_diffusion(ops, xi_t, blocks) - _bscal(k) * blocks
    new = blocks + drift * dt + diff * dW
    return FilterState(blocks=new, t=state.t + dt, kind="photon",
                       last_innovation=float(dW),
                       cumulative_record=state.cumulative_record + float(k * dt + dW))


def photon_counting_step(G, xi_t: complex, state: FilterState, dN: int, dt: float,
                         intensity_floor: float = INTENSITY_FLOOR) -> FilterState:
    """One Euler step of the single-photon counting filter (four blocks)."""
    if dN not in (0, 1):
        raise ValueError("dN must be 0 or 1")
    blocks = state.blocks
    ops = compile_triple(G, state.t)
    xi_t = complex(xi_t)
    jump = _photon_jump(ops, xi_t, blocks)
    nu = float(_photon_nu_pure(ops, xi_t, blocks))
    if dN == 1 and nu < intensity_floor:
        raise FloatingPointError(
            f"count requested at intensity {nu:.3e} below floor {intensity_floor:.1e}")
    drift = _photon_drift(ops, xi_t, blocks)
    new = blocks + (drift - jump + nu * blocks) * dt
    if dN == 1:
        new = new + jump / nu - blocks
    return FilterState(blocks=new, t=state.t + dt, kind="photon",
                       last_innovation=float(dN - nu * dt),
                       cumulative_record=state.cumulative_record + dN)


def cat_homodyne_step(G, amplitudes, gamma: np.ndarray, t: float,
                      state: FilterState, dW: float, dt: float) -> FilterState:
    """One Euler step of the coherent-combination homodyne filter."""
    blocks = state.blocks
    gamma = np.asarray(gamma, dtype=complex)
    n = gamma.shape[0]
    if blocks.shape[-4:-2] != (n, n):
        raise ValueError(f"need {n}x{n} blocks, got {blocks.shape}")
    ops = compile_triple(G, t)
    alpha = np.asarray(amplitudes.values(t), dtype=complex)
    diff = _cat_diffusion(ops, alpha, blocks)
    k = _cat_k_weighted(gamma, diff)
    drift = _cat_drift(ops, alpha, blocks)
    new = blocks + drift * dt + (diff - _bscal(k) * blocks) * dW
    return FilterState(blocks=new, t=t + dt, kind="cat",
                       last_innovation=float(dW),
                       cumulative_record=state.cumulative_record + float(k * dt + dW))


def cat_counting_step(G, amplitudes, gamma: np.ndarray, t: float,
                      state: FilterState, dN: int, dt: float,
                      intensity_floor: float = INTENSITY_FLOOR) -> FilterState:
    """One Euler step of the coherent-combination counting filter."""
    if dN not in (0, 1):
        raise ValueError("dN must be 0 or 1")
    blocks = state.blocks
    gamma = np.asarray(gamma, dtype=complex)
    ops = compile_triple(G, t)
    alpha = np.asarray(amplitudes.values(t), dtype=complex)
    jump = _cat_jump(ops, alpha, blocks)
    nu = float(_cat_k_weighted(gamma, jump))
    if dN == 1 and nu < intensity_floor:
        raise FloatingPointError(
            f"count requested at intensity {nu:.3e} below floor {intensity_floor:.1e}")
    drift = _cat_drift(ops, alpha, blocks)
    new = blocks + (drift - jump + nu * blocks) * dt
    if dN == 1:
        new = new + jump / nu - blocks
    return FilterState(blocks=new, t=t + dt, kind="cat",
                       last_innovation=float(dN - nu * dt),
                       cumulative_record=state.cumulative_record + dN)


def _cat_k_weighted(gamma: np.ndarray, numerators: np.ndarray) -> np.ndarray:
    """sum_l (gamma_ll / N_a) tr(num[l,l]): the printed weighted scalar."""
    n_a = np.real(np.trace(gamma))
    diag_w = np.real(np.diagonal(gamma)) / n_a
    traces = np.real(np.einsum("...llaa->...l", numerators))
    return traces @ diag_w


def conditional_combine(field, blocks: np.ndarray) -> np.ndarray:
    """Normalized weighted combination: the physical conditional state."""
    if isinstance(field, VacuumField):
        num = blocks[..., 0, 0, :, :]
    elif isinstance(field, PhotonField):
        W = _photon_gamma_by_index(field)
        num = np.einsum("kj,...jkab->...ab", W, blocks)
    elif isinstance(field, CatField):
        num = np.einsum("jk,...jkab->...ab", field.gamma, blocks)
    else:
        raise TypeError(f"unknown field variant {type(field).__name__}")
    den = np.real(np.einsum("...aa->...", num))
    if np.any(np.abs(den) < COMBINE_FLOOR):
        raise FloatingPointError("conditional normalization collapse")
    return num / _scal(den)


# ---------------------------------------------------------------------------
# batched trajectory models


class _FilterModel:
    """Shared machinery: precompiled operators and field samples on a grid.

    Subclasses provide the per-step ``rate_aux`` (record compensator or
    intensity, plus reusable numerators) and ``step``; blocks carry a
    leading batch axis (B, n, n, d, d).

    For static triples with vacuum or photon fields, the linear parts of
    the step are applied through matrices probed from the direct functions
    (see :mod:`qtraj.superop`), which is what makes large ensembles cheap;
    the direct path is kept for timed triples and coherent combinations and
    the two are regression-tested against each other.
    """

    kind: str  # homodyne | counting

    def __init__(self, G, field, rho0: np.ndarray, fine_times: np.ndarray,
                 scheme: Optional[MeasurementScheme] = None):
        self.field = field
        self.rho0 = np.asarray(rho0, dtype=complex)
        self.dim = self.rho0.shape[0]
        self.times = np.asarray(fine_times, dtype=float)
        self.scheme = scheme
        self.floor = scheme.intensity_floor if scheme is not None else INTENSITY_FLOOR
        self._G = G
        self._timed = callable(G.L)
        self._static_ops = None if self._timed else compile_triple(G)
        self._cache = (-1, None)
        self._prepare_samples()
        self._fast = (not self._timed) and isinstance(self.field, (VacuumField, PhotonField))
        if self._fast:
            self._probe_families()

    # probed matrix families -------------------------------------------------

    def _probe_families(self):
        from .superop import QuadraticFamily
        ops = self._static_ops
        d = self.dim
        if isinstance(self.field, PhotonField):
            shape, n_c = (2, 2, d, d), 1
            drift = lambda c: (lambda X: _photon_drift(ops, complex(c[0]), X))
            diff = lambda c: (lambda X: _photon_diffusion(ops, complex(c[0]), X))
            jump = lambda c: (lambda X: _photon_jump(ops, complex(c[0]), X))
        else:
            shape, n_c = (1, 1, d, d), 0
            drift = lambda c: (lambda X: liouville_apply(ops, X))
            diff = lambda c: (lambda X: _vacuum_diffusion(ops, X))
            jump = lambda c: (lambda X: ops.L @ X @ ops.Ld)
        self._block_shape = shape
        self._fam_drift = QuadraticFamily(drift, shape, n_c)
        if self.kind == "homodyne":
            self._fam_meas = QuadraticFamily(diff, shape, n_c)
        else:
            self._fam_meas = QuadraticFamily(jump, shape, n_c)

    def _coeff(self, i: int):
        if isinstance(self.field, PhotonField):
            return self.xi[i:i + 1]
        return np.zeros(0)

    def _meas_matrix_t(self, i: int) -> np.ndarray:
        return self._fam_meas.combine(self._coeff(i)).T

    def _drift_matrix_t(self, i: int) -> np.ndarray:
        return self._fam_drift.combine(self._coeff(i)).T

    def _weighted_traces(self, flat: np.ndarray) -> np.ndarray:
        """Combination-weighted block traces of a (..., size) flat state."""
        resh = flat.reshape(flat.shape[:-1] + self._block_shape)
        traces = _block_traces(resh)
        if isinstance(self.field, PhotonField):
            return np.real(np.einsum("kj,...jk->...", self.weights, traces))
        return np.real(traces[..., 0, 0])

    def _prepare_samples(self):
        if isinstance(self.field, PhotonField):
            self.xi = np.asarray(self.field.wavepacket(self.times), dtype=complex)
            self.weights = _photon_gamma_by_index(self.field)
            self.n_blocks = 2
        elif isinstance(self.field, CatField):
            self.alpha = np.asarray(self.field.amplitudes.values(self.times), dtype=complex)  # (n, T+1)
            self.gamma = self.field.gamma
            self.n_blocks = self.field.n
        elif isinstance(self.field, VacuumField):
            self.n_blocks = 1
        else:
            raise TypeError(f"unknown field variant {type(self.field).__name__}")

    def ops_at(self, i: int) -> CompiledOps:
        if not self._timed:
            return self._static_ops
        cached = self._cache  # read once: concurrent batches may race on it
        if cached[0] != i:
            cached = (i, compile_triple(self._G, self.times[i]))
            self._cache = cached
        return cached[1]

    def initial_blocks(self, batch: int) -> np.ndarray:
        from .hierarchy import initial_blocks
        single = initial_blocks(self.field, self.rho0)
        return np.broadcast_to(single, (batch,) + single.shape).copy()

    def combine(self, blocks: np.ndarray) -> np.ndarray:
        return conditional_combine(self.field, blocks)

    def combined_trace_raw(self, blocks: np.ndarray) -> np.ndarray:
        """Unnormalized combination trace; pinned at 1 pathwise."""
        if isinstance(self.field, VacuumField):
            return np.real(_block_traces(blocks)[..., 0, 0])
        if isinstance(self.field, PhotonField):
            return np.real(np.einsum("kj,...jk->...", self.weights, _block_traces(blocks)))
        return np.real(np.einsum("jk,...jk->...", self.field.gamma, _block_traces(blocks)))

    # numerators per variant -------------------------------------------------

    def _drift(self, i: int, blocks: np.ndarray) -> np.ndarray:
        ops = self.ops_at(i)
        if isinstance(self.field, PhotonField):
            return _photon_drift(ops, self.xi[i], blocks)
        if isinstance(self.field, CatField):
            return _cat_drift(ops, self.alpha[:, i], blocks)
        return liouville_apply(ops, blocks)

    def _diffusion(self, i: int, blocks: np.ndarray) -> np.ndarray:
        ops = self.ops_at(i)
        if isinstance(self.field, PhotonField):
            return _photon_diffusion(ops, self.xi[i], blocks)
        if isinstance(self.field, CatField):
            return _cat_diffusion(ops, self.alpha[:, i], blocks)
        return _vacuum_diffusion(ops, blocks)

    def _jump(self, i: int, blocks: np.ndarray) -> np.ndarray:
        ops = self.ops_at(i)
        if isinstance(self.field, PhotonField):
            return _photon_jump(ops, self.xi[i], blocks)
        if isinstance(self.field, CatField):
            return _cat_jump(ops, self.alpha[:, i], blocks)
        return ops.L @ blocks @ ops.Ld

    def _rate_from(self, numerators: np.ndarray, blocks: np.ndarray) -> np.ndarray:
        if isinstance(self.field, CatField):
            return _cat_k_weighted(self.gamma, numerators)
        if isinstance(self.field, PhotonField):
            return _weighted_rate(self.weights, numerators, blocks)
        return _weighted_rate(np.eye(1, dtype=complex), numerators, blocks)


class _HomodyneModel(_FilterModel):
    kind = "homodyne"

    def rate_aux(self, i: int, blocks: np.ndarray):
        """Record compensator K and the diffusion numerators it came from."""
        if self._fast:
            flat = blocks.reshape(blocks.shape[0], -1)
            diff_flat = flat @ self._meas_matrix_t(i)
            num = self._weighted_traces(diff_flat)
            den = self._weighted_traces(flat)
            if np.any(np.abs(den) < COMBINE_FLOOR):
                raise FloatingPointError("conditional normalization collapse")
            return num / den, diff_flat
        diff = self._diffusion(i, blocks)
        return self._rate_from(diff, blocks), diff

    def step(self, i: int, blocks: np.ndarray, dt: float,
             dY: np.ndarray, rate: np.ndarray, aux=None) -> np.ndarray:
        dW = dY - rate * dt
        if self._fast:
            flat = blocks.reshape(blocks.shape[0], -1)
            diff_flat = aux if aux is not None else flat @ self._meas_matrix_t(i)
            drift_flat = flat @ self._drift_matrix_t(i)
            out = (flat + drift_flat * dt
                   + (diff_flat - rate[:, None] * flat) * dW[:, None])
            return out.reshape(blocks.shape)
        drift = self._drift(i, blocks)
        diff = aux if aux is not None else self._diffusion(i, blocks)
        diff = diff - _bscal(rate) * blocks
        return blocks + drift * dt + diff * _bscal(dW)


class _CountingModel(_FilterModel):
    kind = "counting"

    def rate_aux(self, i: int, blocks: np.ndarray):
        """Record intensity nu and the jump numerators it came from.

        The ratio is returned unclipped: the step must use exactly
        tr(jump)/tr(blocks) for the compensator so the combination trace
        stays pinned; integration-noise negativity near zero intensity is
        handled by the thinning floor, not here.
        """
        if self._fast:
            flat = blocks.reshape(blocks.shape[0], -1)
            jump_flat = flat @ self._meas_matrix_t(i)
            num = self._weighted_traces(jump_flat)
            den = self._weighted_traces(flat)
            if np.any(np.abs(den) < COMBINE_FLOOR):
                raise FloatingPointError("conditional normalization collapse")
            return num / den, jump_flat
        jump = self._jump(i, blocks)
        return self._rate_from(jump, blocks), jump

    def step(self, i: int, blocks: np.ndarray, dt: float,
             dY: np.ndarray, rate: np.ndarray, aux=None) -> np.ndarray:
        if self._fast:
            flat = blocks.reshape(blocks.shape[0], -1)
            jump_flat = aux if aux is not None else flat @ self._meas_matrix_t(i)
            drift_flat = flat @ self._drift_matrix_t(i)
            out = flat + (drift_flat - jump_flat + rate[:, None] * flat) * dt
            if np.any(dY):
                safe = np.where(rate >= self.floor, rate, 1.0)
                out = out + dY[:, None] * (jump_flat / safe[:, None] - flat)
            return out.reshape(blocks.shape)
        jump = aux if aux is not None else self._jump(i, blocks)
        drift = self._drift(i, blocks)
        out = blocks + (drift - jump + _bscal(rate) * blocks) * dt
        if np.any(dY):
            safe = np.where(rate >= self.floor, rate, 1.0)
            hit = _bscal(dY)
            out = out + hit * (jump / _bscal(safe) - blocks)
        return out


class VacuumHomodyneModel(_HomodyneModel):
    pass


class VacuumCountingModel(_CountingModel):
    pass


class PhotonHomodyneModel(_HomodyneModel):
    pass


class PhotonCountingModel(_CountingModel):
    pass


class CatHomodyneModel(_HomodyneModel):
    pass


class CatCountingModel(_CountingModel):
    pass


def make_filter_model(G, field, rho0: np.ndarray, fine_times: np.ndarray,
                      scheme: MeasurementScheme) -> _FilterModel:
    """Build the batched filter model for a field variant and scheme."""
    table = {
        ("vacuum", "homodyne"): VacuumHomodyneModel,
        ("vacuum", "counting"): VacuumCountingModel,
        ("photon", "homodyne"): PhotonHomodyneModel,
        ("photon", "counting"): PhotonCountingModel,
        ("cat", "homodyne"): CatHomodyneModel,
        ("cat", "counting"): CatCountingModel,
    }
    key = (field.kind, scheme.kind)
    if key not in table:
        raise ValueError(f"no filter for {key}")
    return table[key](G, field, rho0, fine_times, scheme)
