"""Unconditional (ensemble-averaged) evolution.

Three deterministic problems share one RK4 propagator:

* the vacuum master equation for a density matrix,
* the one-photon block hierarchy: four coupled matrix equations for
  rho[j,k] with field indices j, k in {0 = vacuum, 1 = photon}; only the
  (1,1) block is a physical state, the off-diagonal blocks are cross terms,
* the coherent-combination hierarchy: n x n uncoupled block equations, one
  per ordered amplitude pair.

Block conventions.  ``blocks`` arrays have shape (..., n, n, d, d) with
``blocks[..., j, k, :, :]`` the (j, k) component; Hermitian pairing
``blocks[j, k]^dag == blocks[k, j]`` holds at all times.  For the photon
case the traces are (1, 0, 0, 1); for the coherent case the (j, k) trace
equals the coherent overlap g_jk for all time.

The physical state is the weighted combination of blocks; the weight matrix
``gamma`` of the field variant is applied with the index order
sum_jk gamma_kj rho[j,k] (photon) and sum_jk gamma_jk rho[j,k] (coherent) -
identical results for Hermitian gamma, kept separate to match each
derivation and pinned by regression tests against the pure cases.

An independent correctness check ("cascade oracle") replaces the
non-classical input by an emitter ancilla cascaded ahead of the system and
evolves the joint pair under the plain vacuum master equation; partial
traces against ancilla matrix units, rescaled by the emitter's survival
weights, must reproduce every hierarchy block wherever those weights are
not negligibly small.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import (
    CatField,
    LAMBDA_EPS,
    PhotonField,
    VacuumField,
    cat_exponent,
)
from .operators import dag, DimensionMismatchError, expect, two_level
from .slh import SlhTriple, TimedSlhTriple, embed, series_product
from .superop import QuadraticFamily

__all__ = [
    "CompiledOps",
    "compile_ops",
    "vacuum_me_rhs",
    "photon_hierarchy_rhs",
    "cat_hierarchy_rhs",
    "HierarchyState",
    "initial_blocks",
    "combine_unconditional",
    "InvariantReport",
    "MasterRun",
    "run_master",
    "OracleRun",
    "run_oracle",
    "compare_blocks",
    "DEFAULT_MASTER_DT",
    "ORACLE_WEIGHT_FLOOR",
]

DEFAULT_MASTER_DT = 1e-3
ORACLE_WEIGHT_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# compiled operator products


@dataclass(frozen=True)
class CompiledOps:
    """Constant operator products of one triple, with trivial-factor flags."""

    S: np.ndarray
    L: np.ndarray
    H: np.ndarray
    Ld: np.ndarray
    Sd: np.ndarray
    LdL: np.ndarray
    s_trivial: bool
    h_trivial: bool

    @property
    def dim(self) -> int:
        return self.L.shape[0]


def compile_ops(S: np.ndarray, L: np.ndarray, H: np.ndarray) -> CompiledOps:
    S = np.asarray(S, dtype=complex)
    L = np.asarray(L, dtype=complex)
    H = np.asarray(H, dtype=complex)
    d = L.shape[0]
    return CompiledOps(
        S=S, L=L, H=H, Ld=dag(L), Sd=dag(S), LdL=dag(L) @ L,
        s_trivial=bool(np.array_equal(S, np.eye(d))),
        h_trivial=bool(not np.any(H)),
    )


def compile_triple(G, t: float = 0.0) -> CompiledOps:
    S, L, H = G.at(t)
    return compile_ops(S, L, H)


def liouville_apply(ops: CompiledOps, rho: np.ndarray) -> np.ndarray:
    """-i[H, rho] + L rho L† - (L†L rho + rho L†L)/2 on (..., d, d) arrays."""
    out = ops.L @ rho @ ops.Ld - 0.5 * (ops.LdL @ rho + rho @ ops.LdL)
    if not ops.h_trivial:
        out += -1j * (ops.H @ rho - rho @ ops.H)
    return out


def vacuum_me_rhs(G, rho: np.ndarray) -> np.ndarray:
    """Master-equation right-hand side for a vacuum input."""
    rho = np.asarray(rho, dtype=complex)
    ops = compile_triple(G)
    if ops.dim != rho.shape[-1]:
        raise DimensionMismatchError("vacuum_me_rhs", ops.dim, rho.shape[-1])
    return liouville_apply(ops, rho)


def _photon_drift(ops: CompiledOps, xi_t: complex, blocks: np.ndarray) -> np.ndarray:
    """Drift of the four photon blocks; blocks shape (..., 2, 2, d, d)."""
    L, Ld, S, Sd = ops.L, ops.Ld, ops.S, ops.Sd
    out = liouville_apply(ops, blocks)
    if xi_t == 0.0:
        return out
    r10 = blocks[..., 1, 0, :, :]
    r01 = blocks[..., 0, 1, :, :]
    r00 = blocks[..., 0, 0, :, :]
    xic = np.conj(xi_t)
    if ops.s_trivial:
        Sr01, Sr00, r10Sd, r00Sd, Sr00Sd = r01, r00, r10, r00, r00
    else:
        Sr01 = S @ r01
        Sr00 = S @ r00
        r10Sd = r10 @ Sd
        r00Sd = r00 @ Sd
        Sr00Sd = Sr00 @ Sd
    out[..., 1, 1, :, :] += (
        xi_t * (Sr01 @ Ld - Ld @ Sr01)
        + xic * (L @ r10Sd - r10Sd @ L)
        + (xi_t * xic) * (Sr00Sd - r00)
    )
    out[..., 1, 0, :, :] += xi_t * (Sr00 @ Ld - Ld @ Sr00)
    out[..., 0, 1, :, :] += xic * (L @ r00Sd - r00Sd @ L)
    return out


def _cat_drift(ops: CompiledOps, alpha: np.ndarray, blocks: np.ndarray) -> np.ndarray:
    """Drift of the n x n coherent blocks; alpha is the amplitude vector at t."""
    L, Ld, S, Sd = ops.L, ops.Ld, ops.S, ops.Sd
    out = liouville_apply(ops, blocks)
    a_row = alpha[:, None, None, None]            # alpha_j on the (j, k) block
    a_col = np.conj(alpha)[None, :, None, None]   # conj(alpha_k)
    if ops.s_trivial:
        Sr, rSd, SrSd = blocks, blocks, blocks
    else:
        Sr = S @ blocks
        rSd = blocks @ Sd
        SrSd = Sr @ Sd
    out += a_row * (Sr @ Ld - Ld @ Sr)
    out += a_col * (L @ rSd - rSd @ L)
    out += (a_row * a_col) * (SrSd - blocks)
    return out


def photon_hierarchy_rhs(G, xi_t: complex, state: "HierarchyState") -> np.ndarray:
    """Increment (d/dt) of the four photon blocks at the state's time."""
    if state.blocks.shape[-4:-2] != (2, 2):
        raise ValueError(f"photon hierarchy needs 2x2 blocks, got {state.blocks.shape}")
    return _photon_drift(compile_triple(G, state.t), complex(xi_t), state.blocks)


def cat_hierarchy_rhs(G, amplitudes, t: float, state: "HierarchyState") -> np.ndarray:
    """Increment (d/dt) of the n x n coherent blocks at time ``t``."""
    alpha = np.asarray(amplitudes.values(t), dtype=complex)
    n = alpha.shape[0]
    if state.blocks.shape[-4:-2] != (n, n):
        raise ValueError(f"need {n}x{n} blocks, got {state.blocks.shape}")
    return _cat_drift(compile_triple(G, t), alpha, state.blocks)


# ---------------------------------------------------------------------------
# states, initial conditions, combination


@dataclass
class HierarchyState:
    """Indexed family of block matrices at one instant."""

    blocks: np.ndarray  # (n, n, d, d)
    t: float
    kind: str  # vacuum | photon | cat

    @property
    def n(self) -> int:
        return self.blocks.shape[0]

    @property
    def dim(self) -> int:
        return self.blocks.shape[-1]


def initial_blocks(field, rho0: np.ndarray) -> np.ndarray:
    """Hierarchy initial condition for the given field variant.

    Photon: both diagonal blocks start at rho0, cross terms at zero.
    Coherent: block (j, k) starts at g_jk rho0.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    if isinstance(field, VacuumField):
        return rho0.reshape(1, 1, d, d).copy()
    if isinstance(field, PhotonField):
        blocks = np.zeros((2, 2, d, d), dtype=complex)
        blocks[0, 0] = rho0
        blocks[1, 1] = rho0
        return blocks
    if isinstance(field, CatField):
        gram = field.gram_matrix
        return gram[:, :, None, None] * rho0[None, None, :, :]
    raise TypeError(f"unknown field variant {type(field).__name__}")


def _photon_gamma_by_index(field: PhotonField) -> np.ndarray:
    """gamma as an array addressed by field indices: out[j, k] = gamma_jk."""
    g = field.gamma
    return np.array([[g[1, 1], g[1, 0]], [g[0, 1], g[0, 0]]], dtype=complex)


def combine_unconditional(field, blocks: np.ndarray) -> np.ndarray:
    """Weighted block combination giving the physical density matrix."""
    if isinstance(field, VacuumField):
        return blocks[..., 0, 0, :, :]
    if isinstance(field, PhotonField):
        W = _photon_gamma_by_index(field)
        return np.einsum("kj,...jkab->...ab", W, blocks)
    if isinstance(field, CatField):
        return np.einsum("jk,...jkab->...ab", field.gamma, blocks)
    raise TypeError(f"unknown field variant {type(field).__name__}")


# ---------------------------------------------------------------------------
# invariant monitoring


@dataclass
class InvariantReport:
    """Running maxima of structural defects, collected every step."""

    pairing: float = 0.0          # max |blocks[j,k]^dag - blocks[k,j]|
    trace: float = 0.0            # max deviation of block traces from target
    steps: int = 0

    def update(self, blocks: np.ndarray, trace_target: np.ndarray) -> None:
        swapped = np.conj(np.swapaxes(np.swapaxes(blocks, -1, -2), -3, -4))
        self.pairing = max(self.pairing, float(np.max(np.abs(blocks - swapped))))
        traces = np.einsum("...jkaa->...jk", blocks)
        self.trace = max(self.trace, float(np.max(np.abs(traces - trace_target))))
        self.steps += 1


def _trace_targets(field, n: int) -> np.ndarray:
    if isinstance(field, CatField):
        return field.gram_matrix
    return np.eye(n, dtype=complex)


# ---------------------------------------------------------------------------
# deterministic propagation


@dataclass
class MasterRun:
    """Grid-sampled solution of one deterministic hierarchy."""

    times: np.ndarray               # (T+1,)
    blocks: np.ndarray              # (T+1, n, n, d, d)
    field: object
    invariants: Optional[InvariantReport]

    def combined(self) -> np.ndarray:
        """Physical density matrix at every grid time, (T+1, d, d)."""
        return combine_unconditional(self.field, self.blocks)

    def expectations(self, A: np.ndarray) -> np.ndarray:
        return np.real(expect(A, self.combined()))


def hierarchy_family(G, field) -> QuadraticFamily:
    """Probed matrix family of the hierarchy drift for a static triple.

    The coefficient vector is the field sample: empty for vacuum, the
    envelope value for the photon case, the amplitude vector for the
    coherent case.  Probing the direct drift functions keeps one source of
    truth for the physics.
    """
    ops = compile_triple(G)
    d = ops.dim
    if isinstance(field, VacuumField):
        return QuadraticFamily(lambda c: (lambda X: liouville_apply(ops, X)), (1, 1, d, d), 0)
    if isinstance(field, PhotonField):
        return QuadraticFamily(
            lambda c: (lambda X: _photon_drift(ops, complex(c[0]), X)), (2, 2, d, d), 1)
    if isinstance(field, CatField):
        n = field.n
        return QuadraticFamily(
            lambda c: (lambda X: _cat_drift(ops, c, X)), (n, n, d, d), n)
    raise TypeError(f"unknown field variant {type(field).__name__}")


def field_samples(field, times: np.ndarray) -> np.ndarray:
    """Field coefficient vectors on a time grid, shape (len(times), n_coeff)."""
    times = np.asarray(times, dtype=float)
    if isinstance(field, VacuumField):
        return np.zeros((times.shape[0], 0), dtype=complex)
    if isinstance(field, PhotonField):
        return np.asarray(field.wavepacket(times), dtype=complex)[:, None]
    if isinstance(field, CatField):
        return np.asarray(field.amplitudes.values(times), dtype=complex).T
    raise TypeError(f"unknown field variant {type(field).__name__}")


def _rk4_linear(family: QuadraticFamily, samples: np.ndarray, v0: np.ndarray,
                dt: float, observer=None) -> np.ndarray:
    """RK4 for dv/dt = M(c(t)) v with c sampled on the half-step grid.

    ``samples`` has shape (2 T + 1, n_coeff); returns (T+1, size).
    """
    T = (samples.shape[0] - 1) // 2
    out = np.empty((T + 1, v0.shape[0]), dtype=complex)
    v = v0.astype(complex)
    out[0] = v
    if observer is not None:
        observer(0, v)
    const = family.n == 0
    M0 = family.combine(np.zeros(0)) if const else None
    for i in range(T):
        A = M0 if const else family.combine(samples[2 * i])
        Ah = M0 if const else family.combine(samples[2 * i + 1])
        A1 = M0 if const else family.combine(samples[2 * i + 2])
        k1 = A @ v
        k2 = Ah @ (v + (0.5 * dt) * k1)
        k3 = Ah @ (v + (0.5 * dt) * k2)
        k4 = A1 @ (v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = v
        if observer is not None:
            observer(i + 1, v)
    return out


def run_master(G, field, rho0: np.ndarray, grid,
               check_invariants: bool = True) -> MasterRun:
    """Propagate the hierarchy of ``field`` under ``G`` with fixed-step RK4."""
    rho0 = np.asarray(rho0, dtype=complex)
    times = grid.times()
    blocks0 = initial_blocks(field, rho0)
    family = hierarchy_family(G, field)
    samples = field_samples(field, grid.half_times())

    report = InvariantReport() if check_invariants else None
    targets = _trace_targets(field, blocks0.shape[0]) if check_invariants else None

    def observer(i, v):
        if report is not None:
            report.update(v.reshape(blocks0.shape), targets)

    flat = _rk4_linear(family, samples, blocks0.ravel(), grid.dt, observer)
    out = flat.reshape((grid.n_steps + 1,) + blocks0.shape)
    return MasterRun(times=times, blocks=out, field=field, invariants=report)


# ---------------------------------------------------------------------------
# extended-system cross-check (cascade oracle)


def _ancilla_catalog_photon():
    tl = two_level()
    # matrix units against which the joint state is traced out, addressed by
    # (j, k) field indices; Q[1][1] is the identity, not a projector.
    Q = {
        (0, 0): tl["number"],
        (0, 1): tl["sigma_plus"],
        (1, 0): tl["sigma_minus"],
        (1, 1): tl["identity"],
    }
    return tl, Q


def photon_source_triple(field: PhotonField, dim_system: int,
                         eps: float = LAMBDA_EPS) -> TimedSlhTriple:
    """Emitter ancilla triple (I, lambda(t) sigma_minus, 0) on ancilla x system.

    The coupling uses the remaining mass measured from t = 0 (so the emitter
    holds exactly one excitation at the simulation start), clamped at ``eps``
    once the envelope is exhausted.
    """
    tl, _ = _ancilla_catalog_photon()
    sm_joint = embed(tl["sigma_minus"], "left", dim_system)
    zero = np.zeros_like(sm_joint)
    sig = field.wavepacket.signal

    def lam(t: float) -> complex:
        w = max(1.0 - sig.cumulative_abs2_from(0.0, t), eps)
        return complex(sig(t)) / np.sqrt(w)

    return TimedSlhTriple(
        S=np.eye(2 * dim_system, dtype=complex),
        L=lambda t: lam(t) * sm_joint,
        H=lambda t: zero,
    )


def cat_source_triple(field: CatField, dim_system: int) -> TimedSlhTriple:
    """Diagonal-modulator ancilla triple (I, sum_j alpha_j |j><j|, 0)."""
    n = field.n
    units = np.eye(n, dtype=complex)
    zero = np.zeros((n * dim_system, n * dim_system), dtype=complex)
    projs = [embed(np.outer(units[j], units[j]), "left", dim_system) for j in range(n)]
    amps = field.amplitudes

    def L_of_t(t: float) -> np.ndarray:
        alpha = amps.values(t)
        out = alpha[0] * projs[0]
        for j in range(1, n):
            out = out + alpha[j] * projs[j]
        return out

    return TimedSlhTriple(
        S=np.eye(n * dim_system, dtype=complex),
        L=L_of_t,
        H=lambda t: zero,
    )


@dataclass
class OracleRun:
    """Hierarchy blocks reconstructed from the cascaded joint system."""

    times: np.ndarray
    blocks: np.ndarray        # (T+1, n, n, d, d); invalid samples are zero
    valid: np.ndarray         # (T+1, n, n) bool


def _joint_family(G_emb: SlhTriple, couplings: list[np.ndarray]) -> QuadraticFamily:
    """Vacuum-Liouvillian family of system << source with source coupling
    sum_j c_j couplings[j]; probing goes through the production series
    product so the cascade algebra has a single implementation."""
    dj = G_emb.dim
    eye = np.eye(dj, dtype=complex)
    zero = np.zeros((dj, dj), dtype=complex)

    def make_apply(c):
        L_src = zero
        for cj, P in zip(c, couplings):
            L_src = L_src + cj * P
        G_T = series_product(G_emb, SlhTriple(eye, L_src, zero))
        ops = compile_triple(G_T)
        return lambda X: liouville_apply(ops, X)

    return QuadraticFamily(make_apply, (dj, dj), len(couplings))


def run_oracle(G: SlhTriple, field, rho0: np.ndarray, grid,
               weight_floor: float = ORACLE_WEIGHT_FLOOR) -> OracleRun:
    """Independent reconstruction of the hierarchy via the cascaded pair.

    Builds source << system, evolves the plain vacuum master equation on the
    joint space, and recovers block (j, k) as the adjoint of the partial
    trace against the ancilla unit Q_kj, divided by the block's survival
    weight.  Samples whose weight magnitude falls below ``weight_floor`` are
    flagged invalid and zeroed.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    times = grid.times()
    half = grid.half_times()

    if isinstance(field, PhotonField):
        tl, Q = _ancilla_catalog_photon()
        na = 2
        rho_a = tl["proj_e"]
        couplings = [embed(tl["sigma_minus"], "left", d)]
        sig = field.wavepacket.signal
        w_half = np.maximum(1.0 - sig.cumulative_abs2_from(0.0, half), LAMBDA_EPS)
        lam = np.asarray(sig(half), dtype=complex) / np.sqrt(w_half)
        coeff_half = lam[:, None]
        w = np.clip(1.0 - sig.cumulative_abs2_from(0.0, times), 0.0, None)
        divisors = np.empty((times.shape[0], 2, 2), dtype=complex)
        divisors[:, 0, 0] = w
        divisors[:, 0, 1] = np.sqrt(w)
        divisors[:, 1, 0] = np.sqrt(w)
        divisors[:, 1, 1] = 1.0
        extract_Q = {(j, k): Q[(k, j)] for j in (0, 1) for k in (0, 1)}
    elif isinstance(field, CatField):
        na = field.n
        rho_a = field.gamma / field.n_a
        units = np.eye(na, dtype=complex)
        couplings = [embed(np.outer(units[j], units[j]), "left", d) for j in range(na)]
        coeff_half = np.asarray(field.amplitudes.values(half), dtype=complex).T
        gram = field.gram_matrix
        divisors = np.empty((times.shape[0], na, na), dtype=complex)
        for j in range(na):
            for k in range(na):
                # gamma_jk / (N_a g_jk) * exp(+int_0^t m_kj), the scale and
                # clock factor carried by the (k, j) ancilla corner
                exponent = cat_exponent(field.amplitudes, k, j, times)
                divisors[:, j, k] = (field.gamma[j, k] / (field.n_a * gram[j, k])
                                     * np.exp(exponent))
        extract_Q = {(j, k): np.outer(units[k], units[j]) for j in range(na) for k in range(na)}
    else:
        raise TypeError("oracle is defined for photon and coherent combinations only")

    G_emb = SlhTriple(embed(G.S, "right", na), embed(G.L, "right", na), embed(G.H, "right", na))
    family = _joint_family(G_emb, couplings)
    rho_joint0 = np.kron(rho_a, rho0)
    joint = _rk4_linear(family, coeff_half, rho_joint0.ravel(), grid.dt)

    rj = joint.reshape(times.shape[0], na, d, na, d)
    blocks = np.zeros((times.shape[0], na, na, d, d), dtype=complex)
    valid = np.abs(divisors) >= weight_floor
    for j in range(na):
        for k in range(na):
            # tracing against the (k, j) ancilla unit realizes the adjoint in
            # the pairing that defines block (j, k); divisor orientation above
            raw = np.einsum("mn,tnamb->tab", extract_Q[(j, k)], rj)
            block = raw / np.where(
                valid[:, j, k], divisors[:, j, k], 1.0)[:, None, None]
            blocks[:, j, k] = np.where(valid[:, j, k, None, None], block, 0.0)

    return OracleRun(times=times, blocks=blocks, valid=valid)


def compare_blocks(run: MasterRun, oracle: OracleRun) -> dict:
    """Per-block sup-norm deviation over the oracle's valid samples."""
    if run.blocks.shape != oracle.blocks.shape:
        raise ValueError("hierarchy and oracle runs have mismatched shapes")
    n = run.blocks.shape[1]
    devs = {}
    for j in range(n):
        for k in range(n):
            mask = oracle.valid[:, j, k]
            if not np.any(mask):
                devs[(j, k)] = float("nan")
                continue
            diff = np.abs(run.blocks[mask, j, k] - oracle.blocks[mask, j, k])
            devs[(j, k)] = float(np.max(diff))
    return devs
