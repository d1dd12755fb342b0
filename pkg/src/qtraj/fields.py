"""Input-field descriptions: wavepackets, coherent amplitudes and weights.

Three field variants drive the simulators:

* vacuum,
* a combination of one photon (temporal envelope ``xi``, units time^-1/2)
  and vacuum, weighted by a 2x2 matrix ``gamma``,
* a combination of ``n`` continuous-mode coherent states with amplitude
  functions ``alpha_j(t)`` and an ``n x n`` weight matrix ``gamma``.

The scalar time functions needed by the hierarchies and by the extended
cascade cross-check also live here: the remaining wavepacket mass ``w(t)``,
the emission coupling ``lambda(t) = xi/sqrt(w)``, pairwise coherent overlaps
``g_jk``, the local exponent rate ``m_jk(t)`` and its integrating-factor
solution ``w_jk(t)``.

Signals are vectorized callables; integrals use closed forms where the
envelope admits one (Gaussian, windowed constant) and adaptive quadrature
with relative tolerance ~1e-8 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import erf, ndtr

__all__ = [
    "QuadratureError",
    "Signal",
    "GaussianSignal",
    "ConstantSignal",
    "TableSignal",
    "Wavepacket",
    "gaussian_wavepacket",
    "survival_w",
    "generator_coupling_lambda",
    "coherent_overlap",
    "CoherentAmplitudes",
    "cat_mjk",
    "cat_wjk",
    "photon_weights",
    "VacuumField",
    "PhotonField",
    "CatField",
    "photon_superposition_gamma",
    "cat_superposition_gamma",
]

QUAD_RTOL = 1e-8
LAMBDA_EPS = 1e-12
OVERLAP_FLOOR = 1e-12


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature cannot reach the requested accuracy."""

    def __init__(self, what: str, residual: float):
        self.residual = float(residual)
        super().__init__(f"{what}: quadrature residual estimate {residual:.3e}")


def _quad(f, lo: float, hi: float, points=None) -> complex:
    """Complex-valued adaptive quadrature with residual checking."""
    kw = {"limit": 200, "epsabs": 1e-12, "epsrel": QUAD_RTOL}
    if points is not None:
        pts = sorted(p for p in points if lo < p < hi)
        if pts:
            kw["points"] = pts
    re, re_err = integrate.quad(lambda s: np.real(f(s)), lo, hi, **kw)
    im, im_err = integrate.quad(lambda s: np.imag(f(s)), lo, hi, **kw)
    val = complex(re, im)
    residual = re_err + im_err
    if residual > max(1e-9, 1e-6 * abs(val)):
        raise QuadratureError("time integral", residual)
    return val


class Signal:
    """Complex-valued function of time with declared support.

    Subclasses override the integral helpers with closed forms where
    available; the base class falls back to adaptive quadrature.  All
    evaluation methods accept scalars or arrays.
    """

    support: tuple[float, float] = (-np.inf, np.inf)

    def __call__(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def _edges(self):
        lo, hi = self.support
        return [lo, hi]

    def norm_sq(self) -> float:
        lo, hi = self.support
        return float(np.real(_quad(lambda s: np.abs(self(s)) ** 2, lo, hi)))

    def cumulative_abs2_from(self, origin: float, t):
        """integral_origin^t |f(s)|^2 ds, vectorized over ``t``."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        out = np.array(
            [np.real(_quad(lambda s: np.abs(self(s)) ** 2, origin, ti, self._edges()))
             for ti in np.atleast_1d(t)]
        )
        return float(out[0]) if scalar else out

    def survival(self, t):
        """Remaining mass  w(t) = integral_t^inf |f(s)|^2 ds."""
        total = self.norm_sq()
        lo = self.support[0] if np.isfinite(self.support[0]) else min(np.min(np.atleast_1d(t)), 0.0) - 1.0
        return np.clip(total - self.cumulative_abs2_from(lo, t), 0.0, None)

    def inner_to(self, other: "Signal", t0: float, t1: float) -> complex:
        """L2 inner product  integral_t0^t1 conj(f) g ds."""
        pts = self._edges() + other._edges()
        return _quad(lambda s: np.conj(self(s)) * other(s), t0, t1, pts)

    def cumulative_inner_from(self, other: "Signal", origin: float, t):
        """integral_origin^t conj(f) g ds, vectorized over ``t``."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        out = np.array([self.inner_to(other, origin, ti) for ti in np.atleast_1d(t)])
        return complex(out[0]) if scalar else out


@dataclass(frozen=True)
class GaussianSignal(Signal):
    """scale * (omega^2 / 2 pi)^(1/4) exp(-omega^2 (t - t_center)^2 / 4).

    With scale 1 the squared envelope is the density of a normal law with
    mean ``t_center`` and standard deviation ``1/omega``, so the L2 norm is
    exactly one.  Declared support is t_center +/- 6 standard widths.
    """

    omega: float
    t_center: float
    scale: complex = 1.0

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError(f"gaussian bandwidth must be positive, got {self.omega}")
        object.__setattr__(self, "support",
                           (self.t_center - 6.0 / self.omega, self.t_center + 6.0 / self.omega))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        amp = (self.omega**2 / (2.0 * np.pi)) ** 0.25
        return self.scale * amp * np.exp(-0.25 * self.omega**2 * (t - self.t_center) ** 2)

    def norm_sq(self) -> float:
        return float(abs(self.scale) ** 2)

    def cumulative_abs2_from(self, origin, t):
        z = lambda s: (np.asarray(s, dtype=float) - self.t_center) * self.omega
        return abs(self.scale) ** 2 * (ndtr(z(t)) - ndtr(z(origin)))

    def survival(self, t):
        z = (np.asarray(t, dtype=float) - self.t_center) * self.omega
        return abs(self.scale) ** 2 * ndtr(-z)

    def inner_to(self, other, t0, t1):
        if isinstance(other, GaussianSignal):
            w1 = self.omega**2 / 4.0
            w2 = other.omega**2 / 4.0
            W = w1 + w2
            m = (w1 * self.t_center + w2 * other.t_center) / W
            off = np.exp(-w1 * w2 * (self.t_center - other.t_center) ** 2 / W)
            amp = (np.conj(self.scale) * other.scale
                   * (self.omega**2 / (2 * np.pi)) ** 0.25 * (other.omega**2 / (2 * np.pi)) ** 0.25)
            gauss_mass = 0.5 * np.sqrt(np.pi / W) * (erf(np.sqrt(W) * (t1 - m)) - erf(np.sqrt(W) * (t0 - m)))
            return amp * off * gauss_mass
        return super().inner_to(other, t0, t1)

    def cumulative_inner_from(self, other, origin, t):
        if isinstance(other, GaussianSignal):
            t = np.asarray(t, dtype=float)
            scalar = t.ndim == 0
            out = np.array([self.inner_to(other, origin, ti) for ti in np.atleast_1d(t)])
            return complex(out[0]) if scalar else out
        return super().cumulative_inner_from(other, origin, t)


@dataclass(frozen=True)
class ConstantSignal(Signal):
    """Constant complex value on the half-open window [t_on, t_off)."""

    value: complex
    window: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.window
        if not hi > lo:
            raise ValueError(f"window must satisfy t_off > t_on, got {self.window}")
        object.__setattr__(self, "support", (float(lo), float(hi)))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.window
        return np.where((t >= lo) & (t < hi), complex(self.value), 0.0 + 0.0j)

    def norm_sq(self) -> float:
        lo, hi = self.window
        return abs(self.value) ** 2 * (hi - lo)

    def cumulative_abs2_from(self, origin, t):
        lo, hi = self.window
        t = np.asarray(t, dtype=float)
        length = np.clip(np.minimum(t, hi) - np.maximum(origin, lo), 0.0, None)
        out = abs(self.value) ** 2 * length
        return float(out) if t.ndim == 0 else out

    def survival(self, t):
        lo, hi = self.window
        t = np.asarray(t, dtype=float)
        length = np.clip(hi - np.maximum(t, lo), 0.0, hi - lo)
        out = abs(self.value) ** 2 * length
        return float(out) if t.ndim == 0 else out

    def inner_to(self, other, t0, t1):
        if isinstance(other, ConstantSignal):
            lo = max(self.window[0], other.window[0], t0)
            hi = min(self.window[1], other.window[1], t1)
            return np.conj(self.value) * other.value * max(hi - lo, 0.0)
        return super().inner_to(other, t0, t1)

    def cumulative_inner_from(self, other, origin, t):
        if isinstance(other, ConstantSignal):
            lo = max(self.window[0], other.window[0])
            hi = min(self.window[1], other.window[1])
            t = np.asarray(t, dtype=float)
            length = np.clip(np.minimum(t, hi) - max(origin, lo), 0.0, None)
            out = np.conj(self.value) * other.value * length
            return complex(out) if t.ndim == 0 else out.astype(complex)
        return super().cumulative_inner_from(other, origin, t)


class TableSignal(Signal):
    """Sampled signal with linear interpolation between knots.

    Integrals are evaluated on a refined internal grid (trapezoid rule with
    16 sub-points per knot interval), which is exact enough for smooth
    tables and keeps queries vectorized.
    """

    REFINE = 16

    def __init__(self, times: Sequence[float], values: Sequence[complex]):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=complex)
        if times.ndim != 1 or times.size < 2 or values.shape != times.shape:
            raise ValueError("table needs matching 1-d times and values with >= 2 samples")
        if np.any(np.diff(times) <= 0):
            raise ValueError("table times must be strictly increasing")
        self.times = times
        self.values = values
        self.support = (float(times[0]), float(times[-1]))
        fine = np.linspace(0.0, 1.0, self.REFINE, endpoint=False)
        self._fine_t = np.append(
            (times[:-1, None] + np.diff(times)[:, None] * fine[None, :]).ravel(), times[-1]
        )
        fv = self(self._fine_t)
        self._cum_abs2 = integrate.cumulative_trapezoid(np.abs(fv) ** 2, self._fine_t, initial=0.0)
        self._fine_v = fv

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        re = np.interp(t, self.times, self.values.real, left=0.0, right=0.0)
        im = np.interp(t, self.times, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im

    def norm_sq(self) -> float:
        return float(self._cum_abs2[-1])

    def cumulative_abs2_from(self, origin, t):
        cum = lambda x: np.interp(x, self._fine_t, self._cum_abs2,
                                  left=0.0, right=self._cum_abs2[-1])
        t_arr = np.asarray(t, dtype=float)
        out = cum(t_arr) - cum(origin)
        return float(out) if t_arr.ndim == 0 else out

    def survival(self, t):
        return self.norm_sq() - self.cumulative_abs2_from(self.support[0], t)

    def cumulative_inner_from(self, other, origin, t):
        if isinstance(other, TableSignal) and np.array_equal(other._fine_t, self._fine_t):
            prod = np.conj(self._fine_v) * other._fine_v
            cum_vals = integrate.cumulative_trapezoid(prod, self._fine_t, initial=0.0)
            cum = lambda x: np.interp(x, self._fine_t, cum_vals.real, left=0.0, right=cum_vals.real[-1]) \
                + 1j * np.interp(x, self._fine_t, cum_vals.imag, left=0.0, right=cum_vals.imag[-1])
            t_arr = np.asarray(t, dtype=float)
            out = cum(t_arr) - cum(origin)
            return complex(out) if t_arr.ndim == 0 else out
        return super().cumulative_inner_from(other, origin, t)


@dataclass(frozen=True)
class Wavepacket:
    """Unit-norm temporal envelope of a one-photon field component.

    Wraps a :class:`Signal` and enforces the normalization
    integral |xi|^2 dt = 1 (within 1e-6 over the declared support).
    """

    signal: Signal

    def __post_init__(self):
        n = self.signal.norm_sq()
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"wavepacket norm^2 = {n:.8f}, must be 1 within 1e-6")

    @property
    def support(self) -> tuple[float, float]:
        return self.signal.support

    def xi(self, t):
        return self.signal(t)

    def __call__(self, t):
        return self.signal(t)


def gaussian_wavepacket(omega: float, t_center: float) -> Wavepacket:
    """Gaussian envelope of bandwidth ``omega`` peaking at ``t_center``."""
    return Wavepacket(GaussianSignal(omega, t_center))


def survival_w(xi: Wavepacket, t):
    """Remaining wavepacket mass  w(t) = integral_t^inf |xi(s)|^2 ds."""
    return xi.signal.survival(t)


def generator_coupling_lambda(xi: Wavepacket, t, eps: float = LAMBDA_EPS):
    """Emission coupling  xi(t) / sqrt(max(w(t), eps)) of the photon source.

    The clamp keeps the coupling finite once the envelope mass is exhausted;
    by then the source's excited population has decayed with w, so clamped
    values multiply a vanishing amplitude.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    w = np.maximum(survival_w(xi, t), eps)
    return xi(t) / np.sqrt(w)


def coherent_overlap(a: Signal, b: Signal, window: tuple[float, float] | None = None) -> complex:
    """Inner product of two continuous-mode coherent states.

    <a|b> = exp(-|a|^2/2 - |b|^2/2 + <a, b>)  with L2 norms and inner
    product taken over the union of supports (or an explicit window).
    """
    if window is None:
        lo = min(a.support[0], b.support[0])
        hi = max(a.support[1], b.support[1])
    else:
        lo, hi = window
    na = np.real(a.inner_to(a, lo, hi))
    nb = np.real(b.inner_to(b, lo, hi))
    ab = a.inner_to(b, lo, hi)
    return complex(np.exp(-0.5 * na - 0.5 * nb + ab))


@dataclass(frozen=True)
class CoherentAmplitudes:
    """Family of pairwise-distinct coherent amplitude functions alpha_j(t)."""

    signals: tuple[Signal, ...]

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))
        n = len(self.signals)
        if n < 1:
            raise ValueError("need at least one amplitude")
        lo = min(s.support[0] for s in self.signals)
        hi = max(s.support[1] for s in self.signals)
        for j in range(n):
            for k in range(j + 1, n):
                a, b = self.signals[j], self.signals[k]
                dist = (np.real(a.inner_to(a, lo, hi)) + np.real(b.inner_to(b, lo, hi))
                        - 2.0 * np.real(a.inner_to(b, lo, hi)))
                if dist <= 1e-10:
                    raise ValueError(f"amplitudes {j} and {k} coincide (L2 distance^2 {dist:.2e})")

    @property
    def n(self) -> int:
        return len(self.signals)

    @property
    def support(self) -> tuple[float, float]:
        return (min(s.support[0] for s in self.signals),
                max(s.support[1] for s in self.signals))

    def values(self, t) -> np.ndarray:
        """alpha_j(t) for all j, shape (n,) for scalar t."""
        return np.stack([np.asarray(s(t), dtype=complex) for s in self.signals])

    def gram(self) -> np.ndarray:
        """Matrix of coherent-state overlaps g_jk = <alpha_j | alpha_k>."""
        n = self.n
        G = np.empty((n, n), dtype=complex)
        for j in range(n):
            for k in range(j, n):
                G[j, k] = coherent_overlap(self.signals[j], self.signals[k])
                G[k, j] = np.conj(G[j, k])
        return G

    def _check_index(self, *idx):
        for i in idx:
            if not 0 <= i < self.n:
                raise IndexError(f"amplitude index {i} out of range [0, {self.n})")


def cat_mjk(amps: CoherentAmplitudes, j: int, k: int, t):
    """Local exponent rate  conj(alpha_j) alpha_k - |alpha_j|^2/2 - |alpha_k|^2/2.

    Vanishes on the diagonal and has non-positive real part everywhere.
    """
    amps._check_index(j, k)
    aj = np.asarray(amps.signals[j](t), dtype=complex)
    ak = np.asarray(amps.signals[k](t), dtype=complex)
    return np.conj(aj) * ak - 0.5 * np.abs(aj) ** 2 - 0.5 * np.abs(ak) ** 2


def cat_exponent(amps: CoherentAmplitudes, j: int, k: int, t, origin: float = 0.0):
    """integral_origin^t m_jk(s) ds, via the signals' cumulative integrals."""
    amps._check_index(j, k)
    aj, ak = amps.signals[j], amps.signals[k]
    return (aj.cumulative_inner_from(ak, origin, t)
            - 0.5 * aj.cumulative_abs2_from(origin, t)
            - 0.5 * ak.cumulative_abs2_from(origin, t))


def cat_wjk(amps: CoherentAmplitudes, gamma: np.ndarray, j: int, k: int, t,
            gram: np.ndarray | None = None):
    """Integrating-factor solution of  dw_jk/dt = m_jk w_jk,  w_jk(0) = 1/(N_a g_jk).

    Computed as w_jk(0) exp(integral_0^t m_jk ds) rather than by ODE
    stepping; the ODE form is kept as a test oracle.
    """
    amps._check_index(j, k)
    gamma = np.asarray(gamma, dtype=complex)
    if gram is None:
        gram = amps.gram()
    g_jk = gram[j, k]
    if abs(g_jk) <= OVERLAP_FLOOR:
        raise ValueError(f"overlap underflow: |g[{j},{k}]| = {abs(g_jk):.3e} below {OVERLAP_FLOOR:.1e}")
    n_a = float(np.real(np.trace(gamma)))
    w0 = 1.0 / (n_a * g_jk)
    return w0 * np.exp(cat_exponent(amps, j, k, t))


def photon_weights(xi: Wavepacket, j: int, k: int, t):
    """Extended-system weight table for the photon case.

    w_00 = w(t), w_01 = w_10 = sqrt(w(t)), w_11 = 1, with field index 1
    naming the photon component and 0 the vacuum component.
    """
    if j not in (0, 1) or k not in (0, 1):
        raise IndexError(f"photon weight indices must be 0 or 1, got ({j}, {k})")
    if j == 1 and k == 1:
        return np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else 1.0
    w = survival_w(xi, t)
    return w if (j, k) == (0, 0) else np.sqrt(w)


def _check_weight_matrix(gamma: np.ndarray, n: int, what: str) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=complex)
    if gamma.shape != (n, n):
        raise ValueError(f"{what}: gamma must be {n}x{n}, got {gamma.shape}")
    if np.max(np.abs(gamma - gamma.conj().T)) > 1e-9:
        raise ValueError(f"{what}: gamma must be Hermitian")
    evals = np.linalg.eigvalsh(gamma)
    if evals.min() < -1e-9:
        raise ValueError(f"{what}: gamma must be positive semidefinite "
                         f"(smallest eigenvalue {evals.min():.3e})")
    return gamma


@dataclass(frozen=True)
class VacuumField:
    kind: str = "vacuum"


@dataclass(frozen=True)
class PhotonField:
    """Photon/vacuum combination: 2x2 weights and a unit-norm envelope.

    ``gamma`` is given in the (photon, vacuum) basis ordering,
    [[g11, g10], [g01, g00]]; it is the density matrix of the source
    ancilla, so it must be Hermitian, positive semidefinite and unit trace.
    """

    gamma: np.ndarray
    wavepacket: Wavepacket
    kind: str = "photon"

    def __post_init__(self):
        gamma = _check_weight_matrix(self.gamma, 2, "photon field")
        tr = float(np.real(np.trace(gamma)))
        if abs(tr - 1.0) > 1e-9:
            raise ValueError(f"photon field: tr(gamma) must be 1, got {tr!r}")
        object.__setattr__(self, "gamma", gamma)

    def weight(self, j: int, k: int) -> complex:
        """gamma_jk with field indices (1 = photon, 0 = vacuum)."""
        return complex(self.gamma[1 - j, 1 - k])


@dataclass(frozen=True)
class CatField:
    """Combination of n coherent states with n x n weights.

    Normalization: sum_jk gamma_jk g_jk = 1 with g the Gram matrix of the
    amplitudes.  The Gram matrix is computed once and cached on the field.
    """

    gamma: np.ndarray
    amplitudes: CoherentAmplitudes
    kind: str = "cat"

    def __post_init__(self):
        n = self.amplitudes.n
        gamma = _check_weight_matrix(self.gamma, n, "cat field")
        gram = self.amplitudes.gram()
        total = complex(np.sum(gamma * gram))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"cat field: sum_jk gamma_jk g_jk must be 1, got {total}")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "gram_matrix", gram)

    @property
    def n(self) -> int:
        return self.amplitudes.n

    @property
    def n_a(self) -> float:
        return float(np.real(np.trace(self.gamma)))


def photon_superposition_gamma(c_photon: complex, c_vacuum: complex) -> np.ndarray:
    """Weights of the pure superposition c_photon |1_xi> + c_vacuum |0>."""
    psi = np.array([c_photon, c_vacuum], dtype=complex)
    if abs(np.vdot(psi, psi) - 1.0) > 1e-9:
        raise ValueError("superposition coefficients must satisfy |c1|^2 + |c0|^2 = 1")
    return np.outer(psi, psi.conj())


def cat_superposition_gamma(weights: Sequence[complex], amps: CoherentAmplitudes) -> np.ndarray:
    """Weights gamma_jk = conj(s_j) s_k of the pure cat sum_j s_j |alpha_j>.

    The input weights are rescaled so the normalization
    sum_jk gamma_jk g_jk = 1 holds exactly.
    """
    s = np.asarray(weights, dtype=complex)
    if s.shape != (amps.n,):
        raise ValueError(f"need {amps.n} superposition weights, got shape {s.shape}")
    gram = amps.gram()
    norm = np.real(np.einsum("j,k,jk->", s.conj(), s, gram))
    if norm <= 0:
        raise ValueError("superposition weights give non-positive norm")
    s = s / np.sqrt(norm)
    return np.einsum("j,k->jk", s.conj(), s)
