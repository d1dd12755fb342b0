"""Dense complex-matrix operator algebra on a finite-dimensional Hilbert space.

Operators are plain ``numpy`` arrays of shape ``(d, d)`` and complex dtype.
Rates are expressed in units of the coupling rate kappa and hbar = 1, so all
entries are dimensionless.  States ("density-like" matrices) use the same
representation; cross terms appearing in hierarchy blocks carry no positivity
requirement, so positivity is never assumed, only checked where promised.

All functions here are pure and broadcast over leading batch axes: any input
of shape ``(..., d, d)`` is accepted where a state is expected.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "DimensionMismatchError",
    "dag",
    "dissipator",
    "dissipator_adjoint",
    "lindbladian",
    "liouvillian",
    "expect",
    "is_hermitian",
    "is_unitary",
    "hermiticity_defect",
    "unitarity_defect",
    "assert_density",
    "two_level",
    "cavity",
]

HERMITICITY_TOL = 1e-9
UNITARITY_TOL = 1e-9


class DimensionMismatchError(ValueError):
    """Raised when two operators act on Hilbert spaces of different dimension."""

    def __init__(self, what: str, dim_a: int, dim_b: int):
        self.dim_a = int(dim_a)
        self.dim_b = int(dim_b)
        super().__init__(f"{what}: dimension mismatch {self.dim_a} != {self.dim_b}")


def _as_operator(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"operator must be square, got shape {A.shape}")
    return A


def _check_dims(what: str, A: np.ndarray, B: np.ndarray) -> None:
    if A.shape[-1] != B.shape[-1]:
        raise DimensionMismatchError(what, A.shape[-1], B.shape[-1])


def dag(A: np.ndarray) -> np.ndarray:
    """Hermitian adjoint, transposing only the last two axes."""
    return np.conjugate(np.swapaxes(A, -1, -2))


def dissipator(L: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Heisenberg-picture dissipator  L† X L - (L†L X + X L†L)/2."""
    L = _as_operator(L)
    X = _as_operator(X)
    _check_dims("dissipator", L, X)
    Ld = dag(L)
    LdL = Ld @ L
    return Ld @ X @ L - 0.5 * (LdL @ X + X @ LdL)


def dissipator_adjoint(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Schrodinger-picture dissipator  L rho L† - (L†L rho + rho L†L)/2.

    Trace-annihilating for every ``rho``, Hermiticity-preserving for
    Hermitian ``rho``.
    """
    L = _as_operator(L)
    rho = _as_operator(rho)
    _check_dims("dissipator_adjoint", L, rho)
    Ld = dag(L)
    LdL = Ld @ L
    return L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)


def lindbladian(G, X: np.ndarray) -> np.ndarray:
    """Heisenberg generator  -i[X, H] + dissipator(L, X)  of the triple ``G``.

    The scattering operator of ``G`` does not enter; it only redirects the
    field and is invisible to system-operator dynamics under vacuum input.
    """
    X = _as_operator(X)
    H = _as_operator(G.H)
    _check_dims("lindbladian", H, X)
    return -1j * (X @ H - H @ X) + dissipator(G.L, X)


def liouvillian(G, rho: np.ndarray) -> np.ndarray:
    """Schrodinger generator  -i[H, rho] + dissipator_adjoint(L, rho).

    Dual to :func:`lindbladian` under the trace pairing
    tr(rho . lindbladian(G, X)) = tr(X . liouvillian(G, rho)).
    """
    rho = _as_operator(rho)
    H = _as_operator(G.H)
    _check_dims("liouvillian", H, rho)
    return -1j * (H @ rho - rho @ H) + dissipator_adjoint(G.L, rho)


def expect(A: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """tr(A rho), broadcasting over leading axes of ``rho``."""
    return np.einsum("ij,...ji->...", np.asarray(A), np.asarray(rho))


def hermiticity_defect(A: np.ndarray) -> float:
    """Max-abs deviation of ``A`` from its own adjoint."""
    return float(np.max(np.abs(A - dag(A))))


def unitarity_defect(S: np.ndarray) -> float:
    """Max-abs deviation of S†S from the identity."""
    S = _as_operator(S)
    return float(np.max(np.abs(dag(S) @ S - np.eye(S.shape[-1]))))


def is_hermitian(A: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    return hermiticity_defect(A) <= tol


def is_unitary(S: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    return unitarity_defect(S) <= tol


def assert_density(rho: np.ndarray, trace: complex = 1.0, tol: float = 1e-9) -> None:
    """Check Hermiticity and trace of a density-tagged matrix.

    Cross-term blocks in the hierarchies are exempt from this check; call it
    only on matrices that are promised to be physical states (possibly with a
    declared non-unit target trace).
    """
    rho = _as_operator(rho)
    h = hermiticity_defect(rho)
    if h > tol:
        raise ValueError(f"density matrix not Hermitian: defect {h:.3e} > {tol:.1e}")
    tr = complex(np.trace(rho))
    if abs(tr - trace) > tol:
        raise ValueError(f"density trace {tr} differs from target {trace} by more than {tol:.1e}")


def two_level() -> dict:
    """Operator catalog for a two-level system, ground state at index 0.

    Returns sigma_minus, sigma_plus, the excited-state projector
    (= sigma_plus @ sigma_minus), both basis projectors, the ground and
    excited kets and the identity.
    """
    sm = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    sp = sm.conj().T
    ket_g = np.array([1.0, 0.0], dtype=complex)
    ket_e = np.array([0.0, 1.0], dtype=complex)
    return {
        "sigma_minus": sm,
        "sigma_plus": sp,
        "number": sp @ sm,
        "proj_g": np.outer(ket_g, ket_g.conj()),
        "proj_e": np.outer(ket_e, ket_e.conj()),
        "ket_g": ket_g,
        "ket_e": ket_e,
        "identity": np.eye(2, dtype=complex),
        "sx": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
        "sy": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
        "sz": np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex),
    }


def cavity(dim: int) -> dict:
    """Operator catalog for a cavity mode truncated at ``dim`` Fock states."""
    if dim < 2:
        raise ValueError("cavity truncation needs dim >= 2")
    n = np.arange(1, dim)
    a = np.zeros((dim, dim), dtype=complex)
    a[n - 1, n] = np.sqrt(n)
    return {
        "annihilation": a,
        "creation": a.conj().T,
        "number": a.conj().T @ a,
        "vacuum_ket": np.eye(dim, dtype=complex)[:, 0].copy(),
        "identity": np.eye(dim, dtype=complex),
    }
