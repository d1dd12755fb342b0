"""(S, L, H) triples, cascade composition and tensor embedding.

A triple bundles the scattering unitary S, the coupling operator L and the
Hamiltonian H of a Markovian open system with a single input/output channel.
Cascading two systems so the first one's output drives the second is the
series product

    G2 << G1  =  (S2 S1,  L2 + S2 L1,  H1 + H2 + Im{L2† S2 L1})

with Im{A} = (A - A†) / 2i taken as an operator.  Operator ordering matters
throughout.

Time dependence enters only through L and H (signal-generator couplings are
time-dependent while scattering never is here), so `TimedSlhTriple` keeps S
static and holds callables for L and H.  Both triple flavours expose
``at(t)`` returning concrete matrices, which is what the integrators consume.

Tensor convention for extended (ancilla + system) spaces: the ancilla factor
is the LEFT slot, the system the RIGHT slot, i.e. joint operators live on
ancilla (x) system.  `embed` realizes A (x) I and I (x) B under that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .operators import (
    HERMITICITY_TOL,
    UNITARITY_TOL,
    dag,
    DimensionMismatchError,
    hermiticity_defect,
    unitarity_defect,
)

__all__ = ["SlhTriple", "TimedSlhTriple", "series_product", "embed"]


def _op_im(A: np.ndarray) -> np.ndarray:
    return (A - dag(A)) / 2j


@dataclass(frozen=True)
class SlhTriple:
    """Static open-system triple with validation on construction."""

    S: np.ndarray
    L: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=complex)
        L = np.asarray(self.L, dtype=complex)
        H = np.asarray(self.H, dtype=complex)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "H", H)
        d = S.shape[0]
        for name, M in (("S", S), ("L", L), ("H", H)):
            if M.shape != (d, d):
                raise DimensionMismatchError(f"SlhTriple.{name}", d, M.shape[0] if M.ndim else 0)
        u = unitarity_defect(S)
        if u > UNITARITY_TOL:
            raise ValueError(f"scattering operator not unitary: defect {u:.3e}")
        h = hermiticity_defect(H)
        if h > HERMITICITY_TOL:
            raise ValueError(f"Hamiltonian not Hermitian: defect {h:.3e}")

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    def at(self, t: float):
        return self.S, self.L, self.H


@dataclass(frozen=True)
class TimedSlhTriple:
    """Triple with time-dependent coupling and Hamiltonian, static scattering.

    ``L`` and ``H`` are callables t -> (d, d) array; they must be safe to call
    concurrently.  Validation of the sampled matrices happens in ``at``s
    callers' tests, not per call, to keep integrator loops cheap.
    """

    S: np.ndarray
    L: Callable[[float], np.ndarray]
    H: Callable[[float], np.ndarray]
    dim: int = field(default=0)

    def __post_init__(self):
        S = np.asarray(self.S, dtype=complex)
        object.__setattr__(self, "S", S)
        if self.dim == 0:
            object.__setattr__(self, "dim", S.shape[0])
        u = unitarity_defect(S)
        if u > UNITARITY_TOL:
            raise ValueError(f"scattering operator not unitary: defect {u:.3e}")

    def at(self, t: float):
        return self.S, self.L(t), self.H(t)


AnyTriple = Union[SlhTriple, TimedSlhTriple]


def series_product(G2: AnyTriple, G1: AnyTriple) -> AnyTriple:
    """Cascade composition G2 << G1 (output of G1 feeds G2).

    Both operands must already act on a common Hilbert space; `embed`
    distinct subsystems first.  Returns a static triple when both operands
    are static, otherwise a `TimedSlhTriple` sampling the operands.
    """
    d2 = G2.dim if isinstance(G2, TimedSlhTriple) else G2.S.shape[0]
    d1 = G1.dim if isinstance(G1, TimedSlhTriple) else G1.S.shape[0]
    if d1 != d2:
        raise DimensionMismatchError("series_product", d2, d1)

    if isinstance(G2, SlhTriple) and isinstance(G1, SlhTriple):
        S = G2.S @ G1.S
        L = G2.L + G2.S @ G1.L
        H = G1.H + G2.H + _op_im(dag(G2.L) @ G2.S @ G1.L)
        return SlhTriple(S, L, H)

    S = G2.S @ G1.S

    def L_t(t: float, _G2=G2, _G1=G1) -> np.ndarray:
        _, L2, _ = _G2.at(t)
        _, L1, _ = _G1.at(t)
        return L2 + _G2.S @ L1

    def H_t(t: float, _G2=G2, _G1=G1) -> np.ndarray:
        _, L2, H2 = _G2.at(t)
        _, L1, H1 = _G1.at(t)
        return H1 + H2 + _op_im(dag(L2) @ _G2.S @ L1)

    return TimedSlhTriple(S, L_t, H_t, dim=d1)


def embed(A: np.ndarray, slot: str, other_dim: int) -> np.ndarray:
    """Kronecker embedding of ``A`` into a two-factor space.

    ``slot='left'`` places ``A`` on the left (ancilla) factor, returning
    A (x) I_other; ``slot='right'`` returns I_other (x) A.
    """
    if other_dim < 1:
        raise ValueError("other_dim must be >= 1")
    A = np.asarray(A, dtype=complex)
    eye = np.eye(other_dim, dtype=complex)
    if slot == "left":
        return np.kron(A, eye)
    if slot == "right":
        return np.kron(eye, A)
    raise ValueError(f"slot must be 'left' or 'right', got {slot!r}")
