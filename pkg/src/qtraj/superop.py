"""Matrix representations of linear block maps, built by probing.

Every right-hand side in this package is linear in the state blocks, with
scalar coefficients that are at most quadratic in the field amplitudes:

    F(c) = A + sum_j c_j B_j + sum_j conj(c_j) C_j + sum_jk conj(c_j) c_k D_jk.

Rather than hand-deriving the matrices, they are probed from the direct
(and separately tested) apply functions at a handful of coefficient
vectors, which keeps a single source of truth for the physics while the
integrator loops run on plain mat-vecs.

The vec convention is row-major raveling: probe_matrix(f, shape) returns M
with  M @ x.ravel() == f(X).ravel()  for any state X of that shape.
"""

from __future__ import annotations

import numpy as np

__all__ = ["probe_matrix", "QuadraticFamily"]


def probe_matrix(apply_fn, shape) -> np.ndarray:
    """Dense matrix of a linear map on complex arrays of ``shape``."""
    size = int(np.prod(shape))
    M = np.empty((size, size), dtype=complex)
    E = np.zeros(shape, dtype=complex)
    flat = E.ravel()
    for col in range(size):
        flat[col] = 1.0
        M[:, col] = np.asarray(apply_fn(E), dtype=complex).ravel()
        flat[col] = 0.0
    return M


class QuadraticFamily:
    """Coefficient-quadratic family of linear maps, probed once.

    ``make_apply(c)`` must return the linear map for coefficient vector
    ``c`` (length ``n_coeff``); ``combine(c)`` then reproduces its matrix
    for arbitrary ``c`` exactly (the family is polynomial, so probing is
    exact up to round-off).
    """

    def __init__(self, make_apply, shape, n_coeff: int):
        self.shape = tuple(shape)
        self.n = int(n_coeff)
        n = self.n

        def P(c_vec):
            return probe_matrix(make_apply(np.asarray(c_vec, dtype=complex)), shape)

        zero = np.zeros(n, dtype=complex)
        self.A = P(zero)
        self.B = [None] * n
        self.C = [None] * n
        self.D = [[None] * n for _ in range(n)]

        def unit(j, val=1.0):
            e = np.zeros(n, dtype=complex)
            e[j] = val
            return e

        for j in range(n):
            p1 = P(unit(j, 1.0))
            p2 = P(unit(j, -1.0))
            p3 = P(unit(j, 1.0j))
            self.D[j][j] = 0.5 * (p1 + p2) - self.A
            bpc = p1 - self.A - self.D[j][j]
            bmc = -1.0j * (p3 - self.A - self.D[j][j])
            self.B[j] = 0.5 * (bpc + bmc)
            self.C[j] = bpc - self.B[j]

        for j in range(n):
            for k in range(j + 1, n):
                base = (self.A + self.B[j] + self.B[k] + self.C[j] + self.C[k]
                        + self.D[j][j] + self.D[k][k])
                q1 = P(unit(j) + unit(k))
                d_sum = q1 - base
                q2 = P(unit(j) + unit(k, 1.0j))
                d_diff = -1.0j * (q2 - self.A - self.B[j] - 1.0j * self.B[k]
                                  - self.C[j] + 1.0j * self.C[k]
                                  - self.D[j][j] - self.D[k][k])
                self.D[j][k] = 0.5 * (d_sum + d_diff)
                self.D[k][j] = d_sum - self.D[j][k]

    def combine(self, c) -> np.ndarray:
        """Matrix of the map at coefficient vector ``c``."""
        c = np.atleast_1d(np.asarray(c, dtype=complex))
        M = self.A.copy()
        for j in range(self.n):
            if c[j] != 0.0:
                M += c[j] * self.B[j]
                M += np.conj(c[j]) * self.C[j]
        for j in range(self.n):
            cj = np.conj(c[j])
            if cj == 0.0:
                continue
            for k in range(self.n):
                if c[k] != 0.0:
                    M += (cj * c[k]) * self.D[j][k]
        return M

    def combine_t(self, c) -> np.ndarray:
        """Transposed matrix, for row-vector stepping  v @ M_T."""
        return self.combine(c).T
