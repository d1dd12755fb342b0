import numpy as np
import pytest

from qtraj.operators import dag, two_level, unitarity_defect, hermiticity_defect
from qtraj.slh import SlhTriple, TimedSlhTriple, embed, series_product

TL = two_level()
SM = TL["sigma_minus"]


def random_unitary(rng, dim):
    A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_triple(rng, dim):
    H = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return SlhTriple(random_unitary(rng, dim),
                     rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)),
                     H + dag(H))


class TestValidation:
    def test_rejects_non_unitary_scattering(self):
        with pytest.raises(ValueError, match="unitary"):
            SlhTriple(2 * np.eye(2), SM, np.zeros((2, 2)))

    def test_rejects_non_hermitian_hamiltonian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            SlhTriple(np.eye(2), SM, SM)

    def test_rejects_mixed_dims(self):
        with pytest.raises(ValueError):
            SlhTriple(np.eye(2), np.zeros((3, 3)), np.zeros((2, 2)))


class TestSeriesProduct:
    def test_identity_passthrough(self):
        rng = np.random.default_rng(3)
        G = random_triple(rng, 3)
        trivial = SlhTriple(np.eye(3), np.zeros((3, 3)), np.zeros((3, 3)))
        out = series_product(trivial, G)
        assert np.allclose(out.S, G.S) and np.allclose(out.L, G.L) and np.allclose(out.H, G.H)

    def test_scalar_phases_compose(self):
        p1, p2 = np.exp(0.3j) * np.eye(2), np.exp(1.1j) * np.eye(2)
        out = series_product(SlhTriple(p2, np.zeros((2, 2)), np.zeros((2, 2))),
                             SlhTriple(p1, np.zeros((2, 2)), np.zeros((2, 2))))
        assert np.allclose(out.S, np.exp(1.4j) * np.eye(2))

    def test_photon_source_cascade_form(self):
        # system << (I, lam * sigma_minus, 0) on the ancilla factor, real lam:
        # expect (S, L + lam S sm, H + lam Im(L† S sm)) entrywise
        rng = np.random.default_rng(5)
        G = random_triple(rng, 2)
        G_emb = SlhTriple(embed(G.S, "right", 2), embed(G.L, "right", 2),
                          embed(G.H, "right", 2))
        sm_emb = embed(SM, "left", 2)
        for lam in (0.3, 1.7):
            M = SlhTriple(np.eye(4), lam * sm_emb, np.zeros((4, 4)))
            out = series_product(G_emb, M)
            assert np.allclose(out.S, G_emb.S)
            assert np.allclose(out.L, G_emb.L + lam * (G_emb.S @ sm_emb))
            Z = dag(G_emb.L) @ G_emb.S @ sm_emb
            assert np.allclose(out.H, G_emb.H + lam * (Z - dag(Z)) / 2j)

    def test_preserves_unitarity_and_hermiticity(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            out = series_product(random_triple(rng, 3), random_triple(rng, 3))
            assert unitarity_defect(out.S) <= 1e-9
            assert hermiticity_defect(out.H) <= 1e-9

    def test_associativity(self):
        rng = np.random.default_rng(11)
        G3, G2, G1 = (random_triple(rng, 3) for _ in range(3))
        left = series_product(series_product(G3, G2), G1)
        right = series_product(G3, series_product(G2, G1))
        for a, b in ((left.S, right.S), (left.L, right.L), (left.H, right.H)):
            assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.abs(a).max())

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(13)
        with pytest.raises(ValueError):
            series_product(random_triple(rng, 2), random_triple(rng, 3))

    def test_timed_operand_sampling(self):
        rng = np.random.default_rng(17)
        G = random_triple(rng, 2)
        M = TimedSlhTriple(np.eye(2), lambda t: t * SM, lambda t: np.zeros((2, 2)))
        out = series_product(G, M)
        assert isinstance(out, TimedSlhTriple)
        S, L, H = out.at(0.5)
        ref = series_product(G, SlhTriple(np.eye(2), 0.5 * SM, np.zeros((2, 2))))
        assert np.allclose(L, ref.L) and np.allclose(H, ref.H)

    def test_timed_rejects_non_unitary(self):
        with pytest.raises(ValueError, match="unitary"):
            TimedSlhTriple(2 * np.eye(2), lambda t: SM, lambda t: np.zeros((2, 2)))


class TestEmbed:
    def test_left_slot(self):
        out = embed(SM, "left", 2)
        assert out.shape == (4, 4)
        assert np.allclose(out, np.kron(SM, np.eye(2)))

    def test_identity_any_slot(self):
        assert np.allclose(embed(np.eye(2), "left", 3), np.eye(6))
        assert np.allclose(embed(np.eye(2), "right", 3), np.eye(6))

    def test_factors_commute(self):
        rng = np.random.default_rng(19)
        A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        B = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        left = embed(A, "left", 2) @ embed(B, "right", 2)
        assert np.allclose(left, np.kron(A, B))

    def test_bad_slot(self):
        with pytest.raises(ValueError):
            embed(SM, "middle", 2)
