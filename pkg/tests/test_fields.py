import numpy as np
import pytest
from scipy import integrate

from qtraj.fields import (
    CatField,
    CoherentAmplitudes,
    ConstantSignal,
    GaussianSignal,
    PhotonField,
    TableSignal,
    Wavepacket,
    cat_exponent,
    cat_mjk,
    cat_superposition_gamma,
    cat_wjk,
    coherent_overlap,
    gaussian_wavepacket,
    generator_coupling_lambda,
    photon_superposition_gamma,
    photon_weights,
    survival_w,
)

OMEGA, TC = 1.46, 3.0


def quad_abs2(sig, lo, hi):
    val, _ = integrate.quad(lambda s: abs(sig(s)) ** 2, lo, hi, limit=200)
    return val


class TestGaussianWavepacket:
    def test_peak_value(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        assert np.isclose(wp(TC), (OMEGA**2 / (2 * np.pi)) ** 0.25, rtol=1e-12)

    def test_unit_norm_by_quadrature(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        assert abs(quad_abs2(wp.signal, *wp.support) - 1.0) < 1e-6

    def test_symmetry(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        assert np.isclose(wp(TC + 0.4), wp(TC - 0.4), rtol=1e-12)

    def test_rejects_nonpositive_bandwidth(self):
        with pytest.raises(ValueError):
            gaussian_wavepacket(0.0, TC)


class TestSurvival:
    def test_limits(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        assert abs(survival_w(wp, TC - 6 / OMEGA) - 1.0) < 1e-6
        assert abs(survival_w(wp, TC + 6 / OMEGA)) < 1e-6

    def test_half_mass_at_center_vs_quadrature(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        direct = quad_abs2(wp.signal, TC, wp.support[1])
        assert abs(survival_w(wp, TC) - 0.5) < 1e-6
        assert abs(survival_w(wp, TC) - direct) < 1e-8

    def test_non_increasing(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        grid = np.linspace(0.0, 8.0, 400)
        w = survival_w(wp, grid)
        assert np.all(np.diff(w) <= 1e-15)

    def test_generic_quadrature_path_matches_closed_form(self):
        # a sampled copy of the Gaussian exercises the table integrals
        wp = gaussian_wavepacket(OMEGA, TC)
        ts = np.linspace(*wp.support, 4001)
        table = TableSignal(ts, wp(ts))
        for t in (1.0, 2.5, 3.0, 4.5):
            assert abs(table.survival(t) - survival_w(wp, t)) < 1e-5


class TestGeneratorCoupling:
    def test_equals_envelope_at_full_mass(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        t = TC - 5.5 / OMEGA
        assert np.isclose(generator_coupling_lambda(wp, t), wp(t), rtol=1e-5)

    def test_center_value(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        assert np.isclose(generator_coupling_lambda(wp, TC), wp(TC) / np.sqrt(0.5), rtol=1e-9)

    def test_clamped_tail_is_finite(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        t = TC + 20.0
        lam = generator_coupling_lambda(wp, t, eps=1e-12)
        assert np.isfinite(lam)
        assert np.isclose(lam, wp(t) / np.sqrt(1e-12), rtol=1e-12)

    def test_rejects_bad_eps(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        with pytest.raises(ValueError):
            generator_coupling_lambda(wp, 0.0, eps=0.0)


class TestCoherentOverlap:
    def test_self_overlap(self):
        a = ConstantSignal(0.8, (0.0, 2.0))
        assert np.isclose(coherent_overlap(a, a), 1.0, atol=1e-12)

    def test_vacuum_overlap(self):
        a = ConstantSignal(0.8, (0.0, 2.0))
        zero = ConstantSignal(0.0, (0.0, 2.0))
        norm2 = 0.64 * 2.0
        assert np.isclose(coherent_overlap(zero, a), np.exp(-0.5 * norm2), rtol=1e-10)

    def test_constants_closed_form(self):
        T = 1.5
        a1, a2 = 0.7 + 0.2j, -0.4 + 0.5j
        s1 = ConstantSignal(a1, (0.0, T))
        s2 = ConstantSignal(a2, (0.0, T))
        expected = np.exp(-0.5 * T * abs(a1) ** 2 - 0.5 * T * abs(a2) ** 2
                          + T * np.conj(a1) * a2)
        assert np.isclose(coherent_overlap(s1, s2), expected, rtol=1e-12)

    def test_gaussian_closed_form_vs_quadrature(self):
        s1 = GaussianSignal(1.2, 1.0, scale=0.9)
        s2 = GaussianSignal(0.8, 1.6, scale=-0.5 + 0.3j)
        closed = s1.inner_to(s2, -10.0, 10.0)
        re, _ = integrate.quad(lambda t: np.real(np.conj(s1(t)) * s2(t)), -10, 10, limit=200)
        im, _ = integrate.quad(lambda t: np.imag(np.conj(s1(t)) * s2(t)), -10, 10, limit=200)
        assert abs(closed - (re + 1j * im)) < 1e-9


class TestAmplitudeFamilies:
    def test_gram_positive_semidefinite(self):
        amps = CoherentAmplitudes((
            ConstantSignal(0.5, (0.0, 3.0)),
            ConstantSignal(-0.5, (0.0, 3.0)),
            GaussianSignal(1.0, 1.5, scale=0.4j),
        ))
        G = amps.gram()
        assert np.max(np.abs(G - G.conj().T)) < 1e-12
        assert np.linalg.eigvalsh(G).min() >= -1e-9

    def test_rejects_coincident_amplitudes(self):
        with pytest.raises(ValueError, match="coincide"):
            CoherentAmplitudes((ConstantSignal(0.5, (0.0, 3.0)),
                                ConstantSignal(0.5, (0.0, 3.0))))


class TestCatScalars:
    def setup_method(self):
        self.amps = CoherentAmplitudes((
            ConstantSignal(1.0, (0.0, 4.0)),
            ConstantSignal(1.0j, (0.0, 4.0)),
        ))

    def test_diagonal_vanishes(self):
        assert cat_mjk(self.amps, 0, 0, 1.0) == 0.0
        assert cat_mjk(self.amps, 1, 1, 2.5) == 0.0

    def test_direct_value(self):
        # conj(1) * i - 1/2 - 1/2 = i - 1
        assert np.isclose(cat_mjk(self.amps, 0, 1, 1.0), 1j - 1.0)

    def test_nonpositive_real_part(self):
        rng = np.random.default_rng(23)
        amps = CoherentAmplitudes((GaussianSignal(1.3, 1.0, 0.8),
                                   GaussianSignal(0.9, 2.0, -0.6 + 0.4j)))
        for t in rng.uniform(0, 3, size=20):
            assert np.real(cat_mjk(amps, 0, 1, t)) <= 1e-12

    def test_crossing_amplitudes_cancel(self):
        # distinct envelopes that share a value where they cross
        amps = CoherentAmplitudes((GaussianSignal(1.0, 1.0, 0.5),
                                   GaussianSignal(1.0, 3.0, 0.5)))
        t_cross = 2.0
        assert abs(amps.signals[0](t_cross) - amps.signals[1](t_cross)) < 1e-12
        assert abs(cat_mjk(amps, 0, 1, t_cross)) < 1e-12

    def test_index_range(self):
        with pytest.raises(IndexError):
            cat_mjk(self.amps, 0, 2, 1.0)


class TestCatWeights:
    def test_diagonal_constant(self):
        amps = CoherentAmplitudes((ConstantSignal(0.5, (0.0, 4.0)),
                                   ConstantSignal(-0.5, (0.0, 4.0))))
        gamma = cat_superposition_gamma([1.0, 1.0], amps)
        n_a = np.trace(gamma).real
        for t in (0.0, 1.0, 3.0):
            assert np.isclose(cat_wjk(amps, gamma, 0, 0, t), 1.0 / n_a, rtol=1e-12)

    def test_single_amplitude_trivial(self):
        amps = CoherentAmplitudes((ConstantSignal(0.4, (0.0, 4.0)),))
        gamma = np.array([[1.0]], dtype=complex)
        assert np.isclose(cat_wjk(amps, gamma, 0, 0, 2.0), 1.0, rtol=1e-12)

    def test_integrating_factor_vs_ode_stepper(self):
        # the exponent quadrature must agree with brute-force RK4 on the
        # defining scalar equation  dw = m w dt
        amps = CoherentAmplitudes((ConstantSignal(0.7, (0.0, 3.0)),
                                   ConstantSignal(0.2 - 0.4j, (0.0, 3.0))))
        gamma = cat_superposition_gamma([0.8, 0.6], amps)
        gram = amps.gram()
        n_a = np.trace(gamma).real
        t_end = 2.0
        w = 1.0 / (n_a * gram[0, 1])
        n, h = 2000, t_end / 2000
        for i in range(n):
            t = i * h
            k1 = cat_mjk(amps, 0, 1, t) * w
            k2 = cat_mjk(amps, 0, 1, t + h / 2) * (w + h / 2 * k1)
            k3 = cat_mjk(amps, 0, 1, t + h / 2) * (w + h / 2 * k2)
            k4 = cat_mjk(amps, 0, 1, t + h) * (w + h * k3)
            w = w + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        assert abs(cat_wjk(amps, gamma, 0, 1, t_end) - w) < 1e-8

    def test_overlap_underflow(self):
        # far-separated packets have a vanishing coherent overlap
        amps = CoherentAmplitudes((GaussianSignal(2.0, 1.0, scale=6.0),
                                   GaussianSignal(2.0, 1.0, scale=-6.0)))
        gamma = np.eye(2, dtype=complex) / 2.0
        with pytest.raises(ValueError, match="overlap underflow"):
            cat_wjk(amps, gamma, 0, 1, 1.0)

    def test_exponent_matches_quadrature(self):
        amps = CoherentAmplitudes((GaussianSignal(1.1, 1.0, 0.5),
                                   GaussianSignal(0.9, 1.4, -0.3 + 0.2j)))
        t = 2.2
        re, _ = integrate.quad(lambda s: np.real(cat_mjk(amps, 0, 1, s)), 0, t, limit=200)
        im, _ = integrate.quad(lambda s: np.imag(cat_mjk(amps, 0, 1, s)), 0, t, limit=200)
        assert abs(cat_exponent(amps, 0, 1, t) - (re + 1j * im)) < 1e-8


class TestPhotonWeights:
    def setup_method(self):
        self.wp = gaussian_wavepacket(OMEGA, TC)

    def test_photon_corner_is_one(self):
        assert photon_weights(self.wp, 1, 1, 5.0) == 1.0

    def test_early_full_mass(self):
        assert abs(photon_weights(self.wp, 0, 0, TC - 6 / OMEGA) - 1.0) < 1e-6

    def test_cross_corner_at_center(self):
        assert abs(photon_weights(self.wp, 0, 1, TC) - np.sqrt(0.5)) < 1e-6

    def test_index_range(self):
        with pytest.raises(IndexError):
            photon_weights(self.wp, 0, 2, 1.0)


class TestFieldSpecs:
    def test_photon_gamma_trace_enforced(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        with pytest.raises(ValueError, match="tr"):
            PhotonField(gamma=np.eye(2, dtype=complex), wavepacket=wp)

    def test_photon_gamma_psd_enforced(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        bad = np.array([[1.5, 0.9], [0.9, -0.5]], dtype=complex)
        with pytest.raises(ValueError, match="semidefinite"):
            PhotonField(gamma=bad, wavepacket=wp)

    def test_superposition_weights_are_density(self):
        g = photon_superposition_gamma(np.sqrt(0.3) * np.exp(0.4j), np.sqrt(0.7))
        assert abs(np.trace(g) - 1) < 1e-12
        assert np.linalg.eigvalsh(g).min() >= -1e-12

    def test_cat_normalization_enforced(self):
        amps = CoherentAmplitudes((ConstantSignal(0.5, (0.0, 2.0)),
                                   ConstantSignal(-0.5, (0.0, 2.0))))
        with pytest.raises(ValueError, match="sum_jk"):
            CatField(gamma=np.eye(2, dtype=complex), amplitudes=amps)

    def test_cat_superposition_normalizes(self):
        amps = CoherentAmplitudes((ConstantSignal(0.5, (0.0, 2.0)),
                                   ConstantSignal(-0.5, (0.0, 2.0))))
        gamma = cat_superposition_gamma([1.0, 1.0], amps)
        field = CatField(gamma=gamma, amplitudes=amps)
        assert abs(np.sum(field.gamma * field.gram_matrix) - 1.0) < 1e-9

    def test_wavepacket_norm_enforced(self):
        with pytest.raises(ValueError, match="norm"):
            Wavepacket(ConstantSignal(1.0, (0.0, 2.0)))  # norm^2 = 2

    def test_table_wavepacket_tracks_gaussian(self):
        wp = gaussian_wavepacket(OMEGA, TC)
        ts = np.linspace(*wp.support, 6001)
        table = Wavepacket(TableSignal(ts, wp(ts)))
        probe = np.linspace(1.0, 5.0, 17)
        assert np.max(np.abs(table(probe) - wp(probe))) < 1e-4
