import numpy as np
import pytest

from qtraj.engine import (
    NoiseStream,
    TimeGrid,
    TrajectoryError,
    bernoulli_jump,
    gaussian_increment,
    run_ensemble,
    run_trajectory,
)
from qtraj.fields import PhotonField, VacuumField, gaussian_wavepacket
from qtraj.filters import MeasurementScheme, make_filter_model
from qtraj.operators import two_level
from qtraj.slh import SlhTriple

TL = two_level()
SM, PE, PG, I2 = TL["sigma_minus"], TL["proj_e"], TL["proj_g"], TL["identity"]
ZERO2 = np.zeros((2, 2))
ATOM = SlhTriple(I2, SM, ZERO2)
WP = gaussian_wavepacket(1.46, 3.0)
PURE_PHOTON = PhotonField(gamma=np.array([[1, 0], [0, 0]], dtype=complex), wavepacket=WP)
HOMODYNE = MeasurementScheme("homodyne")
COUNTING = MeasurementScheme("counting")


class TestTimeGrid:
    def test_step_count_rounds(self):
        g = TimeGrid(0.0, 1.0, 1e-3)
        assert g.n_steps == 1000
        assert len(g.times()) == 1001
        assert np.isclose(g.times()[-1], 1.0)

    def test_half_times(self):
        g = TimeGrid(0.0, 0.01, 1e-3)
        assert len(g.half_times()) == 21
        assert np.isclose(g.half_times()[1], 5e-4)

    def test_refined(self):
        g = TimeGrid(0.0, 1.0, 1e-2).refined(10)
        assert g.n_steps == 1000

    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 0.0, 1e-3)


class TestNoiseStream:
    def test_reproducibility_contract(self):
        a = NoiseStream(42, 7).gaussian_block(100, 1e-3)
        b = NoiseStream(42, 7).gaussian_block(100, 1e-3)
        assert np.array_equal(a, b)

    def test_counter_positions_values(self):
        s = NoiseStream(42, 7)
        full = s.gaussian_block(10, 1e-3)
        assert s.counter == 10
        # redraw from a fresh stream: the k-th value is the k-th draw
        s2 = NoiseStream(42, 7)
        for k in range(10):
            assert s2.gaussian_block(1, 1e-3)[0] == full[k]

    def test_streams_are_independent(self):
        a = NoiseStream(42, 0).gaussian_block(50, 1e-3)
        b = NoiseStream(42, 1).gaussian_block(50, 1e-3)
        assert not np.allclose(a, b)

    def test_gaussian_increment_moments(self):
        s = NoiseStream(2024, 0)
        dt = 1e-3
        draws = s.gaussian_block(1_000_000, dt)
        assert abs(draws.mean()) <= 4 * np.sqrt(dt / 1e6)
        assert abs(draws.var() - dt) <= 0.01 * dt

    def test_gaussian_increment_single(self):
        a = gaussian_increment(NoiseStream(5, 5), 1e-3)
        b = gaussian_increment(NoiseStream(5, 5), 1e-3)
        assert a == b
        with pytest.raises(ValueError):
            gaussian_increment(NoiseStream(5, 5), 0.0)


class TestBernoulliJump:
    def test_zero_intensity_never_fires(self):
        s = NoiseStream(1, 0)
        assert all(bernoulli_jump(s, 0.0, 1e-3) == 0 for _ in range(1000))

    def test_probability_cap_enforced(self):
        with pytest.raises(ValueError, match="reduce dt"):
            bernoulli_jump(NoiseStream(1, 0), intensity=2000.0, dt=1e-3)
        with pytest.raises(ValueError):
            bernoulli_jump(NoiseStream(1, 0), intensity=-1.0, dt=1e-3)

    def test_rate_statistics(self):
        s = NoiseStream(77, 0)
        dt, kappa, n = 1e-4, 1.0, 1_000_000
        hits = sum(bernoulli_jump(s, kappa, dt) for _ in range(n))
        assert abs(hits / n - kappa * dt) < 0.05 * kappa * dt + 4 * np.sqrt(dt / n)

    def test_determinism(self):
        a = [bernoulli_jump(NoiseStream(3, 1), 100.0, 1e-4) for _ in range(1)]
        b = [bernoulli_jump(NoiseStream(3, 1), 100.0, 1e-4) for _ in range(1)]
        assert a == b


class TestRunTrajectory:
    def test_zero_coupling_observables_constant(self):
        G = SlhTriple(I2, ZERO2, ZERO2)
        grid = TimeGrid(0.0, 1.0, 1e-3)
        model = make_filter_model(G, VacuumField(), PE, grid.times(), HOMODYNE)
        rec = run_trajectory(model, grid, 1, seed=1, index=0, observables={"P_e": PE})
        assert np.allclose(rec.observables["P_e"], 1.0, atol=1e-12)

    def test_bit_identical_rerun(self):
        grid = TimeGrid(0.0, 1.0, 1e-3)
        model = make_filter_model(ATOM, PURE_PHOTON, PG, grid.times(), HOMODYNE)
        a = run_trajectory(model, grid, 1, seed=9, index=3, observables={"P_e": PE})
        b = run_trajectory(model, grid, 1, seed=9, index=3, observables={"P_e": PE})
        assert np.array_equal(a.observables["P_e"], b.observables["P_e"])
        assert np.array_equal(a.record, b.record)

    def test_record_minus_compensator_is_injected_noise(self):
        grid = TimeGrid(0.0, 1.0, 1e-3)
        model = make_filter_model(ATOM, PURE_PHOTON, PG, grid.times(), HOMODYNE)
        rec = run_trajectory(model, grid, 1, seed=4, index=2, observables={"P_e": PE})
        injected = NoiseStream(4, 2).gaussian_block(grid.n_steps, grid.dt)
        assert np.max(np.abs((rec.record - rec.compensator) - injected)) < 1e-12

    def test_report_stride(self):
        grid = TimeGrid(0.0, 1.0, 1e-3)
        fine = grid.refined(10)
        model = make_filter_model(ATOM, PURE_PHOTON, PG, fine.times(), HOMODYNE)
        rec = run_trajectory(model, fine, 10, seed=4, index=0, observables={"P_e": PE})
        assert len(rec.observables["P_e"]) == grid.n_steps + 1
        assert len(rec.record) == grid.n_steps
        # windowed record minus windowed compensator telescopes to the noise sum
        injected = NoiseStream(4, 0).gaussian_block(fine.n_steps, fine.dt)
        assert np.isclose((rec.record - rec.compensator).sum(), injected.sum(), atol=1e-12)


class TestRunEnsemble:
    def test_single_trajectory_matches_record(self):
        grid = TimeGrid(0.0, 1.0, 1e-3)
        model = make_filter_model(ATOM, PURE_PHOTON, PG, grid.times(), HOMODYNE)
        rec = run_trajectory(model, grid, 1, seed=6, index=0, observables={"P_e": PE})
        summary, kept = run_ensemble(model, grid, 1, seed=6, n_traj=1,
                                     observables={"P_e": PE}, keep_records=1)
        assert np.array_equal(summary.mean["P_e"], rec.observables["P_e"])
        assert not summary.sem_defined
        assert np.isnan(summary.sem["P_e"]).all()
        assert np.array_equal(kept[0].record, rec.record)

    def test_parallelism_invariance(self):
        grid = TimeGrid(0.0, 2.0, 1e-3)
        model = make_filter_model(ATOM, PURE_PHOTON, PG, grid.times(), HOMODYNE)
        s1, _ = run_ensemble(model, grid, 1, seed=3, n_traj=48,
                             observables={"P_e": PE}, parallelism=1, batch_size=16)
        s8, _ = run_ensemble(model, grid, 1, seed=3, n_traj=48,
                             observables={"P_e": PE}, parallelism=8, batch_size=16)
        for k in s1.mean:
            assert np.array_equal(s1.mean[k], s8.mean[k])
            assert np.array_equal(s1.sem[k], s8.sem[k])

    def test_mean_tracks_master_loosely(self):
        from qtraj.hierarchy import run_master
        grid = TimeGrid(0.0, 6.0, 2e-3)
        model = make_filter_model(ATOM, PURE_PHOTON, PG, grid.times(), HOMODYNE)
        summary, _ = run_ensemble(model, grid, 1, seed=12, n_traj=128,
                                  observables={"P_e": PE})
        master = run_master(ATOM, PURE_PHOTON, PG, grid)
        dev = np.abs(summary.mean["P_e"] - master.expectations(PE))
        assert dev.max() < 0.1

    def test_kept_records_are_prefix(self):
        grid = TimeGrid(0.0, 0.5, 1e-3)
        model = make_filter_model(ATOM, PURE_PHOTON, PG, grid.times(), HOMODYNE)
        _, kept = run_ensemble(model, grid, 1, seed=3, n_traj=10,
                               observables={"P_e": PE}, keep_records=4, batch_size=3)
        assert [r.index for r in kept] == [0, 1, 2, 3]

    def test_failure_carries_trajectory_index(self):
        # an over-strong coupling pushes the per-step jump probability
        # above the cap, which must abort with index and step attached
        G = SlhTriple(I2, 40.0 * SM, ZERO2)
        grid = TimeGrid(0.0, 0.1, 1e-3)
        model = make_filter_model(G, VacuumField(), PE, grid.times(), COUNTING)
        with pytest.raises(TrajectoryError, match="trajectory 0 failed at step 0"):
            run_ensemble(model, grid, 1, seed=1, n_traj=2, observables={"P_e": PE})

    def test_needs_at_least_one(self):
        grid = TimeGrid(0.0, 0.5, 1e-3)
        model = make_filter_model(ATOM, PURE_PHOTON, PG, grid.times(), HOMODYNE)
        with pytest.raises(ValueError):
            run_ensemble(model, grid, 1, seed=1, n_traj=0, observables={"P_e": PE})
