import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qtraj.config import ConfigError, load_config, parse_config
from qtraj.csvio import read_csv, write_csv

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "qtraj.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


def base_doc(**overrides):
    doc = {
        "system": {"preset": "two_level_atom", "kappa": 1.0},
        "field": {
            "type": "photon",
            "gamma": [[1.0, 0.0], [0.0, 0.0]],
            "wavepacket": {"preset": "gaussian", "omega": 1.46, "t_center": 4.2},
        },
        "measurement": {"scheme": "homodyne"},
        "grid": {"t0": 0.0, "t1": 1.0, "dt": 0.001},
        "seed": 7,
    }
    doc.update(overrides)
    return doc


class TestParsing:
    def test_shipped_fig5_is_valid(self, capsys):
        cfg = load_config(CONFIGS / "fig5.json")
        assert cfg.system.dim == 2
        assert cfg.grid.dt == 1e-3 and cfg.substeps == 10
        assert cfg.n_traj == 64
        assert "P_e" in cfg.observables

    def test_photon_gamma_trace_violation_names_constraint(self):
        doc = base_doc()
        doc["field"]["gamma"] = [[1.0, 0.0], [0.0, 1.0]]
        with pytest.raises(ConfigError, match=r"/field/gamma.*tr"):
            parse_config(json.dumps(doc))

    def test_cat_normalization_violation_rejected(self):
        doc = base_doc()
        doc["field"] = {
            "type": "cat",
            "gamma": [[0.6, 0.0], [0.0, 0.6]],
            "amplitudes": [
                {"preset": "constant", "value": 0.5, "window": [0.0, 2.0]},
                {"preset": "constant", "value": -0.5, "window": [0.0, 2.0]},
            ],
        }
        with pytest.raises(ConfigError, match=r"/field/gamma.*sum_jk"):
            parse_config(json.dumps(doc))

    def test_gamma_psd_violation_rejected(self):
        doc = base_doc()
        doc["field"]["gamma"] = [[1.5, 0.9], [0.9, -0.5]]
        with pytest.raises(ConfigError, match="semidefinite"):
            parse_config(json.dumps(doc))

    def test_invalid_json_reports_root(self):
        with pytest.raises(ConfigError, match="invalid JSON"):
            parse_config("{nope")

    def test_missing_grid_reports_path(self):
        doc = base_doc()
        del doc["grid"]
        with pytest.raises(ConfigError, match="/grid"):
            parse_config(json.dumps(doc))

    def test_bad_signal_preset_path(self):
        doc = base_doc()
        doc["field"]["wavepacket"] = {"preset": "boxcar"}
        with pytest.raises(ConfigError, match="/field/wavepacket/preset"):
            parse_config(json.dumps(doc))

    def test_bad_complex_entry_path(self):
        doc = base_doc()
        doc["field"]["gamma"] = [[1.0, "x"], [0.0, 0.0]]
        with pytest.raises(ConfigError, match="/field/gamma/0/1"):
            parse_config(json.dumps(doc))

    def test_unknown_observable_preset(self):
        doc = base_doc(observables=[{"name": "q", "preset": "parity"}])
        with pytest.raises(ConfigError, match="/observables/0/preset"):
            parse_config(json.dumps(doc))

    def test_early_peak_flagged_not_rejected(self, capsys):
        doc = base_doc()
        doc["field"]["wavepacket"]["t_center"] = 3.0  # 6/omega is 4.11
        parse_config(json.dumps(doc))
        assert "before t=0" in capsys.readouterr().err

    def test_explicit_matrices_and_initial_ket(self):
        doc = base_doc()
        doc["system"] = {
            "S": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
            "L": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]],
            "H": [[[0.2, 0], [0, 0]], [[0, 0], [-0.2, 0]]],
        }
        doc["initial_state"] = {"ket": [[0, 0], [1, 0]]}
        cfg = parse_config(json.dumps(doc))
        assert np.allclose(cfg.rho0, [[0, 0], [0, 1]])

    def test_round_trip(self):
        cfg = load_config(CONFIGS / "cat_pair.json")
        again = parse_config(cfg.to_json())
        assert again.canonical == cfg.canonical

    def test_measurement_validation(self):
        doc = base_doc(measurement={"scheme": "heterodyne"})
        with pytest.raises(ConfigError, match="/measurement"):
            parse_config(json.dumps(doc))


class TestCsvIo:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "x.csv"
        cols = {"t": np.linspace(0, 1, 5), "y": np.arange(5.0) * np.pi}
        write_csv(path, "qtraj.test.v1", cols)
        schema, back = read_csv(path)
        assert schema == "qtraj.test.v1"
        assert np.array_equal(back["t"], cols["t"])
        assert np.array_equal(back["y"], cols["y"])

    def test_rejects_ragged(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "x.csv", "s", {"a": np.arange(3.0), "b": np.arange(4.0)})

    def test_missing_schema_line(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="schema"):
            read_csv(p)


class TestCliMaster:
    def test_fig5_master_peak(self, tmp_path):
        res = run_cli("master", "--config", str(CONFIGS / "fig5.json"), "--out", str(tmp_path))
        assert res.returncode == 0, res.stderr
        schema, cols = read_csv(tmp_path / "master.csv")
        assert schema == "qtraj.master.v1"
        assert 0.78 <= cols["P_e"].max() <= 0.82
        assert abs(cols["tr_11_re"] - 1.0).max() < 1e-7

    def test_vacuum_ground_state_stays_dark(self, tmp_path):
        doc = base_doc(field={"type": "vacuum"})
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(doc))
        res = run_cli("master", "--config", str(cfg_path), "--out", str(tmp_path))
        assert res.returncode == 0, res.stderr
        _, cols = read_csv(tmp_path / "master.csv")
        assert np.abs(cols["P_e"]).max() < 1e-12

    def test_cat_single_equals_displaced_vacuum_csv(self, tmp_path):
        a = 0.5
        cat_doc = base_doc()
        cat_doc["field"] = {
            "type": "cat",
            "gamma": [[1.0]],
            "amplitudes": [{"preset": "constant", "value": a, "window": [0.0, 2.0]}],
        }
        cat_doc["grid"] = {"t0": 0.0, "t1": 1.0, "dt": 0.001}
        # the same physics as an explicit displaced system under vacuum:
        # L -> L + aS, H -> H + a (L† - L) / 2i for real a
        vac_doc = base_doc(field={"type": "vacuum"})
        vac_doc["system"] = {
            "S": [[1.0, 0.0], [0.0, 1.0]],
            "L": [[a, 1.0], [0.0, a]],
            "H": [[0.0, [0.0, a / 2]], [[0.0, -a / 2], 0.0]],
        }
        vac_doc["grid"] = cat_doc["grid"]
        for name, doc in (("cat.json", cat_doc), ("vac.json", vac_doc)):
            (tmp_path / name).write_text(json.dumps(doc))
        r1 = run_cli("master", "--config", str(tmp_path / "cat.json"), "--out", str(tmp_path / "o1"))
        r2 = run_cli("master", "--config", str(tmp_path / "vac.json"), "--out", str(tmp_path / "o2"))
        assert r1.returncode == 0 and r2.returncode == 0, r1.stderr + r2.stderr
        _, c1 = read_csv(tmp_path / "o1" / "master.csv")
        _, c2 = read_csv(tmp_path / "o2" / "master.csv")
        assert np.abs(c1["P_e"] - c2["P_e"]).max() < 1e-8

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        res = run_cli("master", "--config", str(bad), "--out", str(tmp_path))
        assert res.returncode == 1
        assert "error:" in res.stderr


class TestCliTrajectoryEnsemble:
    def test_trajectory_columns(self, tmp_path):
        res = run_cli("trajectory", "--config", str(CONFIGS / "vacuum_decay.json"),
                      "--out", str(tmp_path))
        assert res.returncode == 0, res.stderr
        schema, cols = read_csv(tmp_path / "traj_00000.csv")
        assert schema == "qtraj.trajectory.v1"
        for name in ("t", "dY", "dW", "P_e", "record_cum", "innovation_cum"):
            assert name in cols
        assert cols["P_e"][0] == 1.0

    def test_missing_measurement_is_config_error(self, tmp_path):
        doc = base_doc()
        del doc["measurement"]
        p = tmp_path / "m.json"
        p.write_text(json.dumps(doc))
        res = run_cli("ensemble", "--config", str(p), "--out", str(tmp_path))
        assert res.returncode == 1

    def test_ensemble_outputs_and_determinism(self, tmp_path):
        doc = base_doc()
        doc["grid"] = {"t0": 0.0, "t1": 2.0, "dt": 0.002}
        doc["trajectories"] = 12
        doc["save_trajectories"] = 3
        doc["batch_size"] = 5
        p = tmp_path / "e.json"
        p.write_text(json.dumps(doc))
        outs = []
        for run_dir, par in (("r1", "1"), ("r2", "1"), ("r3", "4")):
            res = run_cli("ensemble", "--config", str(p), "--out", str(tmp_path / run_dir),
                          "--parallelism", par)
            assert res.returncode == 0, res.stderr
            outs.append(tmp_path / run_dir)
        names = ["summary.csv", "traj_00000.csv", "traj_00001.csv", "traj_00002.csv"]
        for name in names:
            ref = (outs[0] / name).read_bytes()
            assert (outs[1] / name).read_bytes() == ref, f"{name} differs across reruns"
            assert (outs[2] / name).read_bytes() == ref, f"{name} differs across parallelism"
        schema, cols = read_csv(outs[0] / "summary.csv")
        assert schema == "qtraj.ensemble_summary.v1"
        assert "mean_P_e" in cols and "sem_P_e" in cols

    def test_single_trajectory_ensemble_flags_sem(self, tmp_path):
        doc = base_doc()
        doc["grid"] = {"t0": 0.0, "t1": 0.5, "dt": 0.002}
        doc["trajectories"] = 1
        p = tmp_path / "one.json"
        p.write_text(json.dumps(doc))
        res = run_cli("ensemble", "--config", str(p), "--out", str(tmp_path))
        assert res.returncode == 0, res.stderr
        assert "standard errors undefined" in res.stderr
        _, cols = read_csv(tmp_path / "summary.csv")
        assert np.isnan(cols["sem_P_e"]).all()


class TestCliOracleCheck:
    def test_pass(self, tmp_path):
        res = run_cli("oracle-check", "--config", str(CONFIGS / "cat_pair.json"),
                      "--out", str(tmp_path))
        assert res.returncode == 0, res.stderr
        assert "PASS" in res.stdout

    def test_unattainable_tolerance_fails_with_exit_3(self, tmp_path):
        doc = base_doc()
        doc["grid"] = {"t0": 0.0, "t1": 1.0, "dt": 0.001}
        doc["oracle"] = {"tolerance": 1e-18}
        p = tmp_path / "o.json"
        p.write_text(json.dumps(doc))
        res = run_cli("oracle-check", "--config", str(p), "--out", str(tmp_path))
        assert res.returncode == 3
        assert "FAIL" in res.stdout

    def test_vacuum_field_rejected(self, tmp_path):
        doc = base_doc(field={"type": "vacuum"})
        p = tmp_path / "v.json"
        p.write_text(json.dumps(doc))
        res = run_cli("oracle-check", "--config", str(p), "--out", str(tmp_path))
        assert res.returncode == 1
