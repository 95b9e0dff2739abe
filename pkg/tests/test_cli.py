import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from steadygain import RunConfig, TrainerConfig
from steadygain.cli import main

TABLE_KINF = np.array([[-5.31e-4, -2.31e-3], [3.25e-5, 5.07e-2]])

SMALL_TRAINER = {
    "batch_size": 32, "max_iters": 200, "burn_in": 20, "seed": 0,
}
SMALL_EVAL = {"n_traj": 20, "t_test": 250, "t_critical": 100, "seed": 0}


def write_config(tmp_path, **overrides):
    doc = {
        "model": "bicycle",
        "trainer": SMALL_TRAINER,
        "eval": SMALL_EVAL,
        "gamma_sweep": [0.99],
        "output_dir": str(tmp_path / "out"),
    }
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


class TestSolve:
    def test_default_bicycle(self, tmp_path, capsys):
        code = main(["solve", "--out", str(tmp_path)])
        assert code == 0
        doc = json.loads((tmp_path / "dare.json").read_text())
        assert set(doc) == {"sigma", "gain", "iterations", "residual"}
        gain = np.array(doc["gain"])
        np.testing.assert_allclose(gain, TABLE_KINF, rtol=0.05)
        out = capsys.readouterr().out
        assert "0.05074" in out or "0.0507" in out

    def test_zero_process_noise_override(self, tmp_path):
        cfg = write_config(
            tmp_path,
            model={"bicycle": {"sigma_side_slope": 0.0,
                               "sigma_side_wind": 0.0}})
        code = main(["solve", "--config", str(cfg)])
        assert code == 0
        doc = json.loads((tmp_path / "out" / "dare.json").read_text())
        np.testing.assert_array_equal(np.array(doc["gain"]), np.zeros((2, 2)))

    def test_inline_scalar_model(self, tmp_path):
        inline = {
            "A": [[0.5]], "B": [[0.0]], "C": [[1.0]], "D": [[0.0]],
            "E": [[1.0]], "Q": [[1.0]], "R": [[1.0]], "dt": 0.01,
        }
        cfg = write_config(tmp_path, model={"inline": inline})
        code = main(["solve", "--config", str(cfg)])
        assert code == 0
        doc = json.loads((tmp_path / "out" / "dare.json").read_text())
        # closed form: S^2 - 0.25 S - 1 = 0, K = S / (S + 1)
        sigma = (0.25 + np.sqrt(4.0625)) / 2
        assert doc["gain"][0][0] == pytest.approx(sigma / (sigma + 1),
                                                  rel=1e-9)


class TestTrain:
    def test_zero_iterations_writes_zero_gain(self, tmp_path):
        cfg = write_config(tmp_path,
                           trainer={**SMALL_TRAINER, "max_iters": 0})
        code = main(["train", "--config", str(cfg)])
        assert code == 0
        doc = json.loads((tmp_path / "out" / "theta.json").read_text())
        np.testing.assert_array_equal(np.array(doc["gain"]),
                                      np.zeros((2, 2)))

    def test_repeat_runs_byte_identical(self, tmp_path):
        cfg_a = write_config(tmp_path, output_dir=str(tmp_path / "a"))
        code = main(["train", "--config", str(cfg_a)])
        assert code == 0
        cfg_b = write_config(tmp_path, output_dir=str(tmp_path / "b"))
        code = main(["train", "--config", str(cfg_b)])
        assert code == 0
        hist_a = (tmp_path / "a" / "train_history.csv").read_bytes()
        hist_b = (tmp_path / "b" / "train_history.csv").read_bytes()
        assert hist_a == hist_b
        theta_a = (tmp_path / "a" / "theta.json").read_bytes()
        theta_b = (tmp_path / "b" / "theta.json").read_bytes()
        assert theta_a == theta_b

    def test_history_columns(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["train", "--config", str(cfg)]) == 0
        with open(tmp_path / "out" / "train_history.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iter", "theta11", "theta12", "theta21", "theta22",
                           "d11", "d12", "d21", "d22",
                           "critic_loss", "actor_loss"]
        assert len(rows) == SMALL_TRAINER["max_iters"] + 1

    def test_multi_seed_average(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["train", "--config", str(cfg), "--seeds", "2"]) == 0
        doc = json.loads((tmp_path / "out" / "theta.json").read_text())
        assert doc["seeds"] == [0, 1]


class TestEval:
    def test_identical_gains_identical_rows(self, tmp_path):
        cfg = write_config(tmp_path)
        code = main(["eval", "--config", str(cfg),
                     "--gain", "a=dare", "--gain", "b=dare"])
        assert code == 0
        with open(tmp_path / "out" / "eval.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["name", "loss_tran", "loss_ss", "loss_full",
                           "status"]
        assert rows[1][1:] == rows[2][1:]
        assert rows[1][4] == "ok"

    def test_gain_from_theta_file(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["train", "--config", str(cfg)]) == 0
        theta_path = tmp_path / "out" / "theta.json"
        code = main(["eval", "--config", str(cfg),
                     "--gain", f"learned={theta_path}", "--gain", "kinf=dare"])
        assert code == 0
        with open(tmp_path / "out" / "eval.csv") as fh:
            rows = list(csv.reader(fh))
        assert [row[0] for row in rows[1:]] == ["learned", "kinf"]

    def test_zero_gain_source(self, tmp_path):
        cfg = write_config(tmp_path)
        code = main(["eval", "--config", str(cfg), "--gain", "open_loop=zero"])
        assert code == 0
        with open(tmp_path / "out" / "eval.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[1][0] == "open_loop"
        assert rows[1][4] == "ok"


class TestSweepGamma:
    def test_singleton_sweep_matches_train(self, tmp_path):
        trainer = {**SMALL_TRAINER, "init_mode": "fixed", "gamma": 0.99}
        cfg = write_config(tmp_path, trainer=trainer, gamma_sweep=[0.99])
        assert main(["sweep-gamma", "--config", str(cfg), "--seeds", "2"]) == 0
        with open(tmp_path / "out" / "sweep.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:5] == ["gamma", "theta11", "theta12", "theta21",
                               "theta22"]
        assert main(["train", "--config", str(cfg), "--seeds", "2"]) == 0
        doc = json.loads((tmp_path / "out" / "theta.json").read_text())
        theta_from_train = np.array(doc["gain"]).ravel()
        theta_from_sweep = np.array([float(x) for x in rows[1][1:5]])
        np.testing.assert_allclose(theta_from_sweep, theta_from_train,
                                   rtol=1e-12)


class TestConfigHandling:
    def test_roundtrip_lossless(self):
        cfg = RunConfig(
            model={"bicycle": {"m": 1600.0}},
            trainer=TrainerConfig(seed=3, gamma=0.5),
            gamma_sweep=(0.1, 0.9),
            output_dir="somewhere")
        again = RunConfig.from_dict(cfg.to_dict())
        assert again == cfg
        assert RunConfig.from_dict(again.to_dict()) == again

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"modle": "bicycle"}))
        assert main(["solve", "--config", str(path)]) == 2

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["solve", "--config", str(path)]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 2

    def test_invalid_model_document(self, tmp_path):
        path = write_config(tmp_path, model={"inline": {"A": [[1.0]]}})
        assert main(["solve", "--config", str(path)]) == 2

    def test_bad_flag_exits_two(self):
        assert main(["solve", "--bogus"]) == 2

    def test_divergent_solve_exits_one(self, tmp_path):
        inline = {
            "A": [[2.0]], "B": [[0.0]], "C": [[0.0]], "D": [[0.0]],
            "E": [[1.0]], "Q": [[1.0]], "R": [[1.0]], "dt": 0.01,
        }
        cfg = write_config(tmp_path, model={"inline": inline})
        assert main(["solve", "--config", str(cfg)]) == 1

    def test_seed_flag_overrides(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["train", "--config", str(cfg), "--seed", "5"]) == 0
        doc = json.loads((tmp_path / "out" / "theta.json").read_text())
        assert doc["seeds"] == [5]


class TestConsoleEntryPoint:
    def test_installed_script(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "steadygain.cli", "solve",
             "--out", str(tmp_path)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert (tmp_path / "dare.json").exists()
