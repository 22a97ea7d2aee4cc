import json
from pathlib import Path

import numpy as np
import pytest

import topoattack as ta
from topoattack.cli import main
from topoattack.reports import load_checkpoint

FAST_CONFIG = {
    "epochs": 60,
    "hidden": 16,
    "train_per_class": 20,
    "val_size": 100,
    "test_size": 400,
}


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("ds") / "planted"
    ta.save_dataset(ta.planted_graph(seed=0), path, name="planted")
    return path


@pytest.fixture(scope="module")
def config_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "config.json"
    path.write_text(json.dumps(FAST_CONFIG))
    return path


@pytest.fixture(scope="module")
def trained(tmp_path_factory, dataset_dir, config_file):
    out = tmp_path_factory.mktemp("trained")
    code = main(["train", "--dataset", str(dataset_dir), "--seeds", "2",
                 "--out", str(out), "--config", str(config_file)])
    assert code == 0
    return out


def read_report(out):
    return json.loads((Path(out) / "report.json").read_text())


class TestTrain:
    def test_writes_checkpoints_and_report(self, trained):
        for seed in (0, 1):
            params, manifest = load_checkpoint(Path(trained) / f"seed-{seed}")
            assert manifest["seed"] == seed
            assert params.w1.shape == (100, 16)
        report = read_report(trained)
        assert report["command"] == "train"
        assert len(report["rows"][0]["per_seed"]) == 2
        assert (Path(trained) / "results.csv").is_file()
        assert (Path(trained) / "timing.json").is_file()

    def test_missing_dataset_exits_2(self, tmp_path, capsys):
        code = main(["train", "--dataset", str(tmp_path / "nope"),
                     "--out", str(tmp_path / "o"), "--seeds", "1"])
        assert code == 2
        assert "nope" in capsys.readouterr().err

    def test_same_seed_byte_identical_reports(self, tmp_path, dataset_dir,
                                              config_file):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["train", "--dataset", str(dataset_dir), "--seed", "0",
                         "--out", str(out), "--config", str(config_file)]) == 0
            outs.append((out / "report.json").read_bytes())
        assert outs[0] == outs[1]

    def test_divergent_config_exits_3(self, tmp_path, dataset_dir):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({**FAST_CONFIG, "learning_rate": 1e300,
                                   "dropout": 0.0}))
        code = main(["train", "--dataset", str(dataset_dir), "--seed", "0",
                     "--out", str(tmp_path / "o"), "--config", str(cfg)])
        assert code == 3


class TestAttack:
    @pytest.mark.parametrize("method", ["gta", "zo-gta", "dice"])
    def test_attack_runs_and_persists_flips(self, tmp_path, dataset_dir,
                                            trained, method):
        out = tmp_path / method
        code = main(["attack", "--dataset", str(dataset_dir),
                     "--checkpoint", str(trained), "--method", method,
                     "--budget-frac", "0.02", "--seeds", "2",
                     "--out", str(out)])
        assert code == 0
        report = read_report(out)
        row = report["rows"][0]
        assert row["method"] == method
        assert 0.0 <= row["mean_pct"] <= 100.0
        flips = sorted(out.glob("flips-*.txt"))
        assert len(flips) == 2
        for f in flips:
            for line in f.read_text().splitlines():
                i, j = map(int, line.split())
                assert 0 <= i < j

    def test_zero_budget_equals_clean_row(self, tmp_path, dataset_dir, trained):
        out_clean = tmp_path / "clean"
        assert main(["eval", "--dataset", str(dataset_dir),
                     "--checkpoint", str(trained), "--method", "clean",
                     "--seeds", "1", "--out", str(out_clean)]) == 0
        out_atk = tmp_path / "zerobudget"
        assert main(["attack", "--dataset", str(dataset_dir),
                     "--checkpoint", str(trained), "--method", "gta",
                     "--budget-frac", "0", "--seeds", "1",
                     "--out", str(out_atk)]) == 0
        clean_pct = read_report(out_clean)["rows"][0]["mean_pct"]
        atk_pct = read_report(out_atk)["rows"][0]["mean_pct"]
        assert atk_pct == pytest.approx(clean_pct)

    def test_unknown_method_exits_2(self, tmp_path, dataset_dir, trained):
        code = main(["attack", "--dataset", str(dataset_dir),
                     "--checkpoint", str(trained), "--method", "pgd",
                     "--seeds", "1", "--out", str(tmp_path / "o")])
        assert code == 2

    def test_corrupt_checkpoint_exits_2(self, tmp_path, dataset_dir, trained):
        import shutil
        bad = tmp_path / "badckpt"
        shutil.copytree(trained / "seed-0", bad / "seed-0")
        blob = (bad / "seed-0" / "weights.bin").read_bytes()
        (bad / "seed-0" / "weights.bin").write_bytes(blob[:-4] + b"\x00" * 4)
        code = main(["attack", "--dataset", str(dataset_dir),
                     "--checkpoint", str(bad), "--method", "gta",
                     "--seeds", "1", "--out", str(tmp_path / "o")])
        assert code == 2


class TestRobustTrainCommand:
    def test_t0_returns_seeded_init(self, tmp_path, dataset_dir):
        cfg = tmp_path / "rob.json"
        cfg.write_text(json.dumps({**FAST_CONFIG, "iterations": 0}))
        out = tmp_path / "rob"
        assert main(["robust-train", "--dataset", str(dataset_dir),
                     "--seed", "0", "--out", str(out),
                     "--config", str(cfg)]) == 0
        params, manifest = load_checkpoint(out / "seed-0")
        assert manifest["kind"] == "robust"
        want = ta.init_params(100, 16, 4, np.random.default_rng(0))
        np.testing.assert_allclose(params.w1, want.w1, rtol=1e-6)

    def test_smoke_run(self, tmp_path, dataset_dir):
        cfg = tmp_path / "rob2.json"
        cfg.write_text(json.dumps({**FAST_CONFIG, "iterations": 5,
                                   "robust_learning_rate": 0.5}))
        out = tmp_path / "rob2"
        assert main(["robust-train", "--dataset", str(dataset_dir),
                     "--seed", "0", "--budget-frac", "0.01",
                     "--out", str(out), "--config", str(cfg)]) == 0
        assert read_report(out)["rows"][0]["method"] == "clean-robust"


class TestEvalAndSweep:
    def test_eval_multiple_methods(self, tmp_path, dataset_dir, trained):
        out = tmp_path / "eval"
        assert main(["eval", "--dataset", str(dataset_dir),
                     "--checkpoint", str(trained),
                     "--method", "clean,gta,dice", "--budget-frac", "0.02",
                     "--seeds", "1", "--out", str(out)]) == 0
        report = read_report(out)
        assert [r["method"] for r in report["rows"]] == ["clean", "gta", "dice"]

    def test_singleton_sweep_equals_attack(self, tmp_path, dataset_dir, trained):
        out_sweep = tmp_path / "sweep"
        assert main(["sweep-n", "--dataset", str(dataset_dir),
                     "--checkpoint", str(trained), "--method", "gta",
                     "--budget-frac", "0.02", "--step-frac", "0.02",
                     "--seeds", "1", "--out", str(out_sweep)]) == 0
        out_atk = tmp_path / "atk"
        assert main(["attack", "--dataset", str(dataset_dir),
                     "--checkpoint", str(trained), "--method", "gta",
                     "--budget-frac", "0.02", "--step-frac", "0.02",
                     "--seeds", "1", "--out", str(out_atk)]) == 0
        assert (read_report(out_sweep)["rows"][0]["per_seed"]
                == read_report(out_atk)["rows"][0]["per_seed"])

    def test_sweep_grid_rows(self, tmp_path, dataset_dir, trained):
        out = tmp_path / "grid"
        assert main(["sweep-n", "--dataset", str(dataset_dir),
                     "--checkpoint", str(trained), "--method", "gta,zo-gta",
                     "--budget-frac", "0.02", "--step-frac", "0.005,0.02",
                     "--seeds", "1", "--out", str(out)]) == 0
        report = read_report(out)
        assert len(report["rows"]) == 4  # 2 methods x 2 grid points
        steps = {r["step_edges"] for r in report["rows"]}
        assert steps == {4, 16}

    def test_empty_grid_rejected(self, tmp_path, dataset_dir, trained):
        code = main(["sweep-n", "--dataset", str(dataset_dir),
                     "--checkpoint", str(trained), "--method", "gta",
                     "--step-frac", ",", "--seeds", "1",
                     "--out", str(tmp_path / "o")])
        assert code == 2

    def test_report_embeds_full_config(self, tmp_path, dataset_dir, trained):
        out = tmp_path / "cfgcheck"
        assert main(["attack", "--dataset", str(dataset_dir),
                     "--checkpoint", str(trained), "--method", "gta",
                     "--budget-frac", "0.02", "--seeds", "1",
                     "--out", str(out)]) == 0
        cfg = read_report(out)["config"]
        for key in ("method", "budget_frac", "step_frac", "budget_edges",
                    "step_edges", "seeds", "checkpoint"):
            assert key in cfg
