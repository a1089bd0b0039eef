import json
from pathlib import Path
from typing import Any

import pandas as pd
import pytest

from digitwin.structural import cli
from digitwin.structural.cli import main

__all__ = (
    "TestArtifacts",
    "TestCommands",
)


class _StopStudyError(Exception):
    pass


@pytest.fixture(scope="module")
def workdir(tmp_path_factory: pytest.TempPathFactory) -> Path:
    root = tmp_path_factory.mktemp("cli")
    assert main(["generate", "--s", "1", "--variance", "0", "--out", str(root / "data")]) == 0
    for target in ("mu1", "mu2"):
        code = main(
            [
                "train",
                "--dataset",
                str(root / "data" / "dataset.csv"),
                "--target",
                target,
                "--depth",
                "5",
                "--restarts",
                "1",
                "--out",
                str(root / target),
            ]
        )
        assert code == 0
    return root


class TestCommands:
    def test_generate(self, workdir: Path):
        frame = pd.read_csv(workdir / "data" / "dataset.csv")
        manifest = json.loads((workdir / "data" / "manifest.json").read_text())

        assert len(frame) == 25
        assert manifest["command"] == "generate"
        assert manifest["config"]["noise"]["variance"] == 0.0
        assert set(manifest["outputs"]) == {"dataset.csv", "dataset.json"}
        assert not (workdir / "data" / "train.csv").exists()
        assert not list((workdir / "data").glob(".staging-*"))

    def test_train_writes_tree_and_report(self, workdir: Path):
        report = json.loads((workdir / "mu1" / "training_report.json").read_text())
        manifest = json.loads((workdir / "mu1" / "manifest.json").read_text())

        assert (workdir / "mu1" / "tree.json").is_file()
        assert report["target"] == "mu1"
        assert report["training"]["n_rows"] == 25
        assert manifest["inputs"]["dataset"]["path"].endswith("dataset.csv")
        assert manifest["options"]["target"] == "mu1"

    def test_eval(self, workdir: Path, tmp_path: Path):
        code = main(
            [
                "eval",
                "--tree",
                str(workdir / "mu2" / "tree.json"),
                "--dataset",
                str(workdir / "data" / "dataset.csv"),
                "--out",
                str(tmp_path),
            ]
        )

        result = json.loads((tmp_path / "evaluation.json").read_text())
        assert code == 0
        assert result["target"] == "mu2"
        assert 1.0 <= result["mean_gauges_read"] <= 5.0

    def test_eval_on_other_layout_fails_without_output(self, workdir: Path, tmp_path: Path):
        assert main(["generate", "--s", "1", "--variance", "0", "--layout", "candidate", "--out", str(tmp_path)]) == 0
        out = tmp_path / "eval"

        code = main(
            [
                "eval",
                "--tree",
                str(workdir / "mu1" / "tree.json"),
                "--dataset",
                str(tmp_path / "dataset.csv"),
                "--out",
                str(out),
            ]
        )

        assert code == 1
        assert not (out / "evaluation.json").exists()

    def test_simulate_is_reproducible(self, workdir: Path, tmp_path: Path):
        logs = []
        for name in ("first", "second"):
            out = tmp_path / name
            code = main(
                [
                    "simulate",
                    "--tree-mu1",
                    str(workdir / "mu1" / "tree.json"),
                    "--tree-mu2",
                    str(workdir / "mu2" / "tree.json"),
                    "--seed",
                    "4",
                    "--out",
                    str(out),
                ]
            )
            assert code == 0
            logs.append((out / "mission_log.csv").read_bytes())

        summary = json.loads((tmp_path / "first" / "mission_summary.json").read_text())
        assert logs[0] == logs[1]
        assert summary["seed"] == 4
        assert summary["latch_holds"] is True
        assert "obstacle:" in (tmp_path / "first" / "mission_frames.txt").read_text()

    def test_montecarlo(self, workdir: Path, tmp_path: Path):
        code = main(
            [
                "montecarlo",
                "--tree-mu1",
                str(workdir / "mu1" / "tree.json"),
                "--tree-mu2",
                str(workdir / "mu2" / "tree.json"),
                "--runs",
                "2",
                "--out",
                str(tmp_path),
            ]
        )

        result = json.loads((tmp_path / "montecarlo.json").read_text())
        assert code == 0
        assert result["n_runs"] == 2
        assert result["seeds"] == [0, 1]
        assert result["latch_violations"] == []

    def test_explain(self, workdir: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        code = main(
            [
                "explain",
                "--tree",
                str(workdir / "mu1" / "tree.json"),
                "--dataset",
                str(workdir / "data" / "dataset.csv"),
                "--row",
                "7",
                "--out",
                str(tmp_path),
            ]
        )

        printed = capsys.readouterr().out
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert code == 0
        assert "leaf -> " in printed
        assert "gauges read: gauge_" in printed
        assert (tmp_path / "explanation.txt").read_text() == printed
        assert manifest["command"] == "explain"
        assert set(manifest["inputs"]) == {"tree", "dataset"}
        assert set(manifest["outputs"]) == {"explanation.txt"}

    def test_calibrate(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        assert main(["calibrate", "--target-microstrain", "500", "--out", str(tmp_path)]) == 0

        weight = float(capsys.readouterr().out)
        result = json.loads((tmp_path / "calibration.json").read_text())
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert weight > 0.0
        assert result["reference_weight"] == pytest.approx(weight, rel=1e-5)
        assert result["target_microstrain"] == 500.0
        assert manifest["command"] == "calibrate"
        assert set(manifest["outputs"]) == {"calibration.json"}

    def test_sensors_honours_unrestricted_split_complexity(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch):
        seen: dict[str, Any] = {}

        def fake_study(*args: Any) -> None:
            seen["split_complexity"] = args[6]
            raise _StopStudyError

        monkeypatch.setattr(cli, "placement_study", fake_study)

        with pytest.raises(_StopStudyError):
            main(["sensors", "--split-complexity", "none", "--out", str(tmp_path)])

        assert seen == {"split_complexity": None}

    def test_sensors_default_split_complexity(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch):
        seen: dict[str, Any] = {}

        def fake_study(*args: Any) -> None:
            seen["split_complexity"] = args[6]
            raise _StopStudyError

        monkeypatch.setattr(cli, "placement_study", fake_study)

        with pytest.raises(_StopStudyError):
            main(["sensors", "--out", str(tmp_path)])

        assert seen == {"split_complexity": 4}


class TestArtifacts:
    def test_tampered_input_is_rejected(self, workdir: Path, tmp_path: Path):
        data = tmp_path / "data"
        assert main(["generate", "--s", "1", "--variance", "0", "--out", str(data)]) == 0
        with (data / "dataset.csv").open("a") as f:
            f.write("\n")

        code = main(["train", "--dataset", str(data / "dataset.csv"), "--depth", "1", "--out", str(tmp_path / "t")])

        assert code == 2
        assert not (tmp_path / "t" / "tree.json").exists()

    def test_missing_input(self, tmp_path: Path):
        assert main(["eval", "--tree", str(tmp_path / "nope.json"), "--dataset", str(tmp_path / "nope.csv")]) == 2

    def test_invalid_config_value(self, tmp_path: Path):
        assert main(["generate", "--variance", "-1", "--out", str(tmp_path)]) == 2

    def test_sweep_needs_test_dataset(self, workdir: Path, tmp_path: Path):
        code = main(["sweep", "--dataset", str(workdir / "data" / "dataset.csv"), "--out", str(tmp_path)])

        assert code == 2
