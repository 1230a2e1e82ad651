import json
import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

import patchkpp.manager.cli.service as manager
from patchkpp.access.config.constants import (
    EXIT_CONFIG,
    EXIT_NOT_PERSISTENT,
    EXIT_OK,
    THREADS_ENV_VAR,
)
from patchkpp.utility.exceptions import ConfigurationError

reference = {
    "landscape": {"l1": 2, "l2": 1, "d1": 1, "d2": 0.5, "alpha": 0.4},
    "reaction": {"mu1": 1, "mu2": -1},
    "scenario": {"ladder": [1, 2]},
}


def write_config(directory: Path, data: dict) -> Path:
    path: Path = directory / "config.json"
    path.write_text(json.dumps(data))
    return path


def read_json(path: Path) -> dict:
    return json.loads(path.read_text())


@pytest.fixture
def reference_path(tmp_path) -> Path:
    return write_config(tmp_path, reference)


def test_eigen_writes_summary_eigenfunction_and_manifest(reference_path, tmp_path):
    # Arrange
    out: Path = tmp_path / "eigen"
    # Act
    argv = ["eigen", "--config", str(reference_path), "--out", str(out)]
    code: int = manager.main(argv)
    # Assert
    assert code == EXIT_OK
    summary: dict = read_json(out / "eigen.json")
    assert summary["lambda1_dispersion"] < 0
    assert summary["max_disagreement"] <= 1e-6
    assert 1 < summary["critical"]["l1c"] < 2
    eigenfunction = pd.read_csv(out / "eigenfunction.csv")
    assert list(eigenfunction.columns) == ["x", "phi"]
    manifest: dict = read_json(out / "manifest.json")
    assert manifest["command"] == "eigen"
    assert set(manifest["outputs"]) == {"eigen.json", "eigenfunction.csv"}


def test_homogeneous_eigen_has_no_critical_length(tmp_path):
    # Arrange
    data = {
        "landscape": {"l1": 1, "l2": 1, "d1": 1, "d2": 1, "alpha": 0.5},
        "reaction": {"mu1": 1, "mu2": 1},
        "scenario": {"ladder": [1]},
    }
    path: Path = write_config(tmp_path, data)
    # Act
    code: int = manager.main(["eigen", "--config", str(path), "--out", str(tmp_path)])
    # Assert
    assert code == EXIT_OK
    summary: dict = read_json(tmp_path / "eigen.json")
    assert summary["lambda1_dispersion"] == pytest.approx(-1.0, abs=1e-10)
    assert summary["critical"] is None


def test_manifest_rerun_reproduces_outputs(reference_path, tmp_path):
    # Arrange
    first: Path = tmp_path / "first"
    second: Path = tmp_path / "second"
    manager.main(["eigen", "--config", str(reference_path), "--out", str(first)])
    manifest: Path = first / "manifest.json"
    # Act
    code: int = manager.main(["eigen", "--config", str(manifest), "--out", str(second)])
    # Assert
    assert code == EXIT_OK
    for name in ("eigenfunction.csv", "eigen.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_speed_of_an_extinct_landscape_exits_not_persistent(tmp_path):
    # Arrange
    data = {
        "landscape": {"l1": 1, "l2": 1, "d1": 1, "d2": 0.5, "alpha": 0.4},
        "reaction": {"mu1": 1, "mu2": -3},
    }
    path: Path = write_config(tmp_path, data)
    # Act
    code: int = manager.main(["speed", "--config", str(path), "--out", str(tmp_path)])
    # Assert
    assert code == EXIT_NOT_PERSISTENT
    assert not (tmp_path / "speed.json").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["eigen"],
        ["eigen", "--config", "absent.json"],
        ["eigen", "--config", "{config}", "--seed", "-1"],
        ["persistence-map", "--config", "{config}"],
    ],
)
def test_configuration_problems_exit_with_the_config_code(argv, tmp_path):
    # Arrange
    path: Path = write_config(tmp_path, reference)
    argv = [item.format(config=path) for item in argv] + ["--out", str(tmp_path)]
    # Act / Assert
    assert manager.main(argv) == EXIT_CONFIG


def test_alpha_and_sigma_together_exit_with_the_config_code(tmp_path):
    # Arrange
    landscape = dict(reference["landscape"], sigma=1.5)
    path: Path = write_config(tmp_path, dict(reference, landscape=landscape))
    # Act
    code: int = manager.main(["steady", "--config", str(path), "--out", str(tmp_path)])
    # Assert
    assert code == EXIT_CONFIG


def test_simulating_zero_data_stays_zero(tmp_path):
    # Arrange
    data = dict(
        reference,
        numerics={"nodes_per_patch": 8},
        scenario={
            "T": 1.0,
            "halfwidth": 4.0,
            "initial": {"kind": "constant", "value": 0},
        },
    )
    path: Path = write_config(tmp_path, data)
    # Act
    argv = ["simulate", "--config", str(path), "--out", str(tmp_path)]
    code: int = manager.main(argv)
    # Assert
    assert code == EXIT_OK
    summary: dict = read_json(tmp_path / "simulate.json")
    assert summary["final_sup"] == 0.0
    assert summary["periodicity_defect"] == 0.0
    assert summary["front"] is None
    trajectory = pd.read_csv(tmp_path / "trajectory.csv")
    assert list(trajectory.columns) == ["t", "x", "u", "v", "patch_type"]
    np.testing.assert_array_equal(trajectory.u.to_numpy(), 0.0)
    final = pd.read_csv(tmp_path / "final_state.csv")
    assert final.t.unique() == pytest.approx([1.0])


def test_small_persistence_map(tmp_path, monkeypatch):
    # Arrange
    monkeypatch.setenv(THREADS_ENV_VAR, "2")
    scenario = {"persistence_map": {"l1": [1.0, 2.0], "l2": [1.0]}}
    path: Path = write_config(tmp_path, dict(reference, scenario=scenario))
    # Act
    code: int = manager.main(
        ["persistence-map", "--config", str(path), "--out", str(tmp_path)]
    )
    # Assert
    assert code == EXIT_OK
    cells = pd.read_csv(tmp_path / "persistence_map.csv")
    assert cells.l1.tolist() == [1.0, 2.0]
    assert cells.persistent.tolist() == [0, 1]
    curve = pd.read_csv(tmp_path / "critical_curve.csv")
    assert curve.l2.tolist() == [1.0]
    assert 1.0 < curve.l1c.iloc[0] < 2.0


def test_selftest_passes_without_a_config(tmp_path):
    # Act
    code: int = manager.main(["selftest", "--out", str(tmp_path)])
    # Assert
    assert code == EXIT_OK
    report: dict = read_json(tmp_path / "selftest.json")
    assert report["passed"]
    manifest: dict = read_json(tmp_path / "manifest.json")
    assert manifest["command"] == "selftest"
    assert manifest["config"] is None
    assert manifest["outputs"] == ["selftest.json"]


def test_worker_count_honors_the_thread_cap(monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, "1")
    assert manager.worker_count() == 1


def test_worker_count_never_exceeds_the_cpu_count(monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, "100000")
    assert manager.worker_count() == (os.cpu_count() or 1)


@pytest.mark.parametrize("raw", ["0", "many"])
def test_invalid_thread_caps_are_rejected(raw, monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, raw)
    with pytest.raises(ConfigurationError):
        manager.worker_count()
