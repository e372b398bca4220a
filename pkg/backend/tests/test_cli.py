import json

import numpy as np
import pytest

from qmemory import cli
from qmemory.cli import main
from qmemory.generate_sample import generate_sample_data
from qmemory.schemas import load_operator


@pytest.fixture
def samples(tmp_path, capsys):
    out = tmp_path / "samples"
    generate_sample_data(str(out))
    capsys.readouterr()
    return out


def test_validate_exit_codes(samples, capsys):
    assert main(["validate", str(samples / "markov.json")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["valid"]
    assert main(["validate", str(samples / "scaled.json")]) == 1
    report = json.loads(capsys.readouterr().out)
    assert abs(report["trace"] - 1.0) < 1e-9
    assert main(["validate", str(samples / "missing.json")]) == 2
    assert main(["validate"]) == 2


def test_malformed_matrix_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"labels": [{"name": "A", "dim": 2}], "entries": [[[1, 0]]]}))
    assert main(["validate", str(path)]) == 2


def test_detect_jc_optimum(samples, tmp_path, capsys):
    theta_path = tmp_path / "theta.json"
    code = main(
        [
            "detect",
            str(samples / "jc_optimum.json"),
            "--protocol",
            "--lambda-star",
            "--ensemble-size",
            "1",
            "--restarts",
            "2",
            "--seed",
            "3",
            "--theta-out",
            str(theta_path),
        ]
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert abs(report["value"] - 2) < 1e-5
    assert report["dimension_bound"] == 2
    assert report["detected"]
    assert abs(report["protocol"]["average"] - 1) < 1e-5
    assert report["lambda_star"]["lower"] <= 1 + 1e-6
    assert report["lambda_star"]["relaxation_upper"] >= report["lambda_star"]["lower"] - 1e-6
    theta, kind = load_operator(theta_path)
    assert kind == "retriever"
    assert theta.names == ("A", "B", "C")


def test_detect_markov(samples, capsys):
    assert main(["detect", str(samples / "markov.json")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["value"] <= 1 + 1e-6
    assert not report["detected"]
    assert report["dimension_bound"] == 1


def test_detect_rejects_invalid_process(samples):
    assert main(["detect", str(samples / "scaled.json")]) == 1


def test_witness_of_theta_star(tmp_path, capsys):
    out = tmp_path / "witness"
    assert main(["witness", "--theta-star", "--out", str(out), "--seed", "1"]) == 0
    check = json.loads(capsys.readouterr().out)
    assert check["residual"] < 1e-9
    data = json.loads((out / "decomposition.json").read_text())
    assert data["labels"] == ["A", "B", "C"]
    assert len(data["measurements"]) == 16
    assert len(data["readouts"]) == 4
    assert data["self_check"]["residual"] < 1e-9


def test_witness_with_process(samples, tmp_path, capsys):
    args = ["witness", "--z", str(samples / "theta_star.json"), "--process", str(samples / "jc_optimum.json")]
    assert main(args + ["--out", str(tmp_path)]) == 0
    check = json.loads(capsys.readouterr().out)
    assert abs(check["direct"] - 2) < 1e-8
    assert abs(check["reconstructed"] - 2) < 1e-8


def test_witness_needs_operator():
    assert main(["witness"]) == 2


def test_fock_figure(tmp_path, capsys):
    assert main(["spinboson", "figureA1", "--out", str(tmp_path)]) == 0
    files = json.loads(capsys.readouterr().out)["files"]
    assert "figureA1_fock.csv" in files
    for name in files:
        assert (tmp_path / name).read_text().startswith("param,t,tau,m,detected")


def _scan_config(tmp_path, **extra):
    config = {
        "spectral_density": {"variant": "single_mode", "g": 1.0},
        "t_grid": {"stop": 1.5, "points": 21},
        "tau_grid": {"stop": 1.5, "points": 21},
        "dt": 1e-3,
    }
    config.update(extra)
    path = tmp_path / "scan.json"
    path.write_text(json.dumps(config))
    return path


def test_spinboson_scan(tmp_path, capsys):
    config = _scan_config(tmp_path)
    assert main(["spinboson", "scan", "--config", str(config), "--out", str(tmp_path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert abs(summary["max_m"] - (1 + np.sin(1.5) ** 2)) < 1e-5
    assert summary["detected"]
    assert (tmp_path / "scan.csv").exists()
    assert json.loads((tmp_path / "scan_summary.json").read_text())["retriever"] == "singlet"


def test_spinboson_scan_triplet_override(tmp_path, capsys):
    config = _scan_config(tmp_path)
    args = ["spinboson", "scan", "--config", str(config), "--out", str(tmp_path), "--retriever", "triplet"]
    assert main(args) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["retriever"] == "triplet"
    assert not summary["detected"]


def test_spinboson_scan_config_errors(tmp_path):
    assert main(["spinboson", "scan"]) == 2
    config = _scan_config(tmp_path, colour="blue")
    assert main(["spinboson", "scan", "--config", str(config)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"spectral_density": {"variant": "lorentzian", "lambda": 1.0}}))
    assert main(["spinboson", "scan", "--config", str(bad)]) == 2


def test_witness_self_check_tolerance(monkeypatch, tmp_path):
    args = ["witness", "--theta-star", "--out", str(tmp_path), "--seed", "1"]
    assert main(args + ["--tol", "1e-6"]) == 0
    exact = cli.link_value
    monkeypatch.setattr(cli, "link_value", lambda z, w: exact(z, w) + 1e-3)
    assert main(args) == 3
    assert main(args + ["--tol", "1e-2"]) == 0


def test_flags_belong_to_their_commands(samples, tmp_path):
    assert main(["spinboson", "figureA1", "--units", "g", "--out", str(tmp_path)]) == 2
    assert main(["spinboson", "figureA1", "--jobs", "2", "--out", str(tmp_path)]) == 2
    assert main(["witness", "--theta-star", "--units", "g"]) == 2
    assert main(["validate", str(samples / "markov.json"), "--out", str(tmp_path)]) == 2
    assert main(["validate", str(samples / "markov.json"), "--tol", "1e-8"]) == 0


def test_linear_algebra_failure_is_numeric(samples, monkeypatch):
    def singular(*args, **kwargs):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setattr(cli, "retriever_value", singular)
    assert main(["detect", str(samples / "markov.json")]) == 3
