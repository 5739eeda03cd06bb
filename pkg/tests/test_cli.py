import json

import numpy as np
import pandas as pd
import pytest
from pydantic import BaseModel

from krig.cli import build_parser, main
from krig.cli import experiment as experiment_command
from krig.cli.error_handling import (
    EXIT_INVALID_INPUT,
    EXIT_OK,
    EXIT_UNEXPECTED,
    handle_errors,
)
from krig.errors import (
    DomainError,
    InputFormatError,
    NonUniqueStationary,
    NotPositiveDefinite,
    ReplicationAbort,
)
from krig.infrastructure import csv_io


@pytest.fixture
def model_files(tmp_path, small_model):
    design = csv_io.write_matrix(small_model.design.points, tmp_path / "design.csv")
    y = csv_io.write_matrix(small_model.y[:, None], tmp_path / "y.csv", prefix="y")
    return design, y


# --- csv io ----------------------------------------------------------------------


def test_design_file_is_read_back_exactly(tmp_path, small_model):
    path = csv_io.write_matrix(small_model.design.points, tmp_path / "d.csv")
    points = csv_io.read_design(path).points
    np.testing.assert_array_equal(points, small_model.design.points)


def test_bad_rows_report_their_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,x2\n0.1,0.2\n0.3,abc\n")
    with pytest.raises(InputFormatError, match="line 3"):
        csv_io.read_points(path)
    with pytest.raises(InputFormatError, match="not found"):
        csv_io.read_points(tmp_path / "missing.csv")


def test_observations_need_one_column(tmp_path):
    path = tmp_path / "y.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(InputFormatError, match="one column"):
        csv_io.read_observations(path)


def test_draws_file(tmp_path):
    draws = np.array([[1.5, 2.0], [0.25, 3.0]])
    path = csv_io.write_draws(draws, tmp_path / "draws.csv")
    assert pd.read_csv(path).columns.tolist() == ["mu_1", "mu_2"]
    np.testing.assert_array_equal(csv_io.read_draws(path), draws)


# --- error handling --------------------------------------------------------------


@pytest.mark.parametrize(
    "exc, code",
    [
        (DomainError("bad"), 2),
        (InputFormatError("bad"), 2),
        (NonUniqueStationary("bad"), 3),
        (NotPositiveDefinite("bad"), 4),
        (ReplicationAbort("bad"), 5),
        (RuntimeError("bad"), EXIT_UNEXPECTED),
    ],
)
def test_handle_errors_maps_exit_codes(exc, code):
    def run():
        raise exc

    assert handle_errors("test", run, enable_error_logging=False) == code


def test_handle_errors_success_and_validation():
    class Positive(BaseModel):
        value: int

    assert handle_errors("test", lambda: None) == EXIT_OK
    assert handle_errors("test", lambda: Positive(value="x")) == EXIT_INVALID_INPUT


# --- commands --------------------------------------------------------------------


def test_compromise_command(tmp_path, capsys):
    out = tmp_path / "compromise.json"
    assert main(["compromise", "example_3_2_1.json", "--weak", "--out", str(out)]) == 0
    document = json.loads(out.read_text())
    assert document["command"] == "compromise"
    assert document["sizes"] == [2, 2]
    probs = document["gibbs"]["probs"]
    np.testing.assert_allclose(probs, [0.1, 0.3, 0.1, 0.5], atol=1e-10)
    assert document["gibbs"]["energy"] == pytest.approx(2.0 / 25.0, abs=1e-10)
    assert document["unconstrained"]["energy"] == pytest.approx(1.0 / 15.0, abs=1e-8)
    assert 1.0 / 15.0 - 1e-8 <= document["weak"]["energy"] <= 2.0 / 25.0 + 1e-8
    assert "gibbs" in capsys.readouterr().out


def test_compromise_missing_input(tmp_path):
    assert main(["compromise", str(tmp_path / "nope.json")]) == 2


def test_fit_then_predict(tmp_path, model_files):
    design, y = model_files
    fit_dir = tmp_path / "fit"
    args = ["fit", str(design), str(y), "--nu", "2.5"]
    args += ["--samples", "120", "--burn-in", "10"]
    assert main(args + ["--mle-starts", "1", "--out", str(fit_dir)]) == 0
    for name in ("draws.csv", "fit.json", "diagnostics.json", "manifest.json"):
        assert (fit_dir / name).is_file()
    fit = json.loads((fit_dir / "fit.json").read_text())
    assert fit["map"] is not None and len(fit["mle"]["theta"]) == 2
    assert pd.read_csv(fit_dir / "draws.csv").shape == (120, 2)

    points = csv_io.write_matrix(
        np.array([[0.2, 0.3], [0.7, 0.9]]), tmp_path / "points.csv"
    )
    out = tmp_path / "predictions.csv"
    predict = ["predict", str(fit_dir / "fit.json"), str(points)]
    assert main(predict + ["--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert frame["method"].tolist() == ["MLE", "MLE", "MAP", "MAP", "FPD", "FPD"]
    assert np.all(frame["lo"] <= frame["location"])
    assert np.all(frame["location"] <= frame["hi"])
    assert (tmp_path / "predict_manifest.json").is_file()

    assert main(predict + ["--methods", "mle,best"]) == 2


def test_fit_rejects_mismatched_observations(tmp_path, model_files):
    design, _ = model_files
    short = csv_io.write_matrix(np.ones((3, 1)), tmp_path / "short.csv", prefix="y")
    argv = ["fit", str(design), str(short), "--nu", "2.5"]
    assert main(argv + ["--out", str(tmp_path / "f")]) == 2


def test_experiment_command(tmp_path, capsys):
    out = tmp_path / "coverage"
    argv = [
        "experiment", "coverage", "--m", "1", "--n", "12", "--n0", "3",
        "--samples", "100",
        "--set", "true_theta=0.5,0.5", "--set", "burn_in=10", "--set", "mle_starts=1",
        "--workers", "1", "--out", str(out),
    ]  # fmt: skip
    assert main(argv) == 0
    summary = pd.read_csv(out / "summary.csv")
    assert summary["method"].tolist() == ["True", "MLE", "MAP", "FPD"]
    assert pd.read_csv(out / "records.csv")["status"].tolist() == ["ok"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["m"] == 1
    assert "FPD" in capsys.readouterr().out


def test_experiment_unknown_key(tmp_path):
    argv = ["experiment", "rmse", "--set", "colour=blue", "--out", str(tmp_path / "x")]
    assert main(argv) == 2


def test_bundled_triple_by_name(tmp_path, capsys):
    out = tmp_path / "triple.json"
    argv = ["compromise", "example_3_2_2.json", "--no-unconstrained"]
    assert main(argv + ["--out", str(out)]) == 0
    energy = json.loads(out.read_text())["gibbs"]["energy"]
    assert energy == pytest.approx(1.0 / 48.0, abs=1e-10)
    assert "energy=0.0208333333333" in capsys.readouterr().out


# --- reruns ----------------------------------------------------------------------


def test_compromise_rerun_is_byte_identical(tmp_path):
    out = tmp_path / "compromise.json"
    assert main(["compromise", "example_3_2_1.json", "--weak", "--out", str(out)]) == 0
    first = out.read_bytes()
    assert main(["compromise", "example_3_2_1.json", "--weak", "--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_fit_predict_rerun_is_byte_identical(tmp_path, model_files):
    design, y = model_files
    fit_dir = tmp_path / "fit"
    points = csv_io.write_matrix(
        np.array([[0.2, 0.3], [0.7, 0.9]]), tmp_path / "points.csv"
    )
    fit_args = ["fit", str(design), str(y), "--nu", "2.5"]
    fit_args += ["--samples", "100", "--burn-in", "10"]
    fit_args += ["--mle-starts", "1", "--seed", "4", "--out", str(fit_dir)]
    predict_args = ["predict", str(fit_dir / "fit.json"), str(points)]
    predict_args += ["--out", str(tmp_path / "p.csv")]
    names = ("draws.csv", "fit.json", "diagnostics.json")

    assert main(fit_args) == 0 and main(predict_args) == 0
    first = {name: (fit_dir / name).read_bytes() for name in names}
    predictions = (tmp_path / "p.csv").read_bytes()
    assert main(fit_args) == 0 and main(predict_args) == 0
    for name in names:
        assert (fit_dir / name).read_bytes() == first[name], name
    assert (tmp_path / "p.csv").read_bytes() == predictions

    assert "wall_time" not in json.loads(first["diagnostics.json"])
    manifest = json.loads((fit_dir / "manifest.json").read_text())
    assert manifest["timings"]["sampling_seconds"] >= 0.0


def test_experiment_rerun_is_byte_identical(tmp_path):
    out = tmp_path / "rmse"
    argv = [
        "experiment", "rmse", "--m", "1", "--n", "10", "--samples", "100",
        "--set", "true_theta=0.5,0.5", "--set", "burn_in=10", "--set", "mle_starts=1",
        "--workers", "1", "--out", str(out),
    ]  # fmt: skip
    assert main(argv) == 0
    names = ("records.csv", "summary.csv")
    first = [(out / name).read_bytes() for name in names]
    assert main(argv) == 0
    assert [(out / name).read_bytes() for name in names] == first


# --- edge cases ------------------------------------------------------------------


def test_fit_with_zero_samples_writes_a_header_only_draws_file(tmp_path, model_files):
    design, y = model_files
    fit_dir = tmp_path / "fit"
    argv = ["fit", str(design), str(y), "--nu", "2.5", "--samples", "0"]
    argv += ["--burn-in", "5"]
    assert main(argv + ["--mle-starts", "1", "--out", str(fit_dir)]) == 0
    assert (fit_dir / "draws.csv").read_text() == "mu_1,mu_2\n"
    assert json.loads((fit_dir / "fit.json").read_text())["map"] is None
    assert not (fit_dir / "diagnostics.json").exists()


@pytest.mark.parametrize("flag", ["--paper-scale", "--full-scale"])
def test_paper_scale_selects_the_full_profile(flag, tmp_path, monkeypatch):
    assert build_parser().parse_args(["experiment", "coverage", flag]).full_scale
    seen = []

    def stop(config, workers):
        seen.append(config)
        raise ReplicationAbort("stopped before running")

    monkeypatch.setattr(experiment_command, "run_experiment", stop)
    assert main(["experiment", "coverage", flag, "--out", str(tmp_path / "x")]) == 5
    assert seen[0].m == 500 and seen[0].sampler.n_samples == 1000
