"""``krig predict``: prediction intervals from a fit directory."""

import argparse
import logging
from pathlib import Path
from typing import Iterator, List, Tuple

import numpy as np
import pandas as pd

from krig.cli.logging import command_config, log_command
from krig.domain.entities.design import DesignSet
from krig.domain.entities.kriging_model import KrigingModel
from krig.domain.entities.matern import Family, LengthVector, MaternSpec
from krig.domain.entities.predictive import PredictiveDist, PredictiveKind
from krig.domain.entities.sampler import PosteriorSample, SamplerConfig
from krig.domain.services import inference
from krig.errors import DomainError, InputFormatError
from krig.infrastructure.csv_io import read_draws, read_points, write_frame
from krig.infrastructure.results_writer import write_manifest
from krig.schemas import FitOutput

logger = logging.getLogger(__name__)

METHODS = ("mle", "map", "fpd")
PREDICT_MANIFEST = "predict_manifest.json"


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("predict", help="Prediction intervals at new points")
    parser.add_argument("fit", help="fit.json written by `krig fit`")
    parser.add_argument("points", help="CSV of prediction points (header row)")
    parser.add_argument("--level", type=float, default=0.95)
    parser.add_argument(
        "--methods",
        default=",".join(METHODS),
        help="Comma-separated subset of mle,map,fpd",
    )
    parser.add_argument(
        "--out", help="Output CSV (default: predictions.csv next to fit.json)"
    )
    parser.set_defaults(handler=cmd_predict)


def load_fit(path: Path) -> FitOutput:
    try:
        return FitOutput.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputFormatError(f"cannot read fit file {path}: {exc}") from exc
    except ValueError as exc:
        raise InputFormatError(f"malformed fit file {path}: {exc}") from exc


def _model(fit: FitOutput) -> KrigingModel:
    design = DesignSet(points=np.asarray(fit.design, dtype=float))
    spec = MaternSpec(family=Family(fit.family), nu=fit.nu, r=design.r)
    return KrigingModel(design=design, spec=spec, y=fit.y)


def _methods(text: str) -> List[str]:
    methods = [m.strip().lower() for m in text.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise DomainError(
            f"unknown prediction method(s) {unknown}; choose from {', '.join(METHODS)}"
        )
    return methods


def _plugin_rows(
    model: KrigingModel, theta: List[float], x0: np.ndarray, level: float
) -> Iterator[Tuple[float, float, float]]:
    lengths = LengthVector.from_theta(theta)
    locations, scales = inference.plugin_components(model, lengths, x0)
    for loc, scale in zip(locations, scales):
        dist = PredictiveDist(
            kind=PredictiveKind.PLUGIN,
            locations=np.array([loc]),
            scales=np.array([scale]),
            dof=model.n,
        )
        yield (float(loc), *inference.prediction_interval(dist, level))


def _fpd_rows(
    model: KrigingModel, draws: np.ndarray, x0: np.ndarray, level: float
) -> Iterator[Tuple[float, float, float]]:
    config = SamplerConfig(n_samples=draws.shape[0])
    sample = PosteriorSample(draws=draws, config=config, acceptance=())
    locations, scales = inference.fpd_components(model, sample, x0)
    for j in range(x0.shape[0]):
        dist = PredictiveDist(
            kind=PredictiveKind.MIXTURE,
            locations=locations[:, j],
            scales=scales[:, j],
            dof=model.n,
        )
        location = float(np.mean(locations[:, j]))
        yield (location, *inference.prediction_interval(dist, level))


def cmd_predict(args: argparse.Namespace) -> None:
    fit_path = Path(args.fit)
    out = Path(args.out) if args.out else fit_path.parent / "predictions.csv"
    with log_command("predict", f"{args.fit} {args.points}") as timer:
        methods = _methods(args.methods)
        fit = load_fit(fit_path)
        model = _model(fit)
        x0 = read_points(args.points)
        if x0.shape[1] != model.r:
            raise InputFormatError(
                f"{args.points} has {x0.shape[1]} columns, the fit has r={model.r}"
            )
        rows = []
        for method in methods:
            if method == "mle":
                produced = _plugin_rows(model, fit.mle.theta, x0, args.level)
            elif method == "map":
                if fit.map is None:
                    raise DomainError("fit has no MAP estimate (fewer than 100 draws)")
                produced = _plugin_rows(model, fit.map.theta, x0, args.level)
            else:
                draws = read_draws(fit_path.parent / fit.draws_path)
                if draws.shape[0] == 0:
                    raise DomainError("fit has no posterior draws")
                produced = _fpd_rows(model, draws, x0, args.level)
            for point, (loc, lo, hi) in zip(x0, produced):
                row = {f"x{j + 1}": float(v) for j, v in enumerate(point)}
                row.update(method=method.upper(), location=loc, lo=lo, hi=hi)
                rows.append(row)
        frame = pd.DataFrame(rows)
        write_frame(frame, out)
        print(frame.to_string(index=False))
        manifest = timer.manifest(command_config(args), [str(out)])
        write_manifest(manifest, out.parent, PREDICT_MANIFEST)
