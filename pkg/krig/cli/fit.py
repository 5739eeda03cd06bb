"""``krig fit``: posterior sample, MLE and MAP for a design and its observations."""

import argparse
import logging
from pathlib import Path
from typing import Optional

from krig.cli.logging import command_config, log_command
from krig.config import settings
from krig.domain.entities.estimate import EstimateReport
from krig.domain.entities.kriging_model import KrigingModel
from krig.domain.entities.matern import Family, MaternSpec, Parametrization
from krig.domain.entities.sampler import SamplerConfig, UpdateKind
from krig.domain.services import inference, pigs
from krig.errors import InputFormatError
from krig.infrastructure.csv_io import read_design, read_observations, write_draws
from krig.infrastructure.results_writer import write_document, write_manifest
from krig.schemas import EstimateSummary, FitOutput

logger = logging.getLogger(__name__)

DRAWS_FILE = "draws.csv"
FIT_FILE = "fit.json"
DIAGNOSTICS_FILE = "diagnostics.json"


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "fit", help="Sample the Gibbs reference posterior of the lengths"
    )
    parser.add_argument("design", help="Design CSV (header row, one point per row)")
    parser.add_argument("y", help="Observations CSV (header row, one column)")
    parser.add_argument("--nu", type=float, required=True, help="Matérn smoothness")
    parser.add_argument(
        "--family", choices=[f.value for f in Family], default=Family.GEOMETRIC.value
    )
    parser.add_argument("--samples", type=int, default=1000, help="Retained draws")
    parser.add_argument("--burn-in", type=int, default=100)
    parser.add_argument("--thin", type=int, default=1)
    parser.add_argument("--proposal-sd", type=float, default=0.4)
    parser.add_argument(
        "--update",
        choices=[u.value for u in UpdateKind],
        default=UpdateKind.METROPOLIS.value,
    )
    parser.add_argument(
        "--parametrization",
        choices=[p.value for p in Parametrization],
        default=Parametrization.MU.value,
        help="Working coordinate of the random-walk proposals",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--chains", type=int, default=1, help="Independent chains to concatenate"
    )
    parser.add_argument("--mle-starts", type=int, default=5)
    parser.add_argument(
        "--workers", type=int, default=None, help="Worker processes for chains"
    )
    parser.add_argument("--out", help="Output directory (default: OUTPUT_DIR/fit)")
    parser.set_defaults(handler=cmd_fit)


def _summary(report: EstimateReport) -> EstimateSummary:
    return EstimateSummary(
        theta=[float(v) for v in report.estimate.theta],
        mu=[float(v) for v in report.estimate.mu],
        objective=report.objective,
        iterations=report.iterations,
        bandwidth=list(report.bandwidth) if report.bandwidth is not None else None,
    )


def _print_estimate(label: str, summary: Optional[EstimateSummary]) -> None:
    if summary is None:
        print(f"{label:<4} skipped")
        return
    theta = ", ".join(f"{t:.6g}" for t in summary.theta)
    print(f"{label:<4} theta=({theta})  objective={summary.objective:.8g}")


def _build_model(args: argparse.Namespace) -> KrigingModel:
    design = read_design(args.design)
    y = read_observations(args.y)
    if y.shape[0] != design.n:
        raise InputFormatError(
            f"{args.y} has {y.shape[0]} observations, design has {design.n} points"
        )
    spec = MaternSpec(family=Family(args.family), nu=args.nu, r=design.r)
    return KrigingModel(design=design, spec=spec, y=y)


def cmd_fit(args: argparse.Namespace) -> None:
    out_dir = Path(args.out or Path(settings.OUTPUT_DIR) / "fit")
    with log_command("fit", f"{args.design} {args.y}") as timer:
        model = _build_model(args)
        config = SamplerConfig(
            n_samples=args.samples,
            burn_in=args.burn_in,
            thin=args.thin,
            proposal_sd=args.proposal_sd,
            seed=args.seed,
            update=UpdateKind(args.update),
            parametrization=Parametrization(args.parametrization),
        )
        if args.chains > 1:
            sample = pigs.run_chains(model, config, args.chains, args.workers)
        else:
            sample = pigs.run(model, config)
        outputs = [write_draws(sample.draws, out_dir / DRAWS_FILE)]

        mle = _summary(inference.mle(model, starts=args.mle_starts, seed=args.seed))
        map_summary = None
        if sample.size >= inference.MIN_MAP_DRAWS:
            map_summary = _summary(inference.map_estimate(model, sample))
        else:
            logger.warning(
                f"⚠️ MAP skipped: {sample.size} draws (need {inference.MIN_MAP_DRAWS})"
            )

        if sample.size >= pigs.MIN_DIAGNOSTIC_DRAWS:
            bandwidth = map_summary.bandwidth if map_summary else None
            report = pigs.diagnostics(sample, bandwidth)
            outputs.append(write_document(report, out_dir / DIAGNOSTICS_FILE))
        else:
            logger.warning(f"⚠️ Diagnostics skipped: {sample.size} draws")

        fit = FitOutput(
            design=[[float(v) for v in row] for row in model.design.points],
            y=[float(v) for v in model.y],
            family=model.spec.family.value,
            nu=model.spec.nu,
            draws_path=DRAWS_FILE,
            mle=mle,
            map=map_summary,
        )
        outputs.append(write_document(fit, out_dir / FIT_FILE))

        _print_estimate("MLE", mle)
        _print_estimate("MAP", map_summary)
        print("acceptance " + ", ".join(f"{a:.3f}" for a in sample.acceptance))
        timings = {"sampling_seconds": sample.wall_time}
        paths = [str(p) for p in outputs]
        manifest = timer.manifest(command_config(args), paths, timings)
        write_manifest(manifest, out_dir)

