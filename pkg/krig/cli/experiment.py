"""``krig experiment``: replication studies writing records, summary and manifest."""

import argparse
import logging
from pathlib import Path

import pandas as pd

from krig.cli.logging import log_command
from krig.config import settings
from krig.domain.entities.experiment import ExperimentKind
from krig.domain.services.experiments import run_experiment
from krig.infrastructure.config_file import build_experiment_config, parse_overrides
from krig.infrastructure.results_writer import write_experiment, write_manifest

logger = logging.getLogger(__name__)

# dedicated flags and the config keys they set
FLAG_KEYS = {
    "m": "m",
    "n": "n",
    "n0": "n0",
    "samples": "n_samples",
    "seed": "master_seed",
}


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("experiment", help="Run a replication study")
    parser.add_argument("kind", choices=[k.value for k in ExperimentKind])
    parser.add_argument("--config", help="Flat key=value configuration file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one configuration key (repeatable)",
    )
    parser.add_argument("--m", type=int, help="Replications")
    parser.add_argument("--n", type=int, help="Design size")
    parser.add_argument("--n0", type=int, help="Test points per replication")
    parser.add_argument("--samples", type=int, help="Posterior draws per replication")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Worker processes (default: KRIG_WORKERS or all cores)",
    )
    parser.add_argument(
        "--paper-scale",
        "--full-scale",
        dest="full_scale",
        action="store_true",
        help="Full-size profile (m=500, 1000 draws)",
    )
    parser.add_argument("--out", help="Output directory (default: OUTPUT_DIR/<kind>)")
    parser.set_defaults(handler=cmd_experiment)


def cmd_experiment(args: argparse.Namespace) -> None:
    kind = ExperimentKind(args.kind)
    out_dir = Path(args.out or Path(settings.OUTPUT_DIR) / kind.value)
    overrides = parse_overrides(args.overrides)
    for flag, key in FLAG_KEYS.items():
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = str(value)
    config = build_experiment_config(kind, args.config, overrides, args.full_scale)
    with log_command("experiment", kind.value) as timer:
        result = run_experiment(config, args.workers)
        outputs = write_experiment(result, out_dir)
        print(pd.DataFrame(result.summary).to_string(index=False))
        if result.failures:
            print(f"{result.failures} replication(s) failed; see {outputs[0]}")
        manifest = timer.manifest(
            config.model_dump(mode="json"), [str(p) for p in outputs]
        )
        write_manifest(manifest, out_dir)
