"""``krig compromise``: compromises of a finite conditional system."""

import argparse
import logging
from pathlib import Path

from krig.cli.logging import log_command
from krig.config import settings
from krig.domain.entities.kernel_system import FiniteKernelSystem, JointTable
from krig.domain.services import compromise
from krig.errors import InputFormatError
from krig.infrastructure.kernel_system_loader import bundled, load_kernel_system
from krig.infrastructure.results_writer import write_document
from krig.schemas import CompromiseOutput, JointSummary

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "compromise",
        help="Gibbs compromise and energy minimizers of a finite conditional system",
    )
    parser.add_argument(
        "input", help="JSON kernel system (a bundled file name also works)"
    )
    parser.add_argument(
        "--no-unconstrained",
        dest="unconstrained",
        action="store_false",
        help="Skip the unconstrained energy minimizer",
    )
    parser.add_argument(
        "--weak", action="store_true", help="Also compute the optimal weak compromise"
    )
    parser.add_argument(
        "--out", help="Output JSON path (default: OUTPUT_DIR/compromise.json)"
    )
    parser.set_defaults(handler=cmd_compromise)


def resolve_input(name: str) -> Path:
    path = Path(name)
    if path.is_file():
        return path
    candidate = bundled(path.name)
    if candidate.is_file():
        logger.info(f"📋 Using bundled {candidate.name}")
        return candidate
    raise InputFormatError(f"input file not found: {name}")


def _summary(joint: JointTable, system: FiniteKernelSystem) -> JointSummary:
    return JointSummary(
        probs=[float(v) for v in joint.probs.ravel()],
        energy=compromise.energy(joint, system),
        is_compromise=compromise.is_compromise(joint, system),
    )


def _print(label: str, summary: JointSummary) -> None:
    probs = ", ".join(f"{p:.6g}" for p in summary.probs)
    print(f"{label:<14} energy={summary.energy:.12g}  probs=({probs})")


def cmd_compromise(args: argparse.Namespace) -> None:
    path = resolve_input(args.input)
    with log_command("compromise", str(path)):
        system = load_kernel_system(path)
        output = CompromiseOutput(
            sizes=list(system.sizes),
            gibbs=_summary(compromise.gibbs_compromise(system), system),
        )
        _print("gibbs", output.gibbs)
        if args.unconstrained:
            unconstrained = compromise.minimize_energy_unconstrained(system)
            output.unconstrained = _summary(unconstrained, system)
            _print("unconstrained", output.unconstrained)
        if args.weak:
            output.weak = _summary(compromise.minimize_energy_weak(system), system)
            _print("weak", output.weak)
        out_path = args.out or Path(settings.OUTPUT_DIR) / "compromise.json"
        out = write_document(output, out_path)
        print(f"wrote {out}")
