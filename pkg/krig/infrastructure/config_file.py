"""
Flat ``key=value`` experiment configuration files.

Files are read with python-dotenv, so comments and quoting follow .env conventions.
Values resolve in order: profile defaults, then the file, then ``--set`` overrides.

Keys: kind, true_theta (comma list), true_sigma2, n, n0, m, design_kind, family, nu,
n_samples, burn_in, thin, proposal_sd, inner_metropolis_steps, update, master_seed,
dimension (Ackley), mle_starts, level, max_failure_rate.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from dotenv import dotenv_values
from pydantic import ValidationError

from krig.domain.entities.experiment import ExperimentConfig, ExperimentKind
from krig.domain.entities.matern import MaternSpec
from krig.domain.entities.sampler import SamplerConfig
from krig.errors import InputFormatError

logger = logging.getLogger(__name__)

SAMPLER_KEYS = {
    "n_samples",
    "burn_in",
    "thin",
    "proposal_sd",
    "inner_metropolis_steps",
    "update",
}
SPEC_KEYS = {"family", "nu"}
TOP_KEYS = {
    "kind",
    "true_theta",
    "true_sigma2",
    "n",
    "n0",
    "m",
    "design_kind",
    "master_seed",
    "mle_starts",
    "level",
    "max_failure_rate",
}
KNOWN_KEYS = SAMPLER_KEYS | SPEC_KEYS | TOP_KEYS | {"dimension"}

DESK_PROFILE: Dict[str, str] = {
    "m": "50",
    "n_samples": "400",
    "nu": "2.5",
    "family": "geometric",
}
FULL_PROFILE: Dict[str, str] = {"m": "500", "n_samples": "1000"}
ACKLEY_DESK: Dict[str, str] = {
    "dimension": "3",
    "n": "40",
    "n0": "200",
    "design_kind": "lhs",
    "n_samples": "300",
}
ACKLEY_FULL: Dict[str, str] = {"dimension": "10", "n": "100", "n0": "1000"}


def parse_overrides(pairs: Iterable[str]) -> Dict[str, str]:
    """``["n=20", "nu=1.5"]`` → ``{"n": "20", "nu": "1.5"}``."""
    out: Dict[str, str] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise InputFormatError(f"override {pair!r} is not of the form key=value")
        out[key.strip()] = value.strip()
    return out


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise InputFormatError(f"config file not found: {path}")
    values = {k: v for k, v in dotenv_values(path).items() if v is not None}
    logger.debug(f"📋 Read {len(values)} keys from {path}")
    return values


def _profile(kind: ExperimentKind, full_scale: bool) -> Dict[str, str]:
    values = dict(DESK_PROFILE)
    if kind is ExperimentKind.ACKLEY:
        values.update(ACKLEY_DESK)
    if full_scale:
        values.update(FULL_PROFILE)
        if kind is ExperimentKind.ACKLEY:
            values.update(ACKLEY_FULL)
    return values


def build_experiment_config(
    kind: ExperimentKind,
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, str]] = None,
    full_scale: bool = False,
) -> ExperimentConfig:
    """
    Resolve an ExperimentConfig from profile, file and overrides.

    Raises:
        InputFormatError: On an unknown key or an invalid value
    """
    raw = _profile(kind, full_scale)
    if path is not None:
        raw.update(read_config_file(path))
    raw.update(overrides or {})
    raw["kind"] = kind.value
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise InputFormatError(f"unknown configuration key(s): {', '.join(unknown)}")

    top: Dict[str, Any] = {k: raw[k] for k in TOP_KEYS if k in raw}
    if "true_theta" in top:
        try:
            top["true_theta"] = tuple(float(t) for t in top["true_theta"].split(","))
        except ValueError as exc:
            raise InputFormatError(
                f"true_theta must be a comma-separated list: {raw['true_theta']!r}"
            ) from exc
    if "dimension" in raw and "true_theta" not in top:
        try:
            top["true_theta"] = (1.0,) * int(raw["dimension"])
        except ValueError as exc:
            raise InputFormatError(
                f"dimension must be an integer: {raw['dimension']!r}"
            ) from exc
    try:
        r = len(top.get("true_theta", (0.5, 0.5, 0.5)))
        top["spec"] = MaternSpec(r=r, **{k: raw[k] for k in SPEC_KEYS if k in raw})
        top["sampler"] = SamplerConfig(**{k: raw[k] for k in SAMPLER_KEYS if k in raw})
        return ExperimentConfig(**top)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise InputFormatError(
            f"invalid configuration value for {err['loc']}: {err['msg']}"
        ) from exc
