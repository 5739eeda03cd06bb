"""
Output document models.

Data documents (compromise, fit) hold only deterministic content so reruns with the same
inputs are byte-identical; wall-clock data lives in the run manifest only.
"""

from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from krig import __version__


class KrigOutput(BaseModel):
    """Base model for documents written by a command."""

    command: str = Field(..., description="Command that produced the document")
    version: str = Field(__version__, description="Library version")


class JointSummary(BaseModel):
    """A joint table flattened in row-major order with its misfit energy."""

    probs: List[float] = Field(..., description="Row-major probabilities")
    energy: float = Field(..., description="E_λ under the counting measure")
    is_compromise: bool = Field(..., description="Whether the table is a compromise")


class CompromiseOutput(KrigOutput):
    """Result of the ``compromise`` command."""

    command: str = "compromise"
    sizes: List[int] = Field(..., description="Axis cardinalities")
    gibbs: JointSummary = Field(..., description="Gibbs compromise")
    unconstrained: Optional[JointSummary] = Field(
        None, description="Unconstrained E_λ minimizer"
    )
    weak: Optional[JointSummary] = Field(None, description="Optimal weak compromise")


class EstimateSummary(BaseModel):
    """A length estimate as written to disk."""

    theta: List[float] = Field(..., description="Correlation lengths")
    mu: List[float] = Field(..., description="Inverse correlation lengths")
    objective: float = Field(..., description="Objective value at the optimum")
    iterations: int = Field(0, description="Optimizer iterations")
    bandwidth: Optional[List[float]] = Field(
        None, description="Per-axis KDE bandwidth (MAP only)"
    )


class FitOutput(KrigOutput):
    """Everything ``predict`` needs to rebuild the fitted model."""

    command: str = "fit"
    design: List[List[float]] = Field(..., description="Design points, one per row")
    y: List[float] = Field(..., description="Observations")
    family: str = Field(..., description="Matérn family")
    nu: float = Field(..., description="Smoothness")
    draws_path: str = Field(..., description="CSV of posterior draws (mu_1..mu_r)")
    mle: EstimateSummary
    map: Optional[EstimateSummary] = None


class DiagnosticsReport(BaseModel):
    """Heuristic chain diagnostics."""

    n_draws: int = Field(..., description="Number of retained draws")
    acceptance: List[float] = Field(..., description="Per-axis acceptance rate")
    ess: List[float] = Field(..., description="Per-axis effective sample size")
    mean: List[float] = Field(..., description="Per-axis mean of log mu")
    sd: List[float] = Field(..., description="Per-axis sd of log mu")
    quantiles: Dict[str, List[float]] = Field(
        ..., description="Per-axis quantiles of mu keyed by level"
    )
    map_bandwidth: Optional[List[float]] = Field(
        None, description="Per-axis KDE bandwidth used for MAP"
    )


class RunManifest(BaseModel):
    """Config echo and timing of one command run; written last."""

    command: str = Field(..., description="Command name")
    config: Dict[str, Any] = Field(..., description="Resolved configuration")
    started_at: datetime = Field(..., description="Start time")
    finished_at: datetime = Field(..., description="End time")
    elapsed_seconds: float = Field(..., description="Wall time")
    timings: Dict[str, float] = Field(
        default_factory=dict, description="Wall time of named stages in seconds"
    )
    outputs: List[str] = Field(default_factory=list, description="Paths written")
    version: str = Field(__version__, description="Library version")
