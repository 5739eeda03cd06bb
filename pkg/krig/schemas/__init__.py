"""
JSON documents written by the krig command line.

These Pydantic models fix the layout of every machine-readable output file.
"""

from .outputs import (
    CompromiseOutput,
    DiagnosticsReport,
    EstimateSummary,
    FitOutput,
    JointSummary,
    RunManifest,
)

__all__ = [
    "CompromiseOutput",
    "DiagnosticsReport",
    "EstimateSummary",
    "FitOutput",
    "JointSummary",
    "RunManifest",
]
