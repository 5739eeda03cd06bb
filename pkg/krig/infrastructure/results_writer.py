"""Result files: JSON documents, experiment tables and the run manifest."""

import logging
import os
import tempfile
from pathlib import Path
from typing import List, Union

import pandas as pd
from pydantic import BaseModel

from krig.domain.entities.experiment import ExperimentResult
from krig.infrastructure.csv_io import write_frame
from krig.schemas import RunManifest

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

RECORDS_FILE = "records.csv"
SUMMARY_FILE = "summary.csv"
MANIFEST_FILE = "manifest.json"


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_document(document: BaseModel, path: PathLike) -> Path:
    """Write a pydantic document as indented JSON."""
    path = _atomic_write(Path(path), document.model_dump_json(indent=2) + "\n")
    logger.debug(f"📋 Wrote {type(document).__name__} to {path}")
    return path


def write_experiment(result: ExperimentResult, out_dir: PathLike) -> List[Path]:
    """records.csv (one row per replication) and summary.csv (one row per method)."""
    out_dir = Path(out_dir)
    records = write_frame(pd.DataFrame(result.records), out_dir / RECORDS_FILE)
    summary = write_frame(pd.DataFrame(result.summary), out_dir / SUMMARY_FILE)
    return [records, summary]


def write_manifest(
    manifest: RunManifest, out_dir: PathLike, name: str = MANIFEST_FILE
) -> Path:
    """Written last, atomically, so its presence marks a completed run."""
    return write_document(manifest, Path(out_dir) / name)
