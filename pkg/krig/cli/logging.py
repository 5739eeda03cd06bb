"""Start/finish/failure log lines and wall-clock timing for commands."""

import argparse
import logging
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, List, Optional

from krig.schemas import RunManifest

logger = logging.getLogger(__name__)


class CommandTimer:
    """Timing of one command run, read by the manifest writer."""

    def __init__(self, command: str):
        self.command = command
        self.started_at = datetime.now(timezone.utc)
        self._start = time.perf_counter()
        self.finished_at: Optional[datetime] = None

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self._start

    def manifest(
        self,
        config: Dict[str, Any],
        outputs: List[str],
        timings: Optional[Dict[str, float]] = None,
    ) -> RunManifest:
        return RunManifest(
            command=self.command,
            config=config,
            started_at=self.started_at,
            finished_at=datetime.now(timezone.utc),
            elapsed_seconds=self.elapsed,
            timings=timings or {},
            outputs=outputs,
        )

    def stop(self) -> None:
        self.finished_at = datetime.now(timezone.utc)


@contextmanager
def log_command(command: str, detail: str = "") -> Iterator[CommandTimer]:
    """Log entry and exit of a command; exceptions are logged and re-raised."""
    timer = CommandTimer(command)
    logger.info(f"📥 {command} {detail}".rstrip())
    try:
        yield timer
    except Exception as exc:
        logger.error(f"💥 {command} - ERROR - {timer.elapsed:.3f}s - {exc}")
        raise
    timer.stop()
    logger.info(f"📤 {command} - done - {timer.elapsed:.3f}s")


def command_config(args: argparse.Namespace) -> Dict[str, Any]:
    """Parsed arguments as a JSON-ready dict, handler dropped."""
    return {k: v for k, v in vars(args).items() if k != "handler"}
