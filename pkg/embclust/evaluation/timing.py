"""
timing.py: wall-clock stage timers on a monotonic clock.
"""
import logging
import time
from contextlib import contextmanager
from typing import Dict, Iterator, Optional

log = logging.getLogger(__name__)


class StageTiming(object):
    def __init__(self, stage: str):
        self.stage = stage
        self.start = time.perf_counter()
        self.end: Optional[float] = None

    @property
    def seconds(self) -> float:
        end = self.end if self.end is not None else time.perf_counter()
        return end - self.start

    @property
    def minutes(self) -> float:
        return self.seconds / 60.0


@contextmanager
def stage_timer(stage: str) -> Iterator[StageTiming]:
    timing = StageTiming(stage)
    try:
        yield timing
    finally:
        timing.end = time.perf_counter()
        log.debug(f"{stage}: {timing.seconds:.3f} s")


class StageTimer(object):
    """Accumulates stage durations for one run."""

    def __init__(self):
        self.records: Dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[StageTiming]:
        try:
            with stage_timer(name) as timing:
                yield timing
        finally:
            self.records[name] = self.records.get(name, 0.0) + timing.seconds

    def seconds(self) -> Dict[str, float]:
        return dict(self.records)

    def minutes(self) -> Dict[str, float]:
        return {name: value / 60.0 for name, value in self.records.items()}
