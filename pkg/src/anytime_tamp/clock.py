"""Clocks for resource limits and anytime profiles.

``WorkClock`` counts primitive operations (RRT iterations, collision
queries, Bellman backups, tree nodes) and reports them as nominal seconds,
so profiles are reproducible byte for byte.  ``WallClock`` reports real
elapsed time.
"""

from __future__ import annotations

import time

#: nominal duration of one work unit, in seconds
WORK_UNIT_SECONDS = 1e-6


class WorkClock:
    kind = "work"

    def __init__(self):
        self.units = 0

    def tick(self, n: int = 1) -> None:
        self.units += n

    def seconds(self) -> float:
        return self.units * WORK_UNIT_SECONDS


class WallClock:
    kind = "wall"

    def __init__(self):
        self._start = time.perf_counter()
        self.units = 0

    def tick(self, n: int = 1) -> None:
        self.units += n

    def seconds(self) -> float:
        return time.perf_counter() - self._start


def make_clock(kind: str):
    if kind == "work":
        return WorkClock()
    if kind == "wall":
        return WallClock()
    raise ValueError(f"unknown clock {kind!r}")
