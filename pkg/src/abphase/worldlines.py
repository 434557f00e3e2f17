"""Piecewise-linear particle worldlines and two-path interferometers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import OutOfRangeTimeError
from .sources import PotentialCage, ShieldedCage

ENDPOINT_TOL = 1e-12


class Worldline:
    """x(t) as linear interpolation between strictly time-ordered knots."""

    def __init__(self, knots: Sequence[Sequence[float]]):
        arr = np.array(knots, dtype=float).reshape(-1, 4)
        if arr.shape[0] < 2:
            raise ValueError("worldline needs at least two knots")
        if not np.all(np.isfinite(arr)):
            raise ValueError("worldline knots must be finite")
        if np.any(np.diff(arr[:, 3]) <= 0.0):
            raise ValueError("worldline knot times must be strictly increasing")
        self.knots = arr
        self.knots.setflags(write=False)

    @property
    def times(self) -> np.ndarray:
        return self.knots[:, 3]

    @property
    def t_start(self) -> float:
        return float(self.knots[0, 3])

    @property
    def t_end(self) -> float:
        return float(self.knots[-1, 3])

    @property
    def start(self) -> np.ndarray:
        return self.knots[0, :3]

    @property
    def end(self) -> np.ndarray:
        return self.knots[-1, :3]

    def spatial_knots(self) -> np.ndarray:
        return self.knots[:, :3]

    def _check_range(self, t: np.ndarray):
        if np.any(t < self.t_start - 1e-15) or np.any(t > self.t_end + 1e-15):
            raise OutOfRangeTimeError(
                f"time outside worldline range [{self.t_start}, {self.t_end}]"
            )

    def positions(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        self._check_range(t)
        out = np.empty((len(t), 3))
        for axis in range(3):
            out[:, axis] = np.interp(t, self.times, self.knots[:, axis])
        return out

    def position(self, t: float) -> np.ndarray:
        return self.positions(t)[0]

    def _segment_index(self, t: float) -> int:
        # right-hand convention at knots; final time maps to the last segment
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(idx, 0), len(self.times) - 2)

    def velocity(self, t: float) -> np.ndarray:
        self._check_range(np.asarray([t]))
        i = self._segment_index(t)
        dt = self.times[i + 1] - self.times[i]
        return (self.knots[i + 1, :3] - self.knots[i, :3]) / dt

    def segments(self):
        """Yield (t0, t1, x0, v) per linear segment."""
        for i in range(len(self.times) - 1):
            t0 = float(self.times[i])
            t1 = float(self.times[i + 1])
            x0 = self.knots[i, :3]
            v = (self.knots[i + 1, :3] - x0) / (t1 - t0)
            yield t0, t1, x0, v

    def dwell_window(self, region: Union[ShieldedCage, PotentialCage]) -> Optional[tuple[float, float]]:
        """Longest closed time interval spent inside the region, or None.

        Inside means within the cage proper: radius for a shielded cage,
        inner_radius for a potential cage.  Boundary grazing yields a
        degenerate interval.
        """
        center = np.asarray(region.center, dtype=float)
        radius = region.radius if isinstance(region, ShieldedCage) else region.inner_radius
        intervals: list[list[float]] = []

        def add(lo: float, hi: float):
            if intervals and lo <= intervals[-1][1] + 1e-12:
                intervals[-1][1] = max(intervals[-1][1], hi)
            else:
                intervals.append([lo, hi])

        for t0, t1, x0, v in self.segments():
            rel = x0 - center
            a = float(v @ v)
            b = 2.0 * float(rel @ v)
            c = float(rel @ rel) - radius * radius
            if a == 0.0:
                if c <= 0.0:
                    add(t0, t1)
                continue
            disc = b * b - 4.0 * a * c
            if disc < 0.0:
                continue
            sq = math.sqrt(disc)
            lo = t0 + (-b - sq) / (2.0 * a)
            hi = t0 + (-b + sq) / (2.0 * a)
            lo = max(lo, t0)
            hi = min(hi, t1)
            if hi >= lo:
                add(lo, hi)
        if not intervals:
            return None
        best = max(intervals, key=lambda iv: iv[1] - iv[0])
        return float(best[0]), float(best[1])


@dataclass(frozen=True)
class Interferometer:
    """Two worldlines sharing start and end events on a common clock."""

    path_a: Worldline
    path_b: Worldline

    def __post_init__(self):
        a, b = self.path_a, self.path_b
        if abs(a.t_start - b.t_start) > ENDPOINT_TOL or abs(a.t_end - b.t_end) > ENDPOINT_TOL:
            raise ValueError("interferometer arms must cover the same time interval")
        if float(np.max(np.abs(a.start - b.start))) > ENDPOINT_TOL:
            raise ValueError("interferometer arms must share the start position")
        if float(np.max(np.abs(a.end - b.end))) > ENDPOINT_TOL:
            raise ValueError("interferometer arms must share the end position")

    @property
    def t_start(self) -> float:
        return self.path_a.t_start

    @property
    def t_end(self) -> float:
        return self.path_a.t_end

    @property
    def start(self) -> np.ndarray:
        return self.path_a.start

    @property
    def end(self) -> np.ndarray:
        return self.path_a.end

    def knot_times(self) -> np.ndarray:
        return np.unique(np.concatenate([self.path_a.times, self.path_b.times]))

    def closed_spatial_loop(self) -> np.ndarray:
        """Arm a forward then arm b reversed; first point equals last."""
        a = self.path_a.spatial_knots()
        b = self.path_b.spatial_knots()[::-1]
        return np.vstack([a, b[1:]])
