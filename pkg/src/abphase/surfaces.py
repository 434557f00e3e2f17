"""Spacetime surfaces bounded by the two interferometer arms.

A surface is a time-indexed family of spatial curves C_t joining the arm
positions x_a(t) and x_b(t).  The Direct strategy uses the straight chord;
ViaWaypoints routes the curve through fixed waypoints (for example around a
solenoid) during a hold window and blends continuously from/to the chord
outside it, so the end curves stay degenerate and the family remains a true
deformation of one arm into the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .worldlines import Interferometer

BOUNDARY_TOL = 1e-12
WINDING_INT_TOL = 1e-6
AXIS_CLEARANCE = 1e-9


@dataclass(frozen=True)
class Direct:
    """Straight spatial segment from x_a(t) to x_b(t) at every time."""


@dataclass(frozen=True)
class ViaWaypoints:
    """Curves routed through fixed xy waypoints while the hold window is on.

    hold = (t1, t2): the full waypoint route is used for t1 <= t <= t2 and
    blended linearly with the direct chord outside, reaching the pure chord
    at the interferometer endpoints.  The crossing of any enclosed source
    region happens during the blend ramps, so place the hold window over the
    times whose enclosed flux the surface should feel at its boundary.
    """

    waypoints: tuple
    hold: Optional[tuple[float, float]] = None

    def __post_init__(self):
        wp = tuple((float(x), float(y)) for x, y in self.waypoints)
        object.__setattr__(self, "waypoints", wp)
        if not wp:
            raise ValueError("ViaWaypoints needs at least one waypoint")


DeformationStrategy = Union[Direct, ViaWaypoints]


def _blend_factor(strategy: ViaWaypoints, t: float, t_start: float, t_end: float) -> float:
    if strategy.hold is None:
        h1 = t_start + (t_end - t_start) / 3.0
        h2 = t_end - (t_end - t_start) / 3.0
    else:
        h1, h2 = strategy.hold
    if t <= t_start or t >= t_end:
        return 0.0
    if h1 <= t <= h2:
        return 1.0
    if t < h1:
        return (t - t_start) / (h1 - t_start)
    return (t_end - t) / (t_end - h2)


def _polyline_arc_samples(points: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Sample a polyline at arc-length fractions s in [0, 1]."""
    deltas = np.diff(points, axis=0)
    seg_len = np.sqrt(np.sum(deltas * deltas, axis=1))
    total = float(np.sum(seg_len))
    if total == 0.0:
        return np.broadcast_to(points[0], (len(s), 3)).copy()
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    target = s * total
    idx = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, len(seg_len) - 1)
    safe = np.where(seg_len[idx] > 0.0, seg_len[idx], 1.0)
    frac = (target - cum[idx]) / safe
    out = points[idx] + frac[:, None] * deltas[idx]
    out[0] = points[0]
    out[-1] = points[-1]
    return out


def _sample_curve(interf: Interferometer, strategy: DeformationStrategy,
                  t: float, s: np.ndarray) -> np.ndarray:
    xa = interf.path_a.position(t)
    xb = interf.path_b.position(t)
    chord = xa[None, :] + s[:, None] * (xb - xa)[None, :]
    if isinstance(strategy, Direct):
        return chord
    lam = _blend_factor(strategy, t, interf.t_start, interf.t_end)
    if lam == 0.0:
        return chord
    wp = np.array(strategy.waypoints, dtype=float)
    route_pts = np.empty((len(wp) + 2, 3))
    route_pts[0] = xa
    route_pts[-1] = xb
    route_pts[1:-1, :2] = wp
    # waypoints are planar; interpolate z linearly along the route index
    frac = np.linspace(0.0, 1.0, len(wp) + 2)[1:-1]
    route_pts[1:-1, 2] = xa[2] + frac * (xb[2] - xa[2])
    route = _polyline_arc_samples(route_pts, s)
    return (1.0 - lam) * chord + lam * route


def _time_grid(interf: Interferometer, strategy: DeformationStrategy,
               n_time: int, knot_times) -> np.ndarray:
    base = [interf.knot_times()]
    if knot_times is not None and len(knot_times):
        extra = np.asarray(knot_times, dtype=float)
        base.append(extra[(extra > interf.t_start) & (extra < interf.t_end)])
    if isinstance(strategy, ViaWaypoints) and strategy.hold is not None:
        hold = np.asarray(strategy.hold, dtype=float)
        base.append(hold[(hold > interf.t_start) & (hold < interf.t_end)])
    knots = np.unique(np.concatenate(base))
    span = interf.t_end - interf.t_start
    out = [knots[0]]
    for lo, hi in zip(knots[:-1], knots[1:]):
        pieces = max(1, round(n_time * (hi - lo) / span))
        out.extend(np.linspace(lo, hi, pieces + 1)[1:])
    return np.asarray(out)


class SurfaceMesh:
    """Discrete curve family: times (K,), nodes (K, M, 3).

    The first and last curves are degenerate because the arms share their
    endpoints.  The mesh remembers how it was built so it can be refined by
    resampling the exact curve family rather than interpolating itself.
    """

    def __init__(self, interferometer: Interferometer, strategy: DeformationStrategy,
                 times: np.ndarray, nodes: np.ndarray, knot_times: tuple = ()):
        self.interferometer = interferometer
        self.strategy = strategy
        self.times = np.asarray(times, dtype=float)
        self.nodes = np.asarray(nodes, dtype=float)
        self.knot_times = tuple(knot_times)
        if self.nodes.shape != (len(self.times), self.nodes.shape[1], 3):
            raise ValueError("nodes must have shape (len(times), M, 3)")
        self._check_boundary()

    def _check_boundary(self):
        ta = self.interferometer.path_a.positions(self.times)
        tb = self.interferometer.path_b.positions(self.times)
        err = max(
            float(np.max(np.abs(self.nodes[:, 0, :] - ta))),
            float(np.max(np.abs(self.nodes[:, -1, :] - tb))),
        )
        if err > BOUNDARY_TOL:
            raise ValueError(f"mesh boundary deviates from the arms by {err:.3e}")

    @property
    def n_slices(self) -> int:
        return len(self.times)

    @property
    def m_nodes(self) -> int:
        return self.nodes.shape[1]

    @property
    def grid(self) -> dict:
        return {"n_time": self.n_slices - 1, "m_nodes": self.m_nodes}

    def slice_curve(self, k: int) -> np.ndarray:
        return self.nodes[k]

    def time_deltas(self) -> np.ndarray:
        return np.diff(self.times)

    def curve_segments(self, k: int) -> np.ndarray:
        """dr vectors along curve k."""
        return np.diff(self.nodes[k], axis=0)

    def area_vectors(self) -> np.ndarray:
        """Spatial area bivectors da per patch, shape (K-1, M-1, 3).

        Each quad is split along the node diagonal into two triangles whose
        orientation pairs the time direction with the curve direction so
        that, via Stokes, sum(B . da) reproduces the circulation around
        arm a forward plus arm b backward.
        """
        p00 = self.nodes[:-1, :-1, :]
        p01 = self.nodes[:-1, 1:, :]
        p10 = self.nodes[1:, :-1, :]
        p11 = self.nodes[1:, 1:, :]
        t1 = 0.5 * np.cross(p10 - p00, p01 - p00)
        t2 = 0.5 * np.cross(p01 - p11, p10 - p11)
        return t1 + t2

    def total_area_vector(self) -> np.ndarray:
        return self.area_vectors().sum(axis=(0, 1))

    def is_degenerate(self) -> bool:
        spread = self.nodes - self.nodes[:, :1, :]
        return float(np.max(np.abs(spread))) <= BOUNDARY_TOL

    def to_rows(self):
        """(t, s, x, y, z) per node, for CSV export."""
        s = np.linspace(0.0, 1.0, self.m_nodes)
        for k, t in enumerate(self.times):
            for j in range(self.m_nodes):
                x, y, z = self.nodes[k, j]
                yield float(t), float(s[j]), float(x), float(y), float(z)


def build_surface(interf: Interferometer, strategy: DeformationStrategy,
                  n_time: int = 64, m_nodes: int = 65,
                  knot_times=()) -> SurfaceMesh:
    """Build the curve-family mesh for one deformation strategy.

    knot_times should carry the source profile knots so field kinks in time
    land on grid lines.  Arm knots and hold-window edges are always included.
    """
    if n_time < 2 or m_nodes < 2:
        raise ValueError("need n_time >= 2 and m_nodes >= 2")
    if interf.t_end <= interf.t_start:
        raise ValueError("degenerate interferometer time interval")
    times = _time_grid(interf, strategy, n_time, knot_times)
    s = np.linspace(0.0, 1.0, m_nodes)
    nodes = np.empty((len(times), m_nodes, 3))
    for k, t in enumerate(times):
        nodes[k] = _sample_curve(interf, strategy, float(t), s)
    # exact boundary by construction; clamp the endpoint columns anyway
    nodes[:, 0, :] = interf.path_a.positions(times)
    nodes[:, -1, :] = interf.path_b.positions(times)
    return SurfaceMesh(interf, strategy, times, nodes, tuple(knot_times))


def refine(mesh: SurfaceMesh, factor: int = 2) -> SurfaceMesh:
    """Subdivide the time grid and curve nodes by an integer factor.

    New nodes are sampled from the exact curve family, so refinement
    converges to the underlying surface.  M goes to factor*(M-1)+1.
    """
    if int(factor) != factor or factor < 2:
        raise ValueError("refinement factor must be an integer >= 2")
    factor = int(factor)
    old_t = mesh.times
    new_t = [old_t[0]]
    for lo, hi in zip(old_t[:-1], old_t[1:]):
        new_t.extend(np.linspace(lo, hi, factor + 1)[1:])
    new_t = np.asarray(new_t)
    m_new = factor * (mesh.m_nodes - 1) + 1
    s = np.linspace(0.0, 1.0, m_new)
    nodes = np.empty((len(new_t), m_new, 3))
    for k, t in enumerate(new_t):
        nodes[k] = _sample_curve(mesh.interferometer, mesh.strategy, float(t), s)
    nodes[:, 0, :] = mesh.interferometer.path_a.positions(new_t)
    nodes[:, -1, :] = mesh.interferometer.path_b.positions(new_t)
    return SurfaceMesh(mesh.interferometer, mesh.strategy, new_t, nodes, mesh.knot_times)


def azimuth_increments(points: np.ndarray, axis_point) -> np.ndarray:
    """Per-segment azimuth increments about a z-axis through axis_point.

    Each increment is the turn of the position vector seen from the axis,
    in (-pi, pi]; straight segments that avoid the axis never subtend pi.
    """
    rel = np.atleast_2d(np.asarray(points, dtype=float))[:, :2] - np.asarray(axis_point, dtype=float)
    r = np.hypot(rel[:, 0], rel[:, 1])
    if np.any(r < AXIS_CLEARANCE):
        raise ValueError("polyline vertex too close to the axis")
    a = rel[:-1]
    b = rel[1:]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = np.sum(a * b, axis=1)
    return np.arctan2(cross, dot)


def unwrapped_azimuth_delta(points: np.ndarray, axis_point) -> float:
    """Total continuous azimuth change along an open polyline."""
    return float(np.sum(azimuth_increments(points, axis_point)))


def winding_number(points: np.ndarray, axis_point) -> int:
    """Signed turns of a closed polyline about a z-axis through axis_point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if float(np.max(np.abs(pts[0] - pts[-1]))) > BOUNDARY_TOL:
        raise ValueError("polyline is not closed")
    total = unwrapped_azimuth_delta(pts, axis_point) / (2.0 * math.pi)
    nearest = round(total)
    if abs(total - nearest) > WINDING_INT_TOL:
        raise ValueError(f"winding {total!r} is not integral")
    return int(nearest)
