"""Composite Gauss-Legendre quadrature helpers and exact disk clipping.

Integrands in this package are piecewise smooth: smooth between material
boundaries (cage shells, solenoid walls) and profile knots, with kinks or
jumps at the boundaries themselves.  Accuracy therefore comes from splitting
integration intervals at the known breakpoints, not from brute resolution.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

DEDUPE_GAP = 1e-12


@lru_cache(maxsize=None)
def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_nodes(a: float, b: float, n_panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of an n-panel composite Gauss rule on [a, b]."""
    x, w = gauss_rule(order)
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = np.broadcast_to(w[None, :], (n_panels, len(w))).ravel() * np.repeat(half, len(w))
    return nodes, weights


def split_interval(a: float, b: float, interior) -> list[tuple[float, float]]:
    """Subintervals of [a, b] split at the interior points that fall inside.

    Points closer than DEDUPE_GAP to each other or to the ends are merged.
    """
    if b <= a:
        return []
    cuts = [a]
    for t in sorted(float(t) for t in interior):
        if t > cuts[-1] + DEDUPE_GAP and t < b - DEDUPE_GAP:
            cuts.append(t)
    cuts.append(b)
    return list(zip(cuts[:-1], cuts[1:]))


def segment_sphere_params(p: np.ndarray, q: np.ndarray, center: np.ndarray, radius: float) -> list[float]:
    """Parameters tau in (0,1) where p + tau*(q-p) crosses the sphere."""
    d = q - p
    rel = p - center
    a = float(d @ d)
    if a == 0.0:
        return []
    bh = float(rel @ d)
    c = float(rel @ rel) - radius * radius
    disc = bh * bh - a * c
    if disc <= 0.0:
        return []
    sq = math.sqrt(disc)
    out = []
    for tau in ((-bh - sq) / a, (-bh + sq) / a):
        if DEDUPE_GAP < tau < 1.0 - DEDUPE_GAP:
            out.append(tau)
    return out


def segment_circle_params_2d(p: np.ndarray, q: np.ndarray, center: np.ndarray, radius: float) -> list[float]:
    """Like segment_sphere_params but for a z-aligned cylinder (xy circle)."""
    return segment_sphere_params(p[:2], q[:2], center, radius)


def disk_polygon_overlap(vertices_xy: np.ndarray, center, radius: float) -> float:
    """Signed area of an oriented polygon clipped to a disk.

    Positive for counterclockwise traversal.  Exact up to roundoff: straight
    portions contribute cross-product areas, excluded portions contribute
    circular-sector areas.  Works for self-overlapping polygons (the result
    is the integral of the winding number over the disk).
    """
    v = np.asarray(vertices_xy, dtype=float) - np.asarray(center, dtype=float)
    r2 = radius * radius
    total = 0.0
    n = len(v)
    for i in range(n):
        p = v[i]
        q = v[(i + 1) % n]
        d = q - p
        dd = float(d @ d)
        if dd == 0.0:
            continue
        bh = float(p @ d)
        c = float(p @ p) - r2
        disc = bh * bh - dd * c
        taus = [0.0, 1.0]
        if disc > 0.0:
            sq = math.sqrt(disc)
            for tau in ((-bh - sq) / dd, (-bh + sq) / dd):
                if 1e-14 < tau < 1.0 - 1e-14:
                    taus.append(tau)
            taus.sort()
        for t0, t1 in zip(taus[:-1], taus[1:]):
            a = p + t0 * d
            b = p + t1 * d
            m = p + 0.5 * (t0 + t1) * d
            if float(m @ m) <= r2:
                total += 0.5 * (a[0] * b[1] - a[1] * b[0])
            else:
                # Sector between the radii to a and b.  A straight chord seen
                # from an exterior center subtends less than pi, so atan2 is
                # branch-safe here.
                ang = math.atan2(a[0] * b[1] - a[1] * b[0], float(a @ b))
                total += 0.5 * r2 * ang
    return total
