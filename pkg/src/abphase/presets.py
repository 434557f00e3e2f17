"""Bundled scenarios and parametric builders for the three canonical setups.

Builders return plain config trees (the parsed form of the TOML schema) so
tests, scripts and the CLI all share one source of truth.  The three named
presets are canonical instances:

* magnetic_static: constant-flux solenoid enclosed by the arms;
* electric_pulsed: two potential cages pulsed while the particle dwells;
* electrodynamic_ramp: shielded cages, solenoid outside the arms, flux
  ramped during the dwell.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def _knots(points, times) -> list:
    return [[float(x), float(y), 0.0, float(t)] for (x, y), t in zip(points, times)]


def _run_section(name: str, grid_n: int, grid_m: int, **extra) -> dict:
    out = {
        "name": name,
        "q_over_hbar": 1.0,
        "grid_n": grid_n,
        "grid_m": grid_m,
        "quadrature_order": 5,
        "panels_per_unit_time": 8.0,
    }
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# static magnetic scenario


_MAGNETIC_ARMS = {
    # arm a runs under the solenoid so that arm-a-forward + arm-b-backward
    # circles it counterclockwise (winding +1)
    0: (
        [(-2.2, 0.1), (-1.1, -1.4), (0.1, -1.6), (1.4, -1.2), (2.3, -0.1)],
        [(-2.2, 0.1), (-1.2, 1.5), (0.2, 1.7), (1.5, 1.3), (2.3, -0.1)],
    ),
    1: (
        [(-3.0, 0.0), (0.0, -2.3), (3.0, 0.0)],
        [(-3.0, 0.0), (0.0, 2.4), (3.0, 0.0)],
    ),
    2: (
        [(-2.6, 0.2), (-1.5, -1.9), (0.4, -2.2), (1.8, -1.7), (2.6, 0.1)],
        [(-2.6, 0.2), (-1.4, 1.8), (0.3, 2.1), (1.9, 1.6), (2.6, 0.1)],
    ),
}


def magnetic_tree(flux: float = TWO_PI, variant: int = 0, enclosing: bool = True,
                  name: str = "magnetic_static") -> dict:
    """Constant-flux solenoid with arms that do or do not enclose it."""
    if enclosing:
        pts_a, pts_b = _MAGNETIC_ARMS[variant]
    else:
        pts_a = [(-2.4, -0.8), (-1.2, -2.2), (1.2, -2.1), (2.4, -0.8)]
        pts_b = [(-2.4, -0.8), (-1.0, -1.35), (1.0, -1.3), (2.4, -0.8)]
    times_a = np.linspace(0.0, 4.0, len(pts_a))
    times_b = np.linspace(0.0, 4.0, len(pts_b))
    expected = flux if enclosing else 0.0
    tol = max(1e-6 * abs(flux), 1e-8)
    return {
        "run": _run_section(name, grid_n=48, grid_m=129),
        "solenoid": {
            "main": {"center": [0.1, 0.0], "radius": 0.5, "flux": [[0.0, float(flux)]]},
        },
        "arm": {
            "a": {"knots": _knots(pts_a, times_a)},
            "b": {"knots": _knots(pts_b, times_b)},
        },
        "strategy": {"direct": {"kind": "direct"}},
        "audit": {"gauge_samples": 20, "seed": 20406},
        "expect": [
            {"formula": "potentials", "total": float(expected), "tolerance": tol},
            {"formula": "surface:direct", "total": float(expected), "tolerance": tol},
        ],
    }


def winding_tree(n: int, flux: float = TWO_PI, name: str = "winding") -> dict:
    """Arms whose closed loop winds n times around the solenoid axis."""
    axis = (0.05, 0.0)
    ring = 1.5
    x0, x_end = (-2.5, 0.0), (2.5, 0.0)

    def circuit(start_angle: float, direction: float) -> list:
        angles = start_angle + direction * np.linspace(0.0, TWO_PI, 9)[1:]
        return [(axis[0] + ring * math.cos(a), axis[1] + ring * math.sin(a)) for a in angles]

    under = [(-1.8, -1.1), (axis[0], -ring), (1.9, -1.1)]
    over = [(-1.8, 1.15), (axis[0], ring * 1.03), (1.9, 1.15)]
    if n >= 1:
        pts_a = [x0, under[0], under[1]]
        for _ in range(n - 1):
            pts_a.extend(circuit(-0.5 * math.pi, +1.0))
        pts_a.extend([under[2], x_end])
        pts_b = [x0] + over + [x_end]
    elif n <= -1:
        pts_a = [x0, over[0], (axis[0], ring)]
        for _ in range(-n - 1):
            pts_a.extend(circuit(0.5 * math.pi, -1.0))
        pts_a.extend([over[2], x_end])
        pts_b = [x0] + under + [x_end]
    else:
        pts_a = [x0, (-1.6, -1.5), (0.0, -1.8), (1.6, -1.5), x_end]
        pts_b = [x0, (-1.6, -0.8), (0.0, -0.95), (1.6, -0.8), x_end]
    times_a = np.linspace(0.0, 4.0, len(pts_a))
    times_b = np.linspace(0.0, 4.0, len(pts_b))
    return {
        "run": _run_section(name, grid_n=48, grid_m=129),
        "solenoid": {
            "main": {"center": list(axis), "radius": 0.5, "flux": [[0.0, float(flux)]]},
        },
        "arm": {
            "a": {"knots": _knots(pts_a, times_a)},
            "b": {"knots": _knots(pts_b, times_b)},
        },
        "strategy": {"direct": {"kind": "direct"}},
        "audit": {"gauge_samples": 6, "seed": 11},
        "expect": [
            {"formula": "potentials", "total": float(n * flux), "tolerance": max(1e-6 * abs(flux), 1e-8)},
        ],
    }


# ---------------------------------------------------------------------------
# pulsed-cage electric scenario


def _pulse(amplitude: float, t_on: float = 1.4, t_off: float = 2.6, rise: float = 0.2) -> list:
    """Trapezoidal pulse with unit time integral at amplitude 1."""
    return [
        [t_on, 0.0],
        [t_on + rise, float(amplitude)],
        [t_off - rise, float(amplitude)],
        [t_off, 0.0],
    ]


def electric_tree(integral_a: float = 1.0, integral_b: float = 0.0,
                  name: str = "electric_pulsed") -> dict:
    """Two pulsed cages; the time integral of V equals the given targets.

    The trapezoid of _pulse has area amplitude * (t_off - t_on - rise).
    """
    width = 2.6 - 1.4 - 0.2
    amp_a = integral_a / width
    amp_b = integral_b / width
    ca, cb = (0.0, 1.2), (0.0, -1.2)
    pts_a = [(-2.4, 0.0), ca, ca, (2.4, 0.0)]
    pts_b = [(-2.4, 0.0), cb, cb, (2.4, 0.0)]
    times = [0.0, 1.2, 2.8, 4.0]
    expected = -(integral_a - integral_b)
    return {
        "run": _run_section(name, grid_n=64, grid_m=513),
        "cage": {
            "a": {
                "kind": "potential",
                "center": [ca[0], ca[1], 0.0],
                "inner_radius": 0.35,
                "outer_radius": 0.8,
                "potential": _pulse(amp_a),
            },
            "b": {
                "kind": "potential",
                "center": [cb[0], cb[1], 0.0],
                "inner_radius": 0.35,
                "outer_radius": 0.8,
                "potential": _pulse(amp_b),
            },
        },
        "arm": {
            "a": {"knots": _knots(pts_a, times)},
            "b": {"knots": _knots(pts_b, times)},
        },
        "strategy": {"direct": {"kind": "direct"}},
        "audit": {"gauge_samples": 20, "seed": 30915},
        "expect": [
            {"formula": "potentials", "total": expected, "tolerance": 1e-6},
            {"formula": "surface:direct", "total": expected, "tolerance": 1e-6},
        ],
    }


# ---------------------------------------------------------------------------
# dwell-and-ramp electrodynamic scenario


def ramp_tree(d_flux: float = TWO_PI, azimuth_a: float = -0.25 * math.pi,
              azimuth_b: float = 0.25 * math.pi, distance: float = 4.0,
              cage_radius: float = 0.002, ring_radius: float = 1.6,
              name: str = "electrodynamic_ramp") -> dict:
    """Solenoid outside the interferometer, flux ramped during the cage dwell.

    The two-arm phase difference is d_flux/(2 pi) times the azimuth gap of
    the cages seen from the solenoid axis, picked up along the end path.
    Cages sit at radius `distance` inside a sector narrower than pi, which
    keeps every chord between the arms away from the solenoid.  The shield
    model linearizes the induced potential across each cage, so the field
    routes deviate from the potential route by order (cage_radius/distance)^2;
    the default radius keeps that residual well under 1e-6.
    """
    if not 0.0 < azimuth_b - azimuth_a < math.pi:
        raise ValueError("need 0 < azimuth_b - azimuth_a < pi")
    ca = (distance * math.cos(azimuth_a), distance * math.sin(azimuth_a))
    cb = (distance * math.cos(azimuth_b), distance * math.sin(azimuth_b))
    mid = 0.5 * (azimuth_a + azimuth_b)
    x0 = (1.55 * distance * math.cos(mid), 1.55 * distance * math.sin(mid))
    x_end = (1.3 * distance * math.cos(mid), 1.3 * distance * math.sin(mid))
    times = [0.0, 1.2, 2.8, 4.0]
    pts_a = [x0, ca, ca, x_end]
    pts_b = [x0, cb, cb, x_end]
    # waypoint route: leave the cages along the dwell chord, then circle the
    # solenoid the long way round (negative winding)
    chord = np.subtract(cb, ca)
    u = chord / np.linalg.norm(chord)
    stub_a = np.add(ca, 0.5 * u)
    stub_b = np.subtract(cb, 0.5 * u)
    ring_angles = np.linspace(azimuth_a, azimuth_b - TWO_PI, 9)[1:-1]
    ring = [(ring_radius * math.cos(a), ring_radius * math.sin(a)) for a in ring_angles]
    waypoints = [list(map(float, stub_a))] + [[float(x), float(y)] for x, y in ring] + [list(map(float, stub_b))]
    expected = (d_flux / TWO_PI) * (azimuth_b - azimuth_a)
    return {
        "run": _run_section(name, grid_n=96, grid_m=257),
        "solenoid": {
            "main": {
                "center": [0.0, 0.0],
                "radius": 0.5,
                "flux": [[0.0, 0.0], [1.5, 0.0], [2.5, float(d_flux)], [4.0, float(d_flux)]],
            },
        },
        "cage": {
            "a": {"kind": "shielded", "center": [ca[0], ca[1], 0.0], "radius": cage_radius},
            "b": {"kind": "shielded", "center": [cb[0], cb[1], 0.0], "radius": cage_radius},
        },
        "arm": {
            "a": {"knots": _knots(pts_a, times)},
            "b": {"knots": _knots(pts_b, times)},
        },
        "strategy": {
            "direct": {"kind": "direct"},
            "around": {"kind": "via_waypoints", "waypoints": waypoints, "hold": [1.5, 2.5]},
        },
        "audit": {"gauge_samples": 20, "seed": 41507},
        "expect": [
            {"formula": "decomposition", "total": expected, "tolerance": 1e-4},
            {"formula": "field_line", "total": expected, "tolerance": 1e-4},
            {"formula": "surface:direct", "total": expected, "tolerance": 1e-4},
            {"formula": "surface:around", "total": expected, "tolerance": 1e-4},
        ],
    }


PRESET_BUILDERS = {
    "magnetic_static": magnetic_tree,
    "electric_pulsed": electric_tree,
    "electrodynamic_ramp": ramp_tree,
}


def preset_names() -> list[str]:
    return sorted(PRESET_BUILDERS)


def preset_tree(name: str) -> dict:
    try:
        return PRESET_BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}") from None
