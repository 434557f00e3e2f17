"""Quasi-static electromagnetic sources: potentials and fields everywhere.

The source zoo matches the interferometer setups this package simulates:

* ideal infinite solenoids along z with a piecewise-linear flux profile
  (azimuthal vector potential, uniform interior B, zero exterior B);
* potential-controlled cages whose scalar potential follows a pulse profile,
  smeared over a smooth radial weight;
* shielded cages that null the total interior electric field.  The induced
  scalar potential is modeled in the uniform-external-field limit,
  V = E_ind(center) . (r - center), faded to zero across a thin shell just
  outside the cage (the shell stands in for the surface-charge layer).

Fields respond instantaneously to the source profiles; propagation delay
inside the apparatus is neglected.  All quantities are in dimensionless
simulation units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import AxisProximityError, BoundaryProximityError
from .gauges import GaugeState
from .quadrature import (
    panel_nodes,
    segment_circle_params_2d,
    segment_sphere_params,
    split_interval,
)

AXIS_EPS = 1e-9
SHELL_FACTOR = 1.1
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Event:
    """A spacetime point (x, y, z, t)."""

    x: float
    y: float
    z: float
    t: float

    def __post_init__(self):
        for name in ("x", "y", "z", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite event coordinate {name}")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


class PiecewiseProfile:
    """Piecewise-linear map t -> value, constant outside the knot range.

    The derivative is piecewise constant with a right-hand convention at
    knots.  Used both for solenoid flux and for cage potential pulses.
    """

    def __init__(self, knots: Sequence[Sequence[float]]):
        arr = np.asarray(knots, dtype=float).reshape(-1, 2)
        if arr.shape[0] < 1:
            raise ValueError("profile needs at least one knot")
        if not np.all(np.isfinite(arr)):
            raise ValueError("profile knots must be finite")
        if np.any(np.diff(arr[:, 0]) <= 0.0):
            raise ValueError("profile knot times must be strictly increasing")
        self.times = arr[:, 0].copy()
        self.values = arr[:, 1].copy()
        self.times.setflags(write=False)
        self.values.setflags(write=False)

    @classmethod
    def constant(cls, value: float) -> "PiecewiseProfile":
        return cls([[0.0, value]])

    def value(self, t):
        return np.interp(t, self.times, self.values)

    def rate(self, t):
        """dV/dt, piecewise constant; right-hand limit at knots; 0 outside."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if len(self.times) == 1:
            return np.zeros_like(t)
        slopes = np.diff(self.values) / np.diff(self.times)
        idx = np.searchsorted(self.times, t, side="right") - 1
        inside = (idx >= 0) & (idx < len(slopes))
        out = np.zeros_like(t)
        out[inside] = slopes[idx[inside]]
        return out

    @property
    def knot_times(self) -> np.ndarray:
        return self.times

    def kink_times(self) -> np.ndarray:
        """Knot times where the slope actually changes."""
        if len(self.times) == 1:
            return np.asarray([], dtype=float)
        slopes = np.diff(self.values) / np.diff(self.times)
        extended = np.concatenate([[0.0], slopes, [0.0]])
        return self.times[extended[1:] != extended[:-1]]

    def is_constant(self, tol: float = 0.0) -> bool:
        return bool(np.max(self.values) - np.min(self.values) <= tol)

    def change_span(self) -> Optional[tuple[float, float]]:
        """Earliest and latest knot times bracketing any value change."""
        if len(self.times) == 1:
            return None
        moving = np.nonzero(np.diff(self.values) != 0.0)[0]
        if len(moving) == 0:
            return None
        return float(self.times[moving[0]]), float(self.times[moving[-1] + 1])


def _smoothstep(u: np.ndarray) -> np.ndarray:
    """Quintic 0 -> 1 step, C2 at both ends."""
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep_deriv(u: np.ndarray) -> np.ndarray:
    return 30.0 * u * u * (1.0 - u) ** 2


@dataclass(frozen=True)
class SolenoidSource:
    """Infinite solenoid along z through axis_point with flux profile Phi(t)."""

    axis_point: tuple[float, float]
    radius: float
    flux: PiecewiseProfile
    label: str = "solenoid"

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"{self.label}: radius must be positive")

    def _geometry(self, xyz: np.ndarray):
        rel = xyz[:, :2] - np.asarray(self.axis_point, dtype=float)
        rho = np.hypot(rel[:, 0], rel[:, 1])
        if np.any(rho < AXIS_EPS):
            raise AxisProximityError(
                f"{self.label}: field evaluation within {AXIS_EPS:g} of the axis"
            )
        phi_hat = np.empty_like(xyz)
        phi_hat[:, 0] = -rel[:, 1] / rho
        phi_hat[:, 1] = rel[:, 0] / rho
        phi_hat[:, 2] = 0.0
        return rho, phi_hat

    def _azimuthal_magnitude(self, rho: np.ndarray, scale: np.ndarray) -> np.ndarray:
        inside = rho < self.radius
        mag = np.where(
            inside,
            scale * rho / (TWO_PI * self.radius ** 2),
            scale / (TWO_PI * rho),
        )
        return mag

    def vector_potential(self, xyz: np.ndarray, t: np.ndarray) -> np.ndarray:
        rho, phi_hat = self._geometry(xyz)
        return self._azimuthal_magnitude(rho, self.flux.value(t))[:, None] * phi_hat

    def induced_electric(self, xyz: np.ndarray, t: np.ndarray) -> np.ndarray:
        """-dA/dt of this solenoid."""
        rho, phi_hat = self._geometry(xyz)
        return -self._azimuthal_magnitude(rho, self.flux.rate(t))[:, None] * phi_hat

    def magnetic_field(self, xyz: np.ndarray, t: np.ndarray) -> np.ndarray:
        rho, _ = self._geometry(xyz)
        out = np.zeros_like(xyz)
        inside = rho < self.radius
        out[:, 2] = np.where(inside, self.flux.value(t) / (math.pi * self.radius ** 2), 0.0)
        return out


@dataclass(frozen=True)
class ShieldedCage:
    """Idealized Faraday cage: total E vanishes inside radius around center."""

    center: tuple[float, float, float]
    radius: float
    label: str = "cage"

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"{self.label}: radius must be positive")

    @property
    def shell_outer(self) -> float:
        return SHELL_FACTOR * self.radius

    @property
    def outer_extent(self) -> float:
        return self.shell_outer

    def cutoff(self, rho: np.ndarray) -> np.ndarray:
        """1 inside the cage, quintic fade to 0 across the shell."""
        u = np.clip((rho - self.radius) / (self.shell_outer - self.radius), 0.0, 1.0)
        return 1.0 - _smoothstep(u)

    def cutoff_deriv(self, rho: np.ndarray) -> np.ndarray:
        width = self.shell_outer - self.radius
        u = (rho - self.radius) / width
        out = np.zeros_like(rho)
        shell = (u > 0.0) & (u < 1.0)
        out[shell] = -_smoothstep_deriv(u[shell]) / width
        return out


@dataclass(frozen=True)
class PotentialCage:
    """Cage held at a controlled potential pulse V(t).

    The potential acts with weight 1 inside inner_radius and fades smoothly
    to 0 at outer_radius, giving an analytic electric field in the wall.
    """

    center: tuple[float, float, float]
    inner_radius: float
    outer_radius: float
    potential: PiecewiseProfile
    label: str = "cage"

    def __post_init__(self):
        if not 0.0 < self.inner_radius < self.outer_radius:
            raise ValueError(f"{self.label}: need 0 < inner_radius < outer_radius")

    @property
    def outer_extent(self) -> float:
        return self.outer_radius

    def active_window(self) -> Optional[tuple[float, float]]:
        return self.potential.change_span()

    def weight(self, xyz: np.ndarray) -> np.ndarray:
        rel = xyz - np.asarray(self.center, dtype=float)
        rho = np.sqrt(np.sum(rel * rel, axis=1))
        u = np.clip((rho - self.inner_radius) / (self.outer_radius - self.inner_radius), 0.0, 1.0)
        return 1.0 - _smoothstep(u)

    def weight_gradient(self, xyz: np.ndarray) -> np.ndarray:
        rel = xyz - np.asarray(self.center, dtype=float)
        rho = np.sqrt(np.sum(rel * rel, axis=1))
        width = self.outer_radius - self.inner_radius
        u = (rho - self.inner_radius) / width
        out = np.zeros_like(xyz)
        shell = (u > 0.0) & (u < 1.0) & (rho > 0.0)
        if np.any(shell):
            dw = -_smoothstep_deriv(u[shell]) / width
            out[shell] = (dw / rho[shell])[:, None] * rel[shell]
        return out


Cage = Union[ShieldedCage, PotentialCage]


@dataclass(frozen=True)
class FieldSample:
    """Potentials and fields at one event."""

    A: np.ndarray
    V: float
    E: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class FieldConfig:
    """Complete source description for one scenario."""

    solenoids: tuple[SolenoidSource, ...] = ()
    shielded_cages: tuple[ShieldedCage, ...] = ()
    potential_cages: tuple[PotentialCage, ...] = ()

    @property
    def cages(self) -> tuple[Cage, ...]:
        return self.shielded_cages + self.potential_cages

    def validate(self) -> list[str]:
        """Geometric invariant violations, one message per offense."""
        problems = []
        cages = self.cages
        for i in range(len(cages)):
            for j in range(i + 1, len(cages)):
                a, b = cages[i], cages[j]
                gap = float(np.linalg.norm(np.subtract(a.center, b.center)))
                if gap <= a.outer_extent + b.outer_extent:
                    problems.append(
                        f"cages {a.label!r} and {b.label!r} overlap "
                        f"(center distance {gap:g} <= {a.outer_extent + b.outer_extent:g})"
                    )
        for cage in cages:
            for sol in self.solenoids:
                d2 = float(np.hypot(cage.center[0] - sol.axis_point[0],
                                    cage.center[1] - sol.axis_point[1]))
                if d2 <= sol.radius + cage.outer_extent:
                    problems.append(
                        f"cage {cage.label!r} intersects solenoid {sol.label!r} "
                        f"(axis distance {d2:g} <= {sol.radius + cage.outer_extent:g})"
                    )
        for cage in self.potential_cages:
            v0 = float(cage.potential.values[0])
            v1 = float(cage.potential.values[-1])
            if v0 != 0.0 or v1 != 0.0:
                problems.append(
                    f"cage {cage.label!r}: potential must start and end at zero "
                    f"(got {v0:g}, {v1:g})"
                )
        return problems

    def check(self):
        problems = self.validate()
        if problems:
            from .errors import ScenarioValidationError

            raise ScenarioValidationError(problems)

    def knot_times(self) -> np.ndarray:
        """All profile knot times (flux ramps and potential pulses)."""
        times = [np.asarray([], dtype=float)]
        for sol in self.solenoids:
            times.append(sol.flux.knot_times)
        for cage in self.potential_cages:
            times.append(cage.potential.knot_times)
        return np.unique(np.concatenate(times))

    def boundary_spheres(self) -> list[tuple[np.ndarray, float]]:
        out = []
        for cage in self.shielded_cages:
            c = np.asarray(cage.center, dtype=float)
            out.append((c, cage.radius))
            out.append((c, cage.shell_outer))
        for cage in self.potential_cages:
            c = np.asarray(cage.center, dtype=float)
            out.append((c, cage.inner_radius))
            out.append((c, cage.outer_radius))
        return out

    def segment_boundary_params(self, p: np.ndarray, q: np.ndarray) -> list[float]:
        """Sorted tau in (0,1) where segment p->q crosses a material surface."""
        taus: list[float] = []
        for center, radius in self.boundary_spheres():
            taus.extend(segment_sphere_params(p, q, center, radius))
        for sol in self.solenoids:
            taus.extend(segment_circle_params_2d(p, q, np.asarray(sol.axis_point, float), sol.radius))
        return sorted(taus)

    def induced_field_at(self, point, t: np.ndarray) -> np.ndarray:
        """Total solenoid-induced electric field -dA/dt at a fixed point."""
        xyz = np.broadcast_to(np.asarray(point, dtype=float), (len(t), 3))
        out = np.zeros((len(t), 3))
        for sol in self.solenoids:
            out += sol.induced_electric(np.ascontiguousarray(xyz), t)
        return out

    def electrically_active(self, t: float) -> bool:
        """False when every electric-field source is quiescent at time t.

        Checking value and rate together is exact on any interval whose
        midpoint is t, provided the interval contains no profile knot.
        """
        ts = np.asarray([t], dtype=float)
        for sol in self.solenoids:
            if float(np.abs(sol.flux.rate(ts))[0]) != 0.0:
                return True
        for cage in self.potential_cages:
            if float(cage.potential.value(t)) != 0.0 or float(np.abs(cage.potential.rate(ts))[0]) != 0.0:
                return True
        return False

    def segment_crossings_batch(self, p: np.ndarray, d: np.ndarray) -> dict:
        """Material-surface crossings for many segments p[i] -> p[i] + d[i].

        Returns {segment index: sorted list of tau in (0, 1)}.
        """
        crossings: dict[int, list[float]] = {}

        def solve(rel: np.ndarray, dd: np.ndarray, radius: float):
            a = np.einsum("ij,ij->i", dd, dd)
            bh = np.einsum("ij,ij->i", rel, dd)
            c = np.einsum("ij,ij->i", rel, rel) - radius * radius
            disc = bh * bh - a * c
            ok = (disc > 0.0) & (a > 0.0)
            if not np.any(ok):
                return
            idx = np.nonzero(ok)[0]
            sq = np.sqrt(disc[ok])
            for sign in (-1.0, 1.0):
                tau = (-bh[ok] + sign * sq) / a[ok]
                sel = (tau > 1e-12) & (tau < 1.0 - 1e-12)
                for i, value in zip(idx[sel], tau[sel]):
                    crossings.setdefault(int(i), []).append(float(value))

        for center, radius in self.boundary_spheres():
            solve(p - center, d, radius)
        for sol in self.solenoids:
            axis = np.asarray(sol.axis_point, dtype=float)
            solve(p[:, :2] - axis, d[:, :2], sol.radius)
        for taus in crossings.values():
            taus.sort()
        return crossings


def _batch(xyz, t) -> tuple[np.ndarray, np.ndarray]:
    xyz = np.atleast_2d(np.asarray(xyz, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), (xyz.shape[0],))
    return xyz, t


def eval_A_batch(config: FieldConfig, gauge: Optional[GaugeState], xyz, t) -> np.ndarray:
    xyz, t = _batch(xyz, t)
    out = np.zeros_like(xyz)
    for sol in config.solenoids:
        out += sol.vector_potential(xyz, t)
    if gauge is not None and gauge.chi is not None:
        out += gauge.chi.gradient(xyz, t)
    return out


def eval_V_batch(config: FieldConfig, gauge: Optional[GaugeState], xyz, t) -> np.ndarray:
    xyz, t = _batch(xyz, t)
    out = np.zeros(xyz.shape[0])
    for cage in config.potential_cages:
        out += cage.potential.value(t) * cage.weight(xyz)
    for cage in config.shielded_cages:
        rel = xyz - np.asarray(cage.center, dtype=float)
        rho = np.sqrt(np.sum(rel * rel, axis=1))
        mask = rho < cage.shell_outer
        if np.any(mask):
            e_ind = config.induced_field_at(cage.center, t[mask])
            linear = np.sum(e_ind * rel[mask], axis=1)
            out[mask] += linear * cage.cutoff(rho[mask])
    if gauge is not None and gauge.chi is not None:
        out -= gauge.chi.time_derivative(xyz, t)
    return out


def eval_B_batch(config: FieldConfig, xyz, t) -> np.ndarray:
    xyz, t = _batch(xyz, t)
    out = np.zeros_like(xyz)
    for sol in config.solenoids:
        out += sol.magnetic_field(xyz, t)
    return out


def eval_E_batch(config: FieldConfig, xyz, t) -> np.ndarray:
    """Total electric field -grad(V) - dA/dt; exactly zero inside shields."""
    xyz, t = _batch(xyz, t)
    out = np.zeros_like(xyz)
    for sol in config.solenoids:
        out += sol.induced_electric(xyz, t)
    for cage in config.potential_cages:
        out -= cage.potential.value(t)[:, None] * cage.weight_gradient(xyz)
    shielded = np.zeros(xyz.shape[0], dtype=bool)
    for cage in config.shielded_cages:
        rel = xyz - np.asarray(cage.center, dtype=float)
        rho = np.sqrt(np.sum(rel * rel, axis=1))
        shell = (rho > cage.radius) & (rho < cage.shell_outer)
        if np.any(shell):
            e_ind = config.induced_field_at(cage.center, t[shell])
            k = cage.cutoff(rho[shell])
            kp = cage.cutoff_deriv(rho[shell])
            linear = np.sum(e_ind * rel[shell], axis=1)
            rhat = rel[shell] / rho[shell][:, None]
            out[shell] -= e_ind * k[:, None] + (linear * kp)[:, None] * rhat
        shielded |= rho <= cage.radius
    out[shielded] = 0.0
    return out


def eval_A(config: FieldConfig, gauge: Optional[GaugeState], ev: Event) -> np.ndarray:
    """Vector potential at one event (gauge: base azimuthal + grad chi)."""
    return eval_A_batch(config, gauge, ev.position, ev.t)[0]


def eval_V(config: FieldConfig, gauge: Optional[GaugeState], ev: Event) -> float:
    """Scalar potential at one event (cages, shields, minus d(chi)/dt)."""
    return float(eval_V_batch(config, gauge, ev.position, ev.t)[0])


def eval_E(config: FieldConfig, ev: Event) -> np.ndarray:
    """Total electric field at one event; gauge independent."""
    return eval_E_batch(config, ev.position, ev.t)[0]


def eval_B(config: FieldConfig, ev: Event) -> np.ndarray:
    """Magnetic field at one event; gauge independent."""
    return eval_B_batch(config, ev.position, ev.t)[0]


def field_sample(config: FieldConfig, gauge: Optional[GaugeState], ev: Event) -> FieldSample:
    return FieldSample(
        A=eval_A(config, gauge, ev),
        V=eval_V(config, gauge, ev),
        E=eval_E(config, ev),
        B=eval_B(config, ev),
    )


@dataclass(frozen=True)
class FdConsistencyReport:
    """Central-difference residuals of the field/potential relations."""

    curl_residual: float
    electric_residual: float
    step: float

    @property
    def curl_constant(self) -> float:
        return self.curl_residual / self.step ** 2

    @property
    def electric_constant(self) -> float:
        return self.electric_residual / self.step ** 2


def _min_boundary_distance(config: FieldConfig, ev: Event) -> float:
    """Distance from the event to the nearest material or temporal boundary."""
    dist = math.inf
    pos = ev.position
    for center, radius in config.boundary_spheres():
        dist = min(dist, abs(float(np.linalg.norm(pos - center)) - radius))
    for sol in config.solenoids:
        rho = math.hypot(ev.x - sol.axis_point[0], ev.y - sol.axis_point[1])
        dist = min(dist, abs(rho - sol.radius))
    for sol in config.solenoids:
        for tk in sol.flux.kink_times():
            dist = min(dist, abs(ev.t - float(tk)))
    for cage in config.potential_cages:
        for tk in cage.potential.kink_times():
            dist = min(dist, abs(ev.t - float(tk)))
    return dist


def fd_consistency(config: FieldConfig, gauge: Optional[GaugeState], ev: Event,
                   step: float) -> FdConsistencyReport:
    """Check curl A = B and -grad V - dA/dt = E by central differences.

    The stencil must not straddle a material surface or a profile knot, so
    the event has to sit at least 2*step away from all of them.
    """
    margin = _min_boundary_distance(config, ev)
    if margin < 2.0 * step:
        raise BoundaryProximityError(
            f"event within {margin:.3e} of a boundary; need >= {2 * step:.3e}"
        )
    pos = ev.position

    def A_at(p, t):
        return eval_A_batch(config, gauge, p, t)[0]

    def V_at(p, t):
        return eval_V_batch(config, gauge, p, t)[0]

    curl = np.zeros(3)
    offsets = np.eye(3) * step
    # curl components via dA_k/dx_j
    dA = np.zeros((3, 3))  # dA[j, k] = dA_k / dx_j
    for j in range(3):
        dA[j] = (A_at(pos + offsets[j], ev.t) - A_at(pos - offsets[j], ev.t)) / (2 * step)
    curl[0] = dA[1, 2] - dA[2, 1]
    curl[1] = dA[2, 0] - dA[0, 2]
    curl[2] = dA[0, 1] - dA[1, 0]
    curl_res = float(np.max(np.abs(curl - eval_B(config, ev))))

    grad_v = np.array([
        (V_at(pos + offsets[j], ev.t) - V_at(pos - offsets[j], ev.t)) / (2 * step)
        for j in range(3)
    ])
    dA_dt = (A_at(pos, ev.t + step) - A_at(pos, ev.t - step)) / (2 * step)
    e_res = float(np.max(np.abs(-grad_v - dA_dt - eval_E(config, ev))))
    return FdConsistencyReport(curl_residual=curl_res, electric_residual=e_res, step=step)


def line_integral_A(config: FieldConfig, gauge: Optional[GaugeState],
                    points: np.ndarray, t: float, panels_per_unit: float = 4.0,
                    order: int = 5) -> float:
    """Line integral of A along a spatial polyline at frozen time t.

    Panels are split at material-surface crossings so each piece is smooth.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    total = 0.0
    for p, q in zip(pts[:-1], pts[1:]):
        d = q - p
        length = float(np.linalg.norm(d))
        if length == 0.0:
            continue
        cuts = config.segment_boundary_params(p, q)
        for a, b in split_interval(0.0, 1.0, cuts):
            n = max(1, math.ceil((b - a) * length * panels_per_unit))
            taus, wts = panel_nodes(a, b, n, order)
            xyz = p[None, :] + taus[:, None] * d[None, :]
            A = eval_A_batch(config, gauge, xyz, np.full(len(taus), t))
            total += float(np.sum(wts * (A @ d)))
    return total
