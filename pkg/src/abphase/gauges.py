"""Gauge freedom: smooth scalar functions chi(r, t) with analytic derivatives.

A gauge function shifts the potentials as A -> A + grad(chi), V -> V - d(chi)/dt
while leaving E and B untouched.  Derivatives are supplied analytically and can
be cross-checked against finite differences.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import GaugeConsistencyError


class BaseGauge(enum.Enum):
    """Base potential convention.

    SYMMETRIC_SOLENOID: each solenoid contributes a purely azimuthal vector
    potential and no scalar potential of its own; scalar potentials come from
    cages only.
    """

    SYMMETRIC_SOLENOID = "symmetric_solenoid"


@dataclass(frozen=True)
class GaugeFunction:
    """chi(r, t) with vectorized value, spatial gradient and time derivative.

    Callables accept (xyz, t) with xyz of shape (n, 3) and t of shape (n,)
    and return shapes (n,), (n, 3) and (n,) respectively.
    """

    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray, np.ndarray], np.ndarray]
    time_derivative: Callable[[np.ndarray, np.ndarray], np.ndarray]
    label: str = "chi"


@dataclass(frozen=True)
class GaugeState:
    """Base gauge choice plus an optional gauge function."""

    base_gauge: BaseGauge = BaseGauge.SYMMETRIC_SOLENOID
    chi: Optional[GaugeFunction] = None

    def self_check(self, xyz: np.ndarray, t: np.ndarray, step: float = 1e-4,
                   tol: float = 1e-6) -> float:
        """Verify the supplied chi derivatives against central differences.

        Returns the worst residual; raises GaugeConsistencyError beyond tol.
        """
        if self.chi is None:
            return 0.0
        xyz = np.atleast_2d(np.asarray(xyz, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), (xyz.shape[0],))
        worst = 0.0
        grad = self.chi.gradient(xyz, t)
        for axis in range(3):
            dx = np.zeros(3)
            dx[axis] = step
            fd = (self.chi.value(xyz + dx, t) - self.chi.value(xyz - dx, t)) / (2 * step)
            worst = max(worst, float(np.max(np.abs(fd - grad[:, axis]))))
        fd_t = (self.chi.value(xyz, t + step) - self.chi.value(xyz, t - step)) / (2 * step)
        worst = max(worst, float(np.max(np.abs(fd_t - self.chi.time_derivative(xyz, t)))))
        if worst > tol:
            raise GaugeConsistencyError(
                f"gauge function {self.chi.label!r}: finite-difference residual "
                f"{worst:.3e} exceeds {tol:.1e} at step {step:.1e}"
            )
        return worst


def monomial_gauge(terms: dict, label: str = "poly") -> GaugeFunction:
    """chi = sum of c * x^i y^j z^k t^l given as {(i, j, k, l): c}."""
    items = [(np.array(powers, dtype=int), float(c)) for powers, c in terms.items()]

    def _pow(base, exponent):
        if exponent == 0:
            return np.ones_like(base)
        return base ** exponent

    def value(xyz, t):
        out = np.zeros(xyz.shape[0])
        for powers, c in items:
            out += c * (_pow(xyz[:, 0], powers[0]) * _pow(xyz[:, 1], powers[1])
                        * _pow(xyz[:, 2], powers[2]) * _pow(t, powers[3]))
        return out

    def gradient(xyz, t):
        out = np.zeros_like(xyz)
        for axis in range(3):
            acc = np.zeros(xyz.shape[0])
            for powers, c in items:
                if powers[axis] == 0:
                    continue
                term = c * powers[axis] * _pow(xyz[:, axis], powers[axis] - 1)
                for other in range(3):
                    if other != axis:
                        term = term * _pow(xyz[:, other], powers[other])
                acc += term * _pow(t, powers[3])
            out[:, axis] = acc
        return out

    def time_derivative(xyz, t):
        acc = np.zeros(xyz.shape[0])
        for powers, c in items:
            if powers[3] == 0:
                continue
            term = c * powers[3] * _pow(t, powers[3] - 1)
            for axis in range(3):
                term = term * _pow(xyz[:, axis], powers[axis])
            acc += term
        return acc

    return GaugeFunction(value, gradient, time_derivative, label=label)


def linear_time_gauge(rate: float, label: str = "c*t") -> GaugeFunction:
    """chi = rate * t, a pure scalar-potential offset."""
    return monomial_gauge({(0, 0, 0, 1): rate}, label=label)


def gaussian_gauge(amplitude: float, center, width: float, t_center: float,
                   t_width: float, label: str = "gaussian") -> GaugeFunction:
    """chi = A exp(-|r - c|^2 / 2w^2) exp(-(t - tc)^2 / 2tw^2)."""
    c = np.asarray(center, dtype=float)

    def _parts(xyz, t):
        rel = xyz - c
        spatial = np.exp(-np.sum(rel * rel, axis=1) / (2 * width ** 2))
        temporal = np.exp(-((t - t_center) ** 2) / (2 * t_width ** 2))
        return rel, spatial, temporal

    def value(xyz, t):
        _, spatial, temporal = _parts(xyz, t)
        return amplitude * spatial * temporal

    def gradient(xyz, t):
        rel, spatial, temporal = _parts(xyz, t)
        return (-amplitude / width ** 2) * rel * (spatial * temporal)[:, None]

    def time_derivative(xyz, t):
        _, spatial, temporal = _parts(xyz, t)
        return amplitude * spatial * temporal * (-(t - t_center) / t_width ** 2)

    return GaugeFunction(value, gradient, time_derivative, label=label)


def random_gauge_functions(n: int, rng: np.random.Generator, box_lo, box_hi,
                           t_lo: float, t_hi: float) -> list[GaugeFunction]:
    """Mixed bag of gentle polynomial and Gaussian-bump gauge functions.

    Scales are kept moderate so composite quadrature resolves them to well
    below the gauge-invariance audit tolerance.
    """
    box_lo = np.asarray(box_lo, dtype=float)
    box_hi = np.asarray(box_hi, dtype=float)
    out = []
    for i in range(n):
        if i % 2 == 0:
            terms = {}
            for powers in ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0, 1), (1, 0, 0, 1),
                           (0, 1, 0, 1), (1, 1, 0, 0), (2, 0, 0, 0), (0, 2, 0, 1)):
                terms[powers] = rng.uniform(-0.05, 0.05)
            out.append(monomial_gauge(terms, label=f"poly[{i}]"))
        else:
            center = rng.uniform(box_lo, box_hi)
            out.append(
                gaussian_gauge(
                    amplitude=rng.uniform(-0.3, 0.3),
                    center=center,
                    width=rng.uniform(0.6, 1.5),
                    t_center=rng.uniform(t_lo, t_hi),
                    t_width=rng.uniform(0.6, 1.5),
                    label=f"gaussian[{i}]",
                )
            )
    return out
