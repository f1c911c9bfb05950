"""Multiwell potential W and modulation a.

W is smooth, 1-periodic, even, vanishes exactly on the integers and is
positive elsewhere, with W''(0) != 0.  The modulation a is a bounded
positive coefficient multiplying W' in the stationary equation; a generic
nonconstant a is what makes homoclinic and multibump equilibria possible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInputError, InvalidModulationError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Potential:
    """Triple of callables (W, W', W'') plus metadata; period fixed to 1."""

    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    deriv2: Callable[[np.ndarray], np.ndarray]
    period: float = 1.0
    name: str = "custom"

    @property
    def max_deriv(self) -> float:
        """max |W'| over one period, sampled densely."""
        u = np.linspace(0.0, self.period, 4097)
        return float(np.max(np.abs(self.deriv(u))))

    @property
    def max_deriv2(self) -> float:
        u = np.linspace(0.0, self.period, 4097)
        return float(np.max(np.abs(self.deriv2(u))))


@dataclass(frozen=True)
class Modulation:
    """Spatial modulation a(x) with bounds 0 < a_min <= a <= a_max.

    ``period`` is the oscillation period P_a (np.inf for aperiodic, e.g.
    the constant modulation).
    """

    eval: Callable[[np.ndarray], np.ndarray]
    a_min: float
    a_max: float
    period: float = np.inf
    amplitude: float = 0.0


def standard_potential() -> Potential:
    """The cosine multiwell potential W(u) = (1 - cos(2*pi*u)) / (4*pi^2).

    Normalized so W''(0) = 1; for s = 1/2 the heteroclinic of the
    stationary equation is then 1/2 + arctan(x)/pi in closed form, which
    gives exact oracles downstream.
    """

    def w(u):
        return (1.0 - np.cos(TWO_PI * np.asarray(u, dtype=float))) / (4.0 * np.pi**2)

    def dw(u):
        return np.sin(TWO_PI * np.asarray(u, dtype=float)) / TWO_PI

    def d2w(u):
        return np.cos(TWO_PI * np.asarray(u, dtype=float))

    return Potential(eval=w, deriv=dw, deriv2=d2w, period=1.0, name="standard-cosine")


def constant_modulation(value: float = 1.0) -> Modulation:
    if value <= 0.0:
        raise InvalidModulationError(f"modulation must be positive, got {value}")
    return Modulation(eval=lambda x: np.full_like(np.asarray(x, dtype=float), value),
                      a_min=value, a_max=value, period=np.inf, amplitude=0.0)


def cosine_modulation(amplitude: float, period: float) -> Modulation:
    """a(x) = 1 + amplitude * cos(2*pi*x/period); requires amplitude in [0, 1)."""
    if not 0.0 <= amplitude < 1.0:
        raise InvalidModulationError(
            f"amplitude must lie in [0, 1) to keep a_min > 0, got {amplitude}")
    if period <= 0.0:
        raise InvalidModulationError(f"period must be positive, got {period}")
    if amplitude == 0.0:
        return constant_modulation(1.0)

    def a(x):
        return 1.0 + amplitude * np.cos(TWO_PI * np.asarray(x, dtype=float) / period)

    return Modulation(eval=a, a_min=1.0 - amplitude, a_max=1.0 + amplitude,
                      period=period, amplitude=amplitude)


POTENTIALS: dict[str, Callable[[], Potential]] = {
    "standard-cosine": standard_potential,
}


def potential_from_name(name: str) -> Potential:
    try:
        return POTENTIALS[name]()
    except KeyError:
        raise InvalidModulationError(
            f"unknown potential {name!r}; known: {sorted(POTENTIALS)}") from None


@dataclass
class PotentialReport:
    """Result of sampling-based validation of the Potential invariants."""

    passed: bool
    max_violation: float
    failures: list[str] = field(default_factory=list)
    checks: dict[str, float] = field(default_factory=dict)


def validate_potential(p: Potential, samples: int = 1000,
                       tol: float = 1e-13) -> PotentialReport:
    """Check wells, positivity, periodicity, evenness and W''(0) != 0.

    All checks are on uniform samples; the report carries the worst
    violation per check and an overall pass flag.
    """
    if samples < 8:
        raise InvalidInputError(f"need at least 8 samples, got {samples}")
    checks: dict[str, float] = {}
    failures: list[str] = []

    ks = np.arange(-2, 3, dtype=float) * p.period
    checks["wells"] = float(np.max(np.abs(p.eval(ks))))
    if checks["wells"] > 1e-14:
        failures.append("wells")

    # positivity off the integers: sample strictly inside (0, 1)
    r = (np.arange(1, samples) / samples) * p.period
    interior = r[(r % p.period > 1e-6) & (r % p.period < p.period - 1e-6)]
    wmin = float(np.min(p.eval(interior)))
    checks["positivity"] = -min(wmin, 0.0)
    if wmin <= 0.0:
        failures.append("positivity")

    r = np.linspace(-2.0, 2.0, samples) * p.period
    checks["periodicity"] = float(np.max(np.abs(p.eval(r + p.period) - p.eval(r))))
    if checks["periodicity"] > tol:
        failures.append("periodicity")
    checks["evenness"] = float(np.max(np.abs(p.eval(-r) - p.eval(r))))
    if checks["evenness"] > tol:
        failures.append("evenness")

    d2 = float(p.deriv2(0.0))
    checks["curvature_at_zero"] = abs(d2)
    if abs(d2) < 1e-10:
        failures.append("curvature_at_zero")

    max_violation = max(checks["wells"], checks["positivity"],
                        checks["periodicity"], checks["evenness"])
    return PotentialReport(passed=not failures, max_violation=max_violation,
                           failures=failures, checks=checks)
