"""Interacting-particle dynamics of dislocation cores.

The cores x_1 < ... < x_N with orientations zeta_i in {-1, +1} obey

    dx_i/dt = gamma sum_{j != i} zeta_i zeta_j (x_i - x_j) / (2s |x_i - x_j|^(1+2s)),

a gradient flow of a pairwise potential: equal orientations repel,
opposite orientations attract and collide in finite time T_c.  The system
stops at the first collision; T_c is recovered by extrapolating the
vanishing gap, whose (2s+1)-th power is asymptotically affine in time
(exact for an isolated pair).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidConfigError, SingularStateError

__all__ = [
    "LayerConfig", "ParticleTrajectory", "CollisionReport", "rhs",
    "pair_potential", "interaction_energy", "integrate", "collision_bounds",
    "ordering_persistence_check", "two_body_collision_time",
    "triple_collision_constant",
]


@dataclass(frozen=True)
class LayerConfig:
    """Initial dislocation positions and orientations."""

    positions: tuple[float, ...]
    orientations: tuple[int, ...]

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        z = np.asarray(self.orientations, dtype=int)
        if x.ndim != 1 or x.size == 0 or x.shape != z.shape:
            raise InvalidConfigError("positions/orientations must be equal-length 1-D")
        if not np.all(np.diff(x) > 0):
            raise InvalidConfigError("positions must be strictly increasing")
        if not np.all(np.isin(z, (-1, 1))):
            raise InvalidConfigError("orientations must be +/-1")

    @classmethod
    def make(cls, positions, orientations) -> "LayerConfig":
        return cls(tuple(float(p) for p in positions),
                   tuple(int(z) for z in orientations))

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)

    @property
    def zeta(self) -> np.ndarray:
        return np.asarray(self.orientations, dtype=int)

    @property
    def N(self) -> int:
        return len(self.positions)

    @property
    def K(self) -> int:
        return int(np.sum(self.zeta == -1))

    @property
    def ell(self) -> int:
        return self.N - 2 * self.K

    def alternate(self) -> bool:
        z = self.zeta
        return bool(np.all(z[1:] * z[:-1] == -1))


@dataclass
class CollisionReport:
    T_c: float
    indices: tuple[int, ...]
    kind: str                       # "pair" | "triple"
    gap_at_stop: float
    bound_checks: list[dict] = field(default_factory=list)


@dataclass
class ParticleTrajectory:
    config: LayerConfig
    s: float
    gamma: float
    times: np.ndarray
    positions: np.ndarray           # shape (len(times), N)
    status: str                     # "running" | "collided"
    collision: CollisionReport | None = None

    def at(self, t: float) -> np.ndarray:
        """Positions at time t by per-particle interpolation of the stored samples."""
        return np.array([np.interp(t, self.times, self.positions[:, i])
                         for i in range(self.config.N)])


def rhs(positions: np.ndarray, orientations: np.ndarray, s: float,
        gamma: float) -> np.ndarray:
    """Velocities of the pairwise signed 1/|x|^(2s) interaction."""
    x = np.asarray(positions, dtype=float)
    z = np.asarray(orientations, dtype=float)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, np.nan)
    if np.any(np.abs(dx[~np.isnan(dx)]) == 0.0):
        raise SingularStateError("coincident particle positions")
    with np.errstate(invalid="ignore"):
        term = (z[:, None] * z[None, :]) * dx / (2.0 * s * np.abs(dx) ** (1.0 + 2.0 * s))
    np.fill_diagonal(term, 0.0)
    return gamma * term.sum(axis=1)


def pair_potential(r: np.ndarray, s: float) -> np.ndarray:
    """Antiderivative psi with psi'(r) = 1/(2 s r^(2s)); log at s = 1/2."""
    r = np.asarray(r, dtype=float)
    if abs(s - 0.5) < 1e-14:
        return np.log(r)
    return r ** (1.0 - 2.0 * s) / (2.0 * s * (1.0 - 2.0 * s))


def interaction_energy(positions: np.ndarray, orientations: np.ndarray,
                       s: float, gamma: float) -> float:
    """Energy whose (negative) gradient is `rhs`; decreases along orbits."""
    x = np.asarray(positions, dtype=float)
    z = np.asarray(orientations, dtype=float)
    e = 0.0
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            e -= gamma * z[i] * z[j] * pair_potential(abs(x[i] - x[j]), s)
    return float(e)


def two_body_collision_time(d0: float, s: float, gamma: float) -> float:
    """Closed form for an isolated opposite pair: the gap obeys
    (d^(2s+1))' = -(2s+1) gamma / s, so T_c = s d0^(2s+1) / ((2s+1) gamma)."""
    return s * d0 ** (2.0 * s + 1.0) / ((2.0 * s + 1.0) * gamma)


def triple_collision_constant(s: float) -> float:
    """C = 2^(2s+1) / (2^(2s) - 1) in the three-body alternate bound."""
    return 2.0 ** (2.0 * s + 1.0) / (2.0 ** (2.0 * s) - 1.0)


def _extrapolate_root(t: np.ndarray, gap: np.ndarray, s: float) -> float:
    """Root of the affine fit to gap^(2s+1) over the final samples."""
    p = gap ** (2.0 * s + 1.0)
    k = min(len(t), 12)
    tt, pp = t[-k:], p[-k:]
    A = np.vstack([np.ones_like(tt), tt]).T
    (c0, c1), *_ = np.linalg.lstsq(A, pp, rcond=None)
    if c1 >= 0.0:
        return float(t[-1])
    return float(-c0 / c1)


def integrate(cfg: LayerConfig, s: float, gamma: float, t_end: float,
              gap_tol: float | None = None, rtol: float = 1e-9,
              atol: float = 1e-12) -> ParticleTrajectory:
    """Adaptive RK45 integration with collision event detection.

    The integration stops when the minimal gap crosses gap_tol (default
    1e-4 of the minimal initial gap); T_c is then extrapolated from the
    affine law of gap^(2s+1).
    """
    x0 = cfg.x
    z = cfg.zeta
    if cfg.N == 1:
        times = np.array([0.0, t_end])
        return ParticleTrajectory(cfg, s, gamma, times,
                                  np.repeat(x0[None, :], 2, axis=0), "running")
    gaps0 = np.diff(x0)
    if gap_tol is None:
        gap_tol = 1e-4 * float(gaps0.min())
    if gap_tol >= gaps0.min():
        raise InvalidConfigError("gap_tol must be far below the initial gaps")

    def f(t, y):
        return rhs(y, z, s, gamma)

    def min_gap_event(t, y):
        return float(np.min(np.diff(y))) - gap_tol

    min_gap_event.terminal = True
    min_gap_event.direction = -1.0

    attracting = np.any(z[1:] * z[:-1] == -1)
    events = [min_gap_event] if attracting else None
    try:
        sol = solve_ivp(f, (0.0, t_end), x0, method="RK45", rtol=rtol, atol=atol,
                        events=events, dense_output=False)
    except (SingularStateError, FloatingPointError) as exc:
        if not attracting:
            raise SingularStateError(f"integration failed: {exc}") from exc
        sol = None

    stopped_at_event = (sol is not None and attracting and sol.t_events
                        and len(sol.t_events[0]) > 0)
    step_underflow = sol is None or (attracting and sol.status == -1)
    if sol is not None:
        times = sol.t
        traj = sol.y.T
    if step_underflow and (sol is None or len(sol.t) < 2):
        raise SingularStateError("integration failed before any accepted step")
    if stopped_at_event or step_underflow:
        if stopped_at_event:
            t_ev = float(sol.t_events[0][0])
            x_ev = sol.y_events[0][0]
            times = np.append(times, t_ev)
            traj = np.vstack([traj, x_ev])
        else:
            # step underflow below the minimum step: report the collision
            # from the last accepted state
            x_ev = traj[-1]
        gaps = np.diff(x_ev)
        i0 = int(np.argmin(gaps))
        # extrapolate T_c from the closing gap; a triple collision shows as a
        # neighboring gap vanishing at the same extrapolated time
        gap_hist = np.diff(traj, axis=1)
        T_c = _extrapolate_root(times, gap_hist[:, i0], s)
        indices: tuple[int, ...] = (i0, i0 + 1)
        kind = "pair"
        for j in (i0 - 1, i0 + 1):
            if 0 <= j < cfg.N - 1 and j != i0:
                if gap_hist[-1, j] < 10.0 * gap_tol:
                    T_j = _extrapolate_root(times, gap_hist[:, j], s)
                    if abs(T_j - T_c) < 2e-3 * max(T_c, 1e-300):
                        kind = "triple"
                        indices = tuple(sorted({i0, i0 + 1, j, j + 1}))
        report = CollisionReport(T_c=T_c, indices=indices, kind=kind,
                                 gap_at_stop=float(gaps[i0]))
        report.bound_checks = evaluate_bound_checks(
            T_c, collision_bounds(cfg, s, gamma))
        return ParticleTrajectory(cfg, s, gamma, times, traj, "collided", report)
    return ParticleTrajectory(cfg, s, gamma, times, traj, "running")


def evaluate_bound_checks(T_c: float, bounds: list[dict]) -> list[dict]:
    """Per-clause (bound, satisfied) records for a measured collision time."""
    checks = []
    for b in bounds:
        if not b.get("applicable"):
            continue
        entry = {"clause": b["clause"]}
        if "bound" in b:
            entry["bound"] = b["bound"]
            entry["satisfied"] = bool(T_c <= b["bound"] * (1.0 + 1e-9))
        else:
            entry["bound"] = [b["lower"], b["upper"]]
            entry["satisfied"] = bool(b["lower"] * (1.0 - 1e-9) <= T_c
                                      <= b["upper"] * (1.0 + 1e-9))
        checks.append(entry)
    return checks


def collision_bounds(cfg: LayerConfig, s: float, gamma: float,
                     a0: float | None = None) -> list[dict]:
    """Evaluate the applicable collision-time bounds for this configuration.

    Clause (i): isolated opposite pair, T_c <= s d^(2s+1)/((2s+1) gamma)
    (equality for N = 2; the stated form without the 2s+1 exponent is
    dimensionally inconsistent and is recorded as `literal_reading`).
    Clause (ii): three alternate particles, T_c in [tau, C tau].
    Clause (iii): one pair much closer than the rest, with margin a0.
    Clause (iv): N alternate particles, bound from the total span with a
    parity-dependent prefactor.
    """
    x, z, N = cfg.x, cfg.zeta, cfg.N
    gaps = np.diff(x)
    out: list[dict] = []

    if N == 2 and cfg.K == 1:
        d = float(gaps[0])
        out.append({
            "clause": "i", "applicable": True,
            "bound": two_body_collision_time(d, s, gamma),
            "literal_reading": s * d / ((2.0 * s + 1.0) * gamma),
            "tight": True,
        })
    else:
        out.append({"clause": "i", "applicable": False,
                    "reason": "needs N=2, K=1"})

    if N == 3 and cfg.alternate():
        dmin = float(gaps.min())
        tau = two_body_collision_time(dmin, s, gamma)
        C = triple_collision_constant(s)
        out.append({"clause": "ii", "applicable": True,
                    "tau": tau, "C": C, "lower": tau, "upper": C * tau,
                    "triple_iff_equal_gaps": bool(abs(gaps[0] - gaps[1]) < 1e-12)})
    else:
        out.append({"clause": "ii", "applicable": False,
                    "reason": "needs N=3 alternate"})

    opp = np.where(z[1:] * z[:-1] == -1)[0]
    if N >= 2 and cfg.K <= N - 1 and opp.size > 0 and a0 is not None:
        a0_max = (N - 2) ** (-1.0 / (2.0 * s)) if N > 2 else math.inf
        if not 0.0 < a0 < a0_max:
            out.append({"clause": "iii", "applicable": False,
                        "reason": "a0 outside (0, (N-2)^(-1/(2s)))"})
        else:
            done = False
            for i0 in opp:
                others = np.delete(gaps, i0)
                if others.size == 0 or gaps[i0] <= a0 * others.min():
                    denom = (2.0 * s + 1.0) * gamma * (1.0 - (N - 2) * a0 ** (2.0 * s))
                    out.append({
                        "clause": "iii", "applicable": True, "i0": int(i0),
                        "a0": a0,
                        "bound": s * gaps[i0] ** (2.0 * s + 1.0) / denom,
                        "literal_reading": s * gaps[i0] / denom,
                    })
                    done = True
                    break
            if not done:
                out.append({"clause": "iii", "applicable": False,
                            "reason": "close-pair hypothesis fails for this a0"})
    else:
        out.append({"clause": "iii", "applicable": False,
                    "reason": "needs an opposite pair and a supplied a0"})

    if N >= 2 and cfg.alternate():
        span = float(x[-1] - x[0])
        pref = (N - 1.0) if N % 2 == 1 else s
        out.append({"clause": "iv", "applicable": True,
                    "bound": pref * span ** (2.0 * s + 1.0) / ((2.0 * s + 1.0) * gamma),
                    "parity": "odd" if N % 2 == 1 else "even"})
    else:
        out.append({"clause": "iv", "applicable": False,
                    "reason": "needs alternate orientations"})
    return out


@dataclass
class OrderingReport:
    ok: bool
    checked: str
    margin: float
    n_samples: int


def ordering_persistence_check(cfg: LayerConfig, s: float, gamma: float,
                               a0: float | None = None,
                               t_end: float | None = None) -> OrderingReport:
    """Verify gap-order persistence along the trajectory.

    For N = 3 alternate: the initially smaller gap stays smaller up to T_c.
    For a clause-(iii) configuration: the close-pair gap stays below a0
    times the minimum of the other gaps.
    """
    x = cfg.x
    gaps0 = np.diff(x)
    if t_end is None:
        t_end = 10.0 * two_body_collision_time(float(gaps0.min()), s, gamma)
    traj = integrate(cfg, s, gamma, t_end)
    gap_hist = np.diff(traj.positions, axis=1)

    if cfg.N == 3 and cfg.alternate() and a0 is None:
        d12, d23 = gaps0
        if abs(d12 - d23) < 1e-14:
            margin = float(np.max(np.abs(gap_hist[:, 0] - gap_hist[:, 1])))
            return OrderingReport(ok=margin < 1e-9, checked="equal-gap symmetry",
                                  margin=margin, n_samples=len(traj.times))
        sign = 1.0 if d12 < d23 else -1.0
        diffs = sign * (gap_hist[:, 1] - gap_hist[:, 0])
        return OrderingReport(ok=bool(np.all(diffs > 0.0)),
                              checked="smaller gap stays smaller",
                              margin=float(diffs.min()), n_samples=len(traj.times))

    if a0 is not None:
        opp = np.where(cfg.zeta[1:] * cfg.zeta[:-1] == -1)[0]
        i0 = None
        for i in opp:
            others = np.delete(gaps0, i)
            if gaps0[i] <= a0 * others.min():
                i0 = int(i)
                break
        if i0 is None:
            raise InvalidConfigError("no close opposite pair satisfies the a0 hypothesis")
        ratios = []
        for k in range(len(traj.times)):
            others = np.delete(gap_hist[k], i0)
            ratios.append(gap_hist[k, i0] / others.min())
        ratios = np.asarray(ratios)
        return OrderingReport(ok=bool(np.all(ratios <= a0 * (1.0 + 1e-9))),
                              checked="close-pair ratio stays below a0",
                              margin=float(a0 - ratios.max()),
                              n_samples=len(traj.times))
    raise InvalidConfigError("config matches neither supported hypothesis")
