"""Constrained-minimization construction of multibump equilibria.

For s in (1/2, 1) (the finite-energy range for layers) the stationary
equation (-Delta)^s u + a(x) W'(u) = 0 admits heteroclinic, homoclinic and
multibump solutions when the modulation a is nonconstant.  They are built
by minimizing the (renormalized) energy

    J(u) = 1/2 <u - r, A (u - r)> + <A r, u - r> + sum h a(x_j) W(u_j)

over profiles pinned to integer levels inside prescribed windows
(|u - zeta_i| <= 1/100 on window nodes) and matching the end levels
outside the grid (Dirichlet closure).  Here r is a smoothed monotone ramp
between the end levels that renormalizes the otherwise divergent quadratic
part; its exterior is exactly the end levels, so the gradient of J is the
honest Euler-Lagrange operator A u + a W'(u).

The minimizer must detach from the window boundaries: an interior local
minimizer is a genuine solution, while an active constraint at convergence
signals bad window placement (e.g. a homoclinic attempted with constant
a, which cannot exist) and raises a constrained-touching error.

Minimization is projected gradient descent with Armijo backtracking in a
fixed spectral metric (the descent direction is preconditioned by
(I + (-Delta)^s)^(-1), which removes the stiff-mode step restriction);
energy decrease is enforced at every accepted step and all termination
checks use the true gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConstrainedTouchingError, InvalidConfigError,
                     InvalidInputError, InvalidLevelsError, SolverFailureError)
from .fraclap import FarField, Field, Grid1D, fit_far_field, line_operator
from .layers import Heteroclinic, solve_heteroclinic
from .potential import Modulation, Potential

__all__ = [
    "Window", "WindowSet", "ConstrainedSolution", "build_windows",
    "minimize_constrained", "energy_of", "DELTA_W",
]

DELTA_W = 1.0 / 100.0


@dataclass(frozen=True)
class Window:
    lo: float                       # -inf for the left end region
    hi: float                       # +inf for the right end region
    level: int


@dataclass(frozen=True)
class WindowSet:
    windows: tuple[Window, ...]
    delta_w: float = DELTA_W
    spacing: float = 0.0
    width: float = 0.0

    def __post_init__(self):
        levels = [w.level for w in self.windows]
        if len(levels) < 2:
            raise InvalidLevelsError("need at least two windows")
        # jumps of exactly 1 are the consecutive-well hypothesis; equal
        # consecutive levels are tolerated as the degenerate constant piece
        if any(abs(b - a) > 1 for a, b in zip(levels, levels[1:])):
            raise InvalidLevelsError("consecutive levels may differ by at most 1")
        finite = [(w.lo, w.hi) for w in self.windows]
        his = [hi for _, hi in finite[:-1]]
        los = [lo for lo, _ in finite[1:]]
        if any(lo <= hi for hi, lo in zip(his, los)):
            raise InvalidConfigError("windows must be disjoint and ordered")

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(w.level for w in self.windows)

    @property
    def end_levels(self) -> tuple[int, int]:
        return self.windows[0].level, self.windows[-1].level

    def gap_midpoints(self) -> list[float]:
        return [0.5 * (a.hi + b.lo)
                for a, b in zip(self.windows[:-1], self.windows[1:])]

    def span(self) -> tuple[float, float]:
        lo = self.windows[0].hi if math.isinf(self.windows[0].lo) else self.windows[0].lo
        hi = self.windows[-1].lo if math.isinf(self.windows[-1].hi) else self.windows[-1].hi
        return lo, hi

    def mask(self, x: np.ndarray) -> np.ndarray:
        """Integer window index per node (-1 where unconstrained)."""
        idx = np.full(x.shape, -1, dtype=int)
        for k, w in enumerate(self.windows):
            idx[(x >= w.lo) & (x <= w.hi)] = k
        return idx


def build_windows(levels, a: Modulation, spacing: float) -> WindowSet:
    """Place one window per level so that every inter-window gap contains a
    minimum of the modulation strictly inside.

    Interior windows have width P_a (the modulation period); the first and
    last windows extend to -/+ infinity.  The spacing is rounded up to an
    even multiple of P_a, which puts the gap midpoints exactly on minima of
    the cosine modulation.  For a constant modulation (P_a = inf) the width
    defaults to spacing/4 and no alignment is attempted.
    """
    levels = [int(v) for v in levels]
    if len(levels) < 2:
        raise InvalidLevelsError("need at least two levels")
    if any(abs(b - a_) != 1 for a_, b in zip(levels, levels[1:])):
        raise InvalidLevelsError("consecutive levels must differ by exactly 1")
    if math.isfinite(a.period):
        if spacing < 2.0 * a.period:
            raise InvalidConfigError("spacing must be at least two modulation periods")
        width = a.period
        spacing = 2.0 * a.period * math.ceil(spacing / (2.0 * a.period) - 1e-12)
        c0 = 0.5 * a.period
    else:
        width = spacing / 4.0
        c0 = 0.0
    centers = [c0 + i * spacing for i in range(len(levels))]
    wins = []
    for i, (c, lev) in enumerate(zip(centers, levels)):
        lo = -math.inf if i == 0 else c - 0.5 * width
        hi = math.inf if i == len(levels) - 1 else c + 0.5 * width
        wins.append(Window(lo=lo, hi=hi, level=lev))
    return WindowSet(windows=tuple(wins), spacing=spacing, width=width)


@dataclass
class ConstrainedSolution:
    profile: Field
    windows: WindowSet
    energy: float
    el_residual: float
    detachment_margin: float
    iterations: int
    energy_history: np.ndarray = field(default=None, repr=False)


def _ramp(x: np.ndarray, x0: float, x1: float, lev0: float, lev1: float,
          smooth: float) -> np.ndarray:
    """Monotone ramp lev0 -> lev1, linear on [x0, x1], box-smoothed twice
    over `smooth` (C^1, exactly constant outside the widened ramp)."""
    r = lev0 + (lev1 - lev0) * np.clip((x - x0) / max(x1 - x0, 1e-12), 0.0, 1.0)
    h = x[1] - x[0]
    k = max(1, int(round(smooth / h)))
    ker = np.ones(k) / k
    for _ in range(2):
        r = np.convolve(np.pad(r, (k, k), mode="edge"), ker, mode="same")[k:-k]
    return r


def _quadratic_energy(op, u: np.ndarray, r: np.ndarray, Fr: np.ndarray,
                      h: float, zero_far: FarField) -> tuple[float, np.ndarray]:
    """Renormalized quadratic part and its gradient A u (levels exterior)."""
    d = u - r
    Ad = op.apply(d, zero_far)
    quad = 0.5 * h * float(np.dot(d, Ad)) + h * float(np.dot(Fr, d))
    return quad, Ad + Fr


def energy_of(profile: Field, s: float, p: Potential, a: Modulation,
              u_ref: np.ndarray | None = None) -> float:
    """1/2 <u - r, A (u - r)> + sum h a W(u) with r the end-level ramp."""
    grid = profile.grid
    x = grid.nodes
    far = profile.far
    if u_ref is None:
        lo, hi = x[0] + 0.25 * grid.length, x[-1] - 0.25 * grid.length
        u_ref = _ramp(x, lo, hi, far.l_minus, far.l_plus, 0.1 * grid.length)
    op = line_operator(grid, float(s), far.beta if far else 2.0 * s)
    zero_far = FarField(0.0, 0.0, far.beta if far else 2.0 * s)
    d = profile.values - u_ref
    quad = 0.5 * grid.h * float(np.dot(d, op.apply(d, zero_far)))
    pot = grid.h * float(np.sum(a.eval(x) * p.eval(profile.values)))
    return quad + pot


def minimize_constrained(windows: WindowSet, s: float, p: Potential,
                         a: Modulation, grid: Grid1D, tol: float = 1e-5,
                         het: Heteroclinic | None = None,
                         max_iter: int = 40000) -> ConstrainedSolution:
    """Minimize the renormalized energy subject to the window constraints.

    Accepts only a minimizer strictly inside the constraints (detachment
    margin > 0) whose Euler-Lagrange residual off the windows is below
    tol; active constraints at convergence raise ConstrainedTouchingError.
    """
    if not 0.5 < s < 1.0:
        raise InvalidInputError("constrained minimization needs s in (1/2, 1)")
    x = grid.nodes
    h = grid.h
    lev0, lev1 = windows.end_levels
    span_lo, span_hi = windows.span()
    if x[0] > span_lo - 0.5 * windows.spacing or x[-1] < span_hi + 0.5 * windows.spacing:
        raise InvalidConfigError("grid must cover the windows with margin")

    beta = 2.0 * s
    op = line_operator(grid, float(s), beta)
    zero_far = FarField(0.0, 0.0, beta)
    lev_far = FarField(float(lev0), float(lev1), beta)

    smooth = windows.width if windows.width > 0 else 0.05 * grid.length
    r = _ramp(x, span_lo, span_hi, lev0, lev1, smooth)
    Fr = op.apply(r, lev_far)

    widx = windows.mask(x)
    wlev = np.zeros(grid.n)
    for k, w in enumerate(windows.windows):
        wlev[widx == k] = w.level
    constrained = widx >= 0
    dw = windows.delta_w

    def project(u):
        out = u.copy()
        out[constrained] = np.clip(out[constrained],
                                   wlev[constrained] - dw, wlev[constrained] + dw)
        return out

    # initial guess: unit-scale layers at the gap midpoints (inside the
    # feasible set after projection)
    if het is None:
        het = solve_heteroclinic(s, p, Grid1D.symmetric(100.0, 2**12 + 1), tol=1e-8)
    u = np.full(grid.n, float(lev0))
    for m, (wa, wb) in zip(windows.gap_midpoints(),
                           zip(windows.windows[:-1], windows.windows[1:])):
        step = wb.level - wa.level
        # step * u*(x - m) runs 0 -> step either way (odd symmetry of u*)
        u = u + step * het.eval_at(x - m)
    u = project(u)

    ax = a.eval(x)

    def objective(uu):
        quad, _ = _quadratic_energy(op, uu, r, Fr, h, zero_far)
        return quad + h * float(np.sum(ax * p.eval(uu)))

    def gradient(uu):
        _, Au = _quadratic_energy(op, uu, r, Fr, h, zero_far)
        return Au + ax * p.deriv(uu)

    # spectral preconditioner for the free variables (two-metric projection:
    # binding box constraints take a plain scaled-gradient step, so the
    # non-diagonal metric never turns the projected step into ascent)
    L = 1
    while L < 2 * grid.n:
        L *= 2
    xi = 2.0 * np.pi * np.fft.rfftfreq(L, d=h)
    sym = np.abs(xi) ** (2.0 * s)

    def precondition(g):
        buf = np.zeros(L)
        buf[:grid.n] = g
        out = np.fft.irfft(np.fft.rfft(buf) / (1.0 + sym), n=L)
        return out[:grid.n]

    diag_scale = 1.0 + a.a_max * p.max_deriv2 + (np.pi / h) ** (2.0 * s) * h
    band = 1e-10
    lower = wlev - dw
    upper = wlev + dw

    def direction_of(uu, g):
        binding = constrained & (((uu <= lower + band) & (g > 0.0))
                                 | ((uu >= upper - band) & (g < 0.0)))
        gf = np.where(binding, 0.0, g)
        d = precondition(gf)
        d[binding] = g[binding] / diag_scale
        return d

    J = objective(u)
    history = [J]
    alpha = 1.0
    it = 0
    g = gradient(u)
    stalled = False
    while it < max_iter:
        it += 1
        direction = direction_of(u, g)
        accepted = False
        for _ in range(50):
            u_new = project(u - alpha * direction)
            decrease = float(np.dot(g, u - u_new)) * h
            J_new = objective(u_new)
            if J_new <= J - 1e-4 * decrease and J_new <= J:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            stalled = True
            break
        u, J = u_new, J_new
        history.append(J)
        alpha = min(alpha * 1.25, 1.5)
        g = gradient(u)
        pg = u - project(u - g)
        if float(np.max(np.abs(pg))) < 0.2 * tol:
            break
    if it >= max_iter or stalled:
        pg_res = float(np.max(np.abs(u - project(u - g))))
        margin = float(np.min(dw - np.abs(u[constrained] - wlev[constrained])))
        if margin <= 1e-9:
            raise ConstrainedTouchingError(
                "minimizer driven onto a window boundary (margin "
                f"{margin:.2e}); windows are badly placed for this modulation")
        raise SolverFailureError(
            f"constrained minimization stalled (projected gradient {pg_res:.2e})",
            residual=pg_res)

    margin = float(np.min(dw - np.abs(u[constrained] - wlev[constrained])))
    el = gradient(u)
    el_off = float(np.max(np.abs(el[~constrained])))
    if margin <= 1e-9:
        raise ConstrainedTouchingError(
            "minimizer touches a window boundary (margin "
            f"{margin:.2e}); windows are badly placed for this modulation")
    if el_off > tol:
        raise SolverFailureError(
            f"Euler-Lagrange residual {el_off:.2e} above tol {tol:.1e} "
            "at the projected stationary point", residual=el_off)

    far = fit_far_field(grid, u, beta, float(lev0), float(lev1))
    prof = Field(grid, u, "decaying", far)
    energy = energy_of(prof, s, p, a, u_ref=r)
    return ConstrainedSolution(profile=prof, windows=windows, energy=energy,
                               el_residual=el_off, detachment_margin=margin,
                               iterations=it,
                               energy_history=np.asarray(history))
