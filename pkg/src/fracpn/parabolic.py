"""Scaled parabolic flow eps dv/dt = -(-Delta)^s v - eps^(-2s) W'(v).

The solver splits v(t) = B + w(t) where B is the (time-frozen) initial
well-prepared field: the stiff nonlocal term acts on B once through the
whole-line quadrature operator (respecting the algebraic tails and the
unequal limits at -/+ infinity), while the update w has decaying equal
limits and is evolved by an IMEX pseudospectral step on a periodic cell
padded to several times the layer span.  The fractional symbol is treated
implicitly (unconditionally stable), the reaction explicitly, with

    dt <= min(eps^(2s) h^(2s), eps^(1+2s) / max|W''|) / 4.

Dislocation cores are read off as slope peaks of the snapshots and linked
into tracks; merged tracks mark collisions.  Downstream measurements
verify the particle-ODE limit, the post-collision exponential relaxation,
and the parity-of-ell classification of the terminal state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, InvalidInputError, StabilityError
from .fraclap import FarField, Field, Grid1D, line_operator
from .layers import Heteroclinic, superpose_layers, superpose_values
from .particles import LayerConfig, integrate
from .potential import Potential

__all__ = [
    "ParabolicRun", "CoreTracks", "RelaxationFit", "evolve", "extract_cores",
    "convergence_study", "measure_relaxation", "classify_asymptotics",
    "run_layers",
]


@dataclass
class ParabolicRun:
    s: float
    eps: float
    grid: Grid1D                     # computational line grid (uniform)
    times: np.ndarray                # snapshot times
    snapshots: np.ndarray            # shape (len(times), n)
    config: LayerConfig | None = None
    potential_name: str = "standard-cosine"
    focus: tuple[float, float] | None = None   # span of the physical window

    def snapshot_field(self, k: int, far: FarField) -> Field:
        return Field(self.grid, self.snapshots[k], "decaying", far)


@dataclass
class CoreTracks:
    times: np.ndarray
    tracks: np.ndarray               # shape (n_tracks, len(times)), NaN outside life
    merges: list[dict] = field(default_factory=list)   # {"time", "position", "tracks"}
    births: list[dict] = field(default_factory=list)   # {"time", "position", "track"}

    def alive_at(self, k: int) -> np.ndarray:
        col = self.tracks[:, k]
        return np.sort(col[np.isfinite(col)])


@dataclass
class RelaxationFit:
    T_eps: float
    rate: float                      # c_fit > 0 for accepted fits
    rho: float
    r_squared: float
    accepted: bool
    memory_stat: float | None = None
    v_inf_kind: str = "zero"
    sups: np.ndarray | None = None
    fit_times: np.ndarray | None = None


def _next_pow2(n: int) -> int:
    m = 1
    while m < n:
        m *= 2
    return m


def evolve(initial: Field, s: float, eps: float, t_end: float, dt_out: float,
           potential: Potential, config: LayerConfig | None = None,
           pad_factor: float = 4.0, h_target: float | None = None,
           background=None) -> ParabolicRun:
    """March the scaled parabolic equation from a well-prepared field.

    The computational cell is the initial grid padded to `pad_factor` times
    its span; the background part of the splitting keeps the exact far-field
    limits, so unbalanced configurations (l- != l+) are handled without
    artificial seams.  `background`, when given, evaluates the initial field
    at arbitrary points (avoids resampling error); it must agree with
    `initial` on its grid.
    """
    if initial.far is None:
        raise InvalidConfigError("initial field needs a far-field closure")
    if t_end <= 0 or dt_out <= 0:
        raise InvalidConfigError("t_end and dt_out must be positive")
    span = initial.grid.length
    center = 0.5 * (initial.grid.left + initial.grid.right)
    cell_len = pad_factor * span
    h0 = h_target if h_target is not None else initial.grid.h
    n = _next_pow2(int(np.ceil(cell_len / h0)))
    h = cell_len / n
    left = center - 0.5 * cell_len
    comp = Grid1D(left, left + (n - 1) * h, n, cell=False)
    x = comp.nodes

    B = background(x) if background is not None else initial.model_values(x)
    far = initial.far
    op = line_operator(comp, float(s), far.beta)
    F0 = -op.apply(B, far)

    xi = 2.0 * np.pi * np.fft.rfftfreq(n, d=h)
    sym = np.abs(xi) ** (2.0 * s)

    twos = 2.0 * s
    dt_rule = min(eps**twos * h**twos, eps ** (1.0 + twos) / potential.max_deriv2) / 4.0
    k_sub = max(1, int(np.ceil(dt_out / dt_rule)))
    dt = dt_out / k_sub
    n_out = int(round(t_end / dt_out))

    lo_env = float(B.min()) - 1.2
    hi_env = float(B.max()) + 1.2

    inv_eps2s = eps ** (-twos)
    denom = 1.0 + (dt / eps) * sym
    w = np.zeros(n)
    times = [0.0]
    snaps = [B.copy()]
    for m in range(1, n_out + 1):
        for _ in range(k_sub):
            v = B + w
            N = F0 - inv_eps2s * potential.deriv(v)
            w = np.fft.irfft((np.fft.rfft(w) + (dt / eps) * np.fft.rfft(N)) / denom, n=n)
        v = B + w
        if v.max() > hi_env or v.min() < lo_env:
            raise StabilityError(
                f"solution left the comparison envelope at t={m * dt_out:.4g}; "
                "reduce the time step")
        times.append(m * dt_out)
        snaps.append(v.copy())
    return ParabolicRun(s=float(s), eps=float(eps), grid=comp,
                        times=np.asarray(times), snapshots=np.asarray(snaps),
                        config=config, potential_name=potential.name,
                        focus=(initial.grid.left, initial.grid.right))


def run_layers(het: Heteroclinic, cfg: LayerConfig, eps: float, t_end: float,
               dt_out: float, potential: Potential, pad: float | None = None,
               h_target: float | None = None, pad_factor: float = 4.0) -> ParabolicRun:
    """Convenience wrapper: superpose layers, then evolve.

    The background is re-evaluated from the layer profile on the
    computational grid, so no resampling error enters the splitting.
    """
    initial = superpose_layers(het, cfg, eps, pad=pad, h_target=h_target)
    return evolve(initial, het.s, eps, t_end, dt_out, potential,
                  config=cfg, pad_factor=pad_factor,
                  background=lambda x: superpose_values(het, cfg, eps, x))


# ---------------------------------------------------------------------------
# core extraction and track linking
# ---------------------------------------------------------------------------

def _find_cores(x: np.ndarray, v: np.ndarray, h: float, threshold: float) -> np.ndarray:
    """Positions of local maxima of |dv/dx| above threshold, refined by a
    quadratic fit of the slope peak."""
    d = np.abs(np.gradient(v, h))
    inner = d[1:-1]
    peaks = np.where((inner >= d[:-2]) & (inner >= d[2:]) & (inner > threshold))[0] + 1
    if peaks.size == 0:
        return np.empty(0)
    # collapse runs of adjacent indices (plateaus)
    groups = np.split(peaks, np.where(np.diff(peaks) > 1)[0] + 1)
    out = []
    for grp in groups:
        i = int(grp[np.argmax(d[grp])])
        dm, d0, dp = d[i - 1], d[i], d[i + 1]
        denom = dm - 2.0 * d0 + dp
        off = 0.5 * (dm - dp) / denom if denom != 0.0 else 0.0
        off = float(np.clip(off, -0.5, 0.5))
        out.append(x[i] + off * h)
    return np.asarray(sorted(out))


def extract_cores(run: ParabolicRun, max_layer_slope: float | None = None) -> CoreTracks:
    """Track slope-peak cores across snapshots (greedy nearest-neighbor).

    A drop in the core count between snapshots is recorded as a merge event
    (the collision signature), not an error.
    """
    if len(run.times) < 2:
        raise InvalidConfigError("need at least two snapshots to track cores")
    x = run.grid.nodes
    h = run.grid.h
    if max_layer_slope is None:
        # the initial well-prepared field has slope max|u*'|/eps at each core
        max_layer_slope = run.eps * float(np.max(np.abs(np.gradient(run.snapshots[0], h))))
    threshold = 0.5 * max_layer_slope / run.eps

    from itertools import combinations

    first = _find_cores(x, run.snapshots[0], h, threshold)
    T = len(run.times)
    rows = [np.full(T, np.nan) for _ in first]
    for i, c in enumerate(first):
        rows[i][0] = c
    alive = list(range(len(rows)))
    merges: list[dict] = []
    births: list[dict] = []
    for k in range(1, T):
        found = _find_cores(x, run.snapshots[k], h, threshold)
        prev = np.array([rows[i][k - 1] for i in alive])
        if len(found) >= len(prev):
            # match previous tracks to the displacement-minimizing ordered
            # subset of the new cores; leftover cores start new tracks
            best, best_cost = tuple(range(len(prev))), 0.0
            if len(found) > len(prev):
                best, best_cost = None, np.inf
                for keep in combinations(range(len(found)), len(prev)):
                    cost = float(np.sum(np.abs(found[list(keep)] - prev)))
                    if cost < best_cost:
                        best, best_cost = keep, cost
            for ii, j in enumerate(best):
                rows[alive[ii]][k] = found[j]
            for j in range(len(found)):
                if j not in best:
                    rows.append(np.full(T, np.nan))
                    rows[-1][k] = found[j]
                    alive.append(len(rows) - 1)
                    births.append({"time": float(run.times[k]),
                                   "position": float(found[j]),
                                   "track": len(rows) - 1})
        else:
            # cores vanished: keep the assignment minimizing displacement
            # over ordered subsets; vanished pairs mark a merge event
            best, best_cost = None, np.inf
            for keep in combinations(range(len(prev)), len(found)):
                cost = float(np.sum(np.abs(prev[list(keep)] - found)))
                if cost < best_cost:
                    best, best_cost = keep, cost
            gone = [alive[i] for i in range(len(prev)) if i not in best]
            for ii, j in enumerate(best):
                rows[alive[j]][k] = found[ii]
            pos = float(np.mean([rows[i][k - 1] for i in gone])) if gone else np.nan
            merges.append({"time": float(run.times[k]), "position": pos,
                           "tracks": tuple(gone)})
            alive = [alive[j] for j in best]
    tracks = np.vstack(rows) if rows else np.empty((0, T))
    return CoreTracks(times=run.times.copy(), tracks=tracks, merges=merges,
                      births=births)


# ---------------------------------------------------------------------------
# PDE -> ODE convergence study
# ---------------------------------------------------------------------------

def convergence_study(cfg: LayerConfig, s: float, eps_list, t_grid,
                      potential: Potential, het: Heteroclinic,
                      gammas: dict[str, float], pad: float | None = None,
                      pad_factor: float = 4.0,
                      h_rule=None) -> dict:
    """sup-over-t core-vs-particle errors for each eps and gamma convention.

    The particle trajectories (one per supplied gamma) are the oracle; the
    returned table reports, per eps, the sup over t_grid and over cores of
    the distance, plus the convention with the smallest error at the
    finest eps.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 2:
        raise InvalidConfigError("t_grid needs at least two times")
    dt_out = float(t_grid[1] - t_grid[0])
    if not np.allclose(np.diff(t_grid), dt_out):
        raise InvalidConfigError("t_grid must be uniform")
    eps_list = list(eps_list)
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise InvalidConfigError("eps_list must be decreasing")

    particle_paths = {}
    for name, g in gammas.items():
        traj = integrate(cfg, s, g, float(t_grid[-1]) * 1.0001)
        particle_paths[name] = np.vstack([traj.at(t) for t in t_grid])

    errors: dict[float, dict[str, float]] = {}
    cores_by_eps = {}
    for eps in eps_list:
        h_target = eps / 8.0 if h_rule is None else h_rule(eps)
        run = run_layers(het, cfg, eps, float(t_grid[-1]), dt_out, potential,
                         pad=pad, h_target=h_target, pad_factor=pad_factor)
        tracks = extract_cores(run)
        if tracks.tracks.shape[0] != cfg.N:
            raise InvalidConfigError(
                f"expected {cfg.N} cores, found {tracks.tracks.shape[0]}")
        idx = [int(round(t / dt_out)) for t in t_grid]
        core_pos = tracks.tracks[:, idx].T      # (len(t_grid), N)
        cores_by_eps[eps] = core_pos
        errors[eps] = {}
        for name, path in particle_paths.items():
            errors[eps][name] = float(np.nanmax(np.abs(core_pos - path)))

    finest = eps_list[-1]
    best = min(errors[finest], key=errors[finest].get)
    return {"errors": errors, "best_convention": best,
            "cores": cores_by_eps, "particles": particle_paths,
            "t_grid": t_grid}


# ---------------------------------------------------------------------------
# relaxation and asymptotics
# ---------------------------------------------------------------------------

def _focus_slice(run: ParabolicRun, margin: float = 0.0) -> slice:
    lo, hi = run.focus if run.focus is not None else (run.grid.left, run.grid.right)
    x = run.grid.nodes
    i0 = int(np.searchsorted(x, lo + margin))
    i1 = int(np.searchsorted(x, hi - margin))
    return slice(max(i0, 0), min(i1, run.grid.n))


def _heteroclinic_candidate(run: ParabolicRun, het: Heteroclinic,
                            level_base: float, x_star: float) -> np.ndarray:
    return level_base + het.eval_at((run.grid.nodes - x_star) / run.eps)


def measure_relaxation(run: ParabolicRun, after: float, het: Heteroclinic | None = None,
                       min_snapshots: int = 20, floor: float | None = None) -> RelaxationFit:
    """Fit log sup|v - v_inf| affine in t on [after, t_end].

    v_inf is zero for balanced configurations; for odd ell it is the
    shifted heteroclinic fitted at the mid-level crossing of the terminal
    snapshot.  Snapshots whose sup has fallen below `floor` (the
    discretization plateau) are excluded from the fit.  Also records the
    memory statistic: the largest value of v observed at the (first)
    merge point.
    """
    cfg = run.config
    ell = cfg.ell if cfg is not None else 0
    sl = _focus_slice(run)
    x = run.grid.nodes[sl]
    terminal = run.snapshots[-1][sl]
    if ell == 0:
        v_inf = np.zeros_like(x)
        kind = "zero"
    elif ell % 2 == 1:
        if het is None:
            raise InvalidInputError("odd-ell relaxation needs the heteroclinic")
        mid = 0.5 * ell
        x_star = float(np.interp(mid, np.maximum.accumulate(terminal), x))
        v_inf = (ell - 1) / 2.0 + het.eval_at((x - x_star) / run.eps)
        kind = "heteroclinic"
    else:
        v_inf = np.full_like(x, ell / 2.0)
        kind = "constant"

    mask = run.times >= after - 1e-12
    if int(mask.sum()) < min_snapshots:
        raise InvalidConfigError(
            f"need >= {min_snapshots} snapshots after t={after}, have {int(mask.sum())}")
    tt = run.times[mask]
    sups = np.array([float(np.max(np.abs(run.snapshots[k][sl] - v_inf)))
                     for k in np.where(mask)[0]])
    good = sups > (floor if floor is not None else 0.0)
    need = min(8, max(2, min_snapshots))
    if int(good.sum()) < need:
        raise InvalidConfigError(f"fewer than {need} snapshots above the fit floor")
    logs = np.log(sups[good])
    tg = tt[good]
    A = np.vstack([np.ones_like(tg), tg]).T
    (b0, b1), res_, *_ = np.linalg.lstsq(A, logs, rcond=None)
    pred = A @ np.array([b0, b1])
    ss_res = float(np.sum((logs - pred) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    rate = -float(b1)

    memory = None
    tracks = extract_cores(run)
    if tracks.merges:
        xc = tracks.merges[0]["position"]
        i = int(np.argmin(np.abs(run.grid.nodes - xc)))
        memory = float(np.max(run.snapshots[:, i]))

    return RelaxationFit(T_eps=float(tt[0]), rate=rate,
                         rho=float(np.exp(b0 + b1 * tt[0])), r_squared=r2,
                         accepted=rate > 0.0, memory_stat=memory,
                         v_inf_kind=kind, sups=sups, fit_times=tt)


def classify_asymptotics(cfg: LayerConfig, run: ParabolicRun,
                         het: Heteroclinic | None = None,
                         threshold: float = 0.15) -> dict:
    """Terminal-state classification: zero / constant ell/2 / heteroclinic
    (ell-1)/2 -> (ell+1)/2, decided by the predicted parity of ell and
    checked against distances to all three candidates."""
    ell = cfg.ell
    sgn = 1.0
    if ell < 0:
        sgn, ell = -1.0, -ell
    sl = _focus_slice(run)
    x = run.grid.nodes[sl]
    vT = sgn * run.snapshots[-1][sl]

    tracks = extract_cores(run)
    alive = tracks.alive_at(len(run.times) - 1)
    excl_width = 12.0 * run.eps
    if len(alive) >= 2:
        # escaping layers: the uniform candidates live between the
        # outermost survivors (locally-uniform convergence on compacts)
        region = (x > alive[0] + excl_width) & (x < alive[-1] - excl_width)
        het_region = region
    else:
        region = np.ones_like(x, dtype=bool)
        for c in alive:
            region &= np.abs(x - c) > excl_width
        het_region = np.ones_like(x, dtype=bool)
    if not np.any(region):
        return {"classification": "unclassified", "reason": "no core-free region",
                "distances": {}}

    distances = {}
    distances["zero"] = float(np.max(np.abs(vT[region])))
    distances[f"constant {ell}/2"] = float(np.max(np.abs(vT[region] - 0.5 * ell)))
    het_label = f"heteroclinic {(ell - 1) // 2}->{(ell + 1) // 2}"
    if het is not None:
        mid = 0.5 * ell
        mono = np.maximum.accumulate(vT)
        x_star = float(np.interp(mid, mono, x))
        cand = (ell - 1) / 2.0 + het.eval_at((x - x_star) / run.eps)
        distances[het_label] = float(np.max(np.abs(vT[het_region] - cand[het_region])))

    predicted = ("zero" if ell == 0 else
                 f"constant {ell}/2" if ell % 2 == 0 else het_label)
    best = min(distances, key=distances.get)
    ok = best == predicted and distances[best] < threshold
    return {"classification": best if ok else "unclassified",
            "predicted": predicted, "distances": distances,
            "matches_prediction": best == predicted,
            "surviving_cores": alive.tolist()}
