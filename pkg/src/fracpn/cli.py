"""Experiment runner: subcommands for every solver, plus acceptance suites.

All outputs are deterministic (identical config -> byte-identical CSV and
summary JSON); the per-run manifest.json additionally records the config
hash, package version and wall time.  Exit codes: 0 success, 2 invalid
configuration, 3 solver failure; a failed acceptance suite exits 1 with
the itemized report.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidConfigError, SolverError, ValidationError
from .fraclap import FarField, Field, Grid1D
from .homog import (CellProblem, meanfield_vs_particles, orowan_scan,
                    solve_cell, solve_meanfield)
from .io import (read_field_csv, read_json, write_cores_csv, write_field_csv,
                 write_json, write_table_csv, write_trajectory_csv)
from .layers import (GAMMA_CONVENTIONS, compute_gamma, fit_decay_exponent,
                     solve_heteroclinic, superpose_layers)
from .multibump import build_windows, minimize_constrained
from .parabolic import (classify_asymptotics, extract_cores,
                        measure_relaxation, run_layers)
from .particles import LayerConfig, collision_bounds, integrate
from .potential import (cosine_modulation, constant_modulation,
                        potential_from_name, standard_potential)
from .suites import SUITE_NAMES, run_suite


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DISLOC_THREADS", "1")))
    except ValueError:
        return 1


def map_sweep(fn, items):
    """Run independent sweep points, optionally in parallel."""
    n = _threads()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _manifest(out: Path, cfg: dict, t0: float) -> None:
    write_json({"config_hash": _config_hash(cfg), "version": __version__,
                "wall_time_s": time.time() - t0}, out / "manifest.json")


def _modulation_from(cfg: dict):
    mod = cfg.get("modulation")
    if not mod or mod.get("amplitude", 0.0) == 0.0:
        return constant_modulation(1.0)
    return cosine_modulation(float(mod["amplitude"]), float(mod["period"]))


def _gamma_for(s: float, value, convention: str, L: float = 200.0,
               n: int = 2**13 + 1) -> float:
    if value is None or (isinstance(value, str) and value == "auto"):
        het = solve_heteroclinic(s, standard_potential(),
                                 Grid1D.symmetric(L, n), tol=1e-9)
        return compute_gamma(het, convention).gamma
    return float(value)


# ---------------------------------------------------------------------------
# experiment implementations (shared by subcommands and `run`)
# ---------------------------------------------------------------------------

def exp_heteroclinic(cfg: dict, out: Path) -> None:
    s = float(cfg.get("s", 0.5))
    L = float(cfg.get("L", 200.0))
    n = int(cfg.get("n", 2**13 + 1))
    tol = float(cfg.get("tol", 1e-9))
    pot = potential_from_name(cfg.get("potential", "standard-cosine"))
    het = solve_heteroclinic(s, pot, Grid1D.symmetric(L, n), tol=tol)
    write_field_csv(het.profile, out / "profile.csv")
    write_json({
        "s": s,
        "gamma_norm": compute_gamma(het, "reciprocal-norm").gamma,
        "gamma_norm_sq": compute_gamma(het, "reciprocal-norm-squared").gamma,
        "gamma_effective": compute_gamma(het, "effective").gamma,
        "residual": het.residual,
        "decay_fit": fit_decay_exponent(het),
        "iterations": het.iterations,
    }, out / "summary.json")


def exp_multibump(cfg: dict, out: Path) -> None:
    levels = [int(v) for v in cfg["levels"]]
    s = float(cfg.get("s", 0.75))
    a = _modulation_from(cfg)
    pot = potential_from_name(cfg.get("potential", "standard-cosine"))
    spacing = float(cfg.get("spacing", 4.0 * a.period if np.isfinite(a.period)
                            else 40.0))
    ws = build_windows(levels, a, spacing)
    lo, hi = ws.span()
    margin = float(cfg.get("margin", spacing + 5.0))
    h = float(cfg.get("h", 0.05))
    grid = Grid1D(lo - margin, hi + margin, int((hi - lo + 2 * margin) / h) + 1)
    sol = minimize_constrained(ws, s, pot, a, grid, tol=float(cfg.get("tol", 1e-5)))
    write_field_csv(sol.profile, out / "profile.csv")
    write_json({"energy": sol.energy, "residual": sol.el_residual,
                "detachment_margin": sol.detachment_margin,
                "iterations": sol.iterations,
                "levels": levels}, out / "summary.json")


def exp_particles(cfg: dict, out: Path) -> None:
    lay = LayerConfig.make(cfg["positions"], cfg["orientations"])
    s = float(cfg.get("s", 0.5))
    convention = cfg.get("gamma_convention", "effective")
    gamma = _gamma_for(s, cfg.get("gamma", "auto"), convention)
    t_end = float(cfg.get("t_end", 1.0))
    traj = integrate(lay, s, gamma, t_end,
                     gap_tol=cfg.get("gap_tol"))
    write_trajectory_csv(out / "trajectory.csv", traj.times, traj.positions)
    bounds = collision_bounds(lay, s, gamma, a0=cfg.get("a0"))
    coll = None
    if traj.collision is not None:
        coll = {"T_c": traj.collision.T_c,
                "indices": list(traj.collision.indices),
                "type": traj.collision.kind,
                "bound_checks": traj.collision.bound_checks,
                "bounds": bounds}
    write_json({"status": traj.status, "gamma": gamma, "s": s,
                "collision": coll}, out / "collision.json")


def exp_parabolic(cfg: dict, out: Path) -> None:
    lay = LayerConfig.make(cfg["positions"], cfg["orientations"])
    s = float(cfg.get("s", 0.5))
    eps = float(cfg["eps"])
    t_end = float(cfg["t_end"])
    dt_out = float(cfg.get("dt_out", t_end / 40.0))
    pot = potential_from_name(cfg.get("potential", "standard-cosine"))
    het = solve_heteroclinic(s, pot, Grid1D.symmetric(
        float(cfg.get("L_het", 200.0)), int(cfg.get("n_het", 2**13 + 1))), tol=1e-9)
    run = run_layers(het, lay, eps, t_end, dt_out, pot,
                     pad=cfg.get("pad"), h_target=cfg.get("h_target"))
    for k, t in enumerate(run.times):
        write_table_csv(out / f"snapshot_{k:04d}.csv", ["x", "value"],
                        zip(run.grid.nodes.tolist(), run.snapshots[k].tolist()))
    tracks = extract_cores(run)
    write_cores_csv(out / "cores.csv", tracks.times, tracks.tracks)
    summary = {"s": s, "eps": eps,
               "classification": None, "relaxation": None, "memory_stat": None,
               "merges": tracks.merges}
    cls = classify_asymptotics(lay, run, het)
    summary["classification"] = cls["classification"]
    summary["distances"] = cls["distances"]
    # full deviation-from-terminal-state curve, for the relaxation figure
    curve = measure_relaxation(run, after=0.0, het=het, min_snapshots=2)
    write_table_csv(out / "relaxation.csv", ["t", "sup_deviation"],
                    zip(curve.fit_times.tolist(), curve.sups.tolist()))
    if tracks.merges and cfg.get("measure_relaxation", True):
        after = tracks.merges[0]["time"] + float(cfg.get("relax_buffer", 0.0))
        try:
            fit = measure_relaxation(run, after=after, het=het,
                                     floor=float(cfg.get("relax_floor", 5e-4)),
                                     min_snapshots=int(cfg.get("min_snapshots", 8)))
            summary["relaxation"] = {"T_eps": fit.T_eps, "rate": fit.rate,
                                     "rho": fit.rho, "r_squared": fit.r_squared}
            summary["memory_stat"] = fit.memory_stat
        except (ValidationError, SolverError) as exc:
            summary["relaxation"] = {"error": str(exc)}
    write_json(summary, out / "summary.json")


def exp_cell(cfg: dict, out: Path) -> None:
    s = float(cfg.get("s", 0.5))
    p = float(cfg.get("p", 0.0))
    L = float(cfg.get("L", 0.0))
    tau_end = float(cfg.get("tau_end", 400.0))
    pot = potential_from_name(cfg.get("potential", "standard-cosine"))
    cp = (CellProblem(s=s, p=p, L=L, period=float(cfg["period"]))
          if "period" in cfg else CellProblem.for_slope(s, p, L))
    res = solve_cell(cp, tau_end, pot)
    write_table_csv(out / "hbar.csv", ["p", "L", "lambda", "spread"],
                    [[cp.p, cp.L, res.lam, res.spread]])
    write_json({"lambda": res.lam, "spread": res.spread,
                "window_slopes": res.window_slopes,
                "converged": res.converged, "tau_end": res.tau_end},
               out / "summary.json")


def exp_orowan(cfg: dict, out: Path) -> None:
    s = float(cfg.get("s", 0.5))
    p0 = float(cfg.get("p0", 1.0))
    L0 = float(cfg.get("L0", 1.0))
    eps_list = [float(e) for e in cfg.get("eps", [0.4, 0.2, 0.1])]
    convention = cfg.get("gamma_convention", "reciprocal-norm-squared")
    gamma = _gamma_for(s, cfg.get("gamma", "auto"), convention)
    pot = potential_from_name(cfg.get("potential", "standard-cosine"))
    # sweep points are independent; DISLOC_THREADS caps the parallelism
    scans = map_sweep(lambda e: orowan_scan(s, p0, L0, [e], gamma, pot), eps_list)
    rows = [r for sc in scans for r in sc["rows"]]
    scan = {"rows": rows, "partial": any(sc["partial"] for sc in scans),
            "s": s, "p0": p0, "L0": L0, "gamma": gamma}
    write_table_csv(out / "orowan.csv", ["eps", "lambda", "ratio"],
                    [[r["eps"], r["lambda"], r["ratio"]] for r in rows])
    write_json(scan, out / "summary.json")


def _meanfield_initial(cfg: dict) -> Field:
    init = cfg["init"]
    if isinstance(init, str):
        if init.endswith(".csv"):
            return read_field_csv(init)
        init = read_json(init)
    kind = init.get("kind", "tanh-ramp")
    if kind == "tanh-ramp":
        L = float(init.get("L", 6.0))
        n = int(init.get("n", 1025))
        width = float(init.get("width", 1.0))
        lo = float(init.get("lo", 0.0))
        hi = float(init.get("hi", 1.0))
        g = Grid1D.symmetric(L, n)
        vals = lo + (hi - lo) * 0.5 * (1.0 + np.tanh(g.nodes / width))
        return Field(g, vals, "decaying", FarField(lo, hi, 2.0))
    if kind == "layer-sum":
        s = float(init.get("s", 0.5))
        het = solve_heteroclinic(s, standard_potential(),
                                 Grid1D.symmetric(200.0, 2**13 + 1), tol=1e-9)
        ys = [float(v) for v in init["positions"]]
        delta = float(init["delta"])
        width = float(init.get("width", 0.02))
        pad = float(init.get("pad", 2.0))
        lay = LayerConfig.make(ys, [1] * len(ys))
        g = Grid1D(ys[0] - pad, ys[-1] + pad,
                   int((ys[-1] - ys[0] + 2 * pad) / (width / 4.0)) + 1)
        vals = np.zeros(g.n)
        for y in ys:
            vals += delta * het.eval_at((g.nodes - y) / width)
        return Field(g, vals, "decaying",
                     FarField(0.0, delta * lay.N, 2.0 * s))
    raise InvalidConfigError(f"unknown mean-field initial kind {kind!r}")


def exp_meanfield(cfg: dict, out: Path) -> None:
    u0 = _meanfield_initial(cfg)
    convention = cfg.get("gamma_convention", "reciprocal-norm-squared")
    gamma = _gamma_for(0.5, cfg.get("gamma", "auto"), convention)
    t_end = float(cfg["t_end"])
    dt_out = float(cfg.get("dt_out", t_end / 10.0))
    run = solve_meanfield(u0, gamma, t_end, dt_out)
    for k, t in enumerate(run.times):
        write_table_csv(out / f"snapshot_{k:04d}.csv", ["x", "value"],
                        zip(run.grid.nodes.tolist(), run.snapshots[k].tolist()))
    mono = all(bool(np.all(np.diff(snap) >= -1e-12)) for snap in run.snapshots)
    write_json({"gamma": gamma, "monotone_preserved": mono,
                "mass_drift": float(np.max(np.abs(run.mass_history
                                                  - run.mass_history[0]))),
                "times": run.times.tolist()}, out / "summary.json")


EXPERIMENTS = {
    "heteroclinic": exp_heteroclinic,
    "multibump": exp_multibump,
    "particles": exp_particles,
    "parabolic": exp_parabolic,
    "cell": exp_cell,
    "orowan": exp_orowan,
    "meanfield": exp_meanfield,
}


def run_experiment(cfg: dict, out: Path) -> None:
    name = cfg.get("experiment")
    if name not in EXPERIMENTS:
        raise InvalidConfigError(
            f"unknown experiment {name!r}; options: {sorted(EXPERIMENTS)}")
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    EXPERIMENTS[name](cfg, out)
    _manifest(out, cfg, t0)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def _orients(text: str) -> list[int]:
    table = {"+": 1, "+1": 1, "1": 1, "-": -1, "-1": -1}
    try:
        return [table[tok.strip()] for tok in text.split(",") if tok.strip()]
    except KeyError as exc:
        raise InvalidConfigError(f"bad orientation token {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracpn",
                                 description="fractional Peierls-Nabarro laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    h = sub.add_parser("heteroclinic", help="solve the 0->1 layer profile")
    h.add_argument("--s", type=float, required=True)
    h.add_argument("--L", type=float, default=200.0)
    h.add_argument("--n", type=int, default=2**13 + 1)
    h.add_argument("--tol", type=float, default=1e-9)
    h.add_argument("--out", default="out/heteroclinic")

    m = sub.add_parser("multibump", help="constrained multibump equilibrium")
    m.add_argument("--levels", required=True)
    m.add_argument("--s", type=float, default=0.75)
    m.add_argument("--amp", type=float, default=0.3)
    m.add_argument("--period", type=float, default=10.0)
    m.add_argument("--spacing", type=float, default=None)
    m.add_argument("--h", type=float, default=0.05)
    m.add_argument("--out", default="out/multibump")

    pa = sub.add_parser("particles", help="integrate the particle ODE system")
    pa.add_argument("--positions", required=True)
    pa.add_argument("--orient", required=True)
    pa.add_argument("--s", type=float, default=0.5)
    pa.add_argument("--gamma", default="auto")
    pa.add_argument("--gamma-convention", default="effective",
                    choices=GAMMA_CONVENTIONS)
    pa.add_argument("--t-end", type=float, default=1.0)
    pa.add_argument("--a0", type=float, default=None)
    pa.add_argument("--out", default="out/particles")

    pb = sub.add_parser("parabolic", help="scaled parabolic evolution")
    pb.add_argument("--config", required=True)
    pb.add_argument("--out", default="out/parabolic")

    ce = sub.add_parser("cell", help="homogenization cell problem")
    ce.add_argument("--s", type=float, default=0.5)
    ce.add_argument("--p", type=float, default=0.0)
    ce.add_argument("--L", type=float, default=0.0)
    ce.add_argument("--tau-end", type=float, default=400.0)
    ce.add_argument("--out", default="out/cell")

    orw = sub.add_parser("orowan", help="Orowan small-(p,L) ratio scan")
    orw.add_argument("--s", type=float, default=0.5)
    orw.add_argument("--p0", type=float, default=1.0)
    orw.add_argument("--L0", type=float, default=1.0)
    orw.add_argument("--eps", default="0.4,0.2,0.1")
    orw.add_argument("--gamma", default="auto")
    orw.add_argument("--gamma-convention", default="reciprocal-norm-squared",
                     choices=GAMMA_CONVENTIONS)
    orw.add_argument("--out", default="out/orowan")

    mf = sub.add_parser("meanfield", help="mean-field transport equation")
    mf.add_argument("--init", required=True)
    mf.add_argument("--t-end", type=float, required=True)
    mf.add_argument("--dt-out", type=float, default=None)
    mf.add_argument("--gamma", default="auto")
    mf.add_argument("--out", default="out/meanfield")

    su = sub.add_parser("suite", help="run an acceptance bundle")
    su.add_argument("name", choices=SUITE_NAMES)
    su.add_argument("--out", default="out/suite")

    ru = sub.add_parser("run", help="run an experiment from a JSON config")
    ru.add_argument("config")
    ru.add_argument("--out", default=None)
    return ap


def _cfg_from_args(args) -> dict:
    cmd = args.command
    if cmd == "heteroclinic":
        return {"experiment": cmd, "s": args.s, "L": args.L, "n": args.n,
                "tol": args.tol}
    if cmd == "multibump":
        cfg = {"experiment": cmd, "levels": _floats(args.levels),
               "s": args.s, "h": args.h,
               "modulation": {"amplitude": args.amp, "period": args.period}}
        if args.spacing is not None:
            cfg["spacing"] = args.spacing
        return cfg
    if cmd == "particles":
        return {"experiment": cmd, "positions": _floats(args.positions),
                "orientations": _orients(args.orient), "s": args.s,
                "gamma": args.gamma, "gamma_convention": args.gamma_convention,
                "t_end": args.t_end, "a0": args.a0}
    if cmd == "cell":
        return {"experiment": cmd, "s": args.s, "p": args.p, "L": args.L,
                "tau_end": args.tau_end}
    if cmd == "orowan":
        return {"experiment": cmd, "s": args.s, "p0": args.p0, "L0": args.L0,
                "eps": _floats(args.eps), "gamma": args.gamma,
                "gamma_convention": args.gamma_convention}
    if cmd == "meanfield":
        cfg = {"experiment": cmd, "init": args.init, "t_end": args.t_end,
               "gamma": args.gamma}
        if args.dt_out is not None:
            cfg["dt_out"] = args.dt_out
        return cfg
    raise InvalidConfigError(f"no direct config for {cmd}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "suite":
            report = run_suite(args.name)
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            write_json(report, out / "report.json")
            for c in report["criteria"]:
                print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}")
            if not report["passed"]:
                failed = [c["name"] for c in report["criteria"] if not c["passed"]]
                print(f"suite {args.name}: FAILED: {failed}", file=sys.stderr)
                return 1
            print(f"suite {args.name}: all criteria passed")
            return 0
        if args.command == "run":
            cfg = read_json(args.config)
            out = Path(args.out) if args.out else Path("out") / Path(args.config).stem
            run_experiment(cfg, out)
            return 0
        if args.command == "parabolic":
            cfg = read_json(args.config)
            cfg["experiment"] = "parabolic"
            run_experiment(cfg, Path(args.out))
            return 0
        cfg = _cfg_from_args(args)
        run_experiment(cfg, Path(args.out))
        return 0
    except (ValidationError, KeyError, json.JSONDecodeError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
