import numpy as np
import pytest

from fracpn.errors import InvalidConfigError
from fracpn.fraclap import FarField, Field, Grid1D
from fracpn.layers import compute_gamma, solve_heteroclinic
from fracpn.parabolic import (classify_asymptotics, convergence_study, evolve,
                              extract_cores, measure_relaxation, run_layers)
from fracpn.particles import LayerConfig, two_body_collision_time
from fracpn.potential import standard_potential

POT = standard_potential()


@pytest.fixture(scope="module")
def het():
    return solve_heteroclinic(0.5, POT, Grid1D.symmetric(200.0, 2**13 + 1), tol=1e-9)


@pytest.fixture(scope="module")
def gamma_eff(het):
    return compute_gamma(het, "effective").gamma


def test_zero_initial_stays_zero():
    g = Grid1D.symmetric(5.0, 257)
    z0 = Field(g, np.zeros(257), "decaying", FarField(0, 0, 1.0))
    run = evolve(z0, 0.5, 0.1, 0.2, 0.05, POT)
    assert np.max(np.abs(run.snapshots)) == 0.0


def test_single_layer_stationary(het):
    # u*((x - xbar)/eps) is an exact equilibrium of the scaled flow
    run = run_layers(het, LayerConfig.make([0.0], [1]), 0.1, 1.0, 0.25, POT, pad=8.0)
    drift = np.max(np.abs(run.snapshots - run.snapshots[0]))
    assert drift < 1e-4
    tracks = extract_cores(run)
    assert tracks.tracks.shape[0] == 1
    assert np.nanmax(np.abs(tracks.tracks[0])) < run.grid.h


def test_envelope_invariant(het, gamma_eff):
    cfg = LayerConfig.make([-0.25, 0.25], [1, -1])
    Tc = two_body_collision_time(0.5, 0.5, gamma_eff)
    run = run_layers(het, cfg, 0.1, 2.0 * Tc, Tc / 10, POT, pad=6.0)
    sup0 = np.max(np.abs(run.snapshots[0]))
    assert np.max(np.abs(run.snapshots)) <= sup0 + 1.0


def test_repulsive_tracks_diverge(het, gamma_eff):
    cfg = LayerConfig.make([-0.5, 0.5], [1, 1])
    run = run_layers(het, cfg, 0.1, 0.1, 0.02, POT, pad=6.0)
    tracks = extract_cores(run)
    assert tracks.tracks.shape[0] == 2
    gap = tracks.tracks[1] - tracks.tracks[0]
    assert np.all(np.diff(gap) > 0)
    # ordered at every snapshot
    assert np.all(gap > 0)


def test_attractive_tracks_merge_near_particle_Tc(het, gamma_eff):
    cfg = LayerConfig.make([-0.25, 0.25], [1, -1])
    Tc = two_body_collision_time(0.5, 0.5, gamma_eff)
    run = run_layers(het, cfg, 0.05, 1.5 * Tc, Tc / 40, POT, pad=6.0)
    tracks = extract_cores(run)
    assert len(tracks.merges) == 1
    merge_t = tracks.merges[0]["time"]
    # the PDE merge approaches the ODE collision time as eps -> 0
    assert abs(merge_t - Tc) < 0.25 * Tc


def test_pde_to_ode_convergence(het):
    # cores track the particle ODE, errors decrease in eps, and the
    # effective convention (Gagliardo-weighted mobility) wins
    gammas = {c: compute_gamma(het, c).gamma
              for c in ("reciprocal-norm", "reciprocal-norm-squared", "effective")}
    cfg = LayerConfig.make([-0.5, 0.5], [1, 1])
    rep = convergence_study(cfg, 0.5, [0.2, 0.1, 0.05],
                            np.arange(0.02, 0.1001, 0.02), POT, het, gammas,
                            pad=6.0)
    errs = [rep["errors"][e]["effective"] for e in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 0.05
    assert rep["best_convention"] == "effective"


def test_single_layer_convergence_trivial(het):
    gammas = {"effective": compute_gamma(het, "effective").gamma}
    cfg = LayerConfig.make([0.0], [1])
    rep = convergence_study(cfg, 0.5, [0.2, 0.1], np.arange(0.05, 0.2001, 0.05),
                            POT, het, gammas, pad=6.0)
    for eps in (0.2, 0.1):
        assert rep["errors"][eps]["effective"] < 0.01


def test_relaxation_fit_balanced(het, gamma_eff):
    cfg = LayerConfig.make([-0.25, 0.25], [1, -1])
    Tc = two_body_collision_time(0.5, 0.5, gamma_eff)
    run = run_layers(het, cfg, 0.1, 2.5 * Tc, Tc / 24, POT, pad=6.0)
    tracks = extract_cores(run)
    merge_t = tracks.merges[0]["time"]
    fit = measure_relaxation(run, after=merge_t + 0.4 * Tc, het=het, floor=5e-4)
    assert fit.accepted and fit.rate > 0
    assert fit.r_squared > 0.98
    assert fit.T_eps >= merge_t
    # balanced sup-norm decays between mid and end
    k = len(run.times)
    sup_mid = np.max(np.abs(run.snapshots[k // 2]))
    sup_end = np.max(np.abs(run.snapshots[-1]))
    assert sup_end < sup_mid


def test_relaxation_rate_scaling_and_memory(het, gamma_eff):
    # decay rate ~ c/eps^(2s+1): the fitted c is eps-stable within 50%,
    # and the collision-point memory statistic is >= 0.8 at eps = 0.05
    cfg = LayerConfig.make([-0.25, 0.25], [1, -1])
    Tc = two_body_collision_time(0.5, 0.5, gamma_eff)
    cs = {}
    mems = {}
    for eps in (0.1, 0.05):
        run = run_layers(het, cfg, eps, 2.2 * Tc, Tc / 40, POT, pad=6.0)
        merge_t = extract_cores(run).merges[0]["time"]
        fit = measure_relaxation(run, after=merge_t + 0.15 * Tc, het=het,
                                 floor=5e-4, min_snapshots=20)
        cs[eps] = fit.rate * eps ** 2
        mems[eps] = fit.memory_stat
        assert fit.r_squared > 0.98
    ratio = cs[0.05] / cs[0.1]
    assert 0.5 < ratio < 1.5
    assert mems[0.05] >= 0.8


def test_classification_2_1(het, gamma_eff):
    cfg = LayerConfig.make([-0.25, 0.25], [1, -1])
    Tc = two_body_collision_time(0.5, 0.5, gamma_eff)
    run = run_layers(het, cfg, 0.1, 3.0 * Tc, Tc / 20, POT, pad=6.0)
    res = classify_asymptotics(cfg, run, het)
    assert res["classification"] == "zero"


def test_classification_3_1(het, gamma_eff):
    cfg = LayerConfig.make([-0.5, 0.0, 0.5], [1, -1, 1])
    Tc3 = 4.0 * two_body_collision_time(0.5, 0.5, gamma_eff)
    run = run_layers(het, cfg, 0.1, 2.5 * Tc3, Tc3 / 20, POT, pad=6.0)
    res = classify_asymptotics(cfg, run, het)
    assert res["classification"] == "heteroclinic 0->1"
    # trapping by shifted layers: terminal profile matches one to < 0.05
    assert res["distances"]["heteroclinic 0->1"] < 0.05


def test_classification_4_1(het):
    cfg = LayerConfig.make([-1.2, -0.4, 0.4, 0.9], [1, 1, 1, -1])
    run = run_layers(het, cfg, 0.1, 1.2, 0.03, POT, pad=4.0)
    res = classify_asymptotics(cfg, run, het)
    assert res["classification"] == "constant 2/2"
    assert res["distances"]["constant 2/2"] < 0.05


def test_need_two_snapshots(het):
    run = run_layers(het, LayerConfig.make([0.0], [1]), 0.1, 0.1, 0.2, POT, pad=6.0)
    with pytest.raises(InvalidConfigError):
        extract_cores(run)
