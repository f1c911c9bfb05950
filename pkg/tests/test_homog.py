import numpy as np
import pytest

from fracpn.errors import InvalidConfigError, InvalidInputError
from fracpn.fraclap import FarField, Field, Grid1D
from fracpn.homog import (CellProblem, density_approximation_error,
                          level_set_points, meanfield_vs_particles,
                          orowan_scan, solve_cell, solve_meanfield,
                          stress_identity_gap)
from fracpn.layers import compute_gamma, solve_heteroclinic
from fracpn.particles import LayerConfig
from fracpn.potential import standard_potential

POT = standard_potential()
B_MAX = 1.0 / (2.0 * np.pi)       # max W' of the standard potential


@pytest.fixture(scope="module")
def het():
    return solve_heteroclinic(0.5, POT, Grid1D.symmetric(200.0, 2**13 + 1), tol=1e-9)


@pytest.fixture(scope="module")
def gammas(het):
    return {c: compute_gamma(het, c).gamma
            for c in ("reciprocal-norm-squared", "effective")}


def arctan_ramp(L=100.0, n=2**12 + 1):
    g = Grid1D.symmetric(L, n)
    x = g.nodes
    far = FarField(0.0, 1.0, 1.0, c_minus=1 / np.pi, c_plus=1 / np.pi)
    return Field(g, 0.5 + np.arctan(x) / np.pi, "decaying", far)


# --- level sets ---------------------------------------------------------------

def test_level_set_points_arctan_oracle():
    # levels i/4 of 1/2 + arctan(x)/pi invert to tan(pi(i/4 - 1/2))
    v = arctan_ramp()
    ys = level_set_points(v, 0.25)
    assert len(ys) == 3
    assert np.allclose(ys, [-1.0, 0.0, 1.0], atol=1e-3)


def test_level_set_sharp_layer(het):
    eps = 0.05
    g = Grid1D.symmetric(10.0, 4097)
    vals = het.eval_at(g.nodes / eps)
    v = Field(g, vals, "decaying", FarField(0.0, 1.0, 1.0))
    ys = level_set_points(v, 0.25)
    assert np.all(np.abs(ys) < 10 * eps)


def test_level_set_empty_and_errors():
    v = arctan_ramp()
    assert len(level_set_points(v, 1.5)) == 0
    g = Grid1D.symmetric(5.0, 65)
    bad = Field(g, np.sin(g.nodes), "decaying", FarField(0, 0, 1.0))
    with pytest.raises(InvalidInputError):
        level_set_points(bad, 0.25)


# --- density approximation ----------------------------------------------------

def smooth_ramp(L=40.0, n=2**12 + 1, width=5.0):
    g = Grid1D.symmetric(L, n)
    x = g.nodes
    vals = 0.5 * (1.0 + np.tanh(x / width))
    return Field(g, vals, "decaying", FarField(0.0, 1.0, 2.0))


def test_density_approximation_improves(het):
    v = smooth_ramp()
    e1 = density_approximation_error(v, het, 0.1, 0.1)
    e2 = density_approximation_error(v, het, 0.05, 0.05)
    assert e1 < 0.15
    assert e2 < e1


def test_single_layer_self_approximation(het):
    delta, eps = 0.25, 0.4
    g = Grid1D.symmetric(30.0, 2**12 + 1)
    vals = delta * het.eval_at(g.nodes / (eps * delta))
    v = Field(g, vals, "decaying", FarField(0.0, delta, 1.0))
    err = density_approximation_error(v, het, eps, delta)
    assert err < 2 * delta


def test_stress_identity_decreasing_in_delta(het):
    v = smooth_ramp()
    gaps = [stress_identity_gap(v, d) for d in (0.2, 0.1, 0.05)]
    assert gaps[0] < 0.05
    assert gaps[2] < gaps[0]


# --- cell problem ---------------------------------------------------------------

def test_cell_problem_validation():
    with pytest.raises(InvalidConfigError):
        CellProblem(s=0.5, p=0.3, L=0.0, period=1.0)   # p*P not integer
    cp = CellProblem.for_slope(0.5, 0.25, 0.1)
    assert cp.period == pytest.approx(4.0)


@pytest.mark.parametrize("L,lam_exact", [
    (1.0 / (4.0 * np.pi), 0.0),                                   # pinned
    (1.0 / np.pi, np.sqrt(3.0) / (2.0 * np.pi)),
    (2.0 / np.pi, np.sqrt((2.0 / np.pi) ** 2 - B_MAX**2)),
])
def test_cell_p0_oracle(L, lam_exact):
    # p = 0 reduces to dw/dtau = L - W'(w): mean speed sqrt(L^2 - b^2)
    # above the pinning threshold b = max W' = 1/(2 pi), else 0
    cp = CellProblem.for_slope(0.5, 0.0, L)
    res = solve_cell(cp, 4000.0, POT)
    assert res.converged
    assert res.lam == pytest.approx(lam_exact, abs=1e-3)


def test_cell_pinned_below_threshold():
    cp = CellProblem.for_slope(0.5, 0.0, 1.0 / (4.0 * np.pi))
    res = solve_cell(cp, 1000.0, POT)
    assert abs(res.lam) < max(res.spread, 1e-12)


def test_cell_zero_forcing_is_trivial():
    cp = CellProblem.for_slope(0.5, 0.0, 0.0)
    res = solve_cell(cp, 200.0, POT)
    assert abs(res.lam) < 1e-12


def test_lambda_monotone_in_L():
    Ls = [0.5 * B_MAX, 0.9 * B_MAX, 1.5 * B_MAX, 2.5 * B_MAX, 4.0 * B_MAX]
    lams = []
    for L in Ls:
        res = solve_cell(CellProblem.for_slope(0.5, 0.0, L), 2000.0, POT)
        lams.append(res.lam)
    tol = 1e-6
    assert all(b >= a - tol for a, b in zip(lams, lams[1:]))


def test_cell_deterministic_across_scalings():
    # the two Section-7 scalings lead to the same cell problem: identical
    # (s, p, L) must give bitwise-identical lambda
    cp = CellProblem.for_slope(0.75, 0.5, 0.1)
    r1 = solve_cell(cp, 300.0, POT)
    r2 = solve_cell(cp, 300.0, POT)
    assert r1.lam == r2.lam


# --- Orowan ---------------------------------------------------------------------

def test_orowan_ratio_approaches_one(gammas):
    scan = orowan_scan(0.5, 1.0, 1.0, [0.4, 0.2, 0.1],
                       gammas["reciprocal-norm-squared"], POT)
    ratios = [r["ratio"] for r in scan["rows"]]
    assert not scan["partial"]
    assert abs(ratios[-1] - 1.0) < 0.15
    # monotone approach to 1
    dist = [abs(r - 1.0) for r in ratios]
    assert dist[0] > dist[1] > dist[2]


def test_orowan_zero_stress_gives_zero():
    cp = CellProblem.for_slope(0.5, 0.2, 0.0)
    res = solve_cell(cp, 400.0, POT)
    assert abs(res.lam) < 1e-6


def test_orowan_sign_odd_in_L(gammas):
    g = gammas["reciprocal-norm-squared"]
    up = orowan_scan(0.5, 1.0, 1.0, [0.2], g, POT)["rows"][0]
    dn = orowan_scan(0.5, 1.0, -1.0, [0.2], g, POT)["rows"][0]
    assert up["lambda"] > 0 > dn["lambda"]
    assert dn["lambda"] == pytest.approx(-up["lambda"], rel=1e-6)


def test_orowan_requires_nonzero_p0(gammas):
    with pytest.raises(InvalidConfigError):
        orowan_scan(0.5, 0.0, 1.0, [0.2], 1.0, POT)


# --- mean-field -----------------------------------------------------------------

def test_meanfield_constant_stationary(gammas):
    g = Grid1D.symmetric(6.0, 1025)
    u0 = Field(g, np.full(g.n, 0.7), "decaying", FarField(0.7, 0.7, 2.0))
    run = solve_meanfield(u0, gammas["reciprocal-norm-squared"], 0.02, 0.01)
    assert np.max(np.abs(run.snapshots - 0.7)) == 0.0


def test_meanfield_monotone_limits_mass(gammas):
    g = Grid1D.symmetric(6.0, 1025)
    x = g.nodes
    u0 = Field(g, 0.5 + 0.5 * np.tanh(x), "decaying", FarField(0.0, 1.0, 2.0))
    run = solve_meanfield(u0, gammas["reciprocal-norm-squared"], 0.02, 0.005)
    for snap in run.snapshots:
        assert np.all(np.diff(snap) >= -1e-12)
    assert abs(run.snapshots[-1][0] - 0.0) < 1e-6
    assert abs(run.snapshots[-1][-1] - 1.0) < 1e-6
    assert np.max(np.abs(run.mass_history - run.mass_history[0])) < 1e-6


def test_meanfield_discrete_comparison(gammas):
    rng = np.random.default_rng(11)
    g = Grid1D.symmetric(6.0, 513)
    x = g.nodes
    gamma = gammas["reciprocal-norm-squared"]
    for _ in range(3):
        w1, w2 = rng.uniform(0.5, 2.0, 2)
        c1, c2 = rng.uniform(-1.0, 1.0, 2)
        f = 0.5 * (1.0 + np.tanh((x - c1) / w1))
        h_ = 0.5 * (1.0 + np.tanh((x - c2) / w2))
        lo, hi = np.minimum(f, h_), np.maximum(f, h_)
        far = FarField(0.0, 1.0, 2.0)
        run_lo = solve_meanfield(Field(g, lo, "decaying", far), gamma, 0.01, 0.005)
        run_hi = solve_meanfield(Field(g, hi, "decaying", far), gamma, 0.01, 0.005)
        for a, b in zip(run_lo.snapshots, run_hi.snapshots):
            assert np.all(a <= b + 1e-10)


def test_meanfield_vs_particles_16(het, gammas):
    cfg = LayerConfig.make(np.linspace(0.0, 1.0, 16), [1] * 16)
    rep = meanfield_vs_particles(cfg, 1.0 / 16.0, het,
                                 gammas["reciprocal-norm-squared"],
                                 gammas["effective"], t_end=0.01, dt_out=0.002)
    assert rep["sup_gap"] < 0.1
    assert not rep["flags"]
    assert rep["mass_drift"] < 1e-6


def test_meanfield_vs_particles_flags_small_N(het, gammas):
    cfg = LayerConfig.make([0.0, 1.0], [1, 1])
    rep = meanfield_vs_particles(cfg, 0.5, het,
                                 gammas["reciprocal-norm-squared"],
                                 gammas["effective"], t_end=0.002, dt_out=0.001)
    assert any("delta too large" in f for f in rep["flags"])
