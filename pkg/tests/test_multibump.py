import math

import numpy as np
import pytest

from fracpn.errors import (ConstrainedTouchingError, InvalidConfigError,
                           InvalidInputError, InvalidLevelsError,
                           SolverFailureError)
from fracpn.fraclap import Grid1D
from fracpn.layers import solve_heteroclinic
from fracpn.multibump import (Window, WindowSet, build_windows, energy_of,
                              minimize_constrained)
from fracpn.potential import (constant_modulation, cosine_modulation,
                              standard_potential)

POT = standard_potential()
S = 0.75


@pytest.fixture(scope="module")
def het():
    return solve_heteroclinic(S, POT, Grid1D.symmetric(100.0, 2**12 + 1), tol=1e-9)


def grid_for(ws, margin=45.0, h=0.05):
    lo, hi = ws.span()
    n = int((hi - lo + 2 * margin) / h) + 1
    return Grid1D(lo - margin, hi + margin, n)


# --- window construction ----------------------------------------------------

def test_build_windows_heteroclinic_pair():
    a = cosine_modulation(0.3, 10.0)
    ws = build_windows([0, 1], a, 20.0)
    assert len(ws.windows) == 2
    assert math.isinf(ws.windows[0].lo) and math.isinf(ws.windows[-1].hi)
    # a minimum of a lies strictly inside the gap
    gap_lo, gap_hi = ws.windows[0].hi, ws.windows[1].lo
    x = np.linspace(gap_lo + 1e-9, gap_hi - 1e-9, 2001)
    amin_x = x[np.argmin(a.eval(x))]
    assert gap_lo < amin_x < gap_hi
    assert a.eval(amin_x) == pytest.approx(a.a_min, abs=1e-4)


def test_build_windows_homoclinic_and_multibump():
    a = cosine_modulation(0.3, 10.0)
    ws3 = build_windows([0, 1, 0], a, 40.0)
    assert [w.level for w in ws3.windows] == [0, 1, 0]
    ws4 = build_windows([0, 1, 2, 1], a, 40.0)
    assert [w.level for w in ws4.windows] == [0, 1, 2, 1]
    # disjoint ordered windows, each gap holds a modulation minimum
    for wa, wb in zip(ws4.windows[:-1], ws4.windows[1:]):
        assert wa.hi < wb.lo
        mid = 0.5 * (wa.hi + wb.lo)
        assert a.eval(mid) == pytest.approx(a.a_min, abs=1e-9)


def test_build_windows_rejects_bad_levels():
    a = cosine_modulation(0.3, 10.0)
    with pytest.raises(InvalidLevelsError):
        build_windows([0, 2], a, 40.0)
    with pytest.raises(InvalidLevelsError):
        build_windows([0, 0], a, 40.0)
    with pytest.raises(InvalidConfigError):
        build_windows([0, 1], a, 10.0)   # spacing below two periods


def test_windowset_invariants():
    with pytest.raises(InvalidLevelsError):
        WindowSet(windows=(Window(-math.inf, 0.0, 0), Window(10.0, math.inf, 2)))
    with pytest.raises(InvalidConfigError):
        WindowSet(windows=(Window(-math.inf, 10.0, 0), Window(5.0, math.inf, 1)))


# --- minimization -----------------------------------------------------------

def test_heteroclinic_matches_layer_solver(het):
    # a == 1: the constrained minimizer is a translate of the heteroclinic
    ac = constant_modulation(1.0)
    ws = build_windows([0, 1], ac, 40.0)
    sol = minimize_constrained(ws, S, POT, ac, grid_for(ws), tol=1e-5, het=het)
    x = sol.profile.grid.nodes
    u = sol.profile.values
    i = int(np.searchsorted(u, 0.5))
    xc = x[i - 1] + (0.5 - u[i - 1]) * (x[i] - x[i - 1]) / (u[i] - u[i - 1])
    assert np.max(np.abs(u - het.eval_at(x - xc))) < 1e-3
    assert sol.detachment_margin > 0


def test_constant_levels_minimizer_is_zero(het):
    ws = WindowSet(windows=(Window(-math.inf, 10.0, 0), Window(40.0, math.inf, 0)))
    ac = constant_modulation(1.0)
    sol = minimize_constrained(ws, S, POT, ac, grid_for(ws, margin=30.0),
                               tol=1e-5, het=het)
    assert np.max(np.abs(sol.profile.values)) < 1e-8
    assert abs(sol.energy) < 1e-12


def test_homoclinic_with_modulation(het):
    a = cosine_modulation(0.3, 10.0)
    ws = build_windows([0, 1, 0], a, 40.0)
    sol = minimize_constrained(ws, S, POT, a, grid_for(ws), tol=1e-5, het=het)
    assert sol.detachment_margin > 0
    assert sol.el_residual < 1e-5
    dJ = np.diff(sol.energy_history)
    assert np.all(dJ <= 1e-12)


def test_multibump_0121(het):
    a = cosine_modulation(0.3, 10.0)
    ws = build_windows([0, 1, 2, 1], a, 40.0)
    sol = minimize_constrained(ws, S, POT, a, grid_for(ws), tol=1e-5, het=het)
    assert sol.detachment_margin > 0
    assert sol.el_residual < 1e-5
    # the profile actually visits all prescribed levels
    u = sol.profile.values
    x = sol.profile.grid.nodes
    for w in ws.windows:
        sel = (x >= max(w.lo, x[0])) & (x <= min(w.hi, x[-1]))
        assert np.max(np.abs(u[sel] - w.level)) <= 0.01


@pytest.mark.parametrize("spacing", [20.0, 24.0])
def test_constant_a_homoclinic_rejected(het, spacing):
    # no homoclinic exists for constant a: the minimizer is driven onto the
    # window boundary (or never reaches stationarity)
    ac = constant_modulation(1.0)
    ws = build_windows([0, 1, 0], ac, spacing)
    with pytest.raises((ConstrainedTouchingError, SolverFailureError)):
        minimize_constrained(ws, S, POT, ac, grid_for(ws, margin=30.0),
                             tol=1e-5, het=het, max_iter=20000)


def test_s_range_enforced(het):
    a = cosine_modulation(0.3, 10.0)
    ws = build_windows([0, 1], a, 40.0)
    with pytest.raises(InvalidInputError):
        minimize_constrained(ws, 0.5, POT, a, grid_for(ws), het=het)


def test_grid_margin_enforced(het):
    a = cosine_modulation(0.3, 10.0)
    ws = build_windows([0, 1], a, 40.0)
    with pytest.raises(InvalidConfigError):
        minimize_constrained(ws, S, POT, a, grid_for(ws, margin=5.0), het=het)


# --- energy -----------------------------------------------------------------

def test_energy_zero_profile():
    from fracpn.fraclap import FarField, Field
    g = Grid1D.symmetric(30.0, 513)
    f = Field(g, np.zeros(513), "decaying", FarField(0, 0, 1.5))
    ac = constant_modulation(1.0)
    assert energy_of(f, S, POT, ac) == pytest.approx(0.0, abs=1e-15)


def test_energy_positive_and_descends(het):
    from fracpn.fraclap import FarField, Field, line_operator
    prof = het.profile
    ac = constant_modulation(1.0)
    e0 = energy_of(prof, S, POT, ac)
    assert e0 > 0
    # one explicit relaxation step decreases the energy
    op = line_operator(prof.grid, S, prof.far.beta)
    el = op.apply(prof.values, prof.far) + POT.deriv(prof.values)
    stepped = Field(prof.grid, prof.values - 1e-3 * el, "decaying", prof.far)
    assert energy_of(stepped, S, POT, ac) < e0


def test_energy_linear_in_modulation(het):
    # doubling a doubles the potential term exactly
    from fracpn.potential import Modulation
    prof = het.profile
    a1 = constant_modulation(1.0)
    a2 = constant_modulation(2.0)
    x = prof.grid.nodes
    e1 = energy_of(prof, S, POT, a1)
    e2 = energy_of(prof, S, POT, a2)
    h = prof.grid.h
    pot_term = h * float(np.sum(POT.eval(prof.values)))
    assert e2 - e1 == pytest.approx(pot_term, rel=1e-12)
