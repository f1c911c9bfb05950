import numpy as np
import pytest

from fracpn.errors import InvalidModulationError
from fracpn.potential import (cosine_modulation, constant_modulation,
                              potential_from_name, standard_potential,
                              validate_potential, Potential)


def test_standard_wells_and_values():
    p = standard_potential()
    assert abs(p.eval(0.0)) < 1e-16
    assert abs(p.eval(0.5) - 1.0 / (2.0 * np.pi**2)) < 1e-15
    assert abs(p.deriv(0.25) - 1.0 / (2.0 * np.pi)) < 1e-15
    assert abs(p.deriv2(0.0) - 1.0) < 1e-15


def test_standard_validates():
    rep = validate_potential(standard_potential(), samples=1000)
    assert rep.passed
    assert rep.max_violation < 1e-13


def test_nonperiodic_potential_fails_validation():
    bad = Potential(eval=lambda u: np.asarray(u, float)**2,
                    deriv=lambda u: 2.0 * np.asarray(u, float),
                    deriv2=lambda u: np.full_like(np.asarray(u, float), 2.0))
    rep = validate_potential(bad, samples=200)
    assert not rep.passed
    assert "periodicity" in rep.failures


def test_evenness_sample():
    p = standard_potential()
    assert abs(p.eval(0.37) - p.eval(-0.37)) < 1e-14


def test_max_deriv_location():
    # max W' = 1/(2 pi), attained at u = 1/4
    p = standard_potential()
    u = np.linspace(0.0, 1.0, 100001)
    vals = p.deriv(u)
    k = np.argmax(vals)
    assert abs(vals[k] - 1.0 / (2.0 * np.pi)) < 1e-10
    assert abs(u[k] - 0.25) < 1e-4


@pytest.mark.parametrize("h", [1e-3, 1e-4])
def test_deriv_is_exact_derivative(h):
    p = standard_potential()
    u = np.linspace(-1.0, 2.0, 97)
    fd = (p.eval(u + h) - p.eval(u - h)) / (2.0 * h)
    err = np.max(np.abs(fd - p.deriv(u)))
    # second-order central difference: error ~ h^2 |W'''|/6 <= h^2 pi^2/3... check order
    assert err < 4.0 * h**2


def test_deriv_order_two_decay():
    p = standard_potential()
    u = np.linspace(-1.0, 2.0, 97)
    errs = []
    for h in (1e-3, 1e-4):
        fd = (p.eval(u + h) - p.eval(u - h)) / (2.0 * h)
        errs.append(np.max(np.abs(fd - p.deriv(u))))
    assert 50.0 < errs[0] / errs[1] < 200.0   # ratio ~ 100 for O(h^2)


def test_cosine_modulation_values():
    a = cosine_modulation(0.3, 10.0)
    assert abs(a.eval(5.0) - 0.7) < 1e-15
    assert abs(a.eval(0.0) - 1.3) < 1e-15
    assert a.a_min == pytest.approx(0.7)
    assert a.a_max == pytest.approx(1.3)
    x = np.linspace(-50, 50, 1001)
    vals = a.eval(x)
    assert np.all(vals >= a.a_min - 1e-12)
    assert np.all(vals <= a.a_max + 1e-12)


def test_zero_amplitude_is_constant():
    a = cosine_modulation(0.0, 10.0)
    assert a.a_min == a.a_max == 1.0
    assert np.all(a.eval(np.linspace(-5, 5, 11)) == 1.0)


def test_amplitude_bound():
    with pytest.raises(InvalidModulationError):
        cosine_modulation(1.0, 10.0)
    with pytest.raises(InvalidModulationError):
        cosine_modulation(-0.1, 10.0)
    with pytest.raises(InvalidModulationError):
        constant_modulation(0.0)


def test_registry():
    p = potential_from_name("standard-cosine")
    assert p.name == "standard-cosine"
    with pytest.raises(InvalidModulationError):
        potential_from_name("nope")
