import math

import numpy as np
import pytest
from scipy import integrate

from fracsys import profiles
from fracsys.profiles import Regularity


def quad_tail(profile, R, e):
    return integrate.quad(lambda x: float(profile(x)) * x ** (e - 1), R, math.inf, limit=400,
                          epsabs=0, epsrel=1e-12)[0]


@pytest.mark.parametrize(
    "profile, e",
    [
        (profiles.power(-2.5), 1.0),
        (profiles.power(-1.2, amplitude=3.0), 0.5),
        (profiles.decaying(0.7), -0.3),
        (profiles.decaying(2.25, amplitude=0.5), 1.0),
        (profiles.theta(3, 0.5), 0.0),
        (profiles.gaussian(), 2.0),
        (profiles.truncated_power(-2.0, 0.1), 1.0),
    ],
    ids=lambda x: getattr(x, "name", str(x)),
)
def test_tail_moments_match_quadrature(profile, e):
    for R in (2.0, 7.5, 40.0):
        expected = quad_tail(profile, R, e)
        assert profile.tail_moment(R, e) == pytest.approx(expected, rel=1e-9, abs=1e-300)


def test_power_zero_is_constant():
    p = profiles.power(0.0, amplitude=2.0)
    assert p.constant_value == 2.0
    assert np.all(p(np.array([0.0, 1.0, 5.0])) == 2.0)


def test_scaled_profile():
    g = profiles.decaying(1.5)
    h = g.scaled(2.0)
    r = np.linspace(0.0, 5.0, 11)
    assert np.allclose(h(r), g(2.0 * r), rtol=0, atol=0)
    assert h.tail_moment(3.0, 0.5) == pytest.approx(quad_tail(h, 3.0, 0.5), rel=1e-9)
    b = profiles.bump(0.5).scaled(4.0)
    assert b.support_radius == 0.25 and b.kinks == (0.25,)
    with pytest.raises(ValueError):
        g.scaled(0.0)


def test_linear_combination():
    f, g = profiles.gaussian(), profiles.decaying(3.5)
    h = 2.0 * f + g * -0.5
    r = np.linspace(0.0, 3.0, 7)
    assert np.allclose(h(r), 2.0 * f(r) - 0.5 * g(r), rtol=1e-15)
    assert h.decay_exponent == -3.5
    assert h.kinks == (0.0,)
    assert h.tail_moment(4.0, 1.0) == pytest.approx(quad_tail(h, 4.0, 1.0), rel=1e-9)
    assert (profiles.bump(0.5) + f).regularity is Regularity.BOUNDED_ONLY
    assert (profiles.constant(1.0) + profiles.constant(2.0)).constant_value == 3.0


def test_bump_support_and_values():
    b = profiles.bump(0.25)
    assert b(np.array([0.0]))[0] == 1.0
    assert b(np.array([0.5]))[0] == pytest.approx(0.75**0.25)
    assert np.all(b(np.array([1.0, 1.5, 10.0])) == 0.0)


def test_l1_norm_and_sphere_area():
    assert profiles.sphere_area(1) == pytest.approx(2.0)
    assert profiles.sphere_area(2) == pytest.approx(2 * math.pi)
    assert profiles.sphere_area(3) == pytest.approx(4 * math.pi)
    assert profiles.l1_norm(profiles.gaussian(), 2) == pytest.approx(math.pi, rel=1e-10)
    assert profiles.l1_norm(profiles.gaussian(), 1) == pytest.approx(math.sqrt(math.pi), rel=1e-10)
    assert profiles.l1_norm(profiles.bump(1.0), 1) == pytest.approx(4.0 / 3.0, rel=1e-10)
    with pytest.raises(ValueError):
        profiles.l1_norm(profiles.decaying(1.0), 2)


def test_theta_profile_values():
    th = profiles.theta(3, 0.5)
    r = np.array([0.5, 2.0, 30.0])
    assert np.allclose(th(r), np.log1p(r) / r**2, rtol=1e-15)
