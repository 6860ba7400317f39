import math

import numpy as np
import pytest
from scipy import special


def c_closed_form(n, s):
    """C(n,s) from its Gamma-function expression."""
    return 2.0 ** (2 * s) * s * special.gamma((n + 2 * s) / 2) / (math.pi ** (n / 2) * special.gamma(1 - s))


def riesz_value(n, s, sigma, r=1.0):
    """(-Delta)^s |x|^sigma with unit kernel constant, for -n < sigma < 0.

    Physical normalization: (-Delta)^s |x|^-a = 2^(2s) G((a+2s)/2) G((n-a)/2)
    / (G(a/2) G((n-a-2s)/2)) |x|^(-a-2s).
    """
    a = -sigma
    num = special.gamma((a + 2 * s) / 2) * special.gamma((n - a) / 2)
    den = special.gamma(a / 2) * special.gamma((n - a - 2 * s) / 2)
    phys = 2.0 ** (2 * s) * num / den * r ** (sigma - 2 * s)
    return phys / c_closed_form(n, s)


def gaussian_value(n, s, r):
    """(-Delta)^s exp(-|x|^2) with unit kernel constant, via Kummer's function."""
    phys = 4.0**s * special.gamma(n / 2 + s) / special.gamma(n / 2) * special.hyp1f1(n / 2 + s, n / 2, -r * r)
    return phys / c_closed_form(n, s)


def bump_value(n, s):
    """(-Delta)^s (1-|x|^2)_+^s inside the unit ball, unit kernel constant."""
    phys = 2.0 ** (2 * s) * special.gamma(1 + s) * special.gamma(n / 2 + s) / special.gamma(n / 2)
    return phys / c_closed_form(n, s)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
