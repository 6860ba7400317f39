"""Margin checks for the sign, bound and super-solution statements.

Every check returns a :class:`VerificationReport`; margins are signed
distances to the claimed inequality (positive means satisfied) and
``passed`` is recomputable from ``margins`` and ``tolerance`` alone.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from ._parallel import ordered_map
from .profiles import RadialProfile, constant, power, theta
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    SupersolutionPair,
    angular_factor,
    pv_cylindrical_fraclap,
    pv_radial_fraclap,
)

__all__ = [
    "SupersolutionPair",
    "VerificationReport",
    "check_dimension_reduction",
    "check_f_inequality",
    "check_harnack_ratio",
    "check_sign_sigma",
    "check_supersolution",
    "check_theta_bound",
    "f_function",
    "random_f_samples",
    "supersolution_harnack_bound",
]


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


@dataclass
class VerificationReport:
    check_name: str
    params: dict
    samples: list
    margins: np.ndarray
    tolerance: float
    values: Optional[list] = None
    children: list["VerificationReport"] = field(default_factory=list)

    def __post_init__(self):
        self.margins = np.asarray(self.margins, dtype=float)

    @property
    def min_margin(self) -> float:
        if self.margins.size == 0:
            return math.inf
        return float(np.min(self.margins))

    @property
    def passed(self) -> bool:
        return bool(self.min_margin >= -self.tolerance)

    @property
    def all_passed(self) -> bool:
        return self.passed and all(c.all_passed for c in self.children)

    def to_dict(self) -> dict:
        out = {
            "check_name": self.check_name,
            "params": _jsonable(self.params),
            "samples": _jsonable(self.samples),
            "margins": self.margins.tolist(),
            "min_margin": self.min_margin,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }
        if self.values is not None:
            out["values"] = _jsonable(self.values)
        if self.children:
            out["children"] = [c.to_dict() for c in self.children]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary(self) -> str:
        flag = "PASS" if self.all_passed else "FAIL"
        return f"{flag} {self.check_name}: min_margin={self.min_margin:.3e} tolerance={self.tolerance:.1e}"


def _radii(radii) -> np.ndarray:
    r = np.asarray(radii, dtype=float).ravel()
    if r.size == 0 or np.any(~(r > 0.0)):
        raise ValueError("radii must be a nonempty array of positive numbers")
    return r


def _evaluate(profile, n, s, radii, spec):
    return np.array(ordered_map(lambda r: pv_radial_fraclap(profile, n, s, float(r), spec), radii))


# ---------------------------------------------------------------- sign of (-Delta)^s r^sigma


def check_sign_sigma(n: int, s: float, sigma: float, radii, spec: QuadratureSpec = DEFAULT_SPEC,
                     strict_margin: float = 1e-8, annihilation_tol: float = 1e-5) -> VerificationReport:
    """Sign of ``(-Delta)^s |x|^sigma``.

    For ``-n < sigma < -n + 2s`` the value must be negative, below
    ``-strict_margin``; at ``sigma = -n + 2s`` it must vanish to
    ``annihilation_tol``; ``sigma = 0`` gives exactly zero.
    """
    radii = _radii(radii)
    fundamental = -n + 2.0 * s
    if sigma == 0.0:
        vals = _evaluate(constant(1.0), n, s, radii, spec)
        margins, tol, claim = -np.abs(vals), 0.0, "zero"
    elif abs(sigma - fundamental) <= 1e-12 * max(1.0, abs(fundamental)):
        vals = _evaluate(power(fundamental), n, s, radii, spec)
        margins, tol, claim = -np.abs(vals), annihilation_tol, "zero"
    elif -n < sigma < fundamental:
        vals = _evaluate(power(sigma), n, s, radii, spec)
        margins, tol, claim = -vals - strict_margin, 0.0, "negative"
    else:
        raise ValueError(f"sigma must be 0 or lie in (-n, -n+2s], got {sigma!r}")
    return VerificationReport(
        check_name="sign_sigma",
        params={"n": n, "s": s, "sigma": sigma, "claim": claim, "strict_margin": strict_margin},
        samples=radii.tolist(), margins=margins, tolerance=tol, values=vals.tolist(),
    )


# ---------------------------------------------------------------- Theta bound


def _tail_slope(r, M, fraction=1.0 / 3.0):
    k = max(3, int(math.ceil(len(r) * fraction)))
    rt, Mt = r[-k:], M[-k:]
    if np.all(Mt <= 0.0):
        return -math.inf
    if np.any(Mt <= 0.0):
        return math.inf
    return float(np.polyfit(np.log(rt), np.log(Mt), 1)[0])


def check_theta_bound(n: int, s: float, radii=None, spec: QuadratureSpec = DEFAULT_SPEC,
                      slope_tol: float = 0.05, stability_tol: float = 0.05) -> VerificationReport:
    """Empirical ``C0 = sup r^n (-Delta)^s Theta(r)``: finite, flat tail, stable under range doubling.

    Margins: ``slope_tol - tail_slope`` and ``stability_tol - relative change``
    of the supremum when the largest radius is doubled.
    """
    if not n > 2.0 * s:
        raise ValueError("need n > 2s")
    radii = _radii(np.geomspace(2.0, 200.0, 24) if radii is None else radii)
    radii = np.sort(radii)
    prof = theta(n, s)
    M = radii**n * _evaluate(prof, n, s, radii, spec)
    ratio = radii[-1] / radii[-2] if len(radii) > 1 else 2.0
    extra = radii[-1] * ratio ** np.arange(1, int(math.ceil(math.log(2.0) / math.log(ratio))) + 1)
    extra = extra[extra <= 2.0 * radii[-1] * (1 + 1e-12)]
    if extra.size == 0 or extra[-1] < 2.0 * radii[-1] * (1 - 1e-12):
        extra = np.append(extra, 2.0 * radii[-1])
    M_extra = extra**n * _evaluate(prof, n, s, extra, spec)
    sup1 = float(np.max(M))
    sup2 = max(sup1, float(np.max(M_extra)))
    finite = math.isfinite(sup1) and math.isfinite(sup2)
    change = abs(sup2 - sup1) / abs(sup2) if finite and sup2 != 0.0 else math.inf
    slope = _tail_slope(np.concatenate([radii, extra]), np.concatenate([M, M_extra]))
    margins = [slope_tol - slope, stability_tol - change]
    return VerificationReport(
        check_name="theta_bound",
        params={"n": n, "s": s, "empirical_C0": sup2, "tail_slope": slope, "sup_change": change},
        samples=["tail_slope", "sup_stability"], margins=margins, tolerance=0.0,
        values={"radii": np.concatenate([radii, extra]).tolist(),
                "r_n_fraclap": np.concatenate([M, M_extra]).tolist()},
    )


# ---------------------------------------------------------------- Harnack-type ratio


def _ball_min(profile: RadialProfile, r: float, samples: int) -> float:
    start = r * 1e-6 if profile.singular_at_zero else 0.0
    rho = np.linspace(start, r, samples)
    return float(np.min(profile(rho)))


def check_harnack_ratio(profile: RadialProfile, radii, bound: float,
                        samples_per_ball: int = 257) -> VerificationReport:
    """Ratios ``m(r/2) / m(r)`` with ``m(r) = min_{|x| <= r} u``; margins ``bound - ratio``."""
    radii = _radii(radii)
    ratios = []
    for r in radii:
        m_half = _ball_min(profile, 0.5 * r, samples_per_ball)
        m_full = _ball_min(profile, r, samples_per_ball)
        if not m_full > 0.0:
            raise ValueError("profile must be positive on the sampled balls")
        ratios.append(m_half / m_full)
    ratios = np.array(ratios)
    return VerificationReport(
        check_name="harnack_ratio",
        params={"profile": profile.name, "bound": bound},
        samples=radii.tolist(), margins=bound - ratios, tolerance=0.0, values=ratios.tolist(),
    )


# ---------------------------------------------------------------- super-solution residuals


def _validate_pair(pair: SupersolutionPair):
    p = pair.params
    if abs(pair.c1 * pair.A - pair.B**p.p) > 1e-10 * abs(pair.B**p.p):
        raise ValueError("pair violates c1 A = B^p")
    if abs(pair.c2 * pair.B - pair.A**p.q) > 1e-10 * abs(pair.A**p.q):
        raise ValueError("pair violates c2 B = A^q")
    if not (2.0 * p.s * pair.k1 < p.n - 2.0 * p.s and 2.0 * p.t * pair.k2 < p.n - 2.0 * p.t):
        raise ValueError("pair is outside the regime where the criticality condition fails")


def check_supersolution(pair: SupersolutionPair, radii, spec: QuadratureSpec = DEFAULT_SPEC,
                        tolerance: Optional[float] = None) -> VerificationReport:
    """Margins ``(-Delta)^s u - v^p`` and ``(-Delta)^t v - u^q`` at each radius.

    Pairs built with ``force=True`` skip the invariant checks (they are
    negative controls).  Default tolerance: ``1e-4 * max(A, B)``.
    """
    if not pair.forced:
        _validate_pair(pair)
    radii = _radii(radii)
    p = pair.params
    tol = 1e-4 * max(pair.A, pair.B) if tolerance is None else tolerance
    lu = _evaluate(pair.u_profile, p.n, p.s, radii, spec)
    lv = _evaluate(pair.v_profile, p.n, p.t, radii, spec)
    m1 = lu - pair.v_profile(radii) ** p.p
    m2 = lv - pair.u_profile(radii) ** p.q
    samples = [{"equation": "u", "r": float(r)} for r in radii] + [
        {"equation": "v", "r": float(r)} for r in radii
    ]
    return VerificationReport(
        check_name="supersolution",
        params=pair.to_dict(),
        samples=samples, margins=np.concatenate([m1, m2]), tolerance=tol,
    )


# ---------------------------------------------------------------- f(a, b, y)


def f_function(a, b, y, alpha):
    """``f(a,b,y) = sum_+- (1 - a + |(a +- b, y)|)^(-2 alpha) - sum_+- ((1 +- b)^2 + y^2)^(-alpha)``."""
    return _kernels.f_values(a, b, y, float(alpha))


def random_f_samples(n_samples: int, seed: int, b_max: float = 3.0, y_max: float = 3.0) -> np.ndarray:
    """``(a, b, y)`` rows with ``a ~ U[0,1)``, ``b ~ U[0, b_max]``, ``y ~ U[-y_max, y_max]``."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, 1.0, n_samples)
    b = rng.uniform(0.0, b_max, n_samples)
    y = rng.uniform(-y_max, y_max, n_samples)
    return np.column_stack([a, b, y])


def check_f_inequality(alpha: float, samples, tolerance: float = 1e-12, fd_step: float = 1e-6,
                       fd_tolerance: float = 1e-6) -> VerificationReport:
    """``f <= 0`` on the samples, with a child report for ``df/da >= 0`` by central differences."""
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    S = np.asarray(samples, dtype=float).reshape(-1, 3)
    a, b, y = S[:, 0], S[:, 1], S[:, 2]
    if np.any(a >= 1.0) or np.any(a < 0.0):
        raise ValueError("samples need 0 <= a < 1")
    if np.any(b < 0.0):
        raise ValueError("samples need b >= 0")
    f = f_function(a, b, y, alpha)
    interior = (a >= fd_step) & (a <= 1.0 - fd_step)
    ai, bi, yi = a[interior], b[interior], y[interior]
    df = (f_function(ai + fd_step, bi, yi, alpha) - f_function(ai - fd_step, bi, yi, alpha)) / (2.0 * fd_step)
    child = VerificationReport(
        check_name="f_inequality_da",
        params={"alpha": alpha, "fd_step": fd_step, "interior_samples": int(interior.sum())},
        samples=[], margins=df, tolerance=fd_tolerance,
    )
    return VerificationReport(
        check_name="f_inequality",
        params={"alpha": alpha, "n_samples": int(len(S))},
        samples=[], margins=-f, tolerance=tolerance, children=[child],
    )


# ---------------------------------------------------------------- dimension reduction


def check_dimension_reduction(profile: RadialProfile, n: int, s: float, radii,
                              spec: QuadratureSpec = DEFAULT_SPEC, rtol: float = 1e-3) -> VerificationReport:
    """n-dimensional evaluation of ``x -> profile(|x'|)`` against ``angular_factor * (n-1)``-dim one.

    Margins are ``rtol - relative difference``.
    """
    if int(n) != n or n < 2:
        raise ValueError("dimension reduction needs n >= 2")
    radii = _radii(radii)
    factor = angular_factor(n, s, spec)
    full = np.array(ordered_map(lambda r: pv_cylindrical_fraclap(profile, n, s, float(r), spec), radii))
    reduced = factor * _evaluate(profile, n - 1, s, radii, spec)
    diff = np.abs(full - reduced)
    rel = np.where(diff == 0.0, 0.0, diff / np.maximum(np.abs(reduced), 1e-300))
    return VerificationReport(
        check_name="dimension_reduction",
        params={"profile": profile.name, "n": n, "s": s, "angular_factor": factor},
        samples=radii.tolist(), margins=rtol - rel, tolerance=0.0,
        values={"n_dim": full.tolist(), "reduced": reduced.tolist()},
    )


def supersolution_harnack_bound(pair: SupersolutionPair, slack: float = 0.1) -> float:
    """``2^(2 s k1) + slack``, the limiting ratio of the super-solution profile plus slack."""
    return 2.0 ** (2.0 * pair.params.s * pair.k1) + slack
