"""Deterministic panel quadrature for the fractional Laplacian of radial data.

Convention: ``(-Delta)^s u(x) = -1/2 int (u(x+y) + u(x-y) - 2u(x)) |y|^(-n-2s) dy``,
i.e. the normalising constant ``C(n, s)`` is taken to be 1 unless
``normalized=True`` is requested.

The integral over ``y`` is split at ``|y| = delta``:

* near field (``|y| < delta``): the second difference, averaged over the
  sphere by Gauss quadrature in the polar angle, integrated in ``|y|`` on
  panels graded geometrically toward 0; the innermost panel uses a
  fitted ``a rho^2 + b rho^4`` model of the second difference.
* far field: ``int_{|z-x| >= delta} (u(x) - u(z)) |z-x|^(-n-2s) dz`` written in
  polar coordinates about the origin, ``int (u(r) - u(rho)) rho^(n-1)
  K_delta(r, rho) d rho``, where ``K_delta`` is the spherical integral of the
  kernel outside the excluded ball.  Panels break at 0, ``r +- delta``,
  profile kinks and the support edge.  Beyond the truncation radius the kernel
  is expanded in ``(r/rho)^2`` and integrated term by term against the
  profile's tail moments.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from . import _kernels
from .exponents import Criticality, ProblemParams, classify_exponents, supersolution_exponents
from .profiles import RadialProfile, Regularity, _power_tail, decaying, l1_norm, power, sphere_area


class QuadratureError(RuntimeError):
    """Adaptive refinement did not reach the requested tolerance."""


class TailMode(str, enum.Enum):
    ANALYTIC_POWER = "AnalyticPowerTail"
    ZERO_EXTENSION = "ZeroExtensionClosedForm"


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs of the panel quadrature.

    ``near_field_radius`` is relative: the excluded ball has radius
    ``near_field_radius * min(r, distance from r to the nearest kink)``.
    ``truncation_radius`` is relative too: the numerical far field stops at
    ``truncation_radius * max(1, r, outermost breakpoint)``.  Refinement step
    ``i`` uses ``gauss_order + 8 i`` points per panel and ``grading_levels +
    4 i`` far-field grading levels; the near-field depth stays at
    ``grading_levels``, since deeper panels only lose digits to cancellation
    in the second difference.  Two consecutive steps must agree to
    ``tolerance`` (relative to the magnitude of the dominant term), otherwise
    after ``max_refinements`` steps :class:`QuadratureError` is raised.
    ``max_refinements = 0`` disables the check.
    """

    gauss_order: int = 16
    near_field_radius: float = 0.5
    truncation_radius: float = 100.0
    tail_mode: TailMode = TailMode.ANALYTIC_POWER
    tolerance: float = 1e-9
    grading_levels: int = 8
    grading_ratio: float = 0.5
    max_refinements: int = 3

    def __post_init__(self):
        if self.gauss_order < 4:
            raise ValueError("gauss_order must be at least 4")
        if not 0.0 < self.near_field_radius < 1.0:
            raise ValueError("near_field_radius must lie in (0, 1)")
        if not self.truncation_radius >= 2.0:
            raise ValueError("truncation_radius must be at least 2")
        if not self.near_field_radius < self.truncation_radius:
            raise ValueError("near_field_radius must be below truncation_radius")
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be positive")
        if self.grading_levels < 1 or not 0.0 < self.grading_ratio < 1.0:
            raise ValueError("grading needs at least one level and a ratio in (0, 1)")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be nonnegative")
        object.__setattr__(self, "tail_mode", TailMode(self.tail_mode))

    def step(self, i: int) -> tuple[int, int]:
        return self.gauss_order + 8 * i, self.grading_levels + 4 * i


DEFAULT_SPEC = QuadratureSpec()


# ---------------------------------------------------------------- rules


@functools.lru_cache(maxsize=None)
def _gauss01(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@functools.lru_cache(maxsize=None)
def _jacobi_left(order: int, a: float):
    """Nodes/weights on [0, 1] for ``int_0^1 x^a g(x) dx``."""
    t, w = special.roots_jacobi(order, 0.0, a)
    return 0.5 * (t + 1.0), w * 0.5 ** (a + 1.0)


def _composite(edges, order):
    t, w = _gauss01(order)
    edges = np.asarray(edges, dtype=float)
    h = np.diff(edges)[:, None]
    return (edges[:-1, None] + h * t).ravel(), (h * w).ravel()


def _graded(a, b, levels, ratio, left, right):
    """Panel edges on [a, b], geometrically refined toward the flagged ends."""
    if left and right:
        mid = 0.5 * (a + b)
        lo = _graded(a, mid, levels, ratio, True, False)
        hi = _graded(mid, b, levels, ratio, False, True)
        return np.concatenate([lo, hi[1:]])
    k = np.arange(1, levels + 1, dtype=float)
    if left:
        return np.concatenate([[a], a + (b - a) * ratio ** k[::-1], [b]])
    if right:
        return np.concatenate([[a], b - (b - a) * ratio**k, [b]])
    return np.array([a, b], dtype=float)


def _doubling(a, R, graded_first, levels, ratio):
    """Edges from ``a`` to ``R`` with panel lengths doubling."""
    edges = [a]
    x = a
    while 2.0 * x < R:
        x *= 2.0
        edges.append(x)
    edges.append(R)
    edges = np.asarray(edges, dtype=float)
    if graded_first and len(edges) > 1:
        first = _graded(edges[0], edges[1], levels, ratio, True, False)
        edges = np.concatenate([first, edges[2:]])
    return edges


@functools.lru_cache(maxsize=None)
def _polar_rule(dim: int, order: int):
    """Rule for ``int_{S^(dim-1)} g(cos theta) d sigma``: returns (cos theta, weights)."""
    if dim == 1:
        return np.array([1.0, -1.0]), np.array([1.0, 1.0])
    th, w = _composite(np.array([0.0, 0.5 * math.pi, math.pi]), order)
    w = w * sphere_area(dim - 1)
    if dim > 2:
        w = w * np.sin(th) ** (dim - 2)
    return np.cos(th), w


@functools.lru_cache(maxsize=None)
def _angle_rule(order: int, levels: int):
    """Reference rule on [0, 1] graded toward 0 (start of the angular range)."""
    return _composite(_graded(0.0, 1.0, levels, 0.5, True, False), order)


def _refine(evaluate, spec: QuadratureSpec):
    """Run ``evaluate(order, levels) -> (value, scale)`` until two steps agree."""
    value, scale = evaluate(*spec.step(0))
    if spec.max_refinements == 0:
        return value
    for i in range(1, spec.max_refinements + 1):
        new, scale = evaluate(*spec.step(i))
        change = abs(new - value)
        if change <= spec.tolerance * max(abs(new), scale):
            return new
        value = new
    raise QuadratureError(
        f"refinement did not reach tolerance {spec.tolerance:g} "
        f"after {spec.max_refinements} steps (last change {change:.3e})"
    )


# ---------------------------------------------------------------- C(n, s), angular factor


def _c_inverse(n: int, s: float, order: int) -> float:
    # int_0^inf (1 - cos x) x^(-1-2s) dx; 1 - cos x = 2 sin^2(x/2)
    x, w = _jacobi_left(order, 1.0 - 2.0 * s)
    xs = math.pi * x
    g = np.sinc(xs / (2.0 * math.pi)) ** 2 / 2.0  # 2 sin^2(x/2) / x^2
    head = math.pi ** (2.0 - 2.0 * s) * float(np.dot(w, g))
    periods = 64
    X = 2.0 * math.pi * periods
    xm, wm = _composite(np.linspace(math.pi, X, 2 * periods), order)
    mid = float(np.dot(wm, 2.0 * np.sin(0.5 * xm) ** 2 * xm ** (-1.0 - 2.0 * s)))
    # int_X^inf (1 - cos x) x^-mu with cos X = 1, sin X = 0, by repeated parts
    mu = 1.0 + 2.0 * s
    cos_tail = 0.0
    coef = mu
    sign = 1.0
    for k in range(1, 40, 2):
        term = sign * coef * X ** (-mu - k)
        cos_tail += term
        coef *= (mu + k) * (mu + k + 1)
        sign = -sign
        if abs(term) < 1e-30:
            break
    tail = X ** (-2.0 * s) / (2.0 * s) - cos_tail
    radial = 2.0 * (head + mid + tail)
    if n == 1:
        moment = 1.0
    else:
        # |S^(n-2)| int_0^(pi/2) cos^(n-2) psi sin^(2s) psi d psi
        y, wy = _jacobi_left(order, 2.0 * s)
        half = 0.5 * math.pi
        psi = half * y
        g = np.cos(psi) ** (n - 2) * (np.sinc(psi / math.pi)) ** (2.0 * s)
        moment = sphere_area(n - 1) * half ** (1.0 + 2.0 * s) * float(np.dot(wy, g))
    return moment * radial


@functools.lru_cache(maxsize=256)
def normalization_constant(n: int, s: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``C(n, s) = [int_{R^n} (1 - cos z_1) |z|^(-n-2s) dz]^(-1)``.

    The integral factors into ``int_R (1 - cos t) |t|^(-1-2s) dt`` times the
    transverse moment ``int_{R^(n-1)} (1 + |w|^2)^(-(n+2s)/2) dw``; both are
    computed by quadrature.
    """
    _check_ns(n, s)

    def evaluate(order, _levels):
        val = _c_inverse(n, s, order)
        return val, abs(val)

    return 1.0 / _refine(evaluate, spec)


def angular_factor(n: int, s: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int_{-pi/2}^{pi/2} cos(theta)^(n-2+2s) d theta`` for ``n >= 2``."""
    if int(n) != n or n < 2:
        raise ValueError("angular_factor needs n >= 2")
    _check_ns(n, s)
    gamma = n - 2.0 + 2.0 * s
    half = 0.5 * math.pi

    def evaluate(order, _levels):
        # substitute psi = pi/2 - theta: 2 int_0^(pi/2) sin(psi)^gamma
        y, w = _jacobi_left(order, gamma)
        psi = half * y
        val = 2.0 * half ** (1.0 + gamma) * float(np.dot(w, np.sinc(psi / math.pi) ** gamma))
        return val, abs(val)

    return _refine(evaluate, spec)


def _check_ns(n, s):
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s!r}")


# ---------------------------------------------------------------- radial evaluator


def _kinks(profile: RadialProfile):
    pts = set(float(k) for k in profile.kinks if k > 0.0)
    if profile.support_radius is not None:
        pts.add(float(profile.support_radius))
    return sorted(pts)


def _fit_moment(profile: RadialProfile, R: float, e: float) -> float:
    u1 = float(profile(R))
    if u1 == 0.0:
        return 0.0
    u0 = float(profile(R / 1.01))
    if u0 != 0.0 and (u0 > 0) == (u1 > 0):
        a = math.log(u1 / u0) / math.log(1.01)
    else:
        a = profile.decay_exponent
    if not a + e < 0.0:
        raise QuadratureError("far tail of the profile is not integrable against the kernel")
    return u1 * R**e / (-(a + e))


def _tail(profile, d, s, r, ur, R, mode):
    """``int_{|z| > R} (u(r) - u(|z|)) |z - x|^(-d-2s) dz`` by the Gegenbauer expansion."""
    if mode is TailMode.ZERO_EXTENSION:
        if profile.support_radius is None or profile.support_radius > R:
            raise ValueError("zero-extension tail needs a profile supported inside the truncation radius")
    m = d + 2.0 * s
    total = 0.0
    coef = 1.0
    x2 = (r / R) ** 2
    for j in range(200):
        e = -2.0 * s - 2.0 * j
        if mode is TailMode.ZERO_EXTENSION:
            moment = 0.0
        elif profile.tail_moment is not None:
            moment = profile.tail_moment(R, e)
        else:
            moment = _fit_moment(profile, R, e)
        term = coef * r ** (2 * j) * (ur * _power_tail(R, e) - moment)
        total += term
        if r == 0.0 or abs(term) <= 1e-17 * abs(total) or (term == 0.0 and j > 0):
            break
        coef *= (0.5 * m + j) * (0.5 * m - 0.5 * d + 1.0 + j) / ((0.5 * d + j) * (j + 1.0))
        if coef * x2**j == 0.0:
            break
    return sphere_area(d) * total


def _far_kernel(r, rho, delta, d, s, order, levels):
    """``K_delta(r, rho)``: sphere integral of ``|rho w - x|^(-d-2s)`` with ``|rho w - x| >= delta``."""
    m = d + 2.0 * s
    if r == 0.0:
        return sphere_area(d) * rho ** (-m)
    if d == 1:
        gap = np.abs(rho - r)
        near = np.where(gap >= delta, np.maximum(gap, delta) ** (-m), 0.0)
        return near + (rho + r) ** (-m)
    ang_levels = max(2, int(math.ceil(math.log2(8.0 * r / delta))))
    t, w = _angle_rule(order, ang_levels)
    return _kernels.sphere_kernel(r, rho, delta, m, d, t, w, sphere_area(d - 1))


def _innermost(F, rho0, rho1, s):
    """``int_0^rho0 rho^(-1-2s) F(rho) d rho`` with ``F = a rho^2 + b rho^4`` fitted at rho0, rho1."""
    x0, x1 = rho0 * rho0, rho1 * rho1
    b = (F[1] / x1 - F[0] / x0) / (x1 - x0)
    a = F[0] / x0 - b * x0
    return a * rho0 ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s) + b * rho0 ** (4.0 - 2.0 * s) / (4.0 - 2.0 * s)


def _validate_radial(profile, n, s, r):
    _check_ns(n, s)
    if not r >= 0.0 or not math.isfinite(r):
        raise ValueError("radius must be finite and nonnegative")
    if r == 0.0 and (profile.singular_at_zero or 0.0 in profile.kinks):
        raise ValueError("profile is not smooth at the origin; evaluate at r > 0")
    if r > 0.0 and any(abs(r - k) <= 1e-14 * max(1.0, k) for k in _kinks(profile)):
        raise ValueError(f"second difference is not integrable at the kink radius r = {r:g}")
    if profile.singular_at_zero and not profile.origin_exponent + n > 0.0:
        raise ValueError("profile is not locally integrable at the origin")
    if not profile.decay_exponent - 2.0 * s < 0.0:
        raise ValueError("profile grows too fast for the kernel to be integrable")


def _radial_once(profile, d, s, r, spec, order, levels):
    ratio = spec.grading_ratio
    ur = float(profile(r))
    kinks = _kinks(profile)
    if r > 0.0:
        dist = min([r] + [abs(r - k) for k in kinks])
    else:
        dist = min(kinks) if kinks else 1.0
    delta = spec.near_field_radius * dist

    # near field
    c, wc = _polar_rule(d, order)
    edges = _graded(0.0, delta, spec.grading_levels, ratio, True, False)
    rho, wr = _composite(edges[1:], order)

    def second_diff(rh):
        rh = np.atleast_1d(rh)[:, None]
        base = r * r + rh * rh
        cross = 2.0 * r * rh * c[None, :]
        plus = profile(np.sqrt(np.maximum(base + cross, 0.0)))
        minus = profile(np.sqrt(np.maximum(base - cross, 0.0)))
        return (plus + minus - 2.0 * ur) @ wc

    F = second_diff(rho)
    near = -0.5 * (
        float(np.dot(wr, rho ** (-1.0 - 2.0 * s) * F))
        + _innermost(second_diff(edges[1:3]), edges[1], edges[2], s)
    )

    # far field, panel breakpoints (position, graded toward it?)
    if r > 0.0:
        bps = [(0.0, True), (r - delta, True), (r + delta, True)]
    else:
        bps = [(delta, False)]
    bps += [(k, True) for k in kinks]
    bps.sort()
    merged = []
    for pos, flag in bps:
        if merged and abs(pos - merged[-1][0]) <= 1e-14 * max(1.0, pos):
            merged[-1] = (merged[-1][0], merged[-1][1] or flag)
        else:
            merged.append((pos, flag))
    R = spec.truncation_radius * max(1.0, r, merged[-1][0])

    pieces = []
    inner = 0.0
    for (a, fa), (b, fb) in zip(merged[:-1], merged[1:]):
        e = _graded(a, b, levels, ratio, fa, fb)
        if a == 0.0 and profile.singular_at_zero:
            # u ~ rho^e on the first panel: integrate that power exactly
            rho_in = e[1]
            e = e[1:]
            k_in = float(_far_kernel(r, np.array([rho_in]), delta, d, s, order, levels)[0])
            u_in = float(profile(rho_in))
            inner = k_in * rho_in**d * (ur / d - u_in / (profile.origin_exponent + d))
        pieces.append(e)
    last, flag = merged[-1]
    pieces.append(_doubling(last, R, flag, levels, ratio))
    far_edges = np.concatenate([pieces[0]] + [p[1:] for p in pieces[1:]])
    rho_f, w_f = _composite(far_edges, order)
    K = _far_kernel(r, rho_f, delta, d, s, order, levels)
    far = float(np.dot(w_f, (ur - profile(rho_f)) * rho_f ** (d - 1) * K)) + inner
    tail = _tail(profile, d, s, r, ur, R, spec.tail_mode)

    value = near + far + tail
    scale = abs(ur) * sphere_area(d) * delta ** (-2.0 * s) / (2.0 * s) + abs(near)
    return value, scale


def pv_radial_fraclap(
    profile: RadialProfile,
    n: int,
    s: float,
    r: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    normalized: bool = False,
) -> float:
    """``(-Delta)^s u`` at a point with ``|x| = r`` for the radial ``u(x) = profile(|x|)`` on R^n."""
    r = float(r)
    _validate_radial(profile, n, s, r)
    value = _refine(lambda order, levels: _radial_once(profile, n, s, r, spec, order, levels), spec)
    if normalized:
        value *= normalization_constant(n, s, spec)
    return value


# ---------------------------------------------------------------- cylindrical evaluator


def _cyl_once(profile, n, s, r, spec, order, levels):
    d = n - 1
    ur = float(profile(r))
    delta = spec.near_field_radius
    ratio = spec.grading_ratio
    c, wc = _polar_rule(d, order)
    phi, wphi = _composite(_graded(0.0, 0.5 * math.pi, levels + 4, ratio, True, False), order)
    wphi = 2.0 * wphi * np.sin(phi) ** (n - 2)
    sphi = np.sin(phi)

    def shell(rh, sign_pair):
        # sum over phi and the transverse sphere of u(|x' + eta w'|) (+ mirror)
        eta = rh[:, None, None] * sphi[None, :, None]
        base = r * r + eta * eta
        cross = 2.0 * r * eta * c[None, None, :]
        vals = profile(np.sqrt(np.maximum(base + cross, 0.0)))
        if sign_pair:
            vals = vals + profile(np.sqrt(np.maximum(base - cross, 0.0)))
        return np.einsum("ijk,j,k->i", vals, wphi, wc)

    area = sphere_area(n)
    edges = _graded(0.0, delta, spec.grading_levels, ratio, True, False)
    rho, wr = _composite(edges[1:], order)
    F = shell(rho, True) - 2.0 * ur * area
    F_in = shell(edges[1:3], True) - 2.0 * ur * area
    near = -0.5 * (
        float(np.dot(wr, rho ** (-1.0 - 2.0 * s) * F)) + _innermost(F_in, edges[1], edges[2], s)
    )

    R = spec.truncation_radius * max(1.0, r)
    rho_f, w_f = _composite(_doubling(delta, R, False, levels, ratio), order)
    G = shell(rho_f, False)
    far = float(np.dot(w_f, rho_f ** (-1.0 - 2.0 * s) * (ur * area - G)))
    mass = l1_norm(profile, d)
    tail = ur * area * R ** (-2.0 * s) / (2.0 * s) - 2.0 * mass * R ** (-d - 2.0 * s) / (d + 2.0 * s)
    value = near + far + tail
    scale = abs(ur) * area * delta ** (-2.0 * s) / (2.0 * s) + abs(near)
    return value, scale


def pv_cylindrical_fraclap(
    profile: RadialProfile,
    n: int,
    s: float,
    r: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """``(-Delta)^s U`` on R^n for ``U(x', x_n) = profile(|x'|)``, at ``|x'| = r``.

    The integral is evaluated directly in n dimensions (polar radius and the
    angle to the ``x_n`` axis); it does not use any reduction to R^(n-1), so
    it can serve as an independent check of one.  Only smooth profiles that
    are integrable over R^(n-1) (or constants) are supported.
    """
    _check_ns(n, s)
    if n < 2:
        raise ValueError("cylindrical evaluation needs n >= 2")
    r = float(r)
    if profile.constant_value is not None:
        return 0.0
    if profile.regularity is not Regularity.C2_LOCAL or profile.singular_at_zero or _kinks(profile):
        raise ValueError("cylindrical evaluation needs a smooth profile")
    if not profile.decay_exponent < -(n - 1):
        raise ValueError("profile must be integrable over R^(n-1)")
    return _refine(lambda order, levels: _cyl_once(profile, n, s, r, spec, order, levels), spec)


# ---------------------------------------------------------------- super-solutions


@dataclass(frozen=True)
class SupersolutionPair:
    """``u = A (1+r)^(-2 s k1)``, ``v = B (1+r)^(-2 t k2)`` with ``c1 A = B^p``, ``c2 B = A^q``."""

    params: ProblemParams
    k1: float
    k2: float
    c1: float
    c2: float
    A: float
    B: float
    u_profile: RadialProfile
    v_profile: RadialProfile
    forced: bool = False

    def to_dict(self) -> dict:
        p = self.params
        return {
            "n": p.n, "s": p.s, "t": p.t, "p": p.p, "q": p.q,
            "k1": self.k1, "k2": self.k2, "c1": self.c1, "c2": self.c2,
            "A": self.A, "B": self.B, "forced": self.forced,
        }


def pair_from_constants(params: ProblemParams, c1: float, c2: float, A: Optional[float] = None,
                        B: Optional[float] = None, forced: bool = False) -> SupersolutionPair:
    k1, k2 = supersolution_exponents(params)
    e = 1.0 / params.pq_minus_one
    if A is None:
        A = (c1 * c2**params.p) ** e
    if B is None:
        B = (c1**params.q * c2) ** e
    a1 = 2.0 * params.s * k1
    a2 = 2.0 * params.t * k2
    return SupersolutionPair(
        params=params, k1=k1, k2=k2, c1=c1, c2=c2, A=A, B=B,
        u_profile=decaying(a1, A), v_profile=decaying(a2, B), forced=forced,
    )


def supersolution_constants(
    params: ProblemParams, spec: QuadratureSpec = DEFAULT_SPEC, force: bool = False
) -> SupersolutionPair:
    """Compute ``c1 = (-Delta)^s |x|^(-2 s k1)`` and ``c2`` at ``|x| = 1``, then ``A`` and ``B``.

    Requires the regime where the criticality condition fails, which makes
    both constants positive.  ``force=True`` skips that requirement and uses
    ``|c1|``, ``|c2|``; such a pair is not expected to be a super-solution.
    """
    k1, k2 = supersolution_exponents(params)
    a1 = 2.0 * params.s * k1
    a2 = 2.0 * params.t * k2
    if not force and classify_exponents(params).classification is not Criticality.FAILS:
        raise ValueError("super-solution constants need parameters where the criticality condition fails")
    if a1 >= params.n or a2 >= params.n:
        raise ValueError("decay exponent reaches n: the constants are not defined")
    c1 = pv_radial_fraclap(power(-a1), params.n, params.s, 1.0, spec)
    c2 = pv_radial_fraclap(power(-a2), params.n, params.t, 1.0, spec)
    if force:
        c1, c2 = abs(c1), abs(c2)
    elif not (c1 > 0.0 and c2 > 0.0):
        raise ValueError(f"non-positive super-solution constants c1={c1:g}, c2={c2:g}")
    return pair_from_constants(params, c1, c2, forced=force)
