"""Radial profiles ``r -> u(r)`` consumed by the singular-integral evaluator."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special


class Regularity(str, enum.Enum):
    C2_LOCAL = "C2Local"
    BOUNDED_ONLY = "BoundedOnly"


def _power_tail(R, c):
    """``int_R^inf rho^(c-1) d rho`` for ``c < 0``."""
    return R**c / (-c)


@dataclass(frozen=True)
class RadialProfile:
    """A radial function on R^n given through its profile ``r -> u(r)``.

    ``decay_exponent`` is the power ``a`` with ``u(r) ~ r^a`` at infinity
    (``-inf`` for compact support or faster than any power).  The evaluator
    treats ``kinks`` (radii where the profile is not smooth) and the origin as
    panel breakpoints, and uses ``origin_exponent`` (``u(r) ~ r^e`` as
    ``r -> 0``) to integrate the innermost panel.  ``tail_moment(R, e)``, when
    given, returns ``int_R^inf u(rho) rho^(e-1) d rho`` exactly; otherwise the
    far tail is integrated against a local power-law fit.
    """

    value_fn: Callable[[np.ndarray], np.ndarray]
    decay_exponent: float
    regularity: Regularity = Regularity.C2_LOCAL
    singular_at_zero: bool = False
    origin_exponent: float = 0.0
    kinks: tuple[float, ...] = ()
    support_radius: Optional[float] = None
    tail_moment: Optional[Callable[[float, float], float]] = field(default=None, compare=False)
    constant_value: Optional[float] = None
    name: str = "profile"

    def __call__(self, r):
        return self.value_fn(np.asarray(r, dtype=float))

    def scaled(self, lam: float) -> "RadialProfile":
        """The profile ``r -> u(lam r)``."""
        if not lam > 0:
            raise ValueError("scale factor must be positive")
        fn = self.value_fn
        tm = None
        if self.tail_moment is not None:
            base = self.tail_moment
            tm = lambda R, e: lam ** (-e) * base(lam * R, e)
        return replace(
            self,
            value_fn=lambda r: fn(lam * r),
            kinks=tuple(k / lam for k in self.kinks),
            support_radius=None if self.support_radius is None else self.support_radius / lam,
            tail_moment=tm,
            name=f"{self.name}(x{lam:g})",
        )

    def __mul__(self, c: float) -> "RadialProfile":
        c = float(c)
        fn = self.value_fn
        tm = None
        if self.tail_moment is not None:
            base = self.tail_moment
            tm = lambda R, e: c * base(R, e)
        return replace(
            self,
            value_fn=lambda r: c * fn(r),
            tail_moment=tm,
            constant_value=None if self.constant_value is None else c * self.constant_value,
            name=f"{c:g}*{self.name}",
        )

    __rmul__ = __mul__

    def __add__(self, other: "RadialProfile") -> "RadialProfile":
        f, g = self.value_fn, other.value_fn
        tm = None
        if self.tail_moment is not None and other.tail_moment is not None:
            tf, tg = self.tail_moment, other.tail_moment
            tm = lambda R, e: tf(R, e) + tg(R, e)
        if self.support_radius is None or other.support_radius is None:
            support = None
        else:
            support = max(self.support_radius, other.support_radius)
        reg = (
            Regularity.C2_LOCAL
            if self.regularity is other.regularity is Regularity.C2_LOCAL
            else Regularity.BOUNDED_ONLY
        )
        const = None
        if self.constant_value is not None and other.constant_value is not None:
            const = self.constant_value + other.constant_value
        return RadialProfile(
            value_fn=lambda r: f(r) + g(r),
            decay_exponent=max(self.decay_exponent, other.decay_exponent),
            regularity=reg,
            singular_at_zero=self.singular_at_zero or other.singular_at_zero,
            origin_exponent=min(self.origin_exponent, other.origin_exponent),
            kinks=tuple(sorted(set(self.kinks) | set(other.kinks))),
            support_radius=support,
            tail_moment=tm,
            constant_value=const,
            name=f"({self.name}+{other.name})",
        )


def power(sigma: float, amplitude: float = 1.0) -> RadialProfile:
    """``amplitude * r^sigma``."""
    sigma = float(sigma)
    if sigma == 0.0:
        return constant(amplitude)
    return RadialProfile(
        value_fn=lambda r: amplitude * r**sigma,
        decay_exponent=sigma,
        singular_at_zero=sigma < 0,
        origin_exponent=sigma,
        tail_moment=lambda R, e: amplitude * _power_tail(R, sigma + e),
        name=f"r^{sigma:g}",
    )


def constant(value: float = 1.0) -> RadialProfile:
    value = float(value)
    return RadialProfile(
        value_fn=lambda r: np.full_like(r, value, dtype=float),
        decay_exponent=0.0,
        tail_moment=lambda R, e: value * _power_tail(R, e),
        constant_value=value,
        name=f"const({value:g})",
    )


def theta(n: int, s: float) -> RadialProfile:
    """``log(1 + r) * r^(2s - n)``."""
    sigma = 2.0 * s - n

    def tail(R, e):
        if R <= 1.0:
            raise ValueError("tail expansion of log(1+r) needs R > 1")
        c = sigma + e
        # log(1+rho) = log(rho) + sum_j (-1)^(j+1) rho^(-j) / j
        total = R**c * (-math.log(R) / c + 1.0 / c**2)
        for j in range(1, 200):
            term = (-1) ** (j + 1) / j * R ** (c - j) / (j - c)
            total += term
            if abs(term) < 1e-18 * abs(total):
                break
        return total

    return RadialProfile(
        value_fn=lambda r: np.log1p(r) * r**sigma,
        decay_exponent=sigma,
        singular_at_zero=sigma + 1.0 < 0,
        origin_exponent=sigma + 1.0,
        tail_moment=tail,
        name="Theta",
    )


def decaying(alpha: float, amplitude: float = 1.0) -> RadialProfile:
    """``amplitude * (1 + r)^(-alpha)``; not differentiable at the origin as a function on R^n."""
    alpha = float(alpha)

    def tail(R, e):
        # (1+rho)^-a = sum_j binom(-a, j) rho^(-a-j), valid for rho > 1
        if R <= 1.0:
            raise ValueError("tail expansion of (1+r)^-alpha needs R > 1")
        total = 0.0
        coef = 1.0
        for j in range(0, 400):
            term = coef * R ** (e - alpha - j) / (alpha + j - e)
            total += term
            if j > 2 and abs(term) < 1e-18 * abs(total):
                break
            coef *= -(alpha + j) / (j + 1)
        return amplitude * total

    return RadialProfile(
        value_fn=lambda r: amplitude * (1.0 + r) ** (-alpha),
        decay_exponent=-alpha,
        kinks=(0.0,),
        tail_moment=tail,
        name=f"(1+r)^-{alpha:g}",
    )


def bump(s: float) -> RadialProfile:
    """``(1 - r^2)_+^s``, supported in the unit ball."""

    def fn(r):
        return np.where(r < 1.0, np.clip(1.0 - r * r, 0.0, None) ** s, 0.0)

    return RadialProfile(
        value_fn=fn,
        decay_exponent=-math.inf,
        regularity=Regularity.BOUNDED_ONLY,
        kinks=(1.0,),
        support_radius=1.0,
        tail_moment=lambda R, e: 0.0 if R >= 1.0 else math.nan,
        name=f"(1-r^2)_+^{s:g}",
    )


def gaussian(width: float = 1.0) -> RadialProfile:
    """``exp(-(r / width)^2)``."""

    def tail(R, e):
        if (R / width) ** 2 > 700:
            return 0.0
        val, _ = integrate.quad(lambda x: math.exp(-((x / width) ** 2)) * x ** (e - 1), R, math.inf)
        return val

    return RadialProfile(
        value_fn=lambda r: np.exp(-((r / width) ** 2)),
        decay_exponent=-math.inf,
        tail_moment=tail,
        name="gauss",
    )


def truncated_power(sigma: float, eps: float) -> RadialProfile:
    """``eps^sigma`` on ``[0, eps]`` and ``r^sigma`` beyond: a power cut off at the origin."""
    sigma = float(sigma)

    def fn(r):
        return np.maximum(r, eps) ** sigma

    return RadialProfile(
        value_fn=fn,
        decay_exponent=sigma,
        kinks=(float(eps),),
        tail_moment=lambda R, e: _power_tail(R, sigma + e) if R >= eps else math.nan,
        name=f"trunc(r^{sigma:g},{eps:g})",
    )


def l1_norm(profile: RadialProfile, dim: int) -> float:
    """``int_{R^dim} u(|x|) dx`` for a profile decaying faster than ``r^-dim``."""
    if not profile.decay_exponent < -dim:
        raise ValueError("profile is not integrable over the whole space")
    area = sphere_area(dim)
    f = lambda x: float(profile(x)) * x ** (dim - 1)
    pts = sorted(k for k in profile.kinks if k > 0)
    lim = profile.support_radius if profile.support_radius is not None else math.inf
    edges = [0.0] + pts + ([lim] if math.isfinite(lim) else [])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, a, b, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
    if not math.isfinite(lim):
        total += integrate.quad(f, edges[-1], math.inf, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
    return area * total


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere in R^dim (2 for dim = 1)."""
    return 2.0 * math.pi ** (dim / 2.0) / special.gamma(dim / 2.0)
