"""Exponent algebra for the coupled system (-Delta)^s u = v^p, (-Delta)^t v = u^q.

Everything here is a pure function of ``(n, s, t, p, q)``: the two scaling
exponents ``beta1``/``beta2``, the criticality classification, the decay
exponents of the explicit whole-space super-solutions, and the identities
tying them together.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

EQUALITY_RTOL = 1e-9


class Criticality(str, enum.Enum):
    SUBCRITICAL_STRICT = "SubcriticalStrict"
    CRITICAL_EQUALITY = "CriticalEquality"
    FAILS = "Fails"


@dataclass(frozen=True)
class ProblemParams:
    """Dimension, fractional orders and exponents of the system.

    ``n = 1`` is accepted (all desk-scale solving is one-dimensional) but the
    existence and Liouville statements assume ``n >= 2``; see
    :attr:`CriticalityReport.warnings`.
    """

    n: int
    s: float
    t: float
    p: float
    q: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension n must be a positive integer, got {self.n!r}")
        for name in ("s", "t"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {val!r}")
        for name in ("p", "q"):
            val = getattr(self, name)
            if not val > 0.0:
                raise ValueError(f"{name} must be positive, got {val!r}")
        if not self.p * self.q > 1.0:
            raise ValueError(f"pq must exceed 1 (got pq = {self.p * self.q!r})")

    @property
    def pq_minus_one(self) -> float:
        return self.p * self.q - 1.0


@dataclass(frozen=True)
class CriticalityReport:
    params: ProblemParams
    beta1: float
    beta2: float
    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float
    branch1_holds: bool
    branch2_holds: bool
    classification: Criticality
    sobolev_type_holds: bool | None
    theorem_hypotheses_hold: bool
    warnings: tuple[str, ...] = field(default=())

    @property
    def condition_holds(self) -> bool:
        return self.classification is not Criticality.FAILS

    def to_dict(self) -> dict:
        return {
            "n": self.params.n,
            "s": self.params.s,
            "t": self.params.t,
            "p": self.params.p,
            "q": self.params.q,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "rhs1": self.rhs1,
            "rhs2": self.rhs2,
            "branch1_holds": self.branch1_holds,
            "branch2_holds": self.branch2_holds,
            "classification": self.classification.value,
            "sobolev_type_holds": self.sobolev_type_holds,
            "theorem_hypotheses_hold": self.theorem_hypotheses_hold,
            "warnings": list(self.warnings),
        }


def scaling_exponents(params: ProblemParams) -> tuple[float, float]:
    """Return ``(beta1, beta2)``, the blow-up scaling exponents of ``u`` and ``v``."""
    s, t, p, q = params.s, params.t, params.p, params.q
    d = params.pq_minus_one
    beta1 = (2.0 * s / p + 2.0 * t) * p / d
    beta2 = (2.0 * t / q + 2.0 * s) * q / d
    return beta1, beta2


def _compare(lhs: float, rhs: float) -> int:
    """Sign of ``lhs - rhs`` with equality detected at relative tolerance."""
    scale = max(abs(lhs), abs(rhs), 1.0)
    if abs(lhs - rhs) <= EQUALITY_RTOL * scale:
        return 0
    return 1 if lhs > rhs else -1


def classify_exponents(params: ProblemParams) -> CriticalityReport:
    """Evaluate the two-branch criticality condition for ``params``.

    The condition holds when ``beta1 >= n - 2s`` or ``beta2 >= n - 2t``.  A
    strict inequality in either branch gives ``SubcriticalStrict``; equality in
    some branch without any strict one gives ``CriticalEquality``; both
    reversed strictly gives ``Fails``.
    """
    n, s, t, p, q = params.n, params.s, params.t, params.p, params.q
    beta1, beta2 = scaling_exponents(params)
    rhs1 = n - 2.0 * s
    rhs2 = n - 2.0 * t
    c1 = _compare(beta1, rhs1)
    c2 = _compare(beta2, rhs2)
    if c1 > 0 or c2 > 0:
        cls = Criticality.SUBCRITICAL_STRICT
    elif c1 == 0 or c2 == 0:
        cls = Criticality.CRITICAL_EQUALITY
    else:
        cls = Criticality.FAILS

    sobolev = None
    if s == t:
        sobolev = 1.0 / (p + 1.0) + 1.0 / (q + 1.0) > (n - 2.0 * s) / n

    warnings = []
    if n < 2:
        warnings.append("n < 2: the whole-space and half-space theorems assume n >= 2")
    if not n > 2.0 * s + 1.0:
        warnings.append("n <= 2s + 1")
    if not n > 2.0 * t + 1.0:
        warnings.append("n <= 2t + 1")
    if p < 1.0 or q < 1.0:
        warnings.append("p < 1 or q < 1: only the whole-space Liouville regime applies")

    return CriticalityReport(
        params=params,
        beta1=beta1,
        beta2=beta2,
        lhs1=beta1,
        rhs1=rhs1,
        lhs2=beta2,
        rhs2=rhs2,
        branch1_holds=c1 >= 0,
        branch2_holds=c2 >= 0,
        classification=cls,
        sobolev_type_holds=sobolev,
        theorem_hypotheses_hold=not warnings,
        warnings=tuple(warnings),
    )


def supersolution_exponents(params: ProblemParams) -> tuple[float, float]:
    """Decay exponents ``(k1, k2)`` of ``A(1+|x|)^(-2 s k1)``, ``B(1+|x|)^(-2 t k2)``.

    They are the unique solution of ``2s(k1+1) = 2t k2 p`` and
    ``2t(k2+1) = 2s k1 q``, which gives ``2 s k1 = beta1`` and ``2 t k2 = beta2``.
    """
    s, t, p, q = params.s, params.t, params.p, params.q
    d = params.pq_minus_one
    k1 = (s + t * p) / (s * d)
    k2 = (t + s * q) / (t * d)
    return k1, k2


def exponent_identity_defects(params: ProblemParams) -> dict[str, float]:
    """Residuals of the identities used by the blow-up rescaling and super-solutions.

    All entries vanish in exact arithmetic:

    * ``2s + beta1 - p beta2`` and ``2t + beta2 - q beta1`` (the rescaled
      system has no leftover power of the scale),
    * ``2s(k1+1) - 2t k2 p`` and ``2t(k2+1) - 2s k1 q``.
    """
    s, t, p, q = params.s, params.t, params.p, params.q
    beta1, beta2 = scaling_exponents(params)
    k1, k2 = supersolution_exponents(params)
    return {
        "scale_u": 2.0 * s + beta1 - p * beta2,
        "scale_v": 2.0 * t + beta2 - q * beta1,
        "super_u": 2.0 * s * (k1 + 1.0) - 2.0 * t * k2 * p,
        "super_v": 2.0 * t * (k2 + 1.0) - 2.0 * s * k1 * q,
    }


def rescaled_power_exponents(params: ProblemParams) -> tuple[float, float]:
    """Powers of the blow-up scale multiplying ``w`` and ``z`` in the rescaled system.

    Returns ``((2s + beta1 - p beta2)/p, (2t + beta2 - q beta1)/q)``; both are
    zero, so the rescaled equations carry no residual dependence on the scale.
    """
    d = exponent_identity_defects(params)
    return d["scale_u"] / params.p, d["scale_v"] / params.q


def theta_threshold(lambda1: float, p: float, q: float) -> float:
    """A shift beyond which the shifted system admits no solution in the cone.

    With ``r = max(p, q) > 1`` we need ``(y + theta)^(r-1) >= lambda1^2`` for
    all ``y >= 0``, i.e. ``theta >= lambda1^(2/(r-1))``.
    """
    r = max(p, q)
    if r <= 1.0:
        raise ValueError("need p > 1 or q > 1")
    return lambda1 ** (2.0 / (r - 1.0))
