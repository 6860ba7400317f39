"""Solution operator, fixed-point iteration and principal eigenpair for the 1-D system.

Discretely the system reads ``As u = v^p``, ``At v = u^q`` with ``As``, ``At``
from :func:`fracsys.operator.assemble_operator`.  ``S(f, g)`` solves the two
linear problems, ``T(u, v) = S(v^p, u^q)`` and ``H(theta, u, v) =
S((v + theta)^p, (u + theta)^q)``.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .operator import GridFunction, OperatorMatrix


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIterExceeded"
    BLOWN_UP = "BlownUp"
    CONVERGED_TO_ZERO = "ConvergedToZero"


class IterationMode(str, enum.Enum):
    PICARD = "picard"
    NORMALIZED = "normalized"


class ConvergenceError(RuntimeError):
    pass


ZERO_THRESHOLD = 1e-14

Init = Union[float, tuple[GridFunction, GridFunction]]


@dataclass(frozen=True)
class SolverConfig:
    """Iteration settings.

    ``init`` is either a positive constant or a prescribed ``(u, v)`` pair.
    ``mode = "picard"`` iterates ``(u, v) <- (1-damping)(u, v) + damping
    H(theta, u, v)``.  Because ``T`` is superlinear, its positive fixed points
    repel that iteration; ``mode = "normalized"`` instead iterates the
    sup-normalised map and recovers the amplitudes from the normalisation
    factors at the end (requires ``theta = 0``).
    """

    tol_residual: float = 1e-10
    max_iter: int = 10000
    damping: float = 1.0
    theta: float = 0.0
    blowup_threshold: float = 1e8
    init: Init = 0.5
    mode: IterationMode = IterationMode.PICARD
    record_trace: bool = True

    def __post_init__(self):
        if not self.tol_residual > 0.0:
            raise ValueError("tol_residual must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if not self.theta >= 0.0:
            raise ValueError("theta must be nonnegative")
        if not self.blowup_threshold > 0.0:
            raise ValueError("blowup_threshold must be positive")
        if not isinstance(self.init, tuple) and not float(self.init) > 0.0:
            raise ValueError("constant init must be positive")
        object.__setattr__(self, "mode", IterationMode(self.mode))
        if self.mode is IterationMode.NORMALIZED and self.theta != 0.0:
            raise ValueError("normalized iteration needs theta = 0")


@dataclass
class SystemSolution:
    u: GridFunction
    v: GridFunction
    iterations: int
    residual_u: float
    residual_v: float
    status: Status
    sup_u: float
    sup_v: float
    iterate_trace: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "grid": self.u.grid.to_dict(),
            "u": self.u.values.tolist(),
            "v": self.v.values.tolist(),
            "status": self.status.value,
            "iterations": self.iterations,
            "residuals": {"u": self.residual_u, "v": self.residual_v},
            "sup_u": self.sup_u,
            "sup_v": self.sup_v,
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "sup_u", "sup_v"])
            for k, (a, b) in enumerate(self.iterate_trace, start=1):
                w.writerow([k, repr(a), repr(b)])


@dataclass
class EigenPair:
    lambda1: float
    phi: GridFunction
    psi: GridFunction
    residual: float
    power_iterations: int

    def to_dict(self) -> dict:
        return {
            "grid": self.phi.grid.to_dict(),
            "lambda1": self.lambda1,
            "phi": self.phi.values.tolist(),
            "psi": self.psi.values.tolist(),
            "residual": self.residual,
            "power_iterations": self.power_iterations,
        }


def _check_pair(As: OperatorMatrix, At: OperatorMatrix):
    if As.grid != At.grid:
        raise ValueError("operators must share one grid")


def dirichlet_solve(As: OperatorMatrix, At: OperatorMatrix, f: GridFunction, g: GridFunction):
    """``S(f, g)``: solve ``As u = f`` and ``At v = g``."""
    _check_pair(As, At)
    if f.grid != As.grid or g.grid != As.grid:
        raise ValueError("data live on a different grid")
    if not (np.all(np.isfinite(f.values)) and np.all(np.isfinite(g.values))):
        raise ValueError("right-hand sides must be finite")
    return GridFunction(As.grid, As.solve(f.values)), GridFunction(At.grid, At.solve(g.values))


def _require_cone(*funcs: GridFunction):
    for fn in funcs:
        if np.any(fn.values < 0.0):
            raise ValueError("arguments must be nonnegative (outside the cone)")


def apply_H(As, At, theta: float, u: GridFunction, v: GridFunction, p: float, q: float):
    """``S((v + theta)^p, (u + theta)^q)``."""
    if not theta >= 0.0:
        raise ValueError("theta must be nonnegative")
    _require_cone(u, v)
    grid = As.grid
    f = GridFunction(grid, (v.values + theta) ** p)
    g = GridFunction(grid, (u.values + theta) ** q)
    return dirichlet_solve(As, At, f, g)


def apply_T(As, At, u: GridFunction, v: GridFunction, p: float, q: float):
    """``S(v^p, u^q)``."""
    return apply_H(As, At, 0.0, u, v, p, q)


def _initial(config: SolverConfig, grid):
    if isinstance(config.init, tuple):
        u0, v0 = config.init
        if u0.grid != grid or v0.grid != grid:
            raise ValueError("prescribed init lives on a different grid")
        _require_cone(u0, v0)
        return u0.values.copy(), v0.values.copy()
    c = float(config.init)
    return np.full(grid.size, c), np.full(grid.size, c)


def _equation_residuals(As, At, u, v, p, q):
    """Sup-norm residuals of both equations, relative to the size of the right-hand side."""
    fu = v**p
    fv = u**q
    ru = float(np.max(np.abs(As.entries @ u - fu))) / max(1.0, float(np.max(np.abs(fu))))
    rv = float(np.max(np.abs(At.entries @ v - fv))) / max(1.0, float(np.max(np.abs(fv))))
    return ru, rv


def solve_system(As: OperatorMatrix, At: OperatorMatrix, p: float, q: float,
                 config: SolverConfig = SolverConfig()) -> SystemSolution:
    """Fixed-point iteration for ``As u = (v + theta)^p``, ``At v = (u + theta)^q``.

    Every outcome is reported through ``status``; nothing is raised for
    divergence.  Residuals are relative to ``max(1, sup |rhs|)``.
    """
    _check_pair(As, At)
    if not (p > 0.0 and q > 0.0):
        raise ValueError("p and q must be positive")
    if config.mode is IterationMode.NORMALIZED:
        return _solve_normalized(As, At, p, q, config)
    u, v = _initial(config, As.grid)
    d = config.damping
    theta = config.theta
    trace: list[tuple[float, float]] = []
    status = Status.MAX_ITER
    k = 0
    for k in range(1, config.max_iter + 1):
        hu = As.solve((v + theta) ** p)
        hv = At.solve((u + theta) ** q)
        if d != 1.0:
            hu = (1.0 - d) * u + d * hu
            hv = (1.0 - d) * v + d * hv
        change = max(float(np.max(np.abs(hu - u))), float(np.max(np.abs(hv - v))))
        u, v = hu, hv
        su, sv = float(np.max(np.abs(u))), float(np.max(np.abs(v)))
        if config.record_trace:
            trace.append((su, sv))
        if not (math.isfinite(su) and math.isfinite(sv)) or max(su, sv) > config.blowup_threshold:
            status = Status.BLOWN_UP
            break
        if max(su, sv) < ZERO_THRESHOLD:
            status = Status.CONVERGED_TO_ZERO
            break
        if change <= config.tol_residual:
            status = Status.CONVERGED
            break
    return _finish(As, At, u, v, p, q, theta, k, status, trace)


def _finish(As, At, u, v, p, q, theta, k, status, trace):
    grid = As.grid
    if status is Status.BLOWN_UP:
        ru = rv = math.inf
    else:
        ru, rv = _equation_residuals(As, At, u + theta, v + theta, p, q) if theta == 0.0 else (
            _shifted_residuals(As, At, u, v, p, q, theta))
    return SystemSolution(
        u=GridFunction(grid, u), v=GridFunction(grid, v), iterations=k,
        residual_u=ru, residual_v=rv, status=status,
        sup_u=float(np.max(np.abs(u))), sup_v=float(np.max(np.abs(v))), iterate_trace=trace,
    )


def _shifted_residuals(As, At, u, v, p, q, theta):
    fu = (v + theta) ** p
    fv = (u + theta) ** q
    ru = float(np.max(np.abs(As.entries @ u - fu))) / max(1.0, float(np.max(fu)))
    rv = float(np.max(np.abs(At.entries @ v - fv))) / max(1.0, float(np.max(fv)))
    return ru, rv


def _solve_normalized(As, At, p, q, config):
    # w <- As^-1 z^p / |.|, z <- At^-1 w^q / |.|; at a fixed point
    # As w = mu z^p and At z = nu w^q, so (a w, b z) solves the system with
    # a^(pq-1) = mu nu^p and b = a^q / nu.
    w, z = _initial(config, As.grid)
    w = w / np.max(w)
    z = z / np.max(z)
    trace: list[tuple[float, float]] = []
    status = Status.MAX_ITER
    a = b = math.nan
    k = 0
    for k in range(1, config.max_iter + 1):
        wt = As.solve(z**p)
        mw = float(np.max(wt))
        wn = wt / mw
        zt = At.solve(wn**q)
        mz = float(np.max(zt))
        zn = zt / mz
        d = config.damping
        if d != 1.0:
            wn = (1.0 - d) * w + d * wn
            zn = (1.0 - d) * z + d * zn
        change = max(float(np.max(np.abs(wn - w))), float(np.max(np.abs(zn - z))))
        w, z = wn, zn
        log_a = (-math.log(mw) - p * math.log(mz)) / (p * q - 1.0)
        log_b = q * log_a + math.log(mz)
        a, b = math.exp(min(log_a, 700.0)), math.exp(min(log_b, 700.0))
        if config.record_trace:
            trace.append((a * float(np.max(w)), b * float(np.max(z))))
        if max(a, b) > config.blowup_threshold:
            status = Status.BLOWN_UP
            break
        if max(a, b) < ZERO_THRESHOLD:
            status = Status.CONVERGED_TO_ZERO
            break
        if change <= config.tol_residual:
            status = Status.CONVERGED
            break
    return _finish(As, At, a * w, b * z, p, q, 0.0, k, status, trace)


def principal_eigenpair(As: OperatorMatrix, At: OperatorMatrix,
                        config: SolverConfig = SolverConfig(), tol: float = 1e-13) -> EigenPair:
    """Principal eigenpair of ``As phi = lambda psi``, ``At psi = lambda phi``.

    Power iteration on ``M = As^-1 At^-1`` from the all-ones vector gives the
    spectral radius ``rho(M) = lambda1^-2``; then ``psi = lambda1 At^-1 phi``
    and ``sup phi = 1``.
    """
    _check_pair(As, At)
    x = np.ones(As.grid.size)
    rho = 0.0
    for k in range(1, config.max_iter + 1):
        y = As.solve(At.solve(x))
        rho_new = float(np.max(np.abs(y)))
        y = y / rho_new
        change = float(np.max(np.abs(y - x)))
        x = y
        if change <= tol and abs(rho_new - rho) <= tol * rho_new:
            rho = rho_new
            break
        rho = rho_new
    else:
        raise ConvergenceError(f"power iteration stagnated after {config.max_iter} iterations")
    lam = rho ** -0.5
    phi = x / np.max(x)
    psi = lam * At.solve(phi)
    r1 = float(np.max(np.abs(As.entries @ phi - lam * psi)))
    r2 = float(np.max(np.abs(At.entries @ psi - lam * phi)))
    residual = max(r1, r2)
    if not residual < 1e-8:
        raise ConvergenceError(f"eigen-residual {residual:.3e} above 1e-8")
    grid = As.grid
    return EigenPair(lam, GridFunction(grid, phi), GridFunction(grid, psi), residual, k)


@dataclass(frozen=True)
class RescaledFunction:
    """``x -> lam^beta * f(lam x + x0)`` for a grid function ``f`` (zero outside its interval)."""

    source: GridFunction
    beta: float
    lam: float
    x0: float

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.lam**self.beta * self.source(self.lam * x + self.x0)

    @property
    def nodes(self) -> np.ndarray:
        return (self.source.grid.nodes - self.x0) / self.lam

    @property
    def values(self) -> np.ndarray:
        return self.lam**self.beta * self.source.values


def blowup_frame(u: GridFunction) -> tuple[float, float, float]:
    """``(sup u, argmax u, index)``; ties go to the leftmost node."""
    i = int(np.argmax(u.values))
    return float(u.values[i]), float(u.grid.nodes[i]), i


def blowup_rescale(u: GridFunction, v: GridFunction, beta1: float, beta2: float,
                   lam: float, x0: float) -> tuple[RescaledFunction, RescaledFunction]:
    """``z(x) = lam^beta1 u(lam x + x0)``, ``w(x) = lam^beta2 v(lam x + x0)``."""
    if not lam > 0.0:
        raise ValueError("lam must be positive")
    g = u.grid
    if v.grid != g:
        raise ValueError("u and v live on different grids")
    if not g.left < x0 < g.right:
        raise ValueError("x0 must lie inside the interval")
    _require_cone(u, v)
    return RescaledFunction(u, beta1, lam, x0), RescaledFunction(v, beta2, lam, x0)


def rescale_at_max(u: GridFunction, v: GridFunction, beta1: float, beta2: float):
    """Rescale about the maximum of ``u`` with ``lam = (sup u)^(-1/beta1)``, so ``z(0) = 1``."""
    m, x0, _ = blowup_frame(u)
    if not m > 0.0:
        raise ValueError("u vanishes identically")
    lam = m ** (-1.0 / beta1)
    return blowup_rescale(u, v, beta1, beta2, lam, x0)
