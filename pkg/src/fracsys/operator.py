"""Dense discretisation of (-Delta)^s on an interval with zero exterior data.

At node ``x_i`` the one-dimensional operator is
``-int_0^inf (u(x+y) + u(x-y) - 2u(x)) y^(-1-2s) dy``.  On ``(0, h)`` the
second difference is replaced by ``u''(x) y^2`` with the centred difference
for ``u''``; on ``(h, inf)`` it is replaced by its piecewise-linear
interpolant in ``y`` and integrated exactly against the kernel.  Every
off-diagonal entry is then nonpositive and the matrix is a symmetric Toeplitz
M-matrix.  Nodes outside the interval carry the value zero; the kernel mass
they would have coupled to is kept on the diagonal (``tail_diagonal``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from . import _kernels


@dataclass(frozen=True)
class Grid1D:
    left: float = -1.0
    right: float = 1.0
    n_cells: int = 128

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError("grid needs left < right")
        if int(self.n_cells) != self.n_cells or self.n_cells < 8:
            raise ValueError("n_cells must be an integer >= 8")

    @property
    def h(self) -> float:
        return (self.right - self.left) / self.n_cells

    @property
    def size(self) -> int:
        return self.n_cells - 1

    @property
    def nodes(self) -> np.ndarray:
        """Interior node coordinates (the endpoints are exterior)."""
        return self.left + self.h * np.arange(1, self.n_cells)

    def to_dict(self) -> dict:
        return {"left": self.left, "right": self.right, "n_cells": self.n_cells}


@dataclass
class GridFunction:
    """Values at the interior nodes of ``grid``; zero outside the interval."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values, got shape {self.values.shape}")

    @classmethod
    def from_function(cls, grid: Grid1D, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(grid, fn(grid.nodes))

    @classmethod
    def constant(cls, grid: Grid1D, value: float) -> "GridFunction":
        return cls(grid, np.full(grid.size, float(value)))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __call__(self, x) -> np.ndarray:
        """Piecewise-linear interpolant, zero outside the interval."""
        g = self.grid
        xp = np.concatenate([[g.left], g.nodes, [g.right]])
        fp = np.concatenate([[0.0], self.values, [0.0]])
        return np.interp(x, xp, fp, left=0.0, right=0.0)


def _h(y, s):
    if s == 0.5:
        return -np.log(y)
    return y ** (1.0 - 2.0 * s) / (2.0 * s * (2.0 * s - 1.0))


def exterior_weight(k, s):
    """Kernel mass (in units of ``h^-2s``) reaching nodes at distance ``>= k`` cells on one side."""
    k = np.asarray(k, dtype=float)
    out = np.empty_like(k)
    first = k == 1.0
    out[first] = 1.0 / (2.0 * s) + 1.0 / (2.0 - 2.0 * s)
    out[~first] = _h(k[~first] - 1.0, s) - _h(k[~first], s)
    return out


@dataclass
class OperatorMatrix:
    s: float
    grid: Grid1D
    entries: np.ndarray
    tail_diagonal: np.ndarray
    _chol: Optional[tuple] = field(default=None, repr=False, compare=False)

    @property
    def exterior_mass_exact(self) -> np.ndarray:
        """``(1/2s) [(x-left)^(-2s) + (right-x)^(-2s)]`` at the interior nodes."""
        x = self.grid.nodes
        s = self.s
        return ((x - self.grid.left) ** (-2.0 * s) + (self.grid.right - x) ** (-2.0 * s)) / (2.0 * s)

    def cholesky(self):
        if self._chol is None:
            self._chol = linalg.cho_factor(self.entries, lower=True, check_finite=False)
        return self._chol

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.cho_solve(self.cholesky(), rhs, check_finite=False)

    def export_text(self, path) -> None:
        """One matrix row per line, entries as 17-significant-digit decimals."""
        np.savetxt(Path(path), self.entries, fmt="%.17g")


def assemble_operator(grid: Grid1D, s: float, spec=None) -> OperatorMatrix:
    """Assemble the matrix of ``(-Delta)^s`` (``C(1, s) = 1``) on ``grid``.

    All kernel integrals are evaluated in closed form, so ``spec`` (a
    :class:`~fracsys.quadrature.QuadratureSpec`) is accepted for interface
    uniformity but does not affect the result.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s!r}")
    N = grid.size
    scale = grid.h ** (-2.0 * s)
    w = _kernels.hat_weights(s, max(N - 1, 1))
    col = np.zeros(N)
    col[0] = 2.0 / (2.0 - 2.0 * s) + 1.0 / s
    col[1:] = -w[: N - 1]
    col[1] -= 1.0 / (2.0 - 2.0 * s)
    entries = scale * linalg.toeplitz(col)
    i = np.arange(1, N + 1)
    tail = scale * (exterior_weight(i, s) + exterior_weight(N + 1 - i, s))
    return OperatorMatrix(s=float(s), grid=grid, entries=entries, tail_diagonal=tail)


def apply(matrix: OperatorMatrix, f: GridFunction) -> GridFunction:
    if f.grid != matrix.grid:
        raise ValueError("grid mismatch between operator and grid function")
    return GridFunction(f.grid, matrix.entries @ f.values)
