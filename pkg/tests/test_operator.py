import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bump_value
from fracsys import profiles
from fracsys.operator import Grid1D, GridFunction, apply, assemble_operator, exterior_weight
from fracsys.quadrature import pv_radial_fraclap

ORDERS = [0.25, 0.5, 0.75]


def bump_samples(grid, s):
    return GridFunction.from_function(grid, lambda x: np.clip(1.0 - x * x, 0.0, None) ** s)


def test_grid_basics():
    g = Grid1D(-1.0, 1.0, 8)
    assert g.h == 0.25 and g.size == 7
    assert np.allclose(g.nodes, np.linspace(-0.75, 0.75, 7))
    assert g.to_dict() == {"left": -1.0, "right": 1.0, "n_cells": 8}
    for bad in (dict(left=1.0, right=0.0), dict(n_cells=4), dict(n_cells=10.5)):
        with pytest.raises(ValueError):
            Grid1D(**bad)


def test_grid_function_interpolation():
    g = Grid1D(0.0, 1.0, 8)
    f = GridFunction.from_function(g, lambda x: x * (1 - x))
    assert f(np.array([-0.5, 0.0, 1.0, 2.0])).tolist() == [0.0, 0.0, 0.0, 0.0]
    assert f(0.5) == pytest.approx(0.25)
    assert GridFunction.constant(g, -2.0).sup_norm() == 2.0
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(3))


@pytest.mark.parametrize("s", ORDERS)
def test_m_matrix_structure(s):
    A = assemble_operator(Grid1D(n_cells=64), s)
    M = A.entries
    off = M - np.diag(np.diag(M))
    assert np.all(np.diag(M) > 0.0)
    assert np.all(off <= 0.0)
    assert np.max(np.abs(M - M.T)) <= 1e-12 * np.max(np.abs(M))
    # strict diagonal dominance: row sums are the kernel mass lost to the exterior
    assert np.allclose(M.sum(axis=1), A.tail_diagonal, rtol=1e-10)
    assert np.all(A.tail_diagonal > 0.0)
    assert np.all(np.linalg.inv(M) >= -1e-14)


def test_tail_diagonal_bounds_exact_exterior_mass():
    for s in ORDERS:
        A = assemble_operator(Grid1D(n_cells=128), s)
        assert np.all(A.tail_diagonal >= A.exterior_mass_exact * (1 - 1e-12))


@pytest.mark.parametrize("s", [0.3, 0.5, 0.8])
def test_exterior_weight_telescopes(s):
    # sum_{k=2}^{K-1} [H(k-1) - H(k)] = H(1) - H(K-1), with H'' = y^(-1-2s)
    K = 1000
    if s == 0.5:
        H = lambda y: -np.log(y)
    else:
        H = lambda y: y ** (1 - 2 * s) / (2 * s * (2 * s - 1))
    total = exterior_weight(np.arange(2, K, dtype=float), s).sum()
    assert total == pytest.approx(H(1.0) - H(K - 1.0), rel=1e-11)
    assert exterior_weight(np.array([5.0]), s)[0] == pytest.approx(H(4.0) - H(5.0), rel=1e-12)


@pytest.mark.parametrize("s", ORDERS)
def test_bump_is_mapped_to_constant(s):
    grid = Grid1D(n_cells=512)
    out = apply(assemble_operator(grid, s), bump_samples(grid, s)).values
    inner = np.abs(grid.nodes) < 0.8
    vals = out[inner]
    assert np.ptp(vals) / np.mean(vals) < 1e-2
    oracle = np.array([pv_radial_fraclap(profiles.bump(s), 1, s, abs(x)) for x in grid.nodes[inner][::16]])
    assert np.allclose(oracle, bump_value(1, s), rtol=1e-8)
    assert np.max(np.abs(vals[::16] / oracle - 1.0)) < 1e-2


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(ORDERS), st.integers(0, 2**32 - 1))
def test_discrete_maximum_principle(s, seed):
    A = assemble_operator(Grid1D(n_cells=64), s)
    g = np.random.default_rng(seed).uniform(0.0, 1.0, A.grid.size)
    f = A.solve(g)
    assert np.all(f >= 0.0)
    assert np.allclose(A.entries @ f, g, atol=1e-10)


@pytest.mark.parametrize("s", ORDERS)
def test_refinement_of_unit_load(s):
    sols = {}
    for cells in (256, 512):
        grid = Grid1D(n_cells=cells)
        u = assemble_operator(grid, s).solve(np.ones(grid.size))
        sols[cells] = GridFunction(grid, u)
    fine, coarse = sols[512], sols[256]
    # the coarse nodes are every other fine node
    shared = fine.values[1::2]
    assert np.allclose(fine.grid.nodes[1::2], coarse.grid.nodes)
    assert np.max(np.abs(shared - coarse.values)) / fine.sup_norm() < 2e-2


@pytest.mark.parametrize("s", ORDERS)
def test_unit_load_against_exact_solution(s):
    # (-Delta)^s (1-x^2)_+^s is constant on the interval, so the unit load is solved by a rescaled bump
    grid = Grid1D(n_cells=512)
    u = assemble_operator(grid, s).solve(np.ones(grid.size))
    exact = bump_samples(grid, s).values / bump_value(1, s)
    inner = np.abs(grid.nodes) < 0.8
    assert np.max(np.abs(u - exact)[inner]) / exact.max() < 1e-2


def test_export_text_round_trip(tmp_path):
    A = assemble_operator(Grid1D(n_cells=16), 0.4)
    path = tmp_path / "A.txt"
    A.export_text(path)
    back = np.loadtxt(path)
    assert np.array_equal(back, A.entries)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        assemble_operator(Grid1D(n_cells=16), 1.0)
    A = assemble_operator(Grid1D(n_cells=16), 0.5)
    with pytest.raises(ValueError):
        apply(A, GridFunction.constant(Grid1D(n_cells=32), 1.0))


def test_cholesky_is_cached():
    A = assemble_operator(Grid1D(n_cells=16), 0.5)
    assert A.cholesky() is A.cholesky()
