import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from conftest import bump_value
from fracsys.exponents import ProblemParams, rescaled_power_exponents, scaling_exponents, theta_threshold
from fracsys.operator import Grid1D, GridFunction, assemble_operator
from fracsys.solver import (
    ConvergenceError,
    IterationMode,
    SolverConfig,
    Status,
    apply_H,
    apply_T,
    blowup_frame,
    blowup_rescale,
    dirichlet_solve,
    principal_eigenpair,
    rescale_at_max,
    solve_system,
)


@pytest.fixture(scope="module")
def half():
    return assemble_operator(Grid1D(n_cells=128), 0.5)


@pytest.fixture(scope="module")
def pair_st():
    grid = Grid1D(n_cells=128)
    return assemble_operator(grid, 0.3), assemble_operator(grid, 0.7)


def test_config_validation():
    for kw in (dict(tol_residual=0.0), dict(max_iter=0), dict(damping=0.0), dict(damping=1.5),
               dict(theta=-1.0), dict(blowup_threshold=0.0), dict(init=0.0),
               dict(mode="normalized", theta=1.0), dict(mode="newton")):
        with pytest.raises(ValueError):
            SolverConfig(**kw)
    assert SolverConfig(mode="normalized").mode is IterationMode.NORMALIZED


class TestLinearSolve:
    def test_zero_data(self, half):
        g = half.grid
        u, v = dirichlet_solve(half, half, GridFunction.constant(g, 0.0), GridFunction.constant(g, 0.0))
        assert not u.values.any() and not v.values.any()

    def test_symmetric_unit_data(self, half):
        one = GridFunction.constant(half.grid, 1.0)
        u, v = dirichlet_solve(half, half, one, one)
        assert np.array_equal(u.values, v.values)
        assert np.allclose(u.values, u.values[::-1], rtol=1e-12)

    def test_recovers_bump(self):
        s = 0.5
        grid = Grid1D(n_cells=512)
        A = assemble_operator(grid, s)
        f = GridFunction.constant(grid, bump_value(1, s))
        u, v = dirichlet_solve(A, A, f, GridFunction.constant(grid, 0.0))
        exact = np.clip(1 - grid.nodes**2, 0, None) ** s
        assert np.max(np.abs(u.values - exact)) / exact.max() < 2e-2
        assert not v.values.any()

    def test_rejects_bad_data(self, half):
        g = half.grid
        bad = GridFunction(g, np.full(g.size, np.nan))
        with pytest.raises(ValueError):
            dirichlet_solve(half, half, bad, bad)
        other = GridFunction.constant(Grid1D(n_cells=64), 1.0)
        with pytest.raises(ValueError):
            dirichlet_solve(half, half, other, other)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_solver_operator_preserves_order(seed):
    grid = Grid1D(n_cells=32)
    As, At = assemble_operator(grid, 0.3), assemble_operator(grid, 0.8)
    rng = np.random.default_rng(seed)
    f, g = rng.normal(size=grid.size), rng.normal(size=grid.size)
    df, dg = rng.uniform(0, 1, grid.size), rng.uniform(0, 1, grid.size)
    u, v = dirichlet_solve(As, At, GridFunction(grid, f), GridFunction(grid, g))
    u2, v2 = dirichlet_solve(As, At, GridFunction(grid, f + df), GridFunction(grid, g + dg))
    assert np.all(u2.values >= u.values - 1e-12)
    assert np.all(v2.values >= v.values - 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 5.0), st.floats(1.1, 4.0), st.floats(1.1, 4.0))
def test_H_maps_cone_into_cone(seed, theta, p, q):
    grid = Grid1D(n_cells=32)
    As, At = assemble_operator(grid, 0.4), assemble_operator(grid, 0.6)
    rng = np.random.default_rng(seed)
    u = GridFunction(grid, rng.uniform(0, 2, grid.size))
    v = GridFunction(grid, rng.uniform(0, 2, grid.size))
    hu, hv = apply_H(As, At, theta, u, v, p, q)
    assert np.all(hu.values >= 0.0) and np.all(hv.values >= 0.0)


def test_T_and_H_basics(half):
    g = half.grid
    zero = GridFunction.constant(g, 0.0)
    tu, tv = apply_T(half, half, zero, zero, 2.0, 3.0)
    assert not tu.values.any() and not tv.values.any()
    u = GridFunction.from_function(g, lambda x: 1 - x * x)
    v = GridFunction.from_function(g, lambda x: np.cos(x))
    a = apply_T(half, half, u, v, 2.0, 3.0)
    b = apply_H(half, half, 0.0, u, v, 2.0, 3.0)
    assert np.array_equal(a[0].values, b[0].values) and np.array_equal(a[1].values, b[1].values)
    hu, hv = apply_H(half, half, 0.3, zero, zero, 2.0, 3.0)
    assert np.all(hu.values > 0.0) and np.all(hv.values > 0.0)
    with pytest.raises(ValueError):
        apply_T(half, half, GridFunction.constant(g, -1.0), zero, 2.0, 2.0)
    with pytest.raises(ValueError):
        apply_H(half, half, -0.1, zero, zero, 2.0, 2.0)


class TestIteration:
    def test_default_picard_status_is_stable(self):
        statuses = []
        for cells, max_iter in ((128, 10000), (256, 20000)):
            A = assemble_operator(Grid1D(n_cells=cells), 0.5)
            sol = solve_system(A, A, 2.0, 2.0, SolverConfig(max_iter=max_iter))
            statuses.append(sol.status)
        assert statuses[0] == statuses[1]
        assert statuses[0] in (Status.CONVERGED, Status.CONVERGED_TO_ZERO)

    def test_small_initial_data_decay(self, half):
        sol = solve_system(half, half, 2.0, 2.0, SolverConfig(init=1e-6))
        assert sol.status is Status.CONVERGED_TO_ZERO
        assert sol.sup_u < 1e-14

    def test_large_shift_blows_up(self, half):
        lam = principal_eigenpair(half, half).lambda1
        sol = solve_system(half, half, 2.0, 2.0, SolverConfig(theta=10 * theta_threshold(lam, 2.0, 2.0)))
        assert sol.status is Status.BLOWN_UP
        sups = [max(a, b) for a, b in sol.iterate_trace]
        assert all(y > x for x, y in zip(sups, sups[1:]))
        assert math.isinf(sol.residual_u)

    def test_normalized_mode_finds_positive_solution(self, half):
        sol = solve_system(half, half, 2.0, 2.0, SolverConfig(mode="normalized", tol_residual=1e-12))
        assert sol.status is Status.CONVERGED
        assert np.all(sol.u.values > 0) and np.all(sol.v.values > 0)
        assert max(sol.residual_u, sol.residual_v) < 1e-6
        assert np.max(np.abs(sol.u.values - sol.v.values)) <= 1e-10
        tu, tv = apply_T(half, half, sol.u, sol.v, 2.0, 2.0)
        defect = max(np.max(np.abs(tu.values - sol.u.values)), np.max(np.abs(tv.values - sol.v.values)))
        assert defect <= 10 * 1e-12 * max(1.0, sol.sup_u)

    def test_normalized_mode_with_distinct_orders(self, pair_st):
        As, At = pair_st
        sol = solve_system(As, At, 3.0, 1.5, SolverConfig(mode="normalized"))
        assert sol.status is Status.CONVERGED
        fu = sol.v.values**3.0
        assert np.max(np.abs(As.entries @ sol.u.values - fu)) <= 1e-6 * max(1.0, fu.max())
        fv = sol.u.values**1.5
        assert np.max(np.abs(At.entries @ sol.v.values - fv)) <= 1e-6 * max(1.0, fv.max())

    def test_damped_iteration_stays_in_cone(self, half):
        rng = np.random.default_rng(5)
        g = half.grid
        init = (GridFunction(g, rng.uniform(0.1, 1, g.size)), GridFunction(g, rng.uniform(0.1, 1, g.size)))
        for theta in (0.0, 0.05):
            sol = solve_system(half, half, 1.5, 1.5, SolverConfig(init=init, theta=theta, damping=0.5,
                                                                  max_iter=200))
            assert np.all(sol.u.values >= 0) and np.all(sol.v.values >= 0)

    def test_deterministic_trace(self, pair_st):
        As, At = pair_st
        cfg = SolverConfig(max_iter=50, init=0.8)
        a = solve_system(As, At, 2.0, 1.8, cfg)
        b = solve_system(As, At, 2.0, 1.8, cfg)
        assert a.iterate_trace == b.iterate_trace
        assert a.status == b.status

    def test_outputs(self, half, tmp_path):
        sol = solve_system(half, half, 2.0, 2.0, SolverConfig(max_iter=5))
        sol.write_json(tmp_path / "s.json")
        data = json.loads((tmp_path / "s.json").read_text())
        assert data["status"] == sol.status.value and len(data["u"]) == half.grid.size
        sol.write_trace_csv(tmp_path / "t.csv")
        rows = list(csv.reader(open(tmp_path / "t.csv")))
        assert rows[0] == ["iter", "sup_u", "sup_v"] and len(rows) == 1 + len(sol.iterate_trace)

    def test_rejects_bad_exponents(self, half):
        with pytest.raises(ValueError):
            solve_system(half, half, -1.0, 2.0)


class TestEigenpair:
    def test_equal_orders(self):
        A = assemble_operator(Grid1D(n_cells=256), 0.5)
        pair = principal_eigenpair(A, A)
        direct = linalg.eigvalsh(A.entries, subset_by_index=[0, 0])[0]
        assert pair.lambda1 > 0
        assert pair.lambda1 == pytest.approx(direct, rel=1e-6)
        assert np.max(np.abs(pair.phi.values - pair.psi.values)) <= 1e-8
        assert np.all(pair.phi.values >= 0) and np.all(pair.psi.values >= 0)

    def test_distinct_orders_against_dense_eigensolve(self, pair_st):
        As, At = pair_st
        pair = principal_eigenpair(As, At)
        ev = np.linalg.eigvals(At.entries @ As.entries)
        assert pair.lambda1 == pytest.approx(math.sqrt(np.min(ev.real)), rel=1e-8)
        phi, psi = pair.phi.values, pair.psi.values
        assert np.allclose(As.entries @ phi, pair.lambda1 * psi, atol=1e-8 * np.abs(As.entries @ phi).max())
        assert np.allclose(At.entries @ psi, pair.lambda1 * phi, atol=1e-8 * np.abs(At.entries @ psi).max())
        assert np.all(phi >= 0) and np.all(psi >= 0)

    def test_refinement(self):
        lams = [principal_eigenpair(*(assemble_operator(Grid1D(n_cells=c), 0.5),) * 2).lambda1
                for c in (256, 512)]
        assert abs(lams[1] - lams[0]) / lams[1] < 0.01

    def test_stagnation_raises(self, half):
        with pytest.raises(ConvergenceError):
            principal_eigenpair(half, half, SolverConfig(max_iter=2))

    def test_to_dict(self, half):
        d = principal_eigenpair(half, half).to_dict()
        assert {"lambda1", "phi", "psi", "residual", "power_iterations", "grid"} <= set(d)


class TestRescaling:
    def test_identity_frame(self, half):
        g = half.grid
        u = GridFunction.from_function(g, lambda x: 1 - x * x)
        v = GridFunction.from_function(g, lambda x: np.cos(x))
        z, w = blowup_rescale(u, v, 1.0, 2.0, 1.0, 0.0)
        assert np.array_equal(z(g.nodes), u(g.nodes))
        assert np.array_equal(w.values, v.values)
        assert np.array_equal(z.nodes, g.nodes)

    def test_rescale_at_max_normalizes(self, half):
        sol = solve_system(half, half, 2.0, 2.0, SolverConfig(mode="normalized"))
        b1, b2 = scaling_exponents(ProblemParams(1, 0.5, 0.5, 2.0, 2.0))
        z, w = rescale_at_max(sol.u, sol.v, b1, b2)
        assert abs(z(0.0) - 1.0) <= 1e-12
        m, x0, i = blowup_frame(sol.u)
        assert m == sol.sup_u and sol.u.grid.nodes[i] == x0
        assert w(0.0) == pytest.approx(sol.v(x0) * z.lam**b2, rel=1e-12)

    def test_scale_free_exponents(self):
        a, b = rescaled_power_exponents(ProblemParams(1, 0.5, 0.5, 2.0, 2.0))
        for lam in (1e-6, 0.3, 7.0):
            assert lam**a == pytest.approx(1.0, abs=1e-12) and lam**b == pytest.approx(1.0, abs=1e-12)

    def test_errors(self, half):
        g = half.grid
        u = GridFunction.constant(g, 1.0)
        with pytest.raises(ValueError):
            blowup_rescale(u, u, 1.0, 1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            blowup_rescale(u, u, 1.0, 1.0, 1.0, 5.0)
        with pytest.raises(ValueError):
            rescale_at_max(GridFunction.constant(g, 0.0), u, 1.0, 1.0)
