import numpy as np
import pytest
from numpy.testing import assert_allclose

from rsma_rm.conic import ConicProgram, SolveOptions, solve, solve_standard_form


def toy_projection(point):
    prog = ConicProgram()
    prog.add_variable("x", 2)
    prog.set_objective({"x": np.eye(2)}, {"x": -2 * np.asarray(point)}, float(np.dot(point, point)))
    prog.add_soc({"x": np.eye(2)}, [0.0, 0.0], {}, 1.0)
    return prog


def random_qp_socp(rng, n=30):
    """Feasible, bounded instance: a strictly interior point is planted."""
    prog = ConicProgram()
    prog.add_variable("x", n)
    A = rng.standard_normal((n, n)) / np.sqrt(n)
    prog.set_objective({"x": A @ A.T + 0.1 * np.eye(n)}, {"x": rng.standard_normal(n)})
    x0 = rng.standard_normal(n) * 0.1
    for _ in range(10):
        a = rng.standard_normal(n)
        prog.add_linear({"x": a}, float(a @ x0) + 1.0)
    for _ in range(5):
        F = rng.standard_normal((4, n))
        g = rng.standard_normal(4)
        c = rng.standard_normal(n)
        d = np.linalg.norm(F @ x0 + g) - c @ x0 + 1.0
        prog.add_soc({"x": F}, g, {"x": c}, d)
    for _ in range(3):
        B = rng.standard_normal((n, 2)) / np.sqrt(n)
        a = rng.standard_normal(n)
        b = float(x0 @ B @ B.T @ x0 - a @ x0) + 1.0
        prog.add_quad_le_affine({"x": B @ B.T}, {"x": a}, b)
    return prog


def test_min_square_above_one():
    prog = ConicProgram()
    prog.add_variable("x", 1)
    prog.set_objective({"x": [[1.0]]})
    prog.add_linear({"x": -1.0}, -1.0)
    sol = solve(prog)
    assert sol.status == "optimal"
    assert_allclose(sol.values["x"], [1.0], atol=1e-7)
    assert sol.objective == pytest.approx(1.0, abs=1e-7)


def test_projection_onto_ball():
    sol = solve(toy_projection([2.0, 0.0]))
    assert sol.ok
    assert_allclose(sol.values["x"], [1.0, 0.0], atol=1e-7)
    assert sol.objective == pytest.approx(1.0, abs=1e-6)


def test_interior_point_is_its_own_projection():
    sol = solve(toy_projection([0.3, -0.2]))
    assert_allclose(sol.values["x"], [0.3, -0.2], atol=1e-7)


def test_infeasible_detected():
    prog = ConicProgram()
    prog.add_variable("x", 1)
    prog.set_objective(lin={"x": 1.0})
    prog.add_linear({"x": 1.0}, -1.0)
    prog.add_linear({"x": -1.0}, -1.0)
    assert solve(prog).status == "infeasible"


def test_unbounded_detected():
    prog = ConicProgram()
    prog.add_variable("x", 2)
    prog.set_objective(lin={"x": [-1.0, 0.0]})
    prog.add_linear({"x": [0.0, 1.0]}, 1.0)
    assert solve(prog).status == "unbounded"


def test_unconstrained_qp():
    P = np.diag([2.0, 4.0])
    status, x, *_ = solve_standard_form(P, np.array([-2.0, -4.0]), np.zeros((0, 2)), np.zeros(0), 0, [])
    assert status == "optimal"
    assert_allclose(x, [1.0, 1.0])


def test_inconsistent_dimensions_raise():
    with pytest.raises(ValueError):
        solve_standard_form(np.eye(1), np.zeros(1), np.ones((2, 1)), np.ones(2), 1, [3])


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve(toy_projection([1.0, 1.0]), SolveOptions(backend="nope"))


def test_reported_residuals_are_small():
    sol = solve(random_qp_socp(np.random.default_rng(3)))
    assert sol.status == "optimal"
    assert sol.primal_residual <= 1e-7 and sol.dual_residual <= 1e-7


@pytest.mark.parametrize("backend", ["cvxopt", "clarabel"])
@pytest.mark.parametrize("seed", range(8))
def test_matches_reference_solvers(backend, seed):
    pytest.importorskip(backend)
    prog = random_qp_socp(np.random.default_rng(seed))
    ours = solve(prog)
    ref = solve(prog, SolveOptions(backend=backend))
    assert ours.status == "optimal" and ref.ok
    assert ours.objective == pytest.approx(ref.objective, rel=1e-6, abs=1e-7)
    assert prog.max_violation(ours.x) <= 1e-6


def test_equilibration_does_not_change_answer():
    prog = random_qp_socp(np.random.default_rng(11))
    a = solve(prog, SolveOptions(equilibrate=True))
    b = solve(prog, SolveOptions(equilibrate=False))
    assert a.objective == pytest.approx(b.objective, rel=1e-6)
