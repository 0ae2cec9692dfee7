import numpy as np
import pytest

from mjconsensus.matops import (
    AffineMatrixExpr,
    DimensionMismatch,
    FeasibilityProblem,
    Status,
    matrix,
    negative,
    positive,
    scalar,
    solve_feasibility,
    symmetric,
    worst_eigenvalue,
)
from mjconsensus.matops.lmi import UndeclaredVariable


def _lyapunov(a):
    n = a.shape[0]
    return FeasibilityProblem(
        [symmetric("P", n)],
        [negative(lambda v: a.T @ v["P"] + v["P"] @ a, "lyap"), positive(lambda v: v["P"], "P")],
    )


def _hurwitz(rng, n):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    t = np.triu(rng.standard_normal((n, n)), 1)
    np.fill_diagonal(t, -rng.uniform(0.1, 3.0, n))
    return q @ t @ q.T


def test_scalar_feasible():
    prob = FeasibilityProblem([scalar("x")], [negative(lambda v: v["x"] - 1), negative(lambda v: -v["x"])])
    res = solve_feasibility(prob)
    assert res.feasible
    assert 0 < res.assignment["x"] < 1
    assert res.worst_eigenvalue <= -res.margin


def test_scalar_infeasible():
    prob = FeasibilityProblem([scalar("x")], [positive(lambda v: v["x"] - 1), positive(lambda v: -v["x"])])
    assert solve_feasibility(prob).status is Status.INFEASIBLE


def test_lyapunov_feasible_matches_oracle():
    a = np.array([[-1.0, 1.0], [0.0, -2.0]])
    res = solve_feasibility(_lyapunov(a))
    assert res.feasible
    p = res.assignment["P"]
    assert np.linalg.eigvalsh(a.T @ p + p @ a).max() < 0
    assert np.linalg.eigvalsh(p).min() > 0
    # oracle: A'P + PA = -I via the Kronecker system has a positive definite solution
    n = 2
    op = np.kron(np.eye(n), a.T) + np.kron(a.T, np.eye(n))
    p0 = np.linalg.solve(op, -np.eye(n).reshape(-1)).reshape(n, n)
    assert np.linalg.eigvalsh(0.5 * (p0 + p0.T)).min() > 0


def test_lyapunov_random(rng):
    for _ in range(6):
        n = int(rng.integers(2, 8))
        a = _hurwitz(rng, n)
        assert solve_feasibility(_lyapunov(a)).feasible
        assert solve_feasibility(_lyapunov(-a)).status is Status.INFEASIBLE


def test_objective_minimises():
    # min x subject to x >= 2: optimum approaches 2 from above
    prob = FeasibilityProblem([scalar("x")], [positive(lambda v: v["x"] - 2)], objective=lambda v: v["x"])
    res = solve_feasibility(prob)
    assert res.feasible
    assert res.assignment["x"] == pytest.approx(2.0, abs=1e-4)
    assert res.objective_value == pytest.approx(res.assignment["x"])


def test_matrix_variable_and_reverification():
    # find Y with Y + Y' < -I (2x2 general matrix)
    prob = FeasibilityProblem([matrix("Y", 2, 2)], [negative(lambda v: v["Y"] + v["Y"].T + np.eye(2), "c")])
    res = solve_feasibility(prob)
    assert res.feasible
    worst, per = worst_eigenvalue(prob, res.assignment)
    assert worst == pytest.approx(res.worst_eigenvalue)
    y = res.assignment["Y"]
    assert per["c"] == pytest.approx(np.linalg.eigvalsh(y + y.T + np.eye(2)).max())


def test_affine_expression_tabulation():
    vs = [scalar("a"), symmetric("S", 2)]
    e = AffineMatrixExpr.from_callable(lambda v: v["a"] * np.eye(2) + 2 * v["S"] + np.ones((2, 2)), vs)
    x = np.array([0.5, 1.0, -2.0, 3.0])
    s = np.array([[1.0, -2.0], [-2.0, 3.0]])
    np.testing.assert_allclose(e.evaluate(x), 0.5 * np.eye(2) + 2 * s + 1)


def test_undeclared_and_bad_shapes():
    with pytest.raises(UndeclaredVariable):
        solve_feasibility(FeasibilityProblem([scalar("x")], [negative(lambda v: v["y"])]))
    with pytest.raises(DimensionMismatch):
        solve_feasibility(FeasibilityProblem([scalar("x")], [negative(lambda v: np.ones((2, 3)) * v["x"])]))
    with pytest.raises(ValueError):
        negative(lambda v: 0).__class__(lambda v: 0, "<=")


def test_feasible_answer_respects_margin(rng):
    a = _hurwitz(rng, 5)
    prob = _lyapunov(a)
    prob.margin = 1e-5
    res = solve_feasibility(prob)
    assert res.feasible and res.worst_eigenvalue <= -1e-5
