"""Small dense LMI feasibility engine.

Decision variables are scalars, symmetric matrices or general matrices.
Each constraint is an affine symmetric-matrix function of the variables,
stored as ``F0 + sum_k x_k F_k`` over the stacked coordinate vector ``x``.
The numerical core is cvxopt's primal-dual SDP solver; every answer is
re-checked here with an independent symmetric eigensolve.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .linalg import DimensionMismatch, sym


class Status(str, enum.Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True)
class Variable:
    name: str
    shape: tuple = ()
    symmetric: bool = False

    @property
    def size(self) -> int:
        if not self.shape:
            return 1
        if self.symmetric:
            n = self.shape[0]
            return n * (n + 1) // 2
        return int(np.prod(self.shape))

    def basis(self, k: int):
        if not self.shape:
            return 1.0
        out = np.zeros(self.shape)
        if self.symmetric:
            i, j = np.triu_indices(self.shape[0])
            out[i[k], j[k]] = 1.0
            out[j[k], i[k]] = 1.0
        else:
            out.flat[k] = 1.0
        return out

    def zero(self):
        return 0.0 if not self.shape else np.zeros(self.shape)

    def unpack(self, coords: np.ndarray):
        if not self.shape:
            return float(coords[0])
        if self.symmetric:
            n = self.shape[0]
            out = np.zeros((n, n))
            i, j = np.triu_indices(n)
            out[i, j] = coords
            out[j, i] = coords
            return out
        return np.asarray(coords, dtype=float).reshape(self.shape)


def scalar(name: str) -> Variable:
    return Variable(name)


def symmetric(name: str, n: int) -> Variable:
    return Variable(name, (n, n), True)


def matrix(name: str, rows: int, cols: int) -> Variable:
    return Variable(name, (rows, cols), False)


_TOLERANCES = (1e-9, 1e-8, 1e-7)
DEFAULT_MARGIN = 1e-7


class UndeclaredVariable(KeyError):
    pass


class _Strict(dict):
    def __missing__(self, key):
        raise UndeclaredVariable(key)


def _layout(variables: Sequence[Variable]):
    offsets, pos = {}, 0
    for v in variables:
        if v.name in offsets:
            raise ValueError(f"duplicate variable {v.name!r}")
        offsets[v.name] = pos
        pos += v.size
    return offsets, pos


@dataclass(frozen=True)
class AffineMatrixExpr:
    """``F(x) = F0 + sum_k x_k F_k`` with symmetric ``F0`` and ``F_k``."""

    constant: np.ndarray
    coefficients: np.ndarray  # (n_coords, d, d)

    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    @classmethod
    def from_callable(cls, fn: Callable[[Mapping], np.ndarray], variables: Sequence[Variable]) -> "AffineMatrixExpr":
        """Tabulate an affine matrix function by evaluating it on the coordinate basis.

        ``fn`` receives a mapping ``name -> value`` and must return a square
        array; its symmetric part is used.
        """
        _, total = _layout(variables)
        zero = _Strict({v.name: v.zero() for v in variables})
        f0 = cls._eval(fn, zero)
        d = f0.shape[0]
        coeffs = np.empty((total, d, d))
        k = 0
        for v in variables:
            for c in range(v.size):
                vals = _Strict(zero)
                vals[v.name] = v.basis(c)
                fk = cls._eval(fn, vals)
                if fk.shape != f0.shape:
                    raise DimensionMismatch(f"constraint changed shape {f0.shape} -> {fk.shape}")
                coeffs[k] = fk - f0
                k += 1
        return cls(f0, coeffs)

    @staticmethod
    def _eval(fn, vals) -> np.ndarray:
        out = np.atleast_2d(np.asarray(fn(vals), dtype=float))
        if out.ndim != 2 or out.shape[0] != out.shape[1]:
            raise DimensionMismatch(f"constraint must be square, got shape {out.shape}")
        return sym(out)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.constant + np.tensordot(x, self.coefficients, axes=1)


@dataclass(frozen=True)
class Constraint:
    """``expr < 0`` (sense ``"<"``) or ``expr > 0`` (sense ``">"``) with margin."""

    fn: Callable[[Mapping], np.ndarray]
    sense: str = "<"
    label: str = ""

    def __post_init__(self):
        if self.sense not in ("<", ">"):
            raise ValueError(f"sense must be '<' or '>', got {self.sense!r}")


def negative(fn, label: str = "") -> Constraint:
    return Constraint(fn, "<", label)


def positive(fn, label: str = "") -> Constraint:
    return Constraint(fn, ">", label)


@dataclass
class FeasibilityProblem:
    variables: Sequence[Variable]
    constraints: Sequence[Constraint]
    margin: float | None = None
    objective: Callable[[Mapping], float] | None = None
    # scalar coordinates are boxed to keep homogeneous problems bounded
    bound: float = 1e6
    regularization: float = 1e-6


@dataclass
class FeasibilityResult:
    status: Status
    assignment: dict
    worst_eigenvalue: float
    margin: float
    per_constraint: dict = field(default_factory=dict)
    objective_value: float | None = None
    solver_status: str = ""

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE


def _compile(p: FeasibilityProblem):
    offsets, total = _layout(p.variables)
    exprs = []
    for c in p.constraints:
        e = AffineMatrixExpr.from_callable(c.fn, p.variables)
        if c.sense == ">":
            e = AffineMatrixExpr(-e.constant, -e.coefficients)
        exprs.append(e)
    return offsets, total, exprs


def _unpack(p: FeasibilityProblem, offsets, x):
    return {v.name: v.unpack(x[offsets[v.name]:offsets[v.name] + v.size]) for v in p.variables}


def _objective_vector(p: FeasibilityProblem, total: int):
    if p.objective is None:
        return None
    zero = _Strict({v.name: v.zero() for v in p.variables})
    c0 = float(p.objective(zero))
    c = np.empty(total)
    k = 0
    for v in p.variables:
        for i in range(v.size):
            vals = _Strict(zero)
            vals[v.name] = v.basis(i)
            c[k] = float(p.objective(vals)) - c0
            k += 1
    return c, c0


def _scales(exprs) -> list:
    # from constants only: a scalar variable may carry a huge coefficient and
    # still be tiny at the solution, so coefficients would overstate the unit
    return [max(1.0, float(np.abs(e.constant).max(initial=0.0))) for e in exprs]


def worst_eigenvalue(p: FeasibilityProblem, assignment: Mapping, scales=None) -> tuple[float, dict]:
    """Largest scaled eigenvalue over sign-normalised constraints, by direct evaluation.

    Returns the maximum of ``lambda_max(F_i) / s_i`` and the unscaled
    ``lambda_max(F_i)`` per constraint label.
    """
    vals = _Strict(assignment)
    if scales is None:
        zero = _Strict({v.name: v.zero() for v in p.variables})
        scales = _scales([AffineMatrixExpr(AffineMatrixExpr._eval(c.fn, zero), None) for c in p.constraints])
    per, worst = {}, -np.inf
    for idx, c in enumerate(p.constraints):
        m = sym(np.atleast_2d(np.asarray(c.fn(vals), dtype=float)))
        if c.sense == ">":
            m = -m
        lam = float(np.linalg.eigvalsh(m)[-1])
        per[c.label or f"c{idx}"] = lam
        worst = max(worst, lam / scales[idx])
    return worst, per


def solve_feasibility(p: FeasibilityProblem, max_iter: int = 200) -> FeasibilityResult:
    """Find an assignment with every sign-normalised constraint ``<= -margin * I``.

    Each constraint is measured in its own units: ``s_i = max(1, max|F0_i|)``
    and the requirement is ``F_i(x) / s_i <= -margin I``, so a large constant
    in one block does not impose a large margin on a small scalar elsewhere.
    Without an objective this minimises ``t`` subject to ``F_i(x) / s_i <= t I``
    (``t >= -1`` keeps homogeneous problems bounded) and reports Feasible iff
    the re-verified worst scaled eigenvalue is ``<= -margin``.  With an
    objective, it is minimised over ``F_i(x) / s_i <= -margin I``.  A small
    penalty on ``||x||`` picks a well-scaled point from the optimal face.
    """
    from cvxopt import matrix as cvx_matrix, solvers

    offsets, total, exprs = _compile(p)
    if not exprs:
        raise ValueError("problem has no constraints")
    eps = p.margin if p.margin is not None else DEFAULT_MARGIN
    scales = _scales(exprs)
    exprs = [AffineMatrixExpr(e.constant / sc, e.coefficients / sc) for e, sc in zip(exprs, scales)]
    obj = _objective_vector(p, total)
    # solve with extra slack so the independent re-check at eps is not decided by solver tolerance
    solve_margin = 10.0 * eps

    # z = [x, s, t?]: s bounds ||x|| through a second-order cone
    has_t = obj is None
    nz = total + 1 + int(has_t)
    i_s = total
    c = np.zeros(nz)
    c[i_s] = p.regularization
    if has_t:
        c[-1] = 1.0
    else:
        c[:total] = obj[0]

    lin_g = [np.eye(total, nz), -np.eye(total, nz)]
    lin_h = [np.full(total, p.bound), np.full(total, p.bound)]
    if has_t:
        floor_row = np.zeros((1, nz))
        floor_row[0, -1] = -1.0
        lin_g.append(floor_row)
        lin_h.append([1.0])
    soc_g = np.zeros((total + 1, nz))
    soc_g[0, i_s] = -1.0
    soc_g[1:, :total] = -np.eye(total)
    soc_h = np.zeros(total + 1)
    sdp_g, sdp_h, sizes = [], [], []
    for e in exprs:
        d = e.dim
        g = np.zeros((d * d, nz))
        g[:, :total] = e.coefficients.reshape(total, d * d).T
        if has_t:
            g[:, -1] = -np.eye(d).reshape(d * d)
            h = -e.constant
        else:
            h = -e.constant - solve_margin * np.eye(d)
        sdp_g.append(g)
        sdp_h.append(h.reshape(d * d, order="F"))
        sizes.append(d)
    lin_g = np.vstack(lin_g)
    lin_h = np.concatenate([np.ravel(h) for h in lin_h])
    big_g = np.vstack([lin_g, soc_g] + sdp_g)
    big_h = np.concatenate([lin_h, soc_h] + sdp_h)
    dims = {"l": lin_g.shape[0], "q": [total + 1], "s": sizes}

    args = (cvx_matrix(c), cvx_matrix(big_g), cvx_matrix(big_h), dims)
    sol = None
    for tol in _TOLERANCES:
        opts = {"show_progress": False, "maxiters": max_iter, "abstol": tol, "reltol": tol, "feastol": tol}
        try:
            sol = solvers.conelp(*args, options=opts)
        except (ValueError, ArithmeticError):
            # cvxopt raises on loss of positivity in the scaling update; retry looser
            continue
        if sol["status"] == "optimal" or "infeasible" in sol["status"]:
            break
    if sol is None:
        return FeasibilityResult(Status.MAX_ITERATIONS, {}, float("inf"), eps, solver_status="numerical failure")
    solver_status = sol["status"]
    if sol["x"] is None:
        return FeasibilityResult(Status.INFEASIBLE, {}, float("inf"), eps, solver_status=solver_status)
    x = np.array(sol["x"]).ravel()[:total]
    assignment = _unpack(p, offsets, x)
    worst, per = worst_eigenvalue(p, assignment, scales)
    objective_value = None if obj is None else float(obj[0] @ x + obj[1])
    if worst <= -eps:
        status = Status.FEASIBLE
    elif solver_status == "optimal" or "infeasible" in solver_status:
        status = Status.INFEASIBLE
    else:
        status = Status.MAX_ITERATIONS
    return FeasibilityResult(status, assignment, worst, eps, per, objective_value, solver_status)
