"""Full-order observer-based protocol: two-step LMI design and certificate check."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..graphs import SpectralConstants
from ..matops import (
    DimensionMismatch,
    FeasibilityProblem,
    is_positive_definite,
    matrix,
    max_eig,
    negative,
    positive,
    scalar,
    solve_feasibility,
    spd_inverse,
    symmetric,
)
from .common import (
    DEFAULT_RHO_GRID,
    CertificateReport,
    Infeasible,
    NotStabilizableDetectable,
    RhoDiagnostic,
    gain_bound_block as _gain_bound_block,
    pick_tau,
)
from .plant import Plant, check_stabilizable_detectable


@dataclass(frozen=True)
class FullOrderProtocol:
    k_gain: np.ndarray
    l_gain: np.ndarray
    tau: float
    rho: float
    gamma: float
    p1: np.ndarray
    p2: np.ndarray
    r1: float
    r2: float
    y: np.ndarray
    # False when returned as a best effort from an infeasible design
    certified: bool = True

    kind = "full"

    @property
    def tau_interval(self) -> tuple:
        return full_order_interval(self.r1, self.r2, self.rho)

    def with_tau(self, tau: float) -> "FullOrderProtocol":
        return replace(self, tau=float(tau))


def full_order_interval(r1: float, r2: float, rho: float) -> tuple:
    return (r1 / (2.0 - rho), rho * r2 / 4.0)


def _step1(p: Plant, sc: SpectralConstants, pi_bar: float, gamma: float, rho: float, decay_rate: float, input_gain_bound: float | None, max_iter: int):
    n, q1, q2, ell = p.n, p.q1, p.q2, p.ell
    a, b, c1, c2, d = p.a, p.b, p.c1, p.c2, p.d
    bbt = b @ b.T
    w3 = 1.0 / (rho * (1.0 + pi_bar**2 * sc.lambda_max))
    g2 = gamma**2

    def main(v):
        p1, r1 = v["P1"], v["r1"]
        return np.block([
            [p1 @ a.T + a @ p1 - r1 * bbt, d, p1 @ c1.T, p1 @ c2.T],
            [d.T, -0.5 * g2 * np.eye(ell), np.zeros((ell, q1)), np.zeros((ell, q2))],
            [c1 @ p1, np.zeros((q1, ell)), -w3 * np.eye(q1), np.zeros((q1, q2))],
            [c2 @ p1, np.zeros((q2, ell)), np.zeros((q2, q1)), -np.eye(q2)],
        ])

    def coupling(v):
        return np.block([[g2 / (2.0 * sc.kappa) * p.r_weight, np.eye(n)], [np.eye(n), v["P1"]]])

    cons = [negative(main, "step1"), positive(coupling, "weight"), positive(lambda v: v["r1"], "r1")]
    if decay_rate > 0:
        cons.append(negative(lambda v: v["P1"] @ a.T + a @ v["P1"] - v["r1"] * bbt + 2 * decay_rate * v["P1"], "decay"))
    if input_gain_bound is not None:
        cons.append(positive(_gain_bound_block(p.b, input_gain_bound), "input_gain"))
    prob = FeasibilityProblem([symmetric("P1", n), scalar("r1")], cons, objective=lambda v: v["r1"])
    return solve_feasibility(prob, max_iter=max_iter)


def _step2(p: Plant, sc: SpectralConstants, p1_inv: np.ndarray, gamma: float, rho: float, observer_decay_rate: float,
           objective: str, max_iter: int):
    n, q1, ell = p.n, p.q1, p.ell
    a, c1, d = p.a, p.c1, p.d
    xbbx = p1_inv @ p.b @ p.b.T @ p1_inv
    g2 = gamma**2

    def main(v):
        p2, y, r2 = v["P2"], v["Y"], v["r2"]
        return np.block([
            [a.T @ p2 + p2 @ a + c1.T @ y.T + y @ c1 + r2 * xbbx, -p2 @ d, y],
            [-d.T @ p2, -0.5 * g2 * np.eye(ell), np.zeros((ell, q1))],
            [y.T, np.zeros((q1, ell)), -(rho / 8.0) * np.eye(q1)],
        ])

    cons = [
        negative(main, "step2"),
        negative(lambda v: v["P2"] - g2 / (2.0 * sc.kappa) * p.r_weight, "weight"),
        positive(lambda v: v["P2"], "P2"),
        positive(lambda v: v["r2"], "r2"),
    ]
    if observer_decay_rate > 0:
        cons.append(negative(
            lambda v: a.T @ v["P2"] + v["P2"] @ a + c1.T @ v["Y"].T + v["Y"] @ c1 + 2 * observer_decay_rate * v["P2"],
            "observer_decay"))
    obj = (lambda v: -v["r2"]) if objective == "max_r2" else None
    prob = FeasibilityProblem([symmetric("P2", n), matrix("Y", n, q1), scalar("r2")], cons, objective=obj)
    return solve_feasibility(prob, max_iter=max_iter)


def _check_args(gamma, rho_grid, upper, label):
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    grid = sorted(float(r) for r in rho_grid)
    if not grid:
        raise ValueError("rho grid is empty")
    if any(not 0 < r < upper for r in grid):
        raise ValueError(f"every rho must lie in (0, {label})")
    return grid


def synthesize_full_order(
    p: Plant,
    sc: SpectralConstants,
    pi_bar: float,
    gamma: float,
    rho_grid=DEFAULT_RHO_GRID,
    *,
    tau: float | None = None,
    decay_rate: float = 0.0,
    observer_decay_rate: float = 0.0,
    input_gain_bound: float | None = None,
    step2_objective: str = "max_r2",
    strict: bool = True,
    max_iter: int = 200,
) -> FullOrderProtocol:
    """Design ``K``, ``L`` and the coupling gain ``tau`` for the full-order observer protocol.

    Parameters
    ----------
    p : Plant
        Agent model.
    sc : SpectralConstants
        Union-graph constants.
    pi_bar : float
        Lower bound on the invariant distribution.
    gamma : float
        Attenuation level.
    rho_grid : sequence of float
        Candidates in ``(0, 2)``, tried in ascending order.
    tau : float, optional
        Coupling gain to use instead of the geometric mean of the admissible
        interval; it must lie inside the interval for success.
    decay_rate, observer_decay_rate : float
        Optional extra constraints ``P1 A' + A P1 - r1 BB' + 2 a P1 < 0`` and
        ``(A + L C1)' P2 + P2 (A + L C1) + 2 b P2 < 0`` that speed up the
        transient.  Zero disables them.
    input_gain_bound : float, optional
        Adds ``[k I, B'; B, P1] > 0``, i.e. ``B' P1^-1 B < k I``, which caps
        the high-gain loop ``B K`` and hence the stiffness of the closed loop.
    step2_objective : {"max_r2", "feasibility"}
        Maximise ``r2`` (widest coupling interval) or take the most interior
        point of the observer inequalities, which gives a smaller ``L``.
    strict : bool
        When False, an infeasible design returns the candidate with the
        widest (possibly empty) interval, marked ``certified=False``.

    Returns
    -------
    FullOrderProtocol

    Raises
    ------
    Infeasible
        No candidate yields a coupling interval (containing ``tau`` if given).
    """
    grid = _check_args(gamma, rho_grid, 2.0, "2")
    if step2_objective not in ("max_r2", "feasibility"):
        raise ValueError(f"unknown step-2 objective {step2_objective!r}")
    if not check_stabilizable_detectable(p):
        raise NotStabilizableDetectable("(A, B) is not stabilizable or (C1, A) is not detectable")
    diags, best, best_ratio = [], None, -1.0
    for rho in grid:
        dg = RhoDiagnostic(rho)
        diags.append(dg)
        s1 = _step1(p, sc, pi_bar, gamma, rho, decay_rate, input_gain_bound, max_iter)
        dg.step1 = s1.status
        if not s1.feasible:
            continue
        p1, r1 = s1.assignment["P1"], s1.assignment["r1"]
        dg.r1 = r1
        p1_inv = spd_inverse(p1)
        s2 = _step2(p, sc, p1_inv, gamma, rho, observer_decay_rate, step2_objective, max_iter)
        dg.step2 = s2.status
        if not s2.feasible:
            continue
        p2, y, r2 = s2.assignment["P2"], s2.assignment["Y"], s2.assignment["r2"]
        dg.r2 = r2
        lo, hi = full_order_interval(r1, r2, rho)
        dg.interval = (lo, hi)
        dg.note = f"cond(P1)={np.linalg.cond(p1):.3g}"
        ok = lo < hi and (tau is None or lo < tau < hi)
        proto = FullOrderProtocol(
            k_gain=p.b.T @ p1_inv,
            l_gain=np.linalg.solve(p2, y),
            tau=pick_tau(lo, hi, tau),
            rho=rho, gamma=float(gamma), p1=p1, p2=p2, r1=r1, r2=r2, y=y,
            certified=ok,
        )
        if ok:
            return proto
        if dg.ratio > best_ratio:
            best, best_ratio = proto, dg.ratio
    if not strict and best is not None:
        return best
    lines = "\n  ".join(d.describe() for d in diags)
    raise Infeasible(f"no rho in the grid gives an admissible coupling gain:\n  {lines}", diags, best)


def verify_full_order(proto: FullOrderProtocol, p: Plant, sc: SpectralConstants, pi_bar: float) -> CertificateReport:
    """Rebuild the two closed-loop dissipation matrices from stored fields and check them."""
    n, ell = p.n, p.ell
    for name, m, shape in (
        ("K", proto.k_gain, (p.m, n)), ("L", proto.l_gain, (n, p.q1)),
        ("P1", proto.p1, (n, n)), ("P2", proto.p2, (n, n)), ("Y", proto.y, (n, p.q1)),
    ):
        if np.shape(m) != shape:
            raise DimensionMismatch(f"{name} has shape {np.shape(m)}, expected {shape}")
    a, b, c1, c2, d = p.a, p.b, p.c1, p.c2, p.d
    g2, rho, tau, kappa = proto.gamma**2, proto.rho, proto.tau, sc.kappa
    p1, p2, lg = proto.p1, proto.p2, proto.l_gain
    p1_pd, p2_pd = is_positive_definite(p1), is_positive_definite(p2)
    x = spd_inverse(p1) if p1_pd else np.linalg.inv(p1)
    xbbx = x @ b @ b.T @ x
    s1 = np.block([
        [a.T @ x + x @ a - tau * (2 - rho) * xbbx + rho * (1 + pi_bar**2 * sc.lambda_max) * c1.T @ c1 + c2.T @ c2, x @ d],
        [d.T @ x, -0.5 * g2 * np.eye(ell)],
    ])
    acl = a + lg @ c1
    s2 = np.block([
        [acl.T @ p2 + p2 @ acl + (4 / rho) * tau * xbbx + (8 / rho) * p2 @ lg @ lg.T @ p2, -p2 @ d],
        [-d.T @ p2, -0.5 * g2 * np.eye(ell)],
    ])
    half = 0.5 * g2 * p.r_weight
    k_ref = b.T @ x
    l_ref = np.linalg.solve(p2, proto.y)
    checks = {
        "p1_positive_definite": p1_pd,
        "p2_positive_definite": p2_pd,
        "r1_positive": proto.r1 > 0,
        "r2_positive": proto.r2 > 0,
        "k_matches_p1": np.linalg.norm(proto.k_gain - k_ref) <= 1e-8 * max(np.linalg.norm(k_ref), 1e-300),
        "l_matches_y": np.linalg.norm(proto.l_gain - l_ref) <= 1e-8 * max(np.linalg.norm(l_ref), 1e-300),
    }
    return CertificateReport(
        sigma1_max_eig=max_eig(s1),
        sigma2_max_eig=max_eig(s2),
        trace_cond_p1=bool(max_eig(kappa * x - half) < 0),
        trace_cond_p2=bool(max_eig(kappa * p2 - half) < 0),
        tau_interval=proto.tau_interval,
        tau=tau,
        checks={k: bool(v) for k, v in checks.items()},
    )
