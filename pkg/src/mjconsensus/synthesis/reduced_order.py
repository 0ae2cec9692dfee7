"""Reduced-order observer-based protocol: design and certificate check."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..graphs import SpectralConstants
from ..matops import (
    DimensionMismatch,
    FeasibilityProblem,
    SharedEigenvalues,
    is_positive_definite,
    max_eig,
    min_eig,
    negative,
    positive,
    scalar,
    solve_feasibility,
    spd_inverse,
    sylvester_residual,
    sylvester_solve,
    symmetric,
)
from .common import (
    DEFAULT_RHO_GRID,
    CertificateReport,
    Infeasible,
    NotStabilizableDetectable,
    RhoDiagnostic,
    SingularStack,
    gain_bound_block as _gain_bound_block,
    pick_tau,
)
from .plant import Plant, check_stabilizable_detectable

MAX_G_RESAMPLES = 20
STACK_COND_LIMIT = 1e8


@dataclass(frozen=True)
class ReducedOrderProtocol:
    f_bar: np.ndarray
    g_gain: np.ndarray
    t_map: np.ndarray
    q1_map: np.ndarray
    q2_map: np.ndarray
    k_gain: np.ndarray
    tau: float
    rho: float
    gamma: float
    p1: np.ndarray
    p2: np.ndarray
    r1: float
    r2: float
    # weight bounding P2 on the observer coordinates
    r_obs: np.ndarray
    # pi_bar and the union constants enter the interval, so they are stored with it
    pi_bar: float
    lambda_max: float
    lambda_min2: float
    certified: bool = True

    kind = "reduced"

    @property
    def tau_interval(self) -> tuple:
        return reduced_order_interval(self.r1, self.r2, self.rho, self.pi_bar, self.lambda_max, self.lambda_min2)

    def with_tau(self, tau: float) -> "ReducedOrderProtocol":
        return replace(self, tau=float(tau))


def reduced_order_interval(r1, r2, rho, pi_bar, lambda_max, lambda_min2) -> tuple:
    return (r1 / (pi_bar * (lambda_min2 - rho)), rho * r2 / (4.0 * pi_bar * lambda_max))


def companion_from_eigenvalues(eigs) -> np.ndarray:
    """Bottom-row companion matrix whose characteristic polynomial has roots ``eigs``."""
    coeffs = np.poly(np.asarray(eigs))
    if np.abs(coeffs.imag).max(initial=0.0) > 1e-9 * np.abs(coeffs).max():
        raise ValueError("complex eigenvalues must come in conjugate pairs")
    c = coeffs.real[1:]
    k = c.size
    f = np.zeros((k, k))
    f[:-1, 1:] = np.eye(k - 1)
    f[-1] = -c[::-1]
    return f


def _resolve_f_bar(spec, k: int) -> np.ndarray:
    arr = np.asarray(spec)
    f = companion_from_eigenvalues(arr) if arr.ndim == 1 else np.array(arr, dtype=float)
    if f.shape != (k, k):
        raise DimensionMismatch(f"F-bar must be {k}x{k}, got {f.shape}")
    if np.linalg.eigvals(f).real.max() >= 0:
        raise ValueError("F-bar must be Hurwitz")
    return f


def observer_maps(p: Plant, f_bar: np.ndarray, g: np.ndarray):
    """Return ``T``, ``Q1``, ``Q2`` and cond([C1; T]) for a given ``G``."""
    t = sylvester_solve(p.a, f_bar, g @ p.c1)
    stack = np.vstack([p.c1, t])
    cond = float(np.linalg.cond(stack))
    if not np.isfinite(cond) or cond >= STACK_COND_LIMIT:
        raise SingularStack(f"[C1; T] is numerically singular (cond {cond:.3g})")
    inv = np.linalg.inv(stack)
    return t, inv[:, : p.q1], inv[:, p.q1:], cond


def _choose_g(p: Plant, f_bar, g, g_seed):
    k = p.n - p.q1
    if g is not None:
        g = np.atleast_2d(np.array(g, dtype=float))
        if g.shape != (k, p.q1):
            raise DimensionMismatch(f"G must be {k}x{p.q1}, got {g.shape}")
        observer_maps(p, f_bar, g)
        return g
    rng = np.random.default_rng(g_seed)
    for _ in range(MAX_G_RESAMPLES):
        cand = rng.uniform(0.0, 1.0, size=(k, p.q1))
        try:
            observer_maps(p, f_bar, cand)
        except SingularStack:
            continue
        return cand
    raise SingularStack(f"[C1; T] stayed singular after {MAX_G_RESAMPLES} draws of G")


def _step2(p: Plant, sc: SpectralConstants, gamma: float, decay_rate: float, input_gain_bound: float | None, max_iter: int):
    n, q2, ell = p.n, p.q2, p.ell
    a, c2, d = p.a, p.c2, p.d
    bbt = p.b @ p.b.T
    g2 = gamma**2

    def main(v):
        p1, r1 = v["P1"], v["r1"]
        return np.block([
            [p1 @ a.T + a @ p1 - r1 * bbt, d, p1 @ c2.T],
            [d.T, -g2 * np.eye(ell), np.zeros((ell, q2))],
            [c2 @ p1, np.zeros((q2, ell)), -np.eye(q2)],
        ])

    def coupling(v):
        return np.block([[g2 / sc.kappa * p.r_weight, np.eye(n)], [np.eye(n), v["P1"]]])

    cons = [negative(main, "step2"), positive(coupling, "weight"), positive(lambda v: v["r1"], "r1")]
    if decay_rate > 0:
        cons.append(negative(lambda v: v["P1"] @ a.T + a @ v["P1"] - v["r1"] * bbt + 2 * decay_rate * v["P1"], "decay"))
    if input_gain_bound is not None:
        cons.append(positive(_gain_bound_block(p.b, input_gain_bound), "input_gain"))
    prob = FeasibilityProblem([symmetric("P1", n), scalar("r1")], cons, objective=lambda v: v["r1"])
    return solve_feasibility(prob, max_iter=max_iter)


def _step3(f_bar, q2_map, p1_inv, b, r_obs, gamma, kappa, max_iter):
    k = f_bar.shape[0]
    w = q2_map.T @ p1_inv @ b @ b.T @ p1_inv @ q2_map
    bound = gamma**2 / kappa * r_obs
    cons = [
        negative(lambda v: f_bar.T @ v["P2"] + v["P2"] @ f_bar + v["r2"] * w, "step3"),
        negative(lambda v: v["P2"] - bound, "weight"),
        positive(lambda v: v["P2"], "P2"),
        positive(lambda v: v["r2"], "r2"),
    ]
    prob = FeasibilityProblem([symmetric("P2", k), scalar("r2")], cons, objective=lambda v: -v["r2"])
    return solve_feasibility(prob, max_iter=max_iter)


def default_observer_weight(p: Plant) -> np.ndarray:
    """``lambda_min(R) I`` on the observer coordinates (the weight R is n x n)."""
    return min_eig(p.r_weight) * np.eye(p.n - p.q1)


def synthesize_reduced_order(
    p: Plant,
    sc: SpectralConstants,
    pi_bar: float,
    gamma: float,
    rho_grid=None,
    f_bar_spec=None,
    g_spec=None,
    *,
    g_seed: int = 0,
    tau: float | None = None,
    decay_rate: float = 0.0,
    input_gain_bound: float | None = None,
    observer_weight: np.ndarray | None = None,
    g_rescale: float = 10.0,
    max_restarts: int = 6,
    strict: bool = True,
    max_iter: int = 200,
) -> ReducedOrderProtocol:
    """Design the reduced-order observer protocol.

    Parameters
    ----------
    p, sc, pi_bar, gamma
        Plant, union-graph constants, invariant-distribution bound and
        attenuation level.
    rho_grid : sequence of float, optional
        Candidates in ``(0, lambda_min2)``; defaults to the standard grid
        clipped below ``lambda_min2``.
    f_bar_spec : array_like
        Observer matrix (k x k) or its k eigenvalues (companion realisation).
    g_spec : array_like, optional
        Explicit ``G``; otherwise drawn uniform(0, 1) from ``g_seed``.
    tau : float, optional
        Coupling gain override; must land inside the admissible interval.
    decay_rate : float
        Optional ``P1 A' + A P1 - r1 BB' + 2 a P1 < 0`` constraint.
    input_gain_bound : float, optional
        Optional ``B' P1^-1 B < k I`` constraint limiting closed-loop stiffness.
    observer_weight : array_like, optional
        Bound for ``P2`` on the observer coordinates; default ``lambda_min(R) I``.
    g_rescale, max_restarts
        When no candidate gives an interval, ``G`` is enlarged and the
        observer step repeated, up to ``max_restarts`` times.  Scaling ``G``
        by ``s`` scales ``T`` by ``s`` and ``Q2`` by ``1/s``; the closed loop
        is unchanged while ``r2`` grows by ``s**2``, so the factor is computed
        from the shortfall of the upper interval end (at least
        ``sqrt(g_rescale)``; ``g_rescale`` when the observer LMI failed).
    strict : bool
        When False, return the best uncertified candidate instead of raising.

    Raises
    ------
    Infeasible, SingularStack, SharedEigenvalues
    """
    k = p.n - p.q1
    if k <= 0:
        raise DimensionMismatch("reduced-order observer needs q1 < n")
    if rho_grid is None:
        rho_grid = [r for r in DEFAULT_RHO_GRID if r < sc.lambda_min2] or [0.5 * sc.lambda_min2]
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    grid = sorted(float(r) for r in rho_grid)
    if not grid or any(not 0 < r < sc.lambda_min2 for r in grid):
        raise ValueError(f"every rho must lie in (0, lambda_min2 = {sc.lambda_min2:.6g})")
    if not pi_bar > 0 or not sc.lambda_max > 0:
        raise ValueError("pi_bar and lambda_max must be positive")
    if not check_stabilizable_detectable(p):
        raise NotStabilizableDetectable("(A, B) is not stabilizable or (C1, A) is not detectable")
    if f_bar_spec is None:
        raise ValueError("F-bar (matrix or eigenvalues) is required")
    f_bar = _resolve_f_bar(f_bar_spec, k)
    ea, ef = np.linalg.eigvals(p.a), np.linalg.eigvals(f_bar)
    if np.abs(ea[:, None] - ef[None, :]).min() <= 1e-8 * max(np.abs(ea).max(), np.abs(ef).max(), 1.0):
        raise SharedEigenvalues("F-bar shares an eigenvalue with A")
    r_obs = default_observer_weight(p) if observer_weight is None else np.atleast_2d(np.array(observer_weight, float))
    if r_obs.shape != (k, k) or not is_positive_definite(r_obs):
        raise ValueError(f"observer weight must be a {k}x{k} positive definite matrix")
    g0 = _choose_g(p, f_bar, g_spec, g_seed)

    diags = []
    s2 = _step2(p, sc, gamma, decay_rate, input_gain_bound, max_iter)
    if not s2.feasible:
        diags.append(RhoDiagnostic(float("nan"), step1=s2.status, note="state-feedback step"))
        raise Infeasible(f"state-feedback LMI is {s2.status.value}", diags)
    p1, r1 = s2.assignment["P1"], s2.assignment["r1"]
    p1_inv = spd_inverse(p1)
    k_gain = p.b.T @ p1_inv

    best, best_ratio, scale = None, -1.0, 1.0
    for restart in range(max_restarts + 1):
        g = g0 * scale
        try:
            t_map, q1_map, q2_map, cond = observer_maps(p, f_bar, g)
        except SingularStack as exc:
            diags.append(RhoDiagnostic(float("nan"), note=f"G scale {scale:g}: {exc}"))
            break
        s3 = _step3(f_bar, q2_map, p1_inv, p.b, r_obs, gamma, sc.kappa, max_iter)
        if not s3.feasible:
            diags.append(RhoDiagnostic(float("nan"), s2.status, r1, s3.status, note=f"G scale {scale:g}"))
            scale *= g_rescale
            continue
        p2, r2 = s3.assignment["P2"], s3.assignment["r2"]
        growth = []
        for rho in grid:
            lo, hi = reduced_order_interval(r1, r2, rho, pi_bar, sc.lambda_max, sc.lambda_min2)
            dg = RhoDiagnostic(rho, s2.status, r1, s3.status, r2, (lo, hi), note=f"G scale {scale:g} cond {cond:.3g}")
            diags.append(dg)
            ok = lo < hi and (tau is None or lo < tau < hi)
            if ok or dg.ratio > best_ratio:
                proto = ReducedOrderProtocol(
                    f_bar=f_bar, g_gain=g, t_map=t_map, q1_map=q1_map, q2_map=q2_map, k_gain=k_gain,
                    tau=pick_tau(lo, hi, tau), rho=rho, gamma=float(gamma), p1=p1, p2=p2, r1=r1, r2=r2,
                    r_obs=r_obs, pi_bar=float(pi_bar), lambda_max=sc.lambda_max, lambda_min2=sc.lambda_min2,
                    certified=ok,
                )
                if ok:
                    return proto
                best, best_ratio = proto, dg.ratio
            # r2 grows with the square of the G scale; aim the upper end past the target
            target = max(lo * 4.0, 1.2 * tau if tau is not None else 0.0)
            growth.append(target / hi)
        scale *= max(np.sqrt(min(growth)), g_rescale ** 0.5) if growth else g_rescale
    if not strict and best is not None:
        return best
    lines = "\n  ".join(d.describe() for d in diags)
    raise Infeasible(f"no admissible coupling gain found:\n  {lines}", diags, best)


def reduced_certificates(proto: ReducedOrderProtocol, p: Plant, sc: SpectralConstants, pi_bar: float) -> CertificateReport:
    """Re-check every design inequality, the observer identities and the coupling interval."""
    n, k, q1, q2, ell = p.n, p.n - p.q1, p.q1, p.q2, p.ell
    for name, m, shape in (
        ("F_bar", proto.f_bar, (k, k)), ("G", proto.g_gain, (k, q1)), ("T", proto.t_map, (k, n)),
        ("Q1", proto.q1_map, (n, q1)), ("Q2", proto.q2_map, (n, k)), ("K", proto.k_gain, (p.m, n)),
        ("P1", proto.p1, (n, n)), ("P2", proto.p2, (k, k)), ("R_obs", proto.r_obs, (k, k)),
    ):
        if np.shape(m) != shape:
            raise DimensionMismatch(f"{name} has shape {np.shape(m)}, expected {shape}")
    a, b, c1, c2, d = p.a, p.b, p.c1, p.c2, p.d
    g2 = proto.gamma**2
    p1, p2 = proto.p1, proto.p2
    p1_pd, p2_pd = is_positive_definite(p1), is_positive_definite(p2)
    x = spd_inverse(p1) if p1_pd else np.linalg.inv(p1)
    bbt = b @ b.T
    lmi2 = np.block([
        [p1 @ a.T + a @ p1 - proto.r1 * bbt, d, p1 @ c2.T],
        [d.T, -g2 * np.eye(ell), np.zeros((ell, q2))],
        [c2 @ p1, np.zeros((q2, ell)), -np.eye(q2)],
    ])
    w = proto.q2_map.T @ x @ bbt @ x @ proto.q2_map
    lmi3 = proto.f_bar.T @ p2 + p2 @ proto.f_bar + proto.r2 * w
    coupling = np.block([[g2 / sc.kappa * p.r_weight, np.eye(n)], [np.eye(n), p1]])
    stack = np.vstack([c1, proto.t_map])
    identity_res = np.linalg.norm(proto.q1_map @ c1 + proto.q2_map @ proto.t_map - np.eye(n))
    ea, ef = np.linalg.eigvals(a), np.linalg.eigvals(proto.f_bar)
    gap = np.abs(ea[:, None] - ef[None, :]).min()
    k_ref = b.T @ x
    interval = reduced_order_interval(proto.r1, proto.r2, proto.rho, pi_bar, sc.lambda_max, sc.lambda_min2)
    checks = {
        "p1_positive_definite": p1_pd,
        "p2_positive_definite": p2_pd,
        "r1_positive": proto.r1 > 0,
        "r2_positive": proto.r2 > 0,
        "rho_below_lambda_min2": 0 < proto.rho < sc.lambda_min2,
        "f_bar_hurwitz": np.linalg.eigvals(proto.f_bar).real.max() < 0,
        "spectra_disjoint": gap > 1e-8 * max(np.abs(ea).max(), np.abs(ef).max(), 1.0),
        "sylvester_residual": sylvester_residual(proto.t_map, a, proto.f_bar, proto.g_gain @ c1) <= 1e-8,
        "stack_nonsingular": np.linalg.cond(stack) < STACK_COND_LIMIT,
        "q_identity": identity_res <= 1e-8,
        "k_matches_p1": np.linalg.norm(proto.k_gain - k_ref) <= 1e-8 * max(np.linalg.norm(k_ref), 1e-300),
    }
    return CertificateReport(
        sigma1_max_eig=max_eig(lmi2),
        sigma2_max_eig=max_eig(lmi3),
        trace_cond_p1=bool(min_eig(coupling) > 0),
        trace_cond_p2=bool(max_eig(p2 - g2 / sc.kappa * proto.r_obs) < 0),
        tau_interval=interval,
        tau=proto.tau,
        checks={k_: bool(v) for k_, v in checks.items()},
    )


def identity_residual(proto: ReducedOrderProtocol, p: Plant) -> float:
    return float(np.linalg.norm(proto.q1_map @ p.c1 + proto.q2_map @ proto.t_map - np.eye(p.n)))
