"""Shared pieces of both synthesis routines."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..matops import Status

DEFAULT_RHO_GRID = (0.05, 0.1, 0.2, 0.5, 1.0, 1.5)


class SynthesisError(RuntimeError):
    pass


class Infeasible(SynthesisError):
    """No candidate produced a usable coupling interval.

    ``diagnostics`` lists one :class:`RhoDiagnostic` per tried candidate and
    ``best`` holds the protocol closest to success when one could be built.
    """

    def __init__(self, message: str, diagnostics=(), best=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics)
        self.best = best


class SingularStack(SynthesisError):
    pass


class NotStabilizableDetectable(Infeasible):
    pass


@dataclass
class RhoDiagnostic:
    rho: float
    step1: Status | None = None
    r1: float | None = None
    step2: Status | None = None
    r2: float | None = None
    interval: tuple | None = None
    note: str = ""

    @property
    def ratio(self) -> float:
        """upper/lower; > 1 means the coupling interval is nonempty."""
        if self.interval is None or not self.interval[0] > 0:
            return 0.0
        return self.interval[1] / self.interval[0]

    def describe(self) -> str:
        def f(v):
            return "-" if v is None else f"{v:.4g}"
        s1 = self.step1.value if self.step1 else "-"
        s2 = self.step2.value if self.step2 else "-"
        iv = "-" if self.interval is None else f"({self.interval[0]:.4g}, {self.interval[1]:.4g})"
        text = f"rho={self.rho:g} step1={s1} r1={f(self.r1)} step2={s2} r2={f(self.r2)} interval={iv}"
        return f"{text} {self.note}".rstrip()


@dataclass(frozen=True)
class CertificateReport:
    sigma1_max_eig: float
    sigma2_max_eig: float
    trace_cond_p1: bool
    trace_cond_p2: bool
    tau_interval: tuple
    tau: float
    checks: dict = field(default_factory=dict)

    @property
    def tau_inside(self) -> bool:
        lo, hi = self.tau_interval
        return bool(lo < self.tau < hi)

    @property
    def passed(self) -> bool:
        return bool(
            self.sigma1_max_eig < 0
            and self.sigma2_max_eig < 0
            and self.trace_cond_p1
            and self.trace_cond_p2
            and self.tau_inside
            and all(self.checks.values())
        )

    def to_text(self) -> str:
        lines = [
            f"passed = {self.passed}",
            f"sigma1_max_eig = {self.sigma1_max_eig:.17g}",
            f"sigma2_max_eig = {self.sigma2_max_eig:.17g}",
            f"trace_cond_p1 = {self.trace_cond_p1}",
            f"trace_cond_p2 = {self.trace_cond_p2}",
            f"tau = {self.tau:.17g}",
            f"tau_lower = {self.tau_interval[0]:.17g}",
            f"tau_upper = {self.tau_interval[1]:.17g}",
        ]
        lines += [f"check.{k} = {v}" for k, v in self.checks.items()]
        return "\n".join(lines) + "\n"


def pick_tau(lower: float, upper: float, override: float | None) -> float:
    if override is not None:
        return float(override)
    return float(np.sqrt(lower * upper))


def gain_bound_block(b: np.ndarray, bound: float):
    """``[bound I, B'; B, P1]``, positive definite iff ``B' P1^-1 B < bound I``."""
    if not bound > 0:
        raise ValueError("input gain bound must be positive")
    m = b.shape[1]

    def block(v):
        return np.block([[bound * np.eye(m), b.T], [b, v["P1"]]])

    return block
