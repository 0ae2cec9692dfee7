"""Agent model ``x' = Ax + Bu + Dw``, ``y = C1 x``, ``z = C2 x`` and the weight R."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..matops import DimensionMismatch, is_positive_definite


@dataclass(frozen=True)
class Plant:
    a: np.ndarray
    b: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    d: np.ndarray
    r_weight: np.ndarray | None = None

    def __post_init__(self):
        mats = {}
        for name in ("a", "b", "c1", "c2", "d"):
            m = np.atleast_2d(np.array(getattr(self, name), dtype=float))
            mats[name] = m
        n = mats["a"].shape[0]
        if mats["a"].shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {mats['a'].shape}")
        for name, axis in (("b", 0), ("d", 0)):
            if mats[name].shape[axis] != n:
                raise DimensionMismatch(f"{name.upper()} has {mats[name].shape[0]} rows, expected {n}")
        for name in ("c1", "c2"):
            if mats[name].shape[1] != n:
                raise DimensionMismatch(f"{name.upper()} has {mats[name].shape[1]} columns, expected {n}")
        r = np.eye(n) if self.r_weight is None else np.atleast_2d(np.array(self.r_weight, dtype=float))
        if r.shape != (n, n):
            raise DimensionMismatch(f"R must be {n}x{n}, got {r.shape}")
        if not is_positive_definite(r):
            raise ValueError("R must be symmetric positive definite")
        mats["r_weight"] = r
        for name, m in mats.items():
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]

    @property
    def q1(self) -> int:
        return self.c1.shape[0]

    @property
    def q2(self) -> int:
        return self.c2.shape[0]

    @property
    def ell(self) -> int:
        return self.d.shape[1]


def _rank(m: np.ndarray, rtol: float = 1e-8) -> int:
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def check_stabilizable_detectable(p: Plant) -> bool:
    """PBH test of (A, B) stabilizability and (C1, A) detectability."""
    n = p.n
    eigs = np.linalg.eigvals(p.a)
    tol = 1e-10 * max(1.0, np.abs(p.a).max())
    for lam in eigs[eigs.real >= -tol]:
        shifted = lam * np.eye(n) - p.a
        if _rank(np.hstack([shifted, p.b])) < n:
            return False
        if _rank(np.hstack([shifted.conj().T, p.c1.T])) < n:
            return False
    return True
