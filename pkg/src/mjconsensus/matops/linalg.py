"""Dense symmetric helpers and the Kronecker Sylvester solver."""

from __future__ import annotations

import numpy as np


class NotSymmetric(ValueError):
    pass


class NotPositiveDefinite(ValueError):
    pass


class SharedEigenvalues(ValueError):
    pass


class SingularSystem(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


def sym(m):
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def max_eig(m) -> float:
    return float(np.linalg.eigvalsh(sym(m))[-1])


def min_eig(m) -> float:
    return float(np.linalg.eigvalsh(sym(m))[0])


def _check_symmetric(m, rtol=1e-10):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {m.shape}")
    scale = max(np.abs(m).max(), np.finfo(float).tiny) if m.size else 1.0
    if np.abs(m - m.T).max(initial=0.0) > rtol * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    return sym(m)


def is_positive_definite(m) -> bool:
    m = _check_symmetric(m)
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def spd_inverse(m) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via its Cholesky factor."""
    m = _check_symmetric(m)
    try:
        c = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("matrix is not positive definite") from None
    ci = np.linalg.solve(c, np.eye(m.shape[0]))
    return sym(ci.T @ ci)


def young_bound_holds(p, q, phi, rtol: float = 1e-12) -> bool:
    """Check ``2 p^T q <= p^T phi p + q^T phi^{-1} q`` for positive definite ``phi``.

    The comparison allows ``rtol`` relative slack for round-off, so the
    equality case ``p = q, phi = I`` returns True.
    """
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    if p.shape != q.shape or phi.shape != (p.size, p.size):
        raise DimensionMismatch(f"p {p.shape}, q {q.shape}, phi {phi.shape}")
    try:
        c = np.linalg.cholesky(_check_symmetric(phi))
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("phi must be positive definite") from None
    lhs = 2.0 * p @ q
    a = c.T @ p
    b = np.linalg.solve(c, q)
    rhs = a @ a + b @ b
    return bool(lhs <= rhs + rtol * (abs(lhs) + rhs))


def sylvester_solve(a, f, rhs, sep_tol: float = 1e-8) -> np.ndarray:
    """Solve ``T A - F T = rhs`` for ``T`` (k x n).

    Parameters
    ----------
    a
        (n, n) matrix.
    f
        (k, k) matrix; must share no eigenvalue with ``a``.
    rhs
        (k, n) right-hand side.

    Notes
    -----
    Uses the vectorised form ``(A^T kron I_k - I_n kron F) vec(T) = vec(rhs)``
    with column-major ``vec``. Intended for n up to about 20.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    f = np.atleast_2d(np.asarray(f, dtype=float))
    rhs = np.atleast_2d(np.asarray(rhs, dtype=float))
    n, k = a.shape[0], f.shape[0]
    if a.shape != (n, n) or f.shape != (k, k) or rhs.shape != (k, n):
        raise DimensionMismatch(f"a {a.shape}, f {f.shape}, rhs {rhs.shape}")
    ea = np.linalg.eigvals(a)
    ef = np.linalg.eigvals(f)
    scale = max(np.abs(ea).max(initial=0.0), np.abs(ef).max(initial=0.0), 1.0)
    gap = np.abs(ea[:, None] - ef[None, :]).min()
    if gap <= sep_tol * scale:
        raise SharedEigenvalues(f"spectra of a and f are {gap:.3g} apart")
    op = np.kron(a.T, np.eye(k)) - np.kron(np.eye(n), f)
    try:
        vec = np.linalg.solve(op, rhs.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    return vec.reshape((k, n), order="F")


def sylvester_residual(t, a, f, rhs) -> float:
    """Relative residual ``||TA - FT - rhs|| / (||T|| ||A|| + ||rhs||)`` (Frobenius)."""
    t, a, f, rhs = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (t, a, f, rhs))
    num = np.linalg.norm(t @ a - f @ t - rhs)
    den = np.linalg.norm(t) * np.linalg.norm(a) + np.linalg.norm(rhs)
    return float(num / den) if den > 0 else float(num)
