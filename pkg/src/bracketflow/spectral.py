"""Reference computations used to check the flows independently.

Nothing in here calls a library eigensolver: the symmetric eigenvalues come
from cyclic Jacobi rotations and linear systems from Gaussian elimination with
partial pivoting, so these routines can serve as oracles for the integrator.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, DimensionError, RankError, SymmetryError
from .matrix import as_matrix, frobenius_norm, householder_qr

__all__ = [
    "is_symmetric",
    "jacobi_eigenvalues",
    "leading_minor_invertible",
    "qr_iteration",
    "solve",
]

JACOBI_MAX_SWEEPS = 100


def is_symmetric(a: np.ndarray, rtol: float = 1e-10) -> bool:
    scale = frobenius_norm(a)
    return frobenius_norm(a - a.T) <= rtol * max(scale, np.finfo(float).tiny)


def _offdiag_norm(a: np.ndarray) -> float:
    return frobenius_norm(a - np.diag(np.diag(a)))


def jacobi_eigenvalues(s, *, tol: float = 1e-13) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps.

    Sweeps continue until the off-diagonal Frobenius mass is at most
    ``tol * ||s||_F``. The result is sorted in descending order.

    Raises
    ------
    SymmetryError
        ``s`` is not symmetric to 1e-10 relative.
    ConvergenceError
        More than ``JACOBI_MAX_SWEEPS`` sweeps were needed.
    """
    a = as_matrix(s, name="jacobi input")
    if not is_symmetric(a):
        raise SymmetryError("jacobi_eigenvalues needs a symmetric matrix")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    target = tol * frobenius_norm(a)

    for _ in range(JACOBI_MAX_SWEEPS + 1):
        if _offdiag_norm(a) <= target:
            return np.sort(np.diag(a))[::-1].copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-18 * abs(diff):
                    # theta would overflow; first-order angle is exact to rounding
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    # smaller root of t^2 + 2 t theta - 1 = 0
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - sn * rq
                a[q, :] = sn * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - sn * cq
                a[:, q] = sn * cp + c * cq
                a[p, q] = a[q, p] = 0.0
    raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")


def qr_iteration(a, n: int) -> np.ndarray:
    """Return the ``n``-th unshifted QR iterate ``A_{k+1} = R_k Q_k``."""
    a = as_matrix(a, name="qr_iteration input")
    if n < 0:
        raise ValueError(f"number of steps must be nonnegative, got {n}")
    for _ in range(n):
        f = householder_qr(a)
        a = f.r @ f.q
    return a.copy()


def _eliminate(a: np.ndarray, rhs: np.ndarray | None):
    """Partial-pivot Gaussian elimination in place.

    Returns the pivots in elimination order and the number of row swaps.
    """
    n = a.shape[0]
    pivots = np.empty(n)
    swaps = 0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            if rhs is not None:
                rhs[[k, p]] = rhs[[p, k]]
            swaps += 1
        pivots[k] = a[k, k]
        if a[k, k] == 0.0:
            continue
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(factors, a[k, k:])
        if rhs is not None:
            rhs[k + 1 :] -= np.outer(factors, rhs[k])
    return pivots, swaps


def solve(a, rhs) -> np.ndarray:
    """Solve ``a @ x = rhs`` for a square ``a``; ``rhs`` may be a vector or matrix."""
    a = as_matrix(a, name="solve matrix").copy()
    b = np.array(rhs, dtype=float)
    vector = b.ndim == 1
    if vector:
        b = b[:, np.newaxis]
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    n = a.shape[0]
    scale = frobenius_norm(a)
    pivots, _ = _eliminate(a, b)
    if np.any(np.abs(pivots) <= 1e-14 * scale):
        raise RankError("matrix is numerically singular")
    x = np.empty_like(b)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x[:, 0] if vector else x


def leading_minor_invertible(p, j: int) -> bool:
    """True when the leading ``j x j`` block of ``p`` has
    ``|det| > 1e-12 * ||P_j||_F ** j``."""
    p = as_matrix(p, name="leading minor input")
    if not 1 <= j <= p.shape[0]:
        raise IndexError(f"minor size {j} out of range for dimension {p.shape[0]}")
    block = p[:j, :j].copy()
    scale = frobenius_norm(block)
    pivots, _ = _eliminate(block, None)
    # det magnitude accumulated in logs to avoid under/overflow
    if np.any(pivots == 0.0) or scale == 0.0:
        return False
    log_det = float(np.sum(np.log(np.abs(pivots))))
    return log_det > math.log(1e-12) + j * math.log(scale)
