"""Dense real matrix primitives.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. Functions here
never mutate their inputs. Tolerances are relative to Frobenius norms so the
checks stay scale free.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import DimensionError, NumericalError, RankError

__all__ = [
    "QrFactors",
    "as_matrix",
    "basis_skew",
    "basis_sym",
    "commutator",
    "expm",
    "frobenius_norm",
    "householder_qr",
    "skew_lower_ones",
]


def as_matrix(a, *, square: bool = True, name: str = "matrix") -> np.ndarray:
    """Validate ``a`` and return it as a finite 2-D float64 array."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"{name} has non-finite entries")
    return m


def commutator(a, b) -> np.ndarray:
    """Return the bracket ``[a, b] = a @ b - b @ a``."""
    a = as_matrix(a, name="a")
    b = as_matrix(b, name="b")
    if a.shape != b.shape:
        raise DimensionError(f"commutator of {a.shape} and {b.shape} matrices")
    return a @ b - b @ a


def frobenius_norm(a) -> float:
    a = np.asarray(a, dtype=float)
    with np.errstate(over="ignore", under="ignore"):
        ss = float(np.sum(a * a))
    if 1e-280 < ss < 1e280:
        return math.sqrt(ss)
    # squares under- or overflowed: rescale by the largest entry
    m = float(np.max(np.abs(a), initial=0.0))
    if m == 0.0 or not math.isfinite(m):
        return m
    return m * math.sqrt(float(np.sum((a / m) ** 2)))


# Taylor terms are summed until they stop changing the result; with the scaled
# norm <= 0.5 this happens well before the cap.
_EXPM_MAX_TERMS = 40
_EXPM_SCALED_NORM = 0.5


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor kernel.

    The input is scaled by ``2**-s`` so that its Frobenius norm is at most 0.5,
    the Taylor series is summed to machine precision and the result is squared
    ``s`` times.
    """
    a = as_matrix(a, name="expm argument")
    n = a.shape[0]
    norm = frobenius_norm(a)
    s = 0
    if norm > _EXPM_SCALED_NORM:
        s = int(math.ceil(math.log2(norm / _EXPM_SCALED_NORM)))
    scaled = a / (2.0**s)

    result = np.eye(n)
    term = np.eye(n)
    for k in range(1, _EXPM_MAX_TERMS + 1):
        term = term @ scaled / k
        result = result + term
        if frobenius_norm(term) <= np.finfo(float).eps * frobenius_norm(result):
            break

    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            result = result @ result
    if not np.all(np.isfinite(result)):
        raise NumericalError(f"expm overflowed (||a||_F = {norm:.3e})")
    return result


@dataclass(frozen=True)
class QrFactors:
    """Orthogonal ``q`` and upper-triangular ``r`` with ``q @ r == a``."""

    q: np.ndarray
    r: np.ndarray


def householder_qr(a) -> QrFactors:
    """Householder QR of a square full-rank matrix.

    The diagonal of ``r`` is made nonnegative by flipping the matching columns
    of ``q`` (rows of ``r``), which makes the factorization unique.

    Raises
    ------
    RankError
        If some ``|r_ii|`` falls below ``1e-13 * ||a||_F``.
    """
    a = as_matrix(a, name="householder_qr argument")
    n = a.shape[0]
    # work on a / max|a_ij| so reflector norms cannot under- or overflow
    peak = float(np.max(np.abs(a)))
    r = a / peak if peak > 0.0 else a.copy()
    q = np.eye(n)
    for k in range(n - 1):
        x = r[k:, k]
        normx = frobenius_norm(x)
        if normx == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(normx, x[0])
        v /= frobenius_norm(v)
        # reflector I - 2 v v^T (unit v) applied on the left of r, right of q
        r[k:, k:] -= np.outer(v, 2.0 * (v @ r[k:, k:]))
        q[:, k:] -= np.outer(q[:, k:] @ v, 2.0 * v)
        r[k + 1 :, k] = 0.0
    r *= peak

    scale = frobenius_norm(a)
    diag = np.diag(r)
    if scale == 0.0 or np.any(np.abs(diag) < 1e-13 * scale):
        j = int(np.argmin(np.abs(diag)))
        raise RankError(f"matrix is numerically rank deficient (|r[{j},{j}]| = {abs(diag[j]):.3e})")
    signs = np.where(diag < 0.0, -1.0, 1.0)
    q = q * signs[np.newaxis, :]
    r = r * signs[:, np.newaxis]
    return QrFactors(q=q, r=r)


def _check_index(i: int, j: int, d: int) -> None:
    if d < 1:
        raise DimensionError(f"dimension must be positive, got {d}")
    if not (0 <= i < d and 0 <= j < d):
        raise IndexError(f"index ({i}, {j}) out of range for dimension {d}")


def basis_sym(i: int, j: int, d: int) -> np.ndarray:
    """Unit-norm symmetric basis element: ``e_i e_i^T`` on the diagonal,
    ``(e_i e_j^T + e_j e_i^T) / sqrt(2)`` off it."""
    _check_index(i, j, d)
    e = np.zeros((d, d))
    if i == j:
        e[i, i] = 1.0
    else:
        e[i, j] = e[j, i] = 1.0 / math.sqrt(2.0)
    return e


def basis_skew(i: int, j: int, d: int) -> np.ndarray:
    """Unit-norm skew basis element ``(e_i e_j^T - e_j e_i^T) / sqrt(2)``, i != j."""
    _check_index(i, j, d)
    if i == j:
        raise IndexError("skew basis element requires i != j")
    e = np.zeros((d, d))
    e[i, j] = 1.0 / math.sqrt(2.0)
    e[j, i] = -1.0 / math.sqrt(2.0)
    return e


def skew_lower_ones(d: int) -> np.ndarray:
    """Skew matrix with +1 strictly below the diagonal and -1 above."""
    if d < 1:
        raise DimensionError(f"dimension must be positive, got {d}")
    ones = np.tril(np.ones((d, d)), -1)
    return ones - ones.T
