"""Generators ``G`` of the bracket flow ``H' = [H, G(H)]``.

Three choices are supported:

* Brockett: ``G(H) = [H, A]`` with a fixed diagonal ``A = diag(a)``.
* Toda: ``G(H) = L - L^T`` where ``L`` is the strict lower triangle of ``H``.
* Wegner: ``G(H) = [H, diag(H)]`` (non-linear).

Brockett and Toda are linear and diagonal in the symmetric/skew bases, so
they carry a skew coefficient table ``g`` with ``G(E_ij) = g_ij E^-_ij``. That
table drives the sign and lower-bound hypotheses of the convergence theorem
and the predicted exponential rate.
"""

from __future__ import annotations

from dataclasses import dataclass
import enum
import math
from typing import Sequence

import numpy as np

from .errors import DimensionError, NotDiagonalizableError, SymmetryError
from .matrix import as_matrix, frobenius_norm

__all__ = [
    "AssumptionCheck",
    "GeneratorKind",
    "GeneratorSpec",
    "MatrixEigenvalue",
    "apply_generator",
    "check_assumptions",
    "matrix_eigenvalue",
    "predicted_rate",
    "vector_field",
    "wegner_predicted_rate",
]

SYMMETRY_RTOL = 1e-8


class GeneratorKind(str, enum.Enum):
    BROCKETT = "brockett"
    TODA = "toda"
    WEGNER = "wegner"


@dataclass(frozen=True)
class GeneratorSpec:
    """Which generator is in force. ``brockett_a`` is required for Brockett only."""

    kind: GeneratorKind
    brockett_a: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GeneratorKind(self.kind))
        if self.kind is GeneratorKind.BROCKETT:
            if self.brockett_a is None:
                raise ValueError("Brockett generator needs the diagonal a")
            a = tuple(float(x) for x in self.brockett_a)
            if not all(math.isfinite(x) for x in a):
                raise ValueError("Brockett diagonal must be finite")
            object.__setattr__(self, "brockett_a", a)
        elif self.brockett_a is not None:
            raise ValueError(f"{self.kind.value} generator takes no diagonal a")

    @classmethod
    def brockett(cls, a: Sequence[float]) -> "GeneratorSpec":
        return cls(GeneratorKind.BROCKETT, tuple(a))

    @classmethod
    def toda(cls) -> "GeneratorSpec":
        return cls(GeneratorKind.TODA)

    @classmethod
    def wegner(cls) -> "GeneratorSpec":
        return cls(GeneratorKind.WEGNER)

    @property
    def a_non_increasing(self) -> bool | None:
        """Recorded, not enforced: the convergence results assume it."""
        if self.brockett_a is None:
            return None
        return all(x >= y for x, y in zip(self.brockett_a, self.brockett_a[1:]))

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if self.brockett_a is not None:
            out["brockett_a"] = list(self.brockett_a)
        return out


def _diag_bracket(h: np.ndarray, a: np.ndarray) -> np.ndarray:
    # [H, diag(a)]_ij = (a_j - a_i) h_ij
    return h * (a[np.newaxis, :] - a[:, np.newaxis])


def generator_unchecked(spec: GeneratorSpec, h: np.ndarray) -> np.ndarray:
    """``G(h)`` without validation, for use inside the integrator."""
    if spec.kind is GeneratorKind.BROCKETT:
        return _diag_bracket(h, np.asarray(spec.brockett_a))
    if spec.kind is GeneratorKind.TODA:
        lower = np.tril(h, -1)
        return lower - lower.T
    return _diag_bracket(h, np.diag(h).copy())


def _validate(spec: GeneratorSpec, h, require_symmetric: bool) -> np.ndarray:
    h = as_matrix(h, name="H")
    if spec.kind is GeneratorKind.BROCKETT and len(spec.brockett_a) != h.shape[0]:
        raise DimensionError(
            f"Brockett diagonal has length {len(spec.brockett_a)}, H is {h.shape[0]}x{h.shape[0]}"
        )
    if require_symmetric:
        scale = frobenius_norm(h)
        if frobenius_norm(h - h.T) > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
            raise SymmetryError(f"{spec.kind.value} generator needs a symmetric H")
    return h


def apply_generator(spec: GeneratorSpec, h, *, require_symmetric: bool = True) -> np.ndarray:
    """Return ``G(h)``.

    ``h`` must be symmetric to 1e-8 relative unless ``require_symmetric`` is
    False, which is only allowed for the Toda generator (the non-symmetric
    Toda flow is well defined since ``G`` only reads the lower triangle).
    """
    if not require_symmetric and spec.kind is not GeneratorKind.TODA:
        raise SymmetryError(f"{spec.kind.value} generator is only defined on symmetric H")
    h = _validate(spec, h, require_symmetric)
    return generator_unchecked(spec, h)


def vector_field(spec: GeneratorSpec, h, *, require_symmetric: bool = True) -> np.ndarray:
    """``F(h) = [h, G(h)]``."""
    g = apply_generator(spec, h, require_symmetric=require_symmetric)
    h = np.asarray(h, dtype=float)
    return h @ g - g @ h


@dataclass(frozen=True)
class MatrixEigenvalue:
    """Skew table ``g`` with ``G(E_ij) = g_ij E^-_ij``."""

    g: np.ndarray
    kind: GeneratorKind

    @property
    def dim(self) -> int:
        return self.g.shape[0]


def matrix_eigenvalue(spec: GeneratorSpec, d: int) -> MatrixEigenvalue:
    if d < 1:
        raise DimensionError(f"dimension must be positive, got {d}")
    if spec.kind is GeneratorKind.WEGNER:
        raise NotDiagonalizableError("the Wegner generator is non-linear; it has no matrix-eigenvalue")
    if spec.kind is GeneratorKind.BROCKETT:
        a = np.asarray(spec.brockett_a)
        if a.size != d:
            raise DimensionError(f"Brockett diagonal has length {a.size}, expected {d}")
        g = a[np.newaxis, :] - a[:, np.newaxis]
    else:
        g = np.tril(np.ones((d, d)), -1) - np.triu(np.ones((d, d)), 1)
    return MatrixEigenvalue(g=g, kind=spec.kind)


@dataclass(frozen=True)
class AssumptionCheck:
    sign_ok: bool
    sign_witness: tuple[int, int] | None
    epsilon: tuple[int, ...]
    lower_bound_ok: bool
    c: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "sign_ok": self.sign_ok,
            "sign_witness": list(self.sign_witness) if self.sign_witness else None,
            "epsilon": list(self.epsilon),
            "lower_bound_ok": self.lower_bound_ok,
            "c": [c if math.isfinite(c) else None for c in self.c],
        }


def check_assumptions(me: MatrixEigenvalue) -> AssumptionCheck:
    """Check the sign condition ``eps_l g_lk >= 0 (k >= l)`` and the lower
    bound ``|g_lj| >= c_l > 0 (j != l)`` on a constant table.

    ``eps_l`` is the sign of the first nonzero ``g_lk`` with ``k > l``; rows
    with no such entry get -1.
    """
    g = me.g
    d = g.shape[0]
    eps = []
    witness = None
    for l in range(d):
        row = g[l, l + 1 :]
        nz = row[row != 0.0]
        e = 1 if nz.size and nz[0] > 0 else -1
        eps.append(e)
        if witness is None:
            bad = np.nonzero(e * row < 0.0)[0]
            if bad.size:
                witness = (l, l + 1 + int(bad[0]))
    c = []
    for l in range(d):
        others = np.abs(np.delete(g[l], l))
        c.append(float(others.min()) if others.size else math.inf)
    return AssumptionCheck(
        sign_ok=witness is None,
        sign_witness=witness,
        epsilon=tuple(eps),
        lower_bound_ok=all(x > 0.0 for x in c),
        c=tuple(c),
    )


def linearized_spectrum(me: MatrixEigenvalue, limit_diag: Sequence[float]) -> np.ndarray:
    """Table of ``g_ij (alpha_i - alpha_j)``, the linearization eigenvalues at
    ``diag(alpha)``, with ``alpha`` in the achieved diagonal order."""
    alpha = np.asarray(limit_diag, dtype=float)
    if alpha.shape != (me.dim,):
        raise DimensionError(f"limit spectrum has length {alpha.size}, table is {me.dim}")
    return me.g * (alpha[:, np.newaxis] - alpha[np.newaxis, :])


def predicted_rate(me: MatrixEigenvalue, limit_diag: Sequence[float]) -> float:
    """Worst decay exponent over the stable pairs.

    Minimum of ``|g_ij (alpha_i - alpha_j)|`` over ``i < j`` with
    ``g_ij (alpha_i - alpha_j) < 0``. Returns ``math.inf`` when no pair is
    stable; the caller decides what that means.
    """
    lam = linearized_spectrum(me, limit_diag)
    iu = np.triu_indices(me.dim, 1)
    vals = lam[iu]
    stable = vals[vals < 0.0]
    if stable.size == 0:
        return math.inf
    return float(np.min(np.abs(stable)))


def wegner_predicted_rate(limit_diag: Sequence[float]) -> float:
    """``min_{i<j} (alpha_i - alpha_j)**2``, the decay rate of the Wegner flow
    near ``diag(alpha)``. Returned as a positive exponent."""
    alpha = np.asarray(limit_diag, dtype=float)
    if alpha.size < 2:
        return math.inf
    diff = alpha[:, np.newaxis] - alpha[np.newaxis, :]
    iu = np.triu_indices(alpha.size, 1)
    return float(np.min(diff[iu] ** 2))
