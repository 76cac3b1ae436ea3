"""Post-hoc analysis of trajectories.

Rate fits are ordinary least squares on ``(t, log value)``. Windows are
given explicitly; ``default_window`` and ``settled_window`` build the two
kinds used by the reproductions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Sequence

import numpy as np

from .errors import DimensionError, InsufficientDataError, StateError
from .integrator import Trajectory
from .matrix import as_matrix, expm, frobenius_norm
from .spectral import jacobi_eigenvalues, qr_iteration

__all__ = [
    "QrCompareReport",
    "RateReport",
    "SpectrumComparison",
    "column_residual_series",
    "compare_spectrum",
    "default_window",
    "fit_rate",
    "qr_compare",
    "settled_window",
]

FLOOR = 1e-13
MIN_POINTS = 5
CLUSTER_RADIUS = 1e-6


@dataclass(frozen=True)
class RateReport:
    fitted_rate: float
    fit_window: tuple[float, float]
    r_squared: float
    n_points: int
    predicted: float = math.nan
    flags: tuple[str, ...] = ()

    @property
    def relative_gap(self) -> float:
        if not math.isfinite(self.predicted) or self.predicted == 0.0:
            return math.nan
        return abs(self.fitted_rate - self.predicted) / self.predicted

    def with_prediction(self, predicted: float) -> "RateReport":
        return RateReport(
            self.fitted_rate, self.fit_window, self.r_squared, self.n_points, predicted, self.flags
        )

    def to_dict(self) -> dict:
        def num(x):
            return x if math.isfinite(x) else None

        return {
            "fitted_rate": self.fitted_rate,
            "fit_window": list(self.fit_window),
            "r_squared": self.r_squared,
            "n_points": self.n_points,
            "predicted": num(self.predicted),
            "relative_gap": num(self.relative_gap),
            "flags": list(self.flags),
        }


def fit_rate(
    times: Sequence[float],
    values: Sequence[float],
    window: tuple[float, float],
    *,
    floor: float = FLOOR,
) -> RateReport:
    """Fit ``value ~ C exp(-rate t)`` on ``window``.

    Points with values at or below ``floor`` are treated as floating-point
    noise and dropped.

    Raises
    ------
    InsufficientDataError
        Fewer than five usable points in the window.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise DimensionError("times and values differ in length")
    lo, hi = window
    if lo > hi:
        raise ValueError(f"empty window {window}")
    mask = (t >= lo - 1e-12) & (t <= hi + 1e-12) & np.isfinite(v) & (v > floor)
    if int(mask.sum()) < MIN_POINTS:
        raise InsufficientDataError(
            f"{int(mask.sum())} usable points in window [{lo:g}, {hi:g}], need {MIN_POINTS}"
        )
    x = t[mask]
    y = np.log(v[mask])
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    resid = y - (ym + slope * (x - xm))
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    flags = []
    # a flat series carries no decay information: r^2 is undefined
    if ss_tot <= 1e-24 * max(1.0, float(np.sum(y**2))):
        r2 = 0.0
        flags.append("flat_series")
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return RateReport(
        fitted_rate=-slope,
        fit_window=(float(x[0]), float(x[-1])),
        r_squared=r2,
        n_points=int(mask.sum()),
        flags=tuple(flags),
    )


def default_window(t_end: float) -> tuple[float, float]:
    """``[t_end/2, 0.9 t_end]``: skips the transient and the tail."""
    return 0.5 * t_end, 0.9 * t_end


def settled_window(
    times: Sequence[float],
    values: Sequence[float],
    *,
    floor: float = FLOOR,
    margin: float = 100.0,
) -> tuple[float, float]:
    """Default window rescaled to the time the series stops decaying.

    The series is considered settled once it drops to ``margin`` times its
    noise level, taken as the larger of ``floor`` and the largest value over
    the last quarter of the samples (integration-error plateaus and stiff
    noise both show up there). The window is then ``[T/2, 0.9 T]`` for that
    settling time ``T``.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    tail = v[-max(1, v.size // 4) :]
    level = max(floor, float(np.nanmax(tail)))
    above = np.nonzero(v > margin * level)[0]
    if above.size == 0:
        return default_window(float(t[0]))
    horizon = float(t[min(above[-1] + 1, t.size - 1)])
    return default_window(horizon)


def column_residual_series(traj: Trajectory, ell: int, alpha: Sequence[float]) -> np.ndarray:
    """Norm of ``(h[j, ell] - alpha[ell] * delta_{j, ell})`` over ``j >= ell``
    at every sample, with ``alpha`` the known target spectrum in limit order."""
    d = traj.dim
    if not 0 <= ell < d - 1:
        raise IndexError(f"column index {ell} out of range for dimension {d}")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (d,):
        raise DimensionError(f"target spectrum has length {alpha.size}, expected {d}")
    out = np.empty(len(traj.samples))
    for k, s in enumerate(traj.samples):
        col = s.h[ell:, ell].copy()
        col[0] -= alpha[ell]
        out[k] = math.sqrt(float(col @ col))
    return out


@dataclass(frozen=True)
class SpectrumComparison:
    matched_pairs: tuple[tuple[float, float, float], ...]
    max_abs_gap: float
    multiplicity_ok: bool

    def to_dict(self) -> dict:
        return {
            "matched_pairs": [list(p) for p in self.matched_pairs],
            "max_abs_gap": self.max_abs_gap,
            "multiplicity_ok": self.multiplicity_ok,
        }


def _cluster_sizes(sorted_desc: np.ndarray, radius: float) -> list[int]:
    sizes = [1]
    for a, b in zip(sorted_desc, sorted_desc[1:]):
        if abs(a - b) <= radius:
            sizes[-1] += 1
        else:
            sizes.append(1)
    return sizes


def compare_spectrum(limit_diag: Sequence[float], h0) -> SpectrumComparison:
    """Pair the sorted limit diagonal with the Jacobi eigenvalues of ``h0``."""
    h0 = as_matrix(h0, name="h0")
    alpha = np.sort(np.asarray(limit_diag, dtype=float))[::-1]
    lam = jacobi_eigenvalues(h0)
    if alpha.size != lam.size:
        raise DimensionError(f"limit diagonal has {alpha.size} entries, H0 has {lam.size} eigenvalues")
    pairs = tuple((float(a), float(b), float(abs(a - b))) for a, b in zip(alpha, lam))
    return SpectrumComparison(
        matched_pairs=pairs,
        max_abs_gap=max(p[2] for p in pairs),
        multiplicity_ok=_cluster_sizes(alpha, CLUSTER_RADIUS) == _cluster_sizes(lam, CLUSTER_RADIUS),
    )


@dataclass(frozen=True)
class QrCompareReport:
    per_step_gaps: tuple[float, ...]
    sign_matrices: tuple[np.ndarray, ...]

    def to_dict(self) -> dict:
        return {
            "per_step_gaps": list(self.per_step_gaps),
            "signs": [np.diag(s).astype(int).tolist() for s in self.sign_matrices],
        }


def _align_signs(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Signs ``s`` making ``diag(s) x diag(s)`` closest to ``y``, chosen
    column by column against the columns already fixed."""
    d = x.shape[0]
    s = np.ones(d)
    for j in range(1, d):
        agree = float(np.sum(s[:j] * (x[:j, j] * y[:j, j] + x[j, :j] * y[j, :j])))
        s[j] = 1.0 if agree >= 0.0 else -1.0
    return s


def qr_compare(traj: Trajectory, h0, n_max: int) -> QrCompareReport:
    """Compare ``exp(H(n))`` with the ``n``-th QR iterate of ``exp(H0)``.

    Each gap is ``||exp(H(n)) - D QR^n D||_F / ||QR^n||_F`` after the best
    diagonal sign matrix ``D`` for that step.
    """
    h0 = as_matrix(h0, name="h0")
    e0 = expm(h0)
    gaps = []
    signs = []
    for n in range(n_max + 1):
        try:
            state = traj.sample_at(float(n))
        except StateError as exc:
            raise StateError(f"trajectory has no sample at integer time {n}") from exc
        flow = expm(state.h)
        ref = qr_iteration(e0, n)
        s = _align_signs(ref, flow)
        aligned = ref * np.outer(s, s)
        gaps.append(frobenius_norm(flow - aligned) / frobenius_norm(ref))
        signs.append(np.diag(s))
    return QrCompareReport(per_step_gaps=tuple(gaps), sign_matrices=tuple(signs))
