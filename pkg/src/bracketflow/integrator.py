"""Adaptive RK4 integration of bracket flows.

The state is ``H`` alone or the coupled triple ``(H, g1, g2)`` with

    H'  = [H, G(H)]
    g1' = g1 G(H)            g1(0) = I
    g2' = (H - G(H)) g2      g2(0) = I

so that ``exp(t H0) = g1 g2`` and ``exp(t H(t)) = g2 g1``. All components
share the same Runge-Kutta stages. Local errors are estimated by step
doubling. Nothing re-projects ``g1`` onto the orthogonal group unless asked
to, so the drift monitors report what the integrator actually does.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .errors import DriftError, NumericalError, StateError, StiffnessError, SymmetryError
from .generators import GeneratorKind, GeneratorSpec, _validate, generator_unchecked
from .matrix import as_matrix, expm, frobenius_norm, householder_qr

__all__ = [
    "FlowState",
    "IntegratorConfig",
    "Trajectory",
    "factor_residuals",
    "integrate",
    "step",
]

MIN_STEP = 1e-14


@dataclass(frozen=True)
class FlowState:
    t: float
    h: np.ndarray
    g1: np.ndarray | None = None
    g2: np.ndarray | None = None

    @property
    def has_factors(self) -> bool:
        return self.g1 is not None and self.g2 is not None


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float = 10.0
    sample_dt: float = 0.05
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    h_init: float = 1e-3
    h_max: float = 0.5
    unitarity_bound: float = 1e-7
    triangularity_bound: float = 1e-8
    reorthogonalize: bool = False

    def __post_init__(self):
        for name in ("sample_dt", "rel_tol", "abs_tol", "h_init", "h_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.t_end > 0 and self.sample_dt > self.t_end:
            raise ValueError("sample_dt must not exceed t_end")

    def to_dict(self) -> dict:
        return {
            "t_end": self.t_end,
            "sample_dt": self.sample_dt,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "h_init": self.h_init,
            "h_max": self.h_max,
            "unitarity_bound": self.unitarity_bound,
            "triangularity_bound": self.triangularity_bound,
            "reorthogonalize": self.reorthogonalize,
        }


SERIES_NAMES = ("hs_norm", "offdiag_norm", "unitarity_drift", "triangularity_drift")


@dataclass(frozen=True)
class Trajectory:
    """Samples of the flow plus scalar series aligned with them.

    ``series`` holds ``hs_norm``, ``offdiag_norm``, ``unitarity_drift`` and
    ``triangularity_drift`` (NaN when factors are off) and ``diag`` holds the
    diagonal of every sample as an ``(n_samples, d)`` array.
    """

    spec: GeneratorSpec
    samples: tuple[FlowState, ...]
    series: dict[str, np.ndarray]
    diag: np.ndarray
    n_accepted: int = 0
    n_rejected: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def final(self) -> FlowState:
        return self.samples[-1]

    @property
    def dim(self) -> int:
        return self.samples[0].h.shape[0]

    def sample_at(self, t: float, tol: float = 1e-9) -> FlowState:
        times = self.times
        k = int(np.argmin(np.abs(times - t)))
        if abs(times[k] - t) > tol:
            raise StateError(f"no sample at t = {t}")
        return self.samples[k]


def offdiag_norm(h: np.ndarray) -> float:
    return frobenius_norm(h - np.diag(np.diag(h)))


def unitarity_drift(g1: np.ndarray) -> float:
    return frobenius_norm(g1.T @ g1 - np.eye(g1.shape[0]))


def triangularity_drift(g2: np.ndarray) -> float:
    """Strict-lower Frobenius mass of ``g2`` relative to ``||g2||_F``."""
    return frobenius_norm(np.tril(g2, -1)) / frobenius_norm(g2)


def _rhs(spec: GeneratorSpec, y: tuple) -> tuple:
    h, g1, g2 = y
    g = generator_unchecked(spec, h)
    dh = h @ g - g @ h
    if g1 is None:
        return dh, None, None
    return dh, g1 @ g, (h - g) @ g2


def _axpy(y: tuple, dt: float, k: tuple) -> tuple:
    return tuple(None if a is None else a + dt * b for a, b in zip(y, k))


def _rk4(spec: GeneratorSpec, y: tuple, dt: float) -> tuple:
    k1 = _rhs(spec, y)
    k2 = _rhs(spec, _axpy(y, 0.5 * dt, k1))
    k3 = _rhs(spec, _axpy(y, 0.5 * dt, k2))
    k4 = _rhs(spec, _axpy(y, dt, k3))
    out = []
    for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4):
        out.append(None if a is None else a + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4))
    return tuple(out)


def _finite(y: tuple) -> bool:
    return all(a is None or np.all(np.isfinite(a)) for a in y)


def step(spec: GeneratorSpec, state: FlowState, dt: float) -> FlowState:
    """One classical RK4 step of size ``dt`` for ``H`` and any present factors."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    y = (state.h, state.g1, state.g2)
    if not _finite(y):
        raise NumericalError("state has non-finite entries")
    h, g1, g2 = _rk4(spec, y, dt)
    if not _finite((h, g1, g2)):
        raise NumericalError(f"RK4 step produced non-finite values at t = {state.t + dt:.6g}")
    return FlowState(t=state.t + dt, h=h, g1=g1, g2=g2)


def _error_ratio(y_big: tuple, y_small: tuple, cfg: IntegratorConfig) -> float:
    """Step-doubling error over tolerance, worst component."""
    ratio = 0.0
    for a, b in zip(y_big, y_small):
        if a is None:
            continue
        err = frobenius_norm(b - a) / 15.0
        tol = cfg.abs_tol + cfg.rel_tol * frobenius_norm(b)
        ratio = max(ratio, err / tol)
    return ratio


def integrate(
    spec: GeneratorSpec,
    h0,
    cfg: IntegratorConfig,
    with_factors: bool = False,
    *,
    symmetric: bool = True,
) -> Trajectory:
    """Integrate the flow from ``h0`` to ``cfg.t_end``.

    Samples are taken at every multiple of ``cfg.sample_dt``; steps are
    clipped to land on those times, so each sample is an accepted state and
    no interpolation is involved.

    ``symmetric=False`` allows a non-symmetric ``h0`` and is only valid for
    the Toda generator.

    Raises
    ------
    StiffnessError
        The step size dropped below ``1e-14``.
    DriftError
        ``g1`` lost orthogonality beyond ``cfg.unitarity_bound``, or, for
        Toda, ``g2`` gained a strict lower part beyond
        ``cfg.triangularity_bound``.
    """
    if not symmetric and spec.kind is not GeneratorKind.TODA:
        raise SymmetryError("only the Toda flow may start from a non-symmetric matrix")
    h0 = _validate(spec, h0, symmetric)
    d = h0.shape[0]
    eye = np.eye(d)
    y = (h0.copy(), eye.copy() if with_factors else None, eye.copy() if with_factors else None)
    check_triangular = with_factors and spec.kind is GeneratorKind.TODA

    n_samples = int(math.floor(cfg.t_end / cfg.sample_dt + 1e-9)) + 1 if cfg.t_end > 0 else 1
    sample_times = [k * cfg.sample_dt for k in range(n_samples)]
    if cfg.t_end > 0 and sample_times[-1] < cfg.t_end - 1e-12:
        sample_times.append(cfg.t_end)

    samples = [FlowState(0.0, y[0], y[1], y[2])]
    t = 0.0
    dt = min(cfg.h_init, cfg.h_max)
    accepted = rejected = 0

    for target in sample_times[1:]:
        while t < target:
            remaining = target - t
            last = dt >= remaining * (1.0 - 1e-12)
            dt_try = remaining if last else dt
            y_big = _rk4(spec, y, dt_try)
            y_half = _rk4(spec, y, 0.5 * dt_try)
            y_small = _rk4(spec, y_half, 0.5 * dt_try)
            if not (_finite(y_big) and _finite(y_small)):
                ratio = math.inf
            else:
                ratio = _error_ratio(y_big, y_small, cfg)

            if ratio <= 1.0:
                y = y_small
                t = target if last else t + dt_try
                accepted += 1
                if with_factors:
                    y = _monitor(y, t, cfg, check_triangular)
                factor = 5.0 if ratio == 0.0 else min(5.0, max(0.2, 0.9 * ratio ** (-0.2)))
                proposal = dt_try * factor
                # a step clipped to hit a sample time must not shrink dt
                dt = min(cfg.h_max, max(dt, proposal) if last else proposal)
            else:
                rejected += 1
                factor = 0.2 if not math.isfinite(ratio) else max(0.2, 0.9 * ratio ** (-0.2))
                dt = dt_try * factor
                if dt < MIN_STEP:
                    raise StiffnessError(f"step size {dt:.3e} underflowed at t = {t:.6g}")
        samples.append(FlowState(target, y[0], y[1], y[2]))

    return _build_trajectory(spec, samples, accepted, rejected)


def _monitor(y: tuple, t: float, cfg: IntegratorConfig, check_triangular: bool) -> tuple:
    h, g1, g2 = y
    if cfg.reorthogonalize:
        g1 = householder_qr(g1).q
    drift = unitarity_drift(g1)
    if drift > cfg.unitarity_bound:
        raise DriftError("unitarity_drift", drift, cfg.unitarity_bound, t)
    if check_triangular:
        tri = triangularity_drift(g2)
        if tri > cfg.triangularity_bound:
            raise DriftError("triangularity_drift", tri, cfg.triangularity_bound, t)
    return h, g1, g2


def _build_trajectory(spec, samples, accepted, rejected) -> Trajectory:
    n = len(samples)
    series = {name: np.full(n, np.nan) for name in SERIES_NAMES}
    diag = np.empty((n, samples[0].h.shape[0]))
    for k, s in enumerate(samples):
        series["hs_norm"][k] = frobenius_norm(s.h)
        series["offdiag_norm"][k] = offdiag_norm(s.h)
        diag[k] = np.diag(s.h)
        if s.has_factors:
            series["unitarity_drift"][k] = unitarity_drift(s.g1)
            series["triangularity_drift"][k] = triangularity_drift(s.g2)
    return Trajectory(
        spec=spec,
        samples=tuple(samples),
        series=series,
        diag=diag,
        n_accepted=accepted,
        n_rejected=rejected,
    )


def factor_residuals(state: FlowState, h0) -> tuple[float, float]:
    """Relative residuals of ``exp(t H0) = g1 g2`` and ``exp(t H(t)) = g2 g1``."""
    if not state.has_factors:
        raise StateError("state carries no g1/g2 factors")
    h0 = as_matrix(h0, name="h0")
    e0 = expm(state.t * h0)
    et = expm(state.t * state.h)
    r1 = frobenius_norm(e0 - state.g1 @ state.g2) / frobenius_norm(e0)
    r2 = frobenius_norm(et - state.g2 @ state.g1) / frobenius_norm(et)
    return r1, r2


def conjugation_residual(state: FlowState, h0) -> float:
    """``||g1^T H0 g1 - H(t)||_F / ||H0||_F``."""
    if state.g1 is None:
        raise StateError("state carries no g1 factor")
    h0 = as_matrix(h0, name="h0")
    return frobenius_norm(state.g1.T @ h0 @ state.g1 - state.h) / frobenius_norm(h0)
