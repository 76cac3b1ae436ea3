import numpy as np
import pytest

from bracketflow.errors import DriftError, StateError, StiffnessError, SymmetryError
from bracketflow.generators import GeneratorSpec, vector_field
from bracketflow.integrator import (
    FlowState,
    IntegratorConfig,
    conjugation_residual,
    factor_residuals,
    integrate,
    step,
)
from bracketflow.matrix import expm, frobenius_norm, skew_lower_ones
from bracketflow.spectral import jacobi_eigenvalues

SPECTRUM = np.array([25.0, 16.0, 9.0, 4.0, 1.0])


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=-1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=1.0, sample_dt=2.0)
    IntegratorConfig(t_end=0.0)


def test_step_diagonal_is_equilibrium():
    h = np.diag([3.0, 2.0, 1.0])
    for spec in (GeneratorSpec.brockett([3, 2, 1]), GeneratorSpec.toda(), GeneratorSpec.wegner()):
        s = step(spec, FlowState(0.5, h), 0.1)
        assert s.t == pytest.approx(0.6)
        np.testing.assert_array_equal(s.h, h)


def test_step_finite_difference(h0, brockett_spec):
    for spec in (brockett_spec, GeneratorSpec.toda(), GeneratorSpec.wegner()):
        f = vector_field(spec, h0)
        errs = []
        for dt in (1e-6, 5e-7):
            s = step(spec, FlowState(0.0, h0), dt)
            errs.append(frobenius_norm((s.h - h0) / dt - f) / frobenius_norm(f))
        # first-order agreement: small, and halving with dt
        assert errs[0] <= 1e-3
        assert 1.8 < errs[0] / errs[1] < 2.2


def test_step_fourth_order(h0):
    # halving dt cuts the one-step error against a fine reference by ~32
    spec = GeneratorSpec.toda()
    ref = FlowState(0.0, h0)
    for _ in range(256):
        ref = step(spec, ref, 0.02 / 256)
    errs = []
    for dt in (0.02, 0.01):
        s = FlowState(0.0, h0)
        for _ in range(int(round(0.02 / dt))):
            s = step(spec, s, dt)
        errs.append(frobenius_norm(s.h - ref.h))
    assert 12.0 < errs[0] / errs[1] < 40.0


def test_step_brockett_two_by_two():
    h = np.array([[0.0, 1.0], [1.0, 0.0]])
    s = step(GeneratorSpec.brockett([1, 0]), FlowState(0.0, h), 0.01)
    assert s.h[0, 0] > h[0, 0]


def test_step_rejects_bad_dt(h0):
    with pytest.raises(ValueError):
        step(GeneratorSpec.toda(), FlowState(0.0, h0), 0.0)


def test_zero_horizon(h0):
    traj = integrate(GeneratorSpec.toda(), h0, IntegratorConfig(t_end=0.0), with_factors=True)
    assert len(traj.samples) == 1
    np.testing.assert_array_equal(traj.final.h, h0)
    np.testing.assert_array_equal(traj.final.g1, np.eye(5))
    assert factor_residuals(traj.final, h0) == (0.0, 0.0)


def test_trajectory_layout(toda_traj):
    t = toda_traj.times
    assert np.all(np.diff(t) > 0)
    np.testing.assert_allclose(t, np.arange(201) * 0.05, atol=1e-12)
    for series in toda_traj.series.values():
        assert series.shape == t.shape
    assert toda_traj.diag.shape == (t.size, 5)
    assert toda_traj.sample_at(1.0).t == pytest.approx(1.0)
    with pytest.raises(StateError):
        toda_traj.sample_at(1.01)


def test_uneven_sample_grid(h0):
    traj = integrate(GeneratorSpec.toda(), h0, IntegratorConfig(t_end=1.0, sample_dt=0.3))
    np.testing.assert_allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0], atol=1e-12)


@pytest.mark.parametrize("name", ["brockett_traj", "toda_traj", "wegner_traj"])
def test_conservation_along_runs(name, request, h0):
    traj = request.getfixturevalue(name)
    hs = traj.series["hs_norm"]
    assert np.max(np.abs(hs - hs[0])) / hs[0] < 1e-8
    lam0 = jacobi_eigenvalues(h0)
    for s in traj.samples[::10]:
        lam = jacobi_eigenvalues(0.5 * (s.h + s.h.T))
        assert np.max(np.abs(lam - lam0)) <= 1e-6


def test_brockett_limit(brockett_traj):
    np.testing.assert_allclose(brockett_traj.final.h.diagonal(), SPECTRUM, atol=1e-4)


@pytest.mark.parametrize("name", ["brockett_traj", "toda_traj"])
def test_first_diagonal_monotone(name, request):
    h00 = request.getfixturevalue(name).diag[:, 0]
    assert np.all(np.diff(h00) >= -1e-10)


def test_factor_identities(toda_traj, h0):
    for t in (0.5, 1.0, 2.0):
        r1, r2 = factor_residuals(toda_traj.sample_at(t), h0)
        assert r1 <= 1e-6 and r2 <= 1e-6
    for s in toda_traj.samples[::20]:
        assert conjugation_residual(s, h0) <= 1e-6
    assert np.nanmax(toda_traj.series["unitarity_drift"]) <= 1e-7
    assert np.nanmax(toda_traj.series["triangularity_drift"]) <= 1e-8


def test_factor_residuals_need_factors(brockett_traj, h0):
    with pytest.raises(StateError):
        factor_residuals(brockett_traj.final, h0)
    with pytest.raises(StateError):
        conjugation_residual(brockett_traj.final, h0)
    assert np.all(np.isnan(brockett_traj.series["unitarity_drift"]))


def test_refinement_stability(h0, brockett_spec):
    cfg = IntegratorConfig()
    fine = IntegratorConfig(rel_tol=cfg.rel_tol / 2)
    for spec in (brockett_spec, GeneratorSpec.toda(), GeneratorSpec.wegner()):
        a = integrate(spec, h0, cfg).final.h
        b = integrate(spec, h0, fine).final.h
        assert frobenius_norm(a - b) <= 10 * cfg.rel_tol * frobenius_norm(h0)


def test_stiffness_error(h0):
    cfg = IntegratorConfig(t_end=1.0, rel_tol=1e-30, abs_tol=1e-40)
    with pytest.raises(StiffnessError):
        integrate(GeneratorSpec.toda(), h0, cfg)


def test_drift_error_names_monitor(h0):
    cfg = IntegratorConfig(t_end=1.0, unitarity_bound=1e-30)
    with pytest.raises(DriftError) as info:
        integrate(GeneratorSpec.toda(), h0, cfg, with_factors=True)
    assert info.value.monitor == "unitarity_drift"
    cfg = IntegratorConfig(t_end=1.0, triangularity_bound=-1.0)
    with pytest.raises(DriftError) as info:
        integrate(GeneratorSpec.toda(), h0, cfg, with_factors=True)
    assert info.value.monitor == "triangularity_drift"


def test_reorthogonalize_option(h0):
    cfg = IntegratorConfig(t_end=2.0, reorthogonalize=True)
    traj = integrate(GeneratorSpec.toda(), h0, cfg, with_factors=True)
    assert np.nanmax(traj.series["unitarity_drift"]) <= 1e-13


def test_nonsymmetric_requires_toda():
    h = np.array([[1.0, 2.0], [0.5, 3.0]])
    with pytest.raises(SymmetryError):
        integrate(GeneratorSpec.toda(), h, IntegratorConfig(t_end=1.0))
    with pytest.raises(SymmetryError):
        integrate(GeneratorSpec.wegner(), h, IntegratorConfig(t_end=1.0), symmetric=False)


def test_nonsymmetric_toda_preserves_spectrum():
    p = (np.eye(3) + np.triu(np.full((3, 3), 0.5), 1)) @ expm(skew_lower_ones(3))
    h = p @ np.diag([5.0, 3.0, 2.0]) @ np.linalg.inv(p)
    traj = integrate(GeneratorSpec.toda(), h, IntegratorConfig(), with_factors=True, symmetric=False)
    final = traj.final.h
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(final).real)[::-1], [5, 3, 2], atol=1e-8)
    np.testing.assert_allclose(final.diagonal(), [5, 3, 2], atol=1e-4)
    assert np.max(np.abs(np.tril(final, -1))) <= 1e-4
