import numpy as np
import pytest

from fracch.diagnostics import (
    fit_curve_points,
    fit_decay_series,
    omega_limit_distances,
    poincare_report,
    smoothing_report,
)
from fracch.evolution import StepConfig, evolve
from fracch.equilibrium import default_equilibrium_seed, solve_stationary
from fracch.mesh import interpolate
from fracch.operators import xnorm


@pytest.fixture(scope="module")
def settled_run(ctx64):
    u0 = 0.1 * interpolate(ctx64.ops.mesh, lambda x: np.sin(np.pi * x))
    return evolve(ctx64, StepConfig(tau=1e-2), u0, t_end=10.0)


def test_decay_fit_synthetic_exponential():
    t = np.arange(0.0, 20.0, 0.01)
    energies = np.exp(-2.0 * t) + 3.0  # H = e^{-t} with theta = 1/2
    fit = fit_decay_series(t, energies, 3.0, 0.5)
    assert fit.mode == "exponential"
    assert abs(fit.rate - 1.0) < 0.01
    assert fit.r_squared >= 0.99
    assert fit.e_limit == 3.0


def test_decay_fit_synthetic_algebraic():
    # sampled in the power-law regime: below t ~ 10 the true log-log slope
    # of (1+t)^{-1} is genuinely shallower than -1
    t = np.arange(10.0, 5000.0, 0.5)
    energies = (1.0 + t) ** (-2.0)  # H = (1+t)^{-1} with theta = 1/2
    fit = fit_decay_series(t, energies, 0.0, 0.5)
    assert fit.mode == "algebraic"
    assert abs(fit.rate - (-1.0)) < 0.02
    assert fit.r_squared > 0.99


def test_fit_curve_points_tracks_series():
    t = np.arange(0.0, 20.0, 0.01)
    energies = np.exp(-2.0 * t) + 3.0
    fit = fit_decay_series(t, energies, 3.0, 0.5)
    curve = fit_curve_points(t, energies, fit)
    assert curve.shape[1] == 3
    rel = np.abs(curve[:, 1] - curve[:, 2]) / curve[:, 1]
    assert np.median(rel) < 1e-4
    assert rel.max() < 0.05  # float-quantized rungs at the window tail
    assert curve[0, 0] >= fit.window[0] and curve[-1, 0] <= fit.window[1]


def test_decay_fit_degenerate_series():
    t = np.linspace(0, 1, 50)
    fit = fit_decay_series(t, np.full(50, 2.0), 2.0, 0.5)
    assert fit.degenerate


def test_decay_fit_refusals():
    t = np.linspace(0, 1, 8)
    with pytest.raises(ValueError):
        fit_decay_series(t, np.exp(-t) + 1.0, 1.0, 0.5)  # < 10 samples
    t = np.linspace(0, 1, 200)
    with pytest.raises(ValueError):
        fit_decay_series(t, 1.0 + np.exp(-0.1 * t), 1.0, 0.5)  # < 2 decades


def test_decay_fit_warns_on_negative_gap():
    t = np.linspace(0, 30, 3000)
    energies = np.exp(-t) + 1.0
    energies[-1] = 1.0 - 1e-15  # floating-point crossing below the limit
    with pytest.warns(UserWarning):
        fit = fit_decay_series(t, energies, 1.0, 0.5)
    assert fit.mode == "exponential"


def test_decay_fit_on_settled_run(ctx64, settled_run):
    fit = fit_decay_series(settled_run.times, settled_run.energies, 0.0, 0.5)
    assert fit.mode == "exponential"
    assert fit.r_squared >= 0.99


def test_omega_distances_constant_trajectory(ctx64_wide):
    rep = solve_stationary(ctx64_wide, default_equilibrium_seed(ctx64_wide), tol=1e-12)
    traj = evolve(ctx64_wide, StepConfig(tau=1e-3), rep.phi, t_end=0.05)
    rows = omega_limit_distances(traj, rep.phi, ctx64_wide.ops)
    assert np.all(rows[:, 1] < 1e-9)


def test_omega_distances_settled_and_negative_control(ctx64, settled_run):
    phi = np.zeros(ctx64.ops.mesh.dof_count)
    rows = omega_limit_distances(settled_run, phi, ctx64.ops)
    assert rows[-1, 1] < 1e-6
    # planted wrong equilibrium: distances plateau at its norm
    wrong = phi.copy()
    wrong[5] = 0.3
    rows_wrong = omega_limit_distances(settled_run, wrong, ctx64.ops)
    plateau = xnorm(ctx64.ops.A_sigma, wrong)
    assert abs(rows_wrong[-1, 1] - plateau) < 1e-6 * plateau


def test_omega_distances_tail_monotone(ctx64, settled_run):
    rows = omega_limit_distances(settled_run, np.zeros(ctx64.ops.mesh.dof_count), ctx64.ops)
    d = rows[:, 1]
    last_max = int(np.argmax(d))
    assert np.all(np.diff(d[last_max:]) <= 1e-8)


def test_omega_distances_dimension_mismatch(ctx64, settled_run):
    with pytest.raises(ValueError):
        omega_limit_distances(settled_run, np.zeros(3), ctx64.ops)


def test_energy_monotone_along_runs(settled_run):
    assert np.all(np.diff(settled_run.energies) <= 1e-9)


def test_poincare_report(ops64, rng):
    rep = poincare_report(ops64, trials=1000, rng=rng)
    assert rep.bound == pytest.approx(2.0 / 9.0)  # R = 1, s = 1/2
    assert rep.holds
    assert rep.min_ratio >= rep.bound


def test_smoothing_report_stationary(ctx64_wide):
    rep = solve_stationary(ctx64_wide, default_equilibrium_seed(ctx64_wide), tol=1e-12)
    traj = evolve(ctx64_wide, StepConfig(tau=1e-2), rep.phi, t_end=1.2)
    prods = smoothing_report(traj, t0_grid=(0.1, 0.5, 1.0))
    assert all(p < 1e-16 for _, p in prods)


def test_smoothing_report_rough_data(ctx64, rng):
    u0 = rng.standard_normal(ctx64.ops.mesh.dof_count)
    traj = evolve(ctx64, StepConfig(tau=2e-3), u0, t_end=1.2)
    prods = smoothing_report(traj)
    assert all(np.isfinite(p) and p >= 0 for _, p in prods)
    with pytest.raises(ValueError):
        smoothing_report(traj, t0_grid=(5.0,))
