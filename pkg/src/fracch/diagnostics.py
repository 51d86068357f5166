"""Long-time diagnostics: distance decay, rate fits, Poincare and smoothing.

The decay fit works on H(t) = (E(u(t)) - E(phi))^theta.  Exponential decay
of H signals the theta = 1/2 regime of the gradient inequality; algebraic
decay corresponds to smaller exponents.  Fit windows are chosen
automatically and fits on the numerical noise floor are refused.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .evolution import Trajectory
from .operators import OperatorSet, xnorm


@dataclass(frozen=True)
class LojFit:
    mode: str  # "exponential" or "algebraic"
    theta: float
    rate: float
    r_squared: float
    window: tuple
    e_limit: float
    degenerate: bool = False


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(intercept), r2


def _select_window(times, energies, phi_energy, theta, warn=False):
    """Samples of H above the noise cutoff, or None when H vanishes entirely.

    The cutoff is max(100 eps scale, 3 min H): the first term is the classic
    roundoff floor, the second excises the plateau where the solver tolerance
    freezes the trajectory.
    """
    times = np.asarray(times, dtype=float)
    energies = np.asarray(energies, dtype=float)
    diff = energies - phi_energy
    if np.any(diff < 0):
        if warn:
            warnings.warn(
                "energy dipped below the limit energy; clipping negative gaps to zero"
            )
        diff = np.clip(diff, 0.0, None)
    H = diff**theta
    positive = H[H > 0]
    if positive.size == 0:
        return None
    floor = 100.0 * np.finfo(float).eps * max(1.0, abs(phi_energy))
    cutoff = max(floor, 3.0 * float(positive.min()))
    mask = H > cutoff
    return times[mask], H[mask]


def fit_decay_series(
    times: np.ndarray, energies: np.ndarray, phi_energy: float, theta: float
) -> LojFit:
    """Fit H(t) = (E(t) - E_phi)^theta on an automatically chosen window.

    Fits need at least 10 samples spanning two decades of H above the noise
    cutoff (see ``_select_window``), otherwise they are refused.
    """
    times = np.asarray(times, dtype=float)
    selected = _select_window(times, energies, phi_energy, theta, warn=True)
    if selected is None:
        return LojFit(mode="exponential", theta=theta, rate=0.0, r_squared=0.0,
                      window=(float(times[0]), float(times[-1])),
                      e_limit=phi_energy, degenerate=True)
    tw, Hw = selected
    if tw.size < 10:
        raise ValueError(
            f"only {tw.size} samples above the noise floor; fit refused"
        )
    decades = math.log10(float(Hw.max()) / float(Hw.min()))
    if decades < 2.0:
        raise ValueError(f"fit window spans {decades:.2f} decades (< 2); fit refused")

    log_h = np.log(Hw)
    slope_e, _, r2_exp = _linear_fit(tw, log_h)

    pos_t = tw > 0
    if int(pos_t.sum()) >= 10:
        slope_a, _, r2_alg = _linear_fit(np.log(tw[pos_t]), log_h[pos_t])
    else:
        slope_a, r2_alg = 0.0, -math.inf

    if r2_exp >= r2_alg:
        fit = LojFit(mode="exponential", theta=theta, rate=-slope_e,
                     r_squared=r2_exp, window=(float(tw[0]), float(tw[-1])),
                     e_limit=phi_energy)
    else:
        fit = LojFit(mode="algebraic", theta=theta, rate=slope_a,
                     r_squared=r2_alg, window=(float(tw[0]), float(tw[-1])),
                     e_limit=phi_energy)
    return fit


def decay_fit(traj: Trajectory, phi_energy: float, theta: float) -> LojFit:
    """Decay-rate fit of a recorded trajectory against a limit energy."""
    return fit_decay_series(traj.times, traj.energies, phi_energy, theta)


def fit_curve_points(
    times: np.ndarray, energies: np.ndarray, fit: LojFit
) -> np.ndarray:
    """(t, H, H_fit) samples over the fit window, for external plotting.

    Reapplies the fit's window selection; the intercept is reconstructed
    from the fitted slope (least-squares intercept = mean(y) - slope mean(x)).
    """
    selected = _select_window(times, energies, fit.e_limit, fit.theta)
    if selected is None:
        return np.zeros((0, 3))
    tw, Hw = selected
    log_h = np.log(Hw)
    if fit.mode == "exponential":
        x = tw
        slope = -fit.rate
    else:
        pos = tw > 0
        tw, Hw, log_h = tw[pos], Hw[pos], log_h[pos]
        x = np.log(tw)
        slope = fit.rate
    intercept = float(np.mean(log_h) - slope * np.mean(x))
    H_fit = np.exp(intercept + slope * x)
    return np.column_stack([tw, Hw, H_fit])


def omega_limit_distances(traj: Trajectory, phi: np.ndarray, ops: OperatorSet) -> np.ndarray:
    """(t, |u(t) - phi| in the sigma energy norm) over recorded states."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (ops.mesh.dof_count,):
        raise ValueError(f"phi has shape {phi.shape}, expected ({ops.mesh.dof_count},)")
    rows = [
        (t, xnorm(ops.A_sigma, np.asarray(u) - phi))
        for t, u in zip(traj.state_times, traj.states)
    ]
    return np.asarray(rows)


@dataclass(frozen=True)
class PoincareReport:
    min_ratio: float
    bound: float
    holds: bool


def poincare_report(ops: OperatorSet, trials: int, rng=None) -> PoincareReport:
    """Sampled fractional Poincare check with the explicit annulus constant.

    The raw seminorm (2/C_s) v^T A_s v dominates
    |annulus| / (2R+1)^(1+2s) * |v|_L2^2 with Omega inside the radius-R ball;
    in 1-D the annulus B_{R+1} minus B_R has measure 2.  Draws are standard
    normal coefficient vectors plus boundary-localized single hats, the
    adversarial cases for this constant.
    """
    mesh = ops.mesh
    s = ops.exps.s
    R = max(abs(mesh.a), abs(mesh.b))
    bound = 2.0 / (2.0 * R + 1.0) ** (1.0 + 2.0 * s)
    rng = np.random.default_rng(0) if rng is None else rng
    dof = mesh.dof_count
    V = rng.standard_normal((trials, dof))
    hats = np.zeros((min(20, 2 * dof), dof))
    for k in range(hats.shape[0] // 2):
        hats[2 * k, k] = 1.0
        hats[2 * k + 1, dof - 1 - k] = 1.0
    V = np.vstack([V, hats])
    num = (2.0 / ops.C_s) * np.einsum("ij,ij->i", V, V @ ops.A_s)
    den = np.einsum("ij,ij->i", V, V @ ops.M)
    ratios = num / den
    min_ratio = float(ratios.min())
    return PoincareReport(min_ratio=min_ratio, bound=bound, holds=min_ratio >= bound)


def smoothing_report(traj: Trajectory, t0_grid=(0.1, 0.2, 0.5, 1.0)) -> list:
    """[(t0, t0 * sup over t >= t0 of the squared w energy norm)] per grid point.

    Boundedness of these products across t0 is the discrete trace of the
    parabolic smoothing bound with its 1/t0 blowup near the initial time.
    """
    out = []
    for t0 in t0_grid:
        mask = traj.times >= t0
        if not np.any(mask):
            raise ValueError(f"trajectory ends before t0={t0}")
        sup = float(np.max(traj.w_xnorms[mask] ** 2))
        out.append((float(t0), float(t0) * sup))
    return out
