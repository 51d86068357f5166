"""Stationary states, their linearization, kernel handling, and the LSI probe.

A stationary state solves A_sigma phi + b_g(phi) = 0 in the dual space.  Its
linearization L = A_sigma + B_g'(phi) is symmetric; the generalized pencil
(L, M) yields the spectrum, a tolerance-based kernel, and the L2-orthogonal
projection P onto it.  Finiteness of the condition number of L + M P is the
discrete stand-in for the isomorphism property behind the gradient
inequality, and the probe below samples that inequality's ratio directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import eigh

from .energy import EnergyContext, energy, energy_gradient, load_vector, weighted_mass
from .errors import ConfigurationError, JacobianSingularError, NewtonDivergenceError
from .mesh import linf_norm
from .operators import xnorm


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    phi: np.ndarray
    residual_dual: float
    linf: float
    pencil_eigs: np.ndarray | None = None
    kernel_dim: int | None = None
    kernel_basis: list | None = None
    iso_condition: float | None = None
    theta_hint: float | None = None


def solve_semilinear(
    ctx: EnergyContext,
    rhs: np.ndarray,
    fn,
    fn_prime,
    u_init: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 60,
) -> np.ndarray:
    """Newton with backtracking for A_sigma u + b_fn(u) = rhs.

    The merit function is the dual norm of the residual; a step is accepted
    once it produces a sufficient decrease, halving the step length otherwise.
    """
    if tol <= 0:
        raise ConfigurationError(f"tolerance must be positive, got {tol}")
    ops = ctx.ops
    u = np.zeros(ops.mesh.dof_count) if u_init is None else np.array(u_init, dtype=float)

    def residual(vec):
        return ops.A_sigma @ vec + load_vector(ctx, fn, vec) - rhs

    F = residual(u)
    res = ops.dual_norm_sigma(F)
    for _ in range(max_iter):
        if res < tol:
            return u
        jac = ops.A_sigma + weighted_mass(ctx, fn_prime, u)
        try:
            direction = np.linalg.solve(jac, -F)
        except np.linalg.LinAlgError as exc:
            raise JacobianSingularError(
                "singular Jacobian in the stationary solve (degenerate critical point?)"
            ) from exc
        alpha = 1.0
        for _ in range(40):
            trial = u + alpha * direction
            F_trial = residual(trial)
            res_trial = ops.dual_norm_sigma(F_trial)
            if res_trial <= (1.0 - 1e-4 * alpha) * res:
                u, F, res = trial, F_trial, res_trial
                break
            alpha *= 0.5
        else:
            raise NewtonDivergenceError(
                f"stationary line search stalled at residual {res:.3e}"
            )
    if res < tol:
        return u
    raise NewtonDivergenceError(f"stationary Newton stopped at residual {res:.3e}")


def solve_stationary(
    ctx: EnergyContext, u_init: np.ndarray, tol: float = 1e-10, max_iter: int = 60
) -> EquilibriumReport:
    """Solve the stationary problem from u_init; fills phi/residual/linf only."""
    rhs = np.zeros(ctx.ops.mesh.dof_count)
    phi = solve_semilinear(ctx, rhs, ctx.pot.g, ctx.pot.g_prime,
                           u_init=u_init, tol=tol, max_iter=max_iter)
    res = ctx.ops.dual_norm_sigma(energy_gradient(ctx, phi))
    return EquilibriumReport(phi=phi, residual_dual=res, linf=linf_norm(ctx.ops.mesh, phi))


def linearize(ctx: EnergyContext, phi: np.ndarray) -> np.ndarray:
    """Second variation at phi: A_sigma + weighted mass of g'(phi)."""
    return ctx.ops.A_sigma + weighted_mass(ctx, ctx.pot.g_prime, phi)


def kernel_and_projection(
    L: np.ndarray, M: np.ndarray, kernel_tol: float | None = None
) -> tuple[list, np.ndarray]:
    """Near-kernel of the pencil L v = mu M v and its L2 projection matrix.

    Eigenvectors come out M-orthonormal, so P = V V^T M is idempotent and
    M-self-adjoint.  The default tolerance is 1e-8 times the largest pencil
    eigenvalue magnitude (scale-aware zero detection).
    """
    mu, V = eigh(L, M)
    if kernel_tol is None:
        kernel_tol = 1e-8 * float(np.max(np.abs(mu)))
    idx = np.nonzero(np.abs(mu) < kernel_tol)[0]
    basis = [V[:, k].copy() for k in idx]
    if basis:
        Vk = np.column_stack(basis)
        P = Vk @ Vk.T @ M
    else:
        P = np.zeros_like(M)
    return basis, P


def isomorphism_check(L: np.ndarray, M: np.ndarray, P_mat: np.ndarray) -> float:
    """Condition estimate of L + M P; finite means discrete isomorphism."""
    cond = float(np.linalg.cond(L + M @ P_mat))
    return cond if math.isfinite(cond) else math.inf


def pencil_eigenvalues(L: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Sorted generalized eigenvalues of the symmetric pencil (L, M)."""
    return eigh(L, M, eigvals_only=True)


def complete_report(
    ctx: EnergyContext, rep: EquilibriumReport, kernel_tol: float | None = None
) -> EquilibriumReport:
    """Attach spectrum, kernel, projection quality, and a theta hint."""
    L = linearize(ctx, rep.phi)
    M = ctx.ops.M
    basis, P = kernel_and_projection(L, M, kernel_tol)
    return replace(
        rep,
        pencil_eigs=pencil_eigenvalues(L, M),
        kernel_dim=len(basis),
        kernel_basis=basis,
        iso_condition=isomorphism_check(L, M, P),
        theta_hint=0.5 if not basis else None,
    )


def max_principle_check(
    rep: EquilibriumReport, gamma: float, slack: float | None = None, mesh=None
) -> bool:
    """Sup-norm bound |phi| <= gamma + slack; slack defaults to 10h."""
    if slack is None:
        if mesh is None:
            raise ConfigurationError("pass either an explicit slack or the mesh for 10h")
        slack = 10.0 * mesh.h
    return rep.linf <= gamma + slack


def default_equilibrium_seed(ctx: EnergyContext, amplitude: float = 0.9) -> np.ndarray:
    """Deterministic seed: the lowest pencil mode of the linearization at zero.

    Returns zero when that mode is stable (zero is then the local minimizer);
    otherwise the unstable direction scaled to the given sup-norm amplitude,
    with a fixed sign convention for reproducibility.
    """
    zero = np.zeros(ctx.ops.mesh.dof_count)
    L0 = linearize(ctx, zero)
    mu, V = eigh(L0, ctx.ops.M)
    if mu[0] >= 0:
        return zero
    v = V[:, 0]
    anchor = int(np.argmax(np.abs(v)))
    if v[anchor] < 0:
        v = -v
    return amplitude * v / np.max(np.abs(v))


@dataclass(frozen=True)
class LsiProbeResult:
    theta: float
    samples: int
    used: int
    skipped: int
    max_ratio: float
    median_ratio: float
    omega_estimate: float
    delta: float
    decade_medians: tuple
    diverging: bool


def lsi_probe(
    ctx: EnergyContext,
    rep: EquilibriumReport,
    theta: float,
    delta: float,
    samples: int,
    rng=None,
    energy_fn=None,
    grad_fn=None,
) -> LsiProbeResult:
    """Sample |E(v) - E(phi)|^(1-theta) / |E'(v)|_dual near an equilibrium.

    Radii are drawn log-uniformly over three decades below delta, and the
    per-decade medians expose whether the ratio blows up as v -> phi (the
    signature of a failing exponent or a degenerate critical point).  The
    theory guarantees a working theta in (0, 1/2] only; larger values are
    accepted for negative controls.  ``energy_fn`` / ``grad_fn`` override the
    stock energy, e.g. to probe a surgically modified quadratic model.
    """
    if not (0.0 < theta < 1.0):
        raise ConfigurationError(f"theta must lie in (0,1), got {theta}")
    if delta <= 0:
        raise ConfigurationError(f"delta must be positive, got {delta}")
    if energy_fn is None:
        energy_fn = lambda v: energy(ctx, v)  # noqa: E731
    if grad_fn is None:
        grad_fn = lambda v: energy_gradient(ctx, v)  # noqa: E731
    rng = np.random.default_rng(0) if rng is None else rng
    ops = ctx.ops
    phi = rep.phi
    e_phi = energy_fn(phi)

    ratios, radii = [], []
    skipped = 0
    for _ in range(samples):
        d = rng.standard_normal(ops.mesh.dof_count)
        d /= max(xnorm(ops.A_sigma, d), 1e-300)
        r = delta * 10.0 ** (-3.0 * rng.random())
        v = phi + r * d
        den = ops.dual_norm_sigma(grad_fn(v))
        if den < 1e-14:
            skipped += 1
            continue
        ratios.append(abs(energy_fn(v) - e_phi) ** (1.0 - theta) / den)
        radii.append(r)
    ratios = np.asarray(ratios)
    radii = np.asarray(radii)
    decade = np.clip(np.floor(np.log10(delta / radii)).astype(int), 0, 2)
    medians = tuple(
        float(np.median(ratios[decade == k])) if np.any(decade == k) else math.nan
        for k in range(3)
    )
    finite = [m for m in medians if not math.isnan(m)]
    diverging = (
        len(finite) == 3
        and finite[0] < finite[1] < finite[2]
        and finite[2] > 2.0 * finite[0]
    )
    return LsiProbeResult(
        theta=theta,
        samples=samples,
        used=int(ratios.size),
        skipped=skipped,
        max_ratio=float(ratios.max()) if ratios.size else math.nan,
        median_ratio=float(np.median(ratios)) if ratios.size else math.nan,
        omega_estimate=float(ratios.max()) if ratios.size else math.nan,
        delta=delta,
        decade_medians=medians,
        diverging=diverging,
    )
