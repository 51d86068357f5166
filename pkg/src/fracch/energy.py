"""Discrete free energy, its gradient, and the coercivity probe.

The quadratic part is the assembled fractional form; the potential part is
element-wise Gauss quadrature of the P1 interpolant.  The same quadrature
rule feeds the nonlinear load vectors and weighted mass matrices used by the
time stepper and the stationary solver, which is what makes the per-step
energy certificates hold to solver precision rather than quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .operators import OperatorSet, xnorm
from .potentials import Potential


@dataclass(frozen=True, eq=False)
class EnergyContext:
    ops: OperatorSet
    pot: Potential
    quad_order: int = 5
    _quad: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.quad_order < 2:
            raise ConfigurationError(f"quad_order must be >= 2, got {self.quad_order}")

    def quad_data(self):
        """(weights, shape0, shape1, points) of the per-element Gauss rule."""
        if not self._quad:
            mesh = self.ops.mesh
            ref, w = np.polynomial.legendre.leggauss(self.quad_order)
            ref = 0.5 * (ref + 1.0)
            w = 0.5 * w * mesh.h
            pts = mesh.nodes[:-1, None] + mesh.h * ref[None, :]
            self._quad["w"] = w
            self._quad["n0"] = 1.0 - ref
            self._quad["n1"] = ref
            self._quad["pts"] = pts
        q = self._quad
        return q["w"], q["n0"], q["n1"], q["pts"]

    def values_at_quad(self, v: np.ndarray) -> np.ndarray:
        """P1 interpolant values on the (n_elems, quad_order) point grid."""
        _, n0, n1, _ = self.quad_data()
        full = np.concatenate(([0.0], np.asarray(v, dtype=float), [0.0]))
        return np.outer(full[:-1], n0) + np.outer(full[1:], n1)


def energy(ctx: EnergyContext, v: np.ndarray) -> float:
    """E(v) = (1/2) v^T A_sigma v + quadrature of the potential primitive."""
    v = np.asarray(v, dtype=float)
    quadratic = 0.5 * float(v @ ctx.ops.A_sigma @ v)
    w, _, _, _ = ctx.quad_data()
    nonlinear = float((ctx.pot.g_hat(ctx.values_at_quad(v)) @ w).sum())
    total = quadratic + nonlinear
    if not math.isfinite(total):
        raise OverflowError("potential overflow while evaluating the energy")
    return total


def load_vector(ctx: EnergyContext, fn, v: np.ndarray) -> np.ndarray:
    """Weak-form load b_i = integral of fn(v_h) phi_i, by element quadrature."""
    w, n0, n1, _ = ctx.quad_data()
    fvals = fn(ctx.values_at_quad(v))
    left = (fvals * n0) @ w
    right = (fvals * n1) @ w
    full = np.zeros(ctx.ops.mesh.n_elems + 1)
    full[:-1] += left
    full[1:] += right
    return full[1:-1]


def weighted_mass(ctx: EnergyContext, fn, v: np.ndarray) -> np.ndarray:
    """Matrix B_ij = integral of fn(v_h) phi_i phi_j (tridiagonal, dense storage)."""
    w, n0, n1, _ = ctx.quad_data()
    fvals = fn(ctx.values_at_quad(v))
    m00 = (fvals * n0 * n0) @ w
    m01 = (fvals * n0 * n1) @ w
    m11 = (fvals * n1 * n1) @ w
    dof = ctx.ops.mesh.dof_count
    B = np.zeros((dof, dof))
    diag = m11[:-1] + m00[1:]
    B[np.arange(dof), np.arange(dof)] = diag
    off = m01[1:-1]
    B[np.arange(dof - 1), np.arange(1, dof)] = off
    B[np.arange(1, dof), np.arange(dof - 1)] = off
    return B


def energy_gradient(ctx: EnergyContext, v: np.ndarray) -> np.ndarray:
    """Dual-vector gradient A_sigma v + b_g(v)."""
    v = np.asarray(v, dtype=float)
    grad = ctx.ops.A_sigma @ v + load_vector(ctx, ctx.pot.g, v)
    if not np.all(np.isfinite(grad)):
        raise OverflowError("potential overflow while evaluating the gradient")
    return grad


@dataclass(frozen=True)
class CoercivityReport:
    lambda1: float
    kappa: float
    kappa0: float
    C: float
    verified_on: int


def coercivity_probe(
    ctx: EnergyContext, lambda1: float, kappa: float, samples: int, rng=None
) -> CoercivityReport:
    """Smallest additive constant making E(v) >= kappa0 |v|^2 - C on a sample.

    Sampled evidence only, never a proof; draws span four decades of
    magnitude around unit energy norm.
    """
    if not (0.0 < kappa < lambda1):
        raise ConfigurationError(f"need 0 < kappa < lambda1, got kappa={kappa}, lambda1={lambda1}")
    rng = np.random.default_rng(0) if rng is None else rng
    kappa0 = kappa / (2.0 * lambda1)
    dof = ctx.ops.mesh.dof_count
    worst = 0.0
    for _ in range(samples):
        d = rng.standard_normal(dof)
        d /= max(xnorm(ctx.ops.A_sigma, d), 1e-300)
        v = d * 10.0 ** rng.uniform(-2.0, 2.0)
        gap = kappa0 * xnorm(ctx.ops.A_sigma, v) ** 2 - energy(ctx, v)
        worst = max(worst, gap)
    return CoercivityReport(lambda1=lambda1, kappa=kappa, kappa0=kappa0,
                            C=worst, verified_on=samples)
