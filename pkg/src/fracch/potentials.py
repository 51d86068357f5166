"""Potential bundle: g, its primitive, the monotone split, and Yosida smoothing.

The split writes beta(r) = g(r) + lambda r with beta monotone nondecreasing;
the primitive of beta is recovered analytically from the primitive of g.
Hypothesis checks on user potentials are sampling-based and warn instead of
aborting, so the tool stays usable outside the theory's assumptions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NewtonDivergenceError


class PotentialCheckWarning(UserWarning):
    """A sampled hypothesis check on a user potential failed."""


@dataclass(frozen=True, eq=False)
class Potential:
    """Nonlinearity bundle; callables must accept numpy arrays elementwise."""

    g: Callable
    g_prime: Callable
    g_hat: Callable
    lam: float
    kind: str
    analyticity: str | None = None  # user-declared class, never inferred

    def beta(self, r):
        return self.g(r) + self.lam * np.asarray(r, dtype=float)

    def beta_prime(self, r):
        return self.g_prime(r) + self.lam

    def beta_hat(self, r):
        r = np.asarray(r, dtype=float)
        return self.g_hat(r) + 0.5 * self.lam * r * r


def double_well(m: float = 4.0) -> Potential:
    """Polynomial double well: primitive |r|^m / m - r^2 / 2, split constant 1.

    g'(r) = (m-1)|r|^(m-2) - 1 >= -1, so lambda = 1 is the tightest split.
    """
    if not np.isfinite(m) or m < 2:
        raise ConfigurationError(f"double-well exponent must satisfy m >= 2, got {m}")

    def g(r):
        r = np.asarray(r, dtype=float)
        return np.abs(r) ** (m - 2.0) * r - r

    def g_prime(r):
        r = np.asarray(r, dtype=float)
        return (m - 1.0) * np.abs(r) ** (m - 2.0) - 1.0

    def g_hat(r):
        r = np.asarray(r, dtype=float)
        return np.abs(r) ** m / m - 0.5 * r * r

    return Potential(g, g_prime, g_hat, lam=1.0, kind=f"double_well({m:g})")


def custom_potential(
    g: Callable,
    g_prime: Callable,
    g_hat: Callable,
    lam: float,
    analyticity: str | None = None,
    check: bool = True,
) -> Potential:
    """Wrap user callables; sampled consistency checks warn on failure."""
    if not np.isfinite(lam) or lam < 0:
        raise ConfigurationError(f"lambda must be a finite nonnegative real, got {lam}")
    pot = Potential(g, g_prime, g_hat, lam=float(lam), kind="custom",
                    analyticity=analyticity)
    if check:
        _run_sampled_checks(pot)
    return pot


def _run_sampled_checks(pot: Potential) -> None:
    if abs(float(pot.g(0.0))) > 1e-12:
        warnings.warn(f"g(0) = {pot.g(0.0)} is not zero", PotentialCheckWarning)
    r = np.linspace(-5.0, 5.0, 2001)
    delta = 1e-6
    fd = (pot.g_hat(r + delta) - pot.g_hat(r - delta)) / (2.0 * delta)
    err = np.max(np.abs(fd - pot.g(r)) / (1.0 + np.abs(pot.g(r))))
    if err > 1e-6:
        warnings.warn(
            f"primitive inconsistent with g: finite-difference mismatch {err:.2e}",
            PotentialCheckWarning,
        )
    grid = np.arange(-10.0, 10.0, 1e-3)
    margin = np.min(pot.g_prime(grid) + pot.lam)
    if margin < -1e-9:
        warnings.warn(
            f"lambda-monotonicity violated on [-10, 10]: min g' + lambda = {margin:.2e}",
            PotentialCheckWarning,
        )


@dataclass(frozen=True)
class YosidaParams:
    epsilon: float
    root_tol: float = 1e-12
    max_iter: int = 100

    def __post_init__(self):
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise ConfigurationError(f"Yosida epsilon must be positive, got {self.epsilon}")


def yosida_resolvent(pot: Potential, yp: YosidaParams, r):
    """Resolvent j(r): the unique root of y + eps * beta(y) = r.

    Safeguarded Newton with a bisection fallback on the bracket between 0
    and r (valid because beta is monotone with beta(0) = 0).  Works
    elementwise on arrays.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    eps = yp.epsilon
    lo = np.minimum(r_arr, 0.0)
    hi = np.maximum(r_arr, 0.0)
    y = r_arr.copy()
    residual = y + eps * np.asarray(pot.beta(y), dtype=float) - r_arr
    for _ in range(yp.max_iter):
        if np.all(np.abs(residual) <= yp.root_tol):
            break
        hi = np.where(residual > 0.0, np.minimum(hi, y), hi)
        lo = np.where(residual <= 0.0, np.maximum(lo, y), lo)
        slope = 1.0 + eps * np.asarray(pot.beta_prime(y), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = y - residual / slope
        bad = ~np.isfinite(newton) | (newton <= lo) | (newton >= hi)
        y = np.where(bad & (np.abs(residual) > yp.root_tol),
                     0.5 * (lo + hi),
                     np.where(np.abs(residual) > yp.root_tol, newton, y))
        residual = y + eps * np.asarray(pot.beta(y), dtype=float) - r_arr
    if np.any(np.abs(residual) > yp.root_tol):
        raise NewtonDivergenceError(
            "resolvent iteration cap exceeded; is the custom beta monotone?"
        )
    return y if np.ndim(r) else float(y[0])


def yosida_apply(pot: Potential, yp: YosidaParams, r):
    """Yosida approximation beta_eps(r) = (r - j(r)) / eps."""
    j = yosida_resolvent(pot, yp, r)
    return (np.asarray(r, dtype=float) - j) / yp.epsilon


@dataclass(frozen=True)
class DissipativityReport:
    holds: bool
    min_margin: float


def check_dissipativity(
    pot: Potential, lambda1: float, kappa: float, scan_radius: float
) -> DissipativityReport:
    """Scan g(r) r + (lambda1 - kappa) r^2 on |r| in [R/2, R] for positivity."""
    if kappa <= 0:
        raise ConfigurationError(f"kappa must be positive, got {kappa}")
    half = np.linspace(0.5 * scan_radius, scan_radius, 2001)
    r = np.concatenate([-half, half])
    margin = pot.g(r) * r + (lambda1 - kappa) * r * r
    m = float(np.min(margin))
    return DissipativityReport(holds=m > 0.0, min_margin=m)
