"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes (see ``fracch.cli``).
"""


class ConfigurationError(ValueError):
    """Invalid parameter, config key, or precondition violation."""


class MissingInputError(RuntimeError):
    """A required input file (prior run output) is absent."""


class AssemblyError(RuntimeError):
    """Quadrature or factorization failure during operator assembly."""


class NewtonDivergenceError(RuntimeError):
    """Newton iteration failed to reduce the residual within the cap."""


class JacobianSingularError(RuntimeError):
    """Singular Jacobian, typically at a degenerate critical point."""


class CertificateViolationError(RuntimeError):
    """A per-step energy-dissipation certificate failed."""
