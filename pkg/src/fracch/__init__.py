"""Fractional Cahn-Hilliard solver and verification suite on an interval."""

from .config import RunConfig, parse_config
from .diagnostics import (
    LojFit,
    PoincareReport,
    decay_fit,
    fit_curve_points,
    fit_decay_series,
    omega_limit_distances,
    poincare_report,
    smoothing_report,
)
from .energy import (
    CoercivityReport,
    EnergyContext,
    coercivity_probe,
    energy,
    energy_gradient,
    load_vector,
    weighted_mass,
)
from .equilibrium import (
    EquilibriumReport,
    LsiProbeResult,
    complete_report,
    default_equilibrium_seed,
    isomorphism_check,
    kernel_and_projection,
    linearize,
    lsi_probe,
    max_principle_check,
    pencil_eigenvalues,
    solve_semilinear,
    solve_stationary,
)
from .errors import (
    AssemblyError,
    CertificateViolationError,
    ConfigurationError,
    JacobianSingularError,
    MissingInputError,
    NewtonDivergenceError,
)
from .evolution import (
    StepCertificate,
    StepConfig,
    Trajectory,
    energy_balance_defect,
    evolve,
    step,
)
from .mesh import FracMesh, build_uniform_mesh, interpolate, linf_norm, mass_matrix
from .operators import (
    FracExponents,
    OperatorSet,
    assemble_gagliardo,
    build_operator_set,
    dual_norm,
    load_stiffness,
    normalization_constant,
    rayleigh_lambda1,
    save_stiffness,
    xnorm,
)
from .potentials import (
    DissipativityReport,
    Potential,
    YosidaParams,
    check_dissipativity,
    custom_potential,
    double_well,
    yosida_apply,
    yosida_resolvent,
)

__version__ = "0.1.0"
