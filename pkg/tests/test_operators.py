import math

import numpy as np
import pytest

from gagliardo_oracle import oracle_entry

from fracch.errors import AssemblyError, ConfigurationError
from fracch.mesh import build_uniform_mesh, interpolate
from fracch.operators import (
    FracExponents,
    assemble_gagliardo,
    build_operator_set,
    dual_norm,
    load_stiffness,
    normalization_constant,
    rayleigh_lambda1,
    save_stiffness,
    xnorm,
)


def test_normalization_constant_half():
    # high-precision special-function oracle for the Gamma formula
    import mpmath

    assert abs(normalization_constant(1, 0.5) - 1.0 / math.pi) < 1e-14
    for s in (0.1, 0.25, 0.75, 0.9):
        ref = float(
            mpmath.mpf(s) * mpmath.mpf(4) ** s * mpmath.gamma(s + 0.5)
            / (mpmath.sqrt(mpmath.pi) * mpmath.gamma(1 - s))
        )
        assert abs(normalization_constant(1, s) - ref) < 1e-13 * ref


def test_normalization_constant_tracks_reciprocal_gamma():
    # the constant scales as 1/Gamma(1-s): it vanishes monotonically toward
    # s = 1 (compensating the blowup of the raw seminorm near the classical
    # limit), with C(1,s) * Gamma(1-s) -> 2
    from scipy.special import gamma

    vals = [normalization_constant(1, s) for s in (0.9, 0.95, 0.99)]
    assert vals[0] > vals[1] > vals[2] > 0
    tracked = [v * gamma(1.0 - s) for v, s in zip(vals, (0.9, 0.95, 0.99))]
    assert abs(tracked[2] - 2.0) < abs(tracked[0] - 2.0)
    assert abs(tracked[2] - 2.0) < 0.05
    assert normalization_constant(1, 0.25) > 0
    assert normalization_constant(1, 0.75) > 0
    with pytest.raises(ConfigurationError):
        normalization_constant(1, 1.0)
    with pytest.raises(ConfigurationError):
        normalization_constant(1, 0.0)


def test_assembly_symmetric_exactly(mesh8):
    for s in (0.25, 0.5, 0.75):
        A = assemble_gagliardo(mesh8, s, normalization_constant(1, s))
        assert np.array_equal(A, A.T)


def test_assembly_deterministic(mesh8):
    C = normalization_constant(1, 0.5)
    A1 = assemble_gagliardo(mesh8, 0.5, C)
    A2 = assemble_gagliardo(mesh8, 0.5, C)
    assert np.array_equal(A1, A2)


def test_assembly_matches_oracle_s_half(mesh8):
    C = normalization_constant(1, 0.5)
    A = assemble_gagliardo(mesh8, 0.5, C)
    for i in range(mesh8.dof_count):
        for j in range(i, mesh8.dof_count):
            ref = oracle_entry(mesh8, 0.5, C, i, j)
            assert abs(A[i, j] - ref) <= 1e-4 * abs(ref)


def test_assembly_rejects_nonfinite_constant(mesh8):
    with pytest.raises(ConfigurationError):
        assemble_gagliardo(mesh8, 0.5, float("inf"))


def test_refinement_toward_torsion_seminorm():
    # (1-x^2)^(1/2) is the s=1/2 profile with constant fractional Laplacian 1,
    # so its continuum seminorm is exactly integral of the profile = pi/2;
    # interpolant energies cross that limit near n=32, then the error decays
    profile = lambda x: max(0.0, 1.0 - x * x) ** 0.5  # noqa: E731
    C = normalization_constant(1, 0.5)
    errors = []
    for n in (64, 128, 256):
        mesh = build_uniform_mesh(-1.0, 1.0, n)
        A = assemble_gagliardo(mesh, 0.5, C)
        v = interpolate(mesh, profile)
        errors.append(abs(xnorm(A, v) ** 2 - math.pi / 2))
    assert errors[1] < 0.75 * errors[0]
    assert errors[2] < 0.75 * errors[1]
    assert errors[-1] < 3e-3


def test_xnorm_basics(ops8, rng):
    A = ops8.A_s
    assert xnorm(A, np.zeros(ops8.mesh.dof_count)) == 0.0
    v = rng.standard_normal(ops8.mesh.dof_count)
    assert abs(xnorm(A, v) ** 2 - v @ A @ v) < 1e-12 * abs(v @ A @ v)
    assert abs(xnorm(A, 2 * v) - 2 * xnorm(A, v)) < 1e-12 * xnorm(A, v)
    with pytest.raises(ValueError):
        xnorm(A, np.zeros(3))


def test_dual_norm_identity(ops64, rng):
    A = ops64.A_s
    for _ in range(100):
        v = rng.standard_normal(ops64.mesh.dof_count)
        nv = xnorm(A, v)
        assert abs(ops64.dual_norm_s(A @ v) - nv) < 1e-10 * nv


def test_dual_norm_zero_and_solve_oracle(ops8):
    dof = ops8.mesh.dof_count
    assert dual_norm(ops8.A_s, np.zeros(dof)) == 0.0
    f = np.zeros(dof)
    f[0] = 1.0
    val = dual_norm(ops8.A_s, f)
    x = np.linalg.solve(ops8.A_s, f)
    assert val > 0
    assert abs(val - math.sqrt(f @ x)) < 1e-12 * val


def test_dual_norm_rejects_indefinite():
    A = np.diag([1.0, -1.0])
    with pytest.raises(AssemblyError):
        dual_norm(A, np.ones(2))


def test_rayleigh_lambda1_refinement():
    vals = []
    for n in (32, 64, 128, 256):
        ops = build_operator_set(build_uniform_mesh(-1, 1, n), FracExponents(0.5, 0.5))
        vals.append(rayleigh_lambda1(ops.A_sigma, ops.M))
    assert all(v > 0 for v in vals)
    assert vals[0] > vals[1] > vals[2] > vals[3]
    # stabilized to three significant digits between n=128 and n=256
    assert abs(vals[2] - vals[3]) < 1e-3 * vals[3]


def test_rayleigh_domain_scaling():
    base = build_operator_set(build_uniform_mesh(-1, 1, 128), FracExponents(0.5, 0.5))
    lam1 = rayleigh_lambda1(base.A_sigma, base.M)
    for L in (2.0, 4.0):
        ops = build_operator_set(build_uniform_mesh(-L, L, 128), FracExponents(0.5, 0.5))
        lamL = rayleigh_lambda1(ops.A_sigma, ops.M)
        assert abs(lamL - lam1 / L) < 0.02 * lam1 / L  # 2 sigma = 1 here


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_poincare_invariant_random_vectors(s, rng):
    from fracch.mesh import mass_matrix

    mesh = build_uniform_mesh(-1.0, 1.0, 32)
    C = normalization_constant(1, s)
    A = assemble_gagliardo(mesh, s, C)
    M = mass_matrix(mesh)
    bound = 2.0 / 3.0 ** (1.0 + 2.0 * s)
    V = rng.standard_normal((1000, mesh.dof_count))
    num = (2.0 / C) * np.einsum("ij,ij->i", V, V @ A)
    den = np.einsum("ij,ij->i", V, V @ M)
    assert np.all(num / den >= bound)


def test_positive_definiteness(ops8, ops64):
    for ops in (ops8, ops64):
        assert np.linalg.eigvalsh(ops.A_s).min() > 0


def test_stiffness_dump_roundtrip(tmp_path, ops8):
    path = tmp_path / "a.stf"
    save_stiffness(path, ops8.A_s, ops8.exps.s, ops8.C_s)
    assert path.stat().st_size == 32 + 8 * ops8.mesh.dof_count**2
    A, s, C = load_stiffness(path)
    assert np.array_equal(A, ops8.A_s)
    assert s == ops8.exps.s and C == ops8.C_s


def test_stiffness_dump_rejects_garbage(tmp_path):
    path = tmp_path / "bad.stf"
    path.write_bytes(b"not a stiffness dump at all" + b"\0" * 16)
    with pytest.raises(AssemblyError):
        load_stiffness(path)


def test_exponent_validation():
    with pytest.raises(ConfigurationError):
        FracExponents(0.0, 0.5)
    with pytest.raises(ConfigurationError):
        FracExponents(0.5, 1.0)
