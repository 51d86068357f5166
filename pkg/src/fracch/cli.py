"""Command-line entry point: simulate | equilibrium | verify | spectrum | rates.

Every subcommand takes --config <path> (JSON, see fracch.config) and an
optional --out <dir> overriding output.dir.  Exit codes: 0 ok, 1 verification
check failed, 2 configuration error, 3 missing input, 4 solver divergence,
5 certificate violation.  Time series go out as CSV, reports as JSON; the
trajectory CSV streams row by row so long runs are inspectable mid-flight.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .config import RunConfig, parse_config
from .diagnostics import fit_curve_points, fit_decay_series, poincare_report
from .energy import energy
from .equilibrium import (
    complete_report,
    default_equilibrium_seed,
    linearize,
    pencil_eigenvalues,
    solve_stationary,
)
from .errors import (
    CertificateViolationError,
    ConfigurationError,
    JacobianSingularError,
    MissingInputError,
    NewtonDivergenceError,
)
from .evolution import evolve
from .operators import xnorm
from .potentials import YosidaParams, yosida_apply, yosida_resolvent

TRAJECTORY_COLUMNS = (
    "step", "t", "tau_used", "energy", "w_xnorm", "u_xnorm_sigma",
    "u_linf", "dual_norm_ut", "cert_defect",
)
CERTIFICATE_COLUMNS = (
    "step", "t", "tau_used", "e_before", "e_after", "w_normsq",
    "du_msq", "lambda_half_du", "defect", "satisfied",
)


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _out_dir(cfg: RunConfig, override: str | None) -> str:
    out = override if override else cfg.out_dir
    os.makedirs(out, exist_ok=True)
    return out


def _initial_data(cfg: RunConfig, dof: int) -> np.ndarray:
    # seeded rough data; deterministic per config seed
    return 0.25 * cfg.rng().standard_normal(dof)


def run_simulate(cfg: RunConfig, out: str | None) -> int:
    out = _out_dir(cfg, out)
    ctx = cfg.build_context()
    u0 = _initial_data(cfg, ctx.ops.mesh.dof_count)
    traj_path = os.path.join(out, "trajectory.csv")
    cert_path = os.path.join(out, "certificates.csv")
    with open(traj_path, "w", newline="") as tfh, open(cert_path, "w", newline="") as cfh:
        tw = csv.writer(tfh)
        cw = csv.writer(cfh)
        tw.writerow(TRAJECTORY_COLUMNS)
        cw.writerow(CERTIFICATE_COLUMNS)

        def on_step(step_idx, t, row, cert):
            tw.writerow([
                step_idx, _fmt(t), _fmt(cert.tau_used), _fmt(row["energy"]),
                _fmt(row["w_xnorm"]), _fmt(row["u_xnorm_sigma"]),
                _fmt(row["u_linf"]), _fmt(row["dual_norm_ut"]), _fmt(cert.defect),
            ])
            cw.writerow([
                step_idx, _fmt(t), _fmt(cert.tau_used), _fmt(cert.e_before),
                _fmt(cert.e_after), _fmt(cert.w_normsq), _fmt(cert.du_msq),
                _fmt(cert.lambda_half_du), _fmt(cert.defect), int(cert.satisfied),
            ])
            tfh.flush()

        evolve(ctx, cfg.build_step_config(), u0, cfg.t_end,
               record_stride=cfg.record_stride, on_step=on_step)
    print(f"wrote {traj_path} and {cert_path}")
    return 0


def _equilibrium_payload(cfg: RunConfig):
    ctx = cfg.build_context()
    seed = default_equilibrium_seed(ctx)
    rep = complete_report(ctx, solve_stationary(ctx, seed, tol=cfg.newton_tol))
    payload = {
        "phi": [float(x) for x in rep.phi],
        "residual_dual": rep.residual_dual,
        "linf": rep.linf,
        "pencil_eigs": [float(x) for x in rep.pencil_eigs],
        "kernel_dim": rep.kernel_dim,
        "kernel_basis": [[float(x) for x in v] for v in rep.kernel_basis],
        "iso_condition": rep.iso_condition if math.isfinite(rep.iso_condition) else None,
        "theta_hint": rep.theta_hint,
    }
    return ctx, rep, payload


def run_equilibrium(cfg: RunConfig, out: str | None) -> int:
    out = _out_dir(cfg, out)
    _, _, payload = _equilibrium_payload(cfg)
    path = os.path.join(out, "equilibrium.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
    print(f"wrote {path}")
    return 0


def run_spectrum(cfg: RunConfig, out: str | None) -> int:
    out = _out_dir(cfg, out)
    ctx, rep, _ = _equilibrium_payload(cfg)
    op_eigs = pencil_eigenvalues(ctx.ops.A_sigma, ctx.ops.M)
    lin_eigs = rep.pencil_eigs
    path = os.path.join(out, "spectrum.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("k", "operator_eig", "linearized_eig"))
        for k, (oe, le) in enumerate(zip(op_eigs, lin_eigs)):
            w.writerow((k, _fmt(oe), _fmt(le)))
    print(f"wrote {path}")
    return 0


def run_verify(cfg: RunConfig, out: str | None) -> int:
    out = _out_dir(cfg, out)
    ctx = cfg.build_context()
    ops = ctx.ops
    rng = cfg.rng()
    checks = {}

    rep = poincare_report(ops, trials=1000, rng=rng)
    checks["poincare"] = {
        "pass": bool(rep.holds), "min_ratio": rep.min_ratio, "bound": rep.bound,
    }

    worst = 0.0
    for _ in range(100):
        v = rng.standard_normal(ops.mesh.dof_count)
        f = ops.A_s @ v
        nv = xnorm(ops.A_s, v)
        worst = max(worst, abs(ops.dual_norm_s(f) - nv) / nv)
    checks["duality"] = {"pass": bool(worst < 1e-10), "worst_rel_err": worst}

    pot = ctx.pot
    r = rng.uniform(-5.0, 5.0, size=1000)
    yos_ok = True
    details = {}
    for eps in (1.0, 0.1, 0.01):
        yp = YosidaParams(epsilon=eps)
        be = yosida_apply(pot, yp, r)
        j = yosida_resolvent(pot, yp, r)
        bound_ok = bool(np.all(np.abs(be) <= np.abs(pot.beta(r)) + 1e-9))
        r2 = rng.uniform(-5.0, 5.0, size=1000)
        j2 = yosida_resolvent(pot, yp, r2)
        be2 = yosida_apply(pot, yp, r2)
        lip_ok = bool(np.all(np.abs(be - be2) <= np.abs(r - r2) / eps + 1e-9))
        nonexp_ok = bool(np.all(np.abs(j - j2) <= np.abs(r - r2) + 1e-9))
        details[str(eps)] = {"bound": bound_ok, "lipschitz": lip_ok, "nonexpansive": nonexp_ok}
        yos_ok = yos_ok and bound_ok and lip_ok and nonexp_ok
    checks["yosida"] = {"pass": yos_ok, **details}

    u0 = _initial_data(cfg, ops.mesh.dof_count)
    scfg = cfg.build_step_config()
    traj = evolve(ctx, scfg, u0, t_end=min(cfg.t_end, 50 * scfg.tau), on_violation="warn")
    sat = all(c.satisfied for c in traj.certificates)
    checks["energy_stability"] = {
        "pass": bool(sat),
        "steps": len(traj.certificates),
        "max_defect": float(traj.cert_defects.max()),
    }

    all_pass = all(c["pass"] for c in checks.values())
    payload = {"all_pass": all_pass, "checks": checks}
    path = os.path.join(out, "verify.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
    for name, c in checks.items():
        print(f"{name}: {'pass' if c['pass'] else 'FAIL'}")
    print(f"wrote {path}")
    return 0 if all_pass else 1


def run_rates(cfg: RunConfig, out: str | None) -> int:
    out = _out_dir(cfg, out)
    traj_path = os.path.join(out, "trajectory.csv")
    eq_path = os.path.join(out, "equilibrium.json")
    for p in (traj_path, eq_path):
        if not os.path.exists(p):
            raise MissingInputError(f"{p} not found; run simulate and equilibrium first")
    times, energies = [], []
    with open(traj_path, newline="") as fh:
        for row in csv.DictReader(fh):
            times.append(float(row["t"]))
            energies.append(float(row["energy"]))
    if not times:
        raise MissingInputError(f"{traj_path} contains no steps")
    with open(eq_path) as fh:
        eq = json.load(fh)
    ctx = cfg.build_context()
    phi = np.asarray(eq["phi"], dtype=float)
    phi_energy = energy(ctx, phi)
    theta = eq.get("theta_hint") or 0.5
    try:
        fit = fit_decay_series(np.asarray(times), np.asarray(energies), phi_energy, theta)
    except ValueError as exc:
        raise MissingInputError(f"trajectory unusable for a rate fit: {exc}") from None
    payload = {
        "mode": fit.mode, "theta": fit.theta, "rate": fit.rate,
        "r_squared": fit.r_squared, "window": list(fit.window),
        "e_limit": fit.e_limit, "degenerate": fit.degenerate,
    }
    path = os.path.join(out, "rates.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
    curve_path = os.path.join(out, "rates_curve.csv")
    with open(curve_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "H", "H_fit"))
        for t, H, H_fit in fit_curve_points(np.asarray(times), np.asarray(energies), fit):
            w.writerow((_fmt(t), _fmt(H), _fmt(H_fit)))
    print(f"wrote {path} and {curve_path}")
    return 0


_COMMANDS = {
    "simulate": run_simulate,
    "equilibrium": run_equilibrium,
    "verify": run_verify,
    "spectrum": run_spectrum,
    "rates": run_rates,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracch",
        description="Fractional Cahn-Hilliard solver and verification suite",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a JSON run config")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        return _COMMANDS[args.command](cfg, args.out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except MissingInputError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 3
    except (NewtonDivergenceError, JacobianSingularError) as exc:
        print(f"solver divergence: {exc}", file=sys.stderr)
        return 4
    except CertificateViolationError as exc:
        print(f"certificate violation: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
