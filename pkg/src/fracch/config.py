"""Run configuration: strict JSON parsing with defaults and range checks.

Unknown keys are rejected (typo safety); every range violation names the
offending key as ``group.key``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .energy import EnergyContext
from .errors import ConfigurationError
from .evolution import StepConfig
from .mesh import FracMesh, build_uniform_mesh
from .operators import FracExponents, OperatorSet, build_operator_set
from .potentials import Potential, double_well

_DEFAULTS = {
    "domain": {"a": -1.0, "b": 1.0},
    "mesh": {"n_elems": 128},
    "frac": {"s": 0.5, "sigma": 0.5},
    "potential": {"kind": "double_well", "m": 4.0, "lambda": None},
    "time": {"tau": 1e-3, "t_end": 1.0, "record_stride": 10},
    "newton": {"tol": 1e-10, "max_iter": 50},
    "yosida": {"enabled": False, "epsilon": 0.01},
    "seeds": {"rng_seed": 0},
    "output": {"dir": "fracch-out"},
}


@dataclass(frozen=True)
class RunConfig:
    a: float
    b: float
    n_elems: int
    s: float
    sigma: float
    potential_kind: str
    m: float
    lam: float | None
    tau: float
    t_end: float
    record_stride: int
    newton_tol: float
    newton_max: int
    yosida_enabled: bool
    yosida_epsilon: float
    rng_seed: int
    out_dir: str

    def build_mesh(self) -> FracMesh:
        return build_uniform_mesh(self.a, self.b, self.n_elems)

    def build_potential(self) -> Potential:
        pot = double_well(self.m)
        if self.lam is not None and self.lam != pot.lam:
            # explicit override of the split constant
            pot = Potential(pot.g, pot.g_prime, pot.g_hat, lam=self.lam, kind=pot.kind)
        return pot

    def build_operator_set(self) -> OperatorSet:
        return build_operator_set(self.build_mesh(), FracExponents(self.s, self.sigma))

    def build_context(self) -> EnergyContext:
        return EnergyContext(ops=self.build_operator_set(), pot=self.build_potential())

    def build_step_config(self) -> StepConfig:
        return StepConfig(
            tau=self.tau,
            newton_tol=self.newton_tol,
            newton_max=self.newton_max,
            use_yosida=self.yosida_epsilon if self.yosida_enabled else None,
        )

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.rng_seed)


def _require_number(group: str, key: str, value, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{group}.{key} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigurationError(f"{group}.{key} must be an integer, got {value!r}")
    return int(value) if integer else float(value)


def parse_config(path) -> RunConfig:
    """Load, validate, and default-fill a JSON run configuration."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"config parse error at {path}:{exc.lineno}:{exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be a JSON object")

    merged = {g: dict(v) for g, v in _DEFAULTS.items()}
    for group, entries in data.items():
        if group not in merged:
            raise ConfigurationError(f"unknown config key '{group}'")
        if not isinstance(entries, dict):
            raise ConfigurationError(f"config group '{group}' must be an object")
        for key, value in entries.items():
            if key not in merged[group]:
                raise ConfigurationError(f"unknown config key '{group}.{key}'")
            merged[group][key] = value

    a = _require_number("domain", "a", merged["domain"]["a"])
    b = _require_number("domain", "b", merged["domain"]["b"])
    if a >= b:
        raise ConfigurationError(f"domain.a must be < domain.b, got a={a}, b={b}")
    n_elems = _require_number("mesh", "n_elems", merged["mesh"]["n_elems"], integer=True)
    if n_elems < 2:
        raise ConfigurationError(f"mesh.n_elems must be >= 2, got {n_elems}")
    s = _require_number("frac", "s", merged["frac"]["s"])
    sigma = _require_number("frac", "sigma", merged["frac"]["sigma"])
    for name, val in (("frac.s", s), ("frac.sigma", sigma)):
        if not (0.0 < val < 1.0):
            raise ConfigurationError(f"{name} must lie in (0,1), got {val}")
    kind = merged["potential"]["kind"]
    if kind != "double_well":
        raise ConfigurationError(
            f"potential.kind must be 'double_well' (custom potentials are library-only), got {kind!r}"
        )
    m = _require_number("potential", "m", merged["potential"]["m"])
    if m < 2:
        raise ConfigurationError(f"potential.m must be >= 2, got {m}")
    lam = merged["potential"]["lambda"]
    if lam is not None:
        lam = _require_number("potential", "lambda", lam)
        if lam < 0:
            raise ConfigurationError(f"potential.lambda must be >= 0, got {lam}")
    tau = _require_number("time", "tau", merged["time"]["tau"])
    if tau <= 0:
        raise ConfigurationError(f"time.tau must be positive, got {tau}")
    t_end = _require_number("time", "t_end", merged["time"]["t_end"])
    if t_end <= 0:
        raise ConfigurationError(f"time.t_end must be positive, got {t_end}")
    stride = _require_number("time", "record_stride", merged["time"]["record_stride"], integer=True)
    if stride < 1:
        raise ConfigurationError(f"time.record_stride must be >= 1, got {stride}")
    tol = _require_number("newton", "tol", merged["newton"]["tol"])
    if tol <= 0:
        raise ConfigurationError(f"newton.tol must be positive, got {tol}")
    max_iter = _require_number("newton", "max_iter", merged["newton"]["max_iter"], integer=True)
    if max_iter < 1:
        raise ConfigurationError(f"newton.max_iter must be >= 1, got {max_iter}")
    enabled = merged["yosida"]["enabled"]
    if not isinstance(enabled, bool):
        raise ConfigurationError(f"yosida.enabled must be a boolean, got {enabled!r}")
    epsilon = _require_number("yosida", "epsilon", merged["yosida"]["epsilon"])
    if epsilon <= 0:
        raise ConfigurationError(f"yosida.epsilon must be positive, got {epsilon}")
    seed = _require_number("seeds", "rng_seed", merged["seeds"]["rng_seed"], integer=True)
    if seed < 0:
        raise ConfigurationError(f"seeds.rng_seed must be >= 0, got {seed}")
    out_dir = merged["output"]["dir"]
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigurationError(f"output.dir must be a nonempty string, got {out_dir!r}")

    return RunConfig(
        a=a, b=b, n_elems=n_elems, s=s, sigma=sigma,
        potential_kind=kind, m=m, lam=lam,
        tau=tau, t_end=t_end, record_stride=stride,
        newton_tol=tol, newton_max=max_iter,
        yosida_enabled=enabled, yosida_epsilon=epsilon,
        rng_seed=seed, out_dir=out_dir,
    )
