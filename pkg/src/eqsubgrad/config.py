"""JSON run setups: one file describes a problem, an operator, schedules,
exact rate parameters, and optional reference points for verification.

Exact parameters (a, b, M, c_u, L, e) may be given as "p/q" strings so no
precision is lost on the way to the rational bound computations; float
literals are accepted and converted exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .counterfunctions import Counterfunction
from .equilibrium import problem_from_config
from .errors import InvalidConfig
from .exact import parse_fraction
from .operators import as_vector, op_from_config
from .rates import RateInputs, derived_constants
from .regularity import RegularityModulus
from .solver import (SolverConfig, eps_schedule_from_config,
                     lambda_schedule_from_config)

DEFAULT_BOUND_CAP = 10 ** 6


@dataclass(frozen=True)
class RunSetup:
    """Everything a run or a verification pass needs, fully materialized.

    problem / operator / x0 / solver may be None for rate-table-only
    configs; commands that run the iteration reject such setups with a
    field diagnostic.
    """

    dimension: int
    problem: object | None
    operator: object | None
    x0: np.ndarray | None
    solver: SolverConfig | None
    inputs: RateInputs
    g: Counterfunction
    sigma_j: Counterfunction | None
    psi: RegularityModulus | None
    u: np.ndarray | None
    x_star: np.ndarray | None
    bound_cap: int
    seed: int
    perturb: dict | None
    raw: dict


def _counterfunction(value, *, where: str) -> Counterfunction:
    if isinstance(value, Counterfunction):
        return value
    if isinstance(value, str):
        return Counterfunction.parse(value)
    if isinstance(value, dict):
        return Counterfunction.from_config(value)
    raise InvalidConfig(f"{where}: expected a counterfunction spec, got {value!r}")


def _optional_vector(raw: dict, key: str, dim: int) -> np.ndarray | None:
    if key not in raw or raw[key] is None:
        return None
    return as_vector(raw[key], dim)


def _require(raw: dict, key: str):
    if key not in raw:
        raise InvalidConfig(f"missing required config key {key!r}")
    return raw[key]


def load_setup(source) -> RunSetup:
    """Build a RunSetup from a dict, a JSON string, or a file path."""
    if isinstance(source, dict):
        raw = source
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        raw = json.loads(source)
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise InvalidConfig(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidConfig("top-level config must be a JSON object")
    return _build(raw)


def _build(raw: dict) -> RunSetup:
    dim = int(_require(raw, "dimension"))
    problem = operator = x0 = None
    if raw.get("problem") is not None:
        problem = problem_from_config(raw["problem"])
        if problem.dim != dim:
            raise InvalidConfig(
                f"dimension mismatch: config says {dim}, problem has {problem.dim}")
    if raw.get("operator") is not None:
        operator = op_from_config(raw["operator"])
        if operator.dim != dim:
            raise InvalidConfig(
                f"dimension mismatch: config says {dim}, operator has {operator.dim}")
    if raw.get("x0") is not None:
        x0 = as_vector(raw["x0"], dim)
    max_steps = raw.get("max_steps")

    rates_raw = _require(raw, "rates")
    a = parse_fraction(_require(rates_raw, "a"))
    b = parse_fraction(_require(rates_raw, "b"))
    m_bound = parse_fraction(_require(rates_raw, "M"))
    c_u = parse_fraction(_require(rates_raw, "c_u"))
    if "L" in rates_raw and rates_raw["L"] is not None:
        lip = parse_fraction(rates_raw["L"])
    else:
        lip = None
    if "e" in rates_raw and rates_raw["e"] is not None:
        e_bound = parse_fraction(rates_raw["e"])
    else:
        e_bound = None
    if lip is None or e_bound is None:
        d_l, d_e = derived_constants(c_u, a, b, m_bound)
        lip = lip if lip is not None else d_l
        e_bound = e_bound if e_bound is not None else d_e

    schedules = raw.get("schedules", {})
    eps_schedule = eps_schedule_from_config(
        schedules.get("eps", {"kind": "constant", "value": 0.0}))
    lam_schedule = lambda_schedule_from_config(
        schedules.get("lambda"), float(a), float(b))
    if "tau" in schedules and schedules["tau"] is not None:
        tau = _counterfunction(schedules["tau"], where="schedules.tau")
    else:
        tau = eps_schedule.default_tau()

    oracle = raw.get("oracle", {})
    strategy = oracle.get("strategy", "auto")
    modulus = oracle.get("modulus")
    if modulus is not None:
        modulus = _counterfunction(modulus, where="oracle.modulus")

    solver = None
    if max_steps is not None:
        solver = SolverConfig(float(a), float(b), float(m_bound), lam_schedule,
                              eps_schedule, tau, int(max_steps),
                              oracle_strategy=strategy, oracle_modulus=modulus)
    inputs = RateInputs(a=a, b=b, M=m_bound, L=lip, c_u=c_u, e=e_bound,
                        n_dim=dim, tau=tau)

    g = _counterfunction(rates_raw.get("g", "constant:1"), where="rates.g")
    sigma_j = rates_raw.get("sigma_j")
    if sigma_j is not None:
        sigma_j = _counterfunction(sigma_j, where="rates.sigma_j")
    psi = rates_raw.get("psi")
    if psi is not None:
        psi = RegularityModulus(_counterfunction(psi, where="rates.psi"))

    caps = raw.get("caps", {})
    bound_cap = int(caps.get("bound", DEFAULT_BOUND_CAP))
    seed = int(raw.get("seed", 0))
    perturb = raw.get("perturb")
    if perturb is not None:
        perturb = {"step": int(perturb["step"]),
                   "delta": as_vector(perturb["delta"], dim)}

    return RunSetup(dimension=dim, problem=problem, operator=operator, x0=x0,
                    solver=solver, inputs=inputs, g=g, sigma_j=sigma_j,
                    psi=psi, u=_optional_vector(raw, "u", dim),
                    x_star=_optional_vector(raw, "x_star", dim),
                    bound_cap=bound_cap, seed=seed, perturb=perturb, raw=raw)


def require_run(setup: RunSetup) -> RunSetup:
    """Reject setups missing the pieces needed to actually iterate."""
    missing = [name for name, v in (("problem", setup.problem),
                                    ("operator", setup.operator),
                                    ("x0", setup.x0),
                                    ("max_steps", setup.solver)) if v is None]
    if missing:
        raise InvalidConfig(
            "running the iteration needs config keys: " + ", ".join(missing))
    return setup
