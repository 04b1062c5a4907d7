"""Subgradient-type iteration for equilibrium problems over Fix(T).

One step from x_n with bookkeeping radius rho_n:

    K_n     = closed ball of radius rho_n + 1 around the origin
    y_n     = certified eps_n-maximizer of y -> f(y, x_n) over K_n
    xi_n    = subgradient of f(y_n, .) at x_n
    x_{n+1} = T(x_n - lambda_n * f(y_n, x_n) * xi_n)
    rho_{n+1} = max(rho_n, ||x_{n+1}||)

Step sizes stay inside [a, b] strictly inside (0, 2/M^2), where M bounds
||xi_n|| along the run.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import equilibrium
from .counterfunctions import Counterfunction
from .errors import InvalidConfig, OracleFailure
from .operators import as_vector

TRAJECTORY_CAP = 10 ** 6


# --- schedules ---------------------------------------------------------------


@dataclass(frozen=True)
class ConstantLambda:
    """lambda_n = value for all n."""

    value: float

    def __call__(self, n: int) -> float:
        return self.value

    def to_config(self) -> dict:
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class ConstantEps:
    """eps_n = value; converges to 0 only when value = 0."""

    value: float

    def __post_init__(self):
        if self.value < 0:
            raise InvalidConfig("eps schedule values must be nonnegative")

    def __call__(self, n: int) -> float:
        return self.value

    def default_tau(self) -> Counterfunction:
        if self.value == 0.0:
            return Counterfunction(0, 0)
        raise InvalidConfig("constant eps > 0 never reaches below 1/(k+1); no rate exists")

    def to_config(self) -> dict:
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class HarmonicEps:
    """eps_n = eps0 / (n + 1)."""

    eps0: float

    def __post_init__(self):
        if self.eps0 < 0:
            raise InvalidConfig("eps schedule values must be nonnegative")

    def __call__(self, n: int) -> float:
        return self.eps0 / (n + 1)

    def default_tau(self) -> Counterfunction:
        """Smallest family member dominating ceil(eps0 * (k+1)).

        n >= ceil(eps0)*(k+1) implies n+1 > eps0*(k+1), so
        eps_n <= 1/(k+1); floats convert to exact dyadic rationals.
        """
        if self.eps0 == 0.0:
            return Counterfunction(0, 0)
        p = math.ceil(Fraction(self.eps0))
        return Counterfunction(p, p)

    def to_config(self) -> dict:
        return {"kind": "harmonic", "eps0": self.eps0}


@dataclass(frozen=True)
class GeometricEps:
    """eps_n = eps0 * ratio^n with 0 < ratio < 1."""

    eps0: float
    ratio: float

    def __post_init__(self):
        if self.eps0 < 0:
            raise InvalidConfig("eps schedule values must be nonnegative")
        if not (0.0 < self.ratio < 1.0):
            raise InvalidConfig("geometric ratio must lie in (0, 1)")

    def __call__(self, n: int) -> float:
        return self.eps0 * self.ratio ** n

    def default_tau(self) -> Counterfunction:
        """Affine majorant of the logarithmic rate, by exact rational search.

        p = min{j >= 1 : ratio^j <= 1/2} and c = min{j >= 0 : eps0*ratio^j <= 1}
        give eps_{pk+c} <= eps0*ratio^c * 2^-k <= 1/(k+1).
        """
        if self.eps0 == 0.0:
            return Counterfunction(0, 0)
        q = Fraction(self.ratio)
        e0 = Fraction(self.eps0)
        p, qp = 1, q
        while qp > Fraction(1, 2):
            p += 1
            qp *= q
        c, ec = 0, e0
        while ec > 1:
            c += 1
            ec *= q
        return Counterfunction(p, c)

    def to_config(self) -> dict:
        return {"kind": "geometric", "eps0": self.eps0, "ratio": self.ratio}


def eps_schedule_from_config(cfg: dict):
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise InvalidConfig(f"eps schedule config needs a 'kind' key: {cfg!r}")
    kind = cfg["kind"]
    if kind == "constant":
        return ConstantEps(float(cfg.get("value", 0.0)))
    if kind == "harmonic":
        return HarmonicEps(float(cfg["eps0"]))
    if kind == "geometric":
        return GeometricEps(float(cfg["eps0"]), float(cfg["ratio"]))
    raise InvalidConfig(f"unknown eps schedule kind {kind!r}")


def lambda_schedule_from_config(cfg: dict, a: float, b: float):
    if cfg is None:
        return ConstantLambda(0.5 * (a + b))
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise InvalidConfig(f"lambda schedule config needs a 'kind' key: {cfg!r}")
    if cfg["kind"] == "constant":
        return ConstantLambda(float(cfg.get("value", 0.5 * (a + b))))
    raise InvalidConfig(f"unknown lambda schedule kind {cfg['kind']!r}")


# --- configuration and state ---------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters; [a, b] must sit strictly inside (0, 2/M^2)."""

    a: float
    b: float
    M: float
    lambda_schedule: object
    eps_schedule: object
    tau: Counterfunction
    max_steps: int
    oracle_strategy: str = "auto"
    oracle_modulus: Counterfunction | None = None
    trajectory_cap: int = TRAJECTORY_CAP

    def __post_init__(self):
        if not (self.M > 0 and math.isfinite(self.M)):
            raise InvalidConfig("M must be a positive finite bound on ||xi_n||")
        if not (0.0 < self.a <= self.b < 2.0 / self.M ** 2):
            raise InvalidConfig(
                f"lambda range not inside (0, 2/M^2): [a, b] = [{self.a}, {self.b}], "
                f"2/M^2 = {2.0 / self.M ** 2}")
        if self.max_steps < 0:
            raise InvalidConfig("max_steps must be nonnegative")

    @classmethod
    def basic(cls, a: float, b: float, M: float, max_steps: int,
              eps: float = 0.0, **kw) -> "SolverConfig":
        eps_schedule = ConstantEps(eps)
        tau = kw.pop("tau", None)
        if tau is None:
            tau = eps_schedule.default_tau()  # raises for eps > 0: no honest rate
        return cls(a, b, M, ConstantLambda(0.5 * (a + b)), eps_schedule, tau,
                   max_steps, **kw)


@dataclass(frozen=True)
class IterationState:
    n: int
    x: np.ndarray
    rho: float


@dataclass(frozen=True)
class StepRecord:
    """Everything the verification layer needs about iteration n."""

    n: int
    x: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    rho: float
    lam: float
    eps: float
    fval: float


@dataclass
class Trajectory:
    """Recorded run of length max_steps + 1 (one record per visited point)."""

    records: list = field(default_factory=list)
    # generating problem, when known; None for trajectories loaded from CSV
    problem: object | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i) -> StepRecord:
        return self.records[i]

    @property
    def dim(self) -> int:
        return self.records[0].x.shape[0]

    def xs(self) -> np.ndarray:
        return np.stack([r.x for r in self.records])

    def ys(self) -> np.ndarray:
        return np.stack([r.y for r in self.records])

    def xis(self) -> np.ndarray:
        return np.stack([r.xi for r in self.records])

    def fvals(self) -> np.ndarray:
        return np.array([r.fval for r in self.records])

    def rhos(self) -> np.ndarray:
        return np.array([r.rho for r in self.records])

    def lams(self) -> np.ndarray:
        return np.array([r.lam for r in self.records])

    def epss(self) -> np.ndarray:
        return np.array([r.eps for r in self.records])

    def write_csv(self, target) -> None:
        """Deterministic CSV dump, 17 significant digits per float."""
        if isinstance(target, (str, bytes)):
            with open(target, "w", encoding="ascii", newline="\n") as fh:
                self._write_csv(fh)
        else:
            self._write_csv(target)

    def _write_csv(self, fh) -> None:
        dim = self.dim
        cols = (["n"]
                + [f"x{i}" for i in range(dim)]
                + [f"y{i}" for i in range(dim)]
                + [f"xi{i}" for i in range(dim)]
                + ["rho", "lambda", "eps", "fval"])
        fh.write(",".join(cols) + "\n")
        for r in self.records:
            nums = [*r.x, *r.y, *r.xi, r.rho, r.lam, r.eps, r.fval]
            fh.write(str(r.n) + "," + ",".join(f"{v:.17g}" for v in nums) + "\n")

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self._write_csv(buf)
        return buf.getvalue()

    @classmethod
    def read_csv(cls, source) -> "Trajectory":
        if isinstance(source, (str, bytes)):
            with open(source, "r", encoding="ascii") as fh:
                return cls._read_csv(fh)
        return cls._read_csv(source)

    @classmethod
    def _read_csv(cls, fh) -> "Trajectory":
        header = fh.readline().strip().split(",")
        xcols = [c for c in header if c.startswith("x") and c[1:].isdigit()]
        dim = len(xcols)
        expected = 1 + 3 * dim + 4
        if len(header) != expected or header[0] != "n":
            raise InvalidConfig("not a trajectory CSV: unexpected header")
        records = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != expected:
                raise InvalidConfig("not a trajectory CSV: ragged row")
            n = int(parts[0])
            vals = [float(p) for p in parts[1:]]
            x = np.array(vals[0:dim])
            y = np.array(vals[dim:2 * dim])
            xi = np.array(vals[2 * dim:3 * dim])
            rho, lam, eps, fval = vals[3 * dim:]
            records.append(StepRecord(n, x, y, xi, rho, lam, eps, fval))
        return cls(records)


# --- iteration -----------------------------------------------------------------


def _probe(state: IterationState, problem, cfg: SolverConfig) -> StepRecord:
    """Oracle + subgradient at the current point, without stepping."""
    lam = cfg.lambda_schedule(state.n)
    if not (cfg.a <= lam <= cfg.b):
        raise InvalidConfig(f"lambda schedule left [a, b] at step {state.n}: {lam}")
    eps = cfg.eps_schedule(state.n)
    radius = state.rho + 1.0
    y, fval = equilibrium.approx_max(problem, state.x, radius, eps,
                                     strategy=cfg.oracle_strategy,
                                     modulus=cfg.oracle_modulus)
    xi = problem.subgradient(y, state.x)
    return StepRecord(state.n, state.x.copy(), y, xi, state.rho, lam, eps, fval)


def step(state: IterationState, problem, operator,
         cfg: SolverConfig) -> tuple[IterationState, StepRecord]:
    """One iteration; returns the successor state and the record of step n."""
    rec = _probe(state, problem, cfg)
    x_next = operator.apply(state.x - rec.lam * rec.fval * rec.xi)
    rho_next = max(state.rho, float(np.linalg.norm(x_next)))
    return IterationState(state.n + 1, x_next, rho_next), rec


def run(problem, operator, cfg: SolverConfig, x0,
        perturb: dict | None = None) -> Trajectory:
    """Run max_steps iterations from x0 and record every visited point.

    The trajectory has max_steps + 1 records; the last one probes the
    oracle at the final point without stepping.  ``perturb`` is a
    diagnostic hook {"step": i, "delta": [...]} that adds delta to the
    iterate after step i (used to exercise failure detection).
    """
    x = as_vector(x0, problem.dim)
    if operator.dim != problem.dim:
        raise InvalidConfig("operator and problem dimensions differ")
    if cfg.max_steps > cfg.trajectory_cap:
        raise InvalidConfig(
            f"max_steps {cfg.max_steps} exceeds the in-memory cap {cfg.trajectory_cap}")
    delta = None
    p_step = -1
    if perturb is not None:
        p_step = int(perturb["step"])
        delta = as_vector(perturb["delta"], problem.dim)
    state = IterationState(0, x, float(np.linalg.norm(x)))
    traj = Trajectory(problem=problem)
    try:
        for _ in range(cfg.max_steps):
            state_next, rec = step(state, problem, operator, cfg)
            traj.records.append(rec)
            if rec.n == p_step:
                state_next = IterationState(state_next.n, state_next.x + delta,
                                            max(state_next.rho,
                                                float(np.linalg.norm(state_next.x + delta))))
            state = state_next
        traj.records.append(_probe(state, problem, cfg))
    except OracleFailure as exc:
        # keep what was recorded so callers can dump a partial CSV
        exc.partial = traj
        raise
    return traj


def diameter_bound(traj: Trajectory) -> float:
    """Max pairwise distance among recorded iterates (a lower witness for L)."""
    X = traj.xs()
    if X.shape[1] == 1:
        return float(X.max() - X.min())
    best = 0.0
    for i in range(X.shape[0] - 1):
        d = np.linalg.norm(X[i + 1:] - X[i], axis=1).max()
        best = max(best, float(d))
    return best
