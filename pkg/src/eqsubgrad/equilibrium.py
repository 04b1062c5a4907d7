"""Equilibrium problem families and their certified oracles.

A bifunction f : R^N x R^N -> R qualifies when f(x, x) = 0, f(., y) is
continuous, and f(x, .) is convex.  Three families ship:

* ``ZeroProblem``       f == 0 (degenerate fixed-point iteration).
* ``ConvexMinimizationProblem``  f(x, y) = h(y) - h(x) for convex h, so
  equilibrium points are exactly the minimizers of h.
* ``AffinePairedProblem``  f(x, y) = <c(x), y - x> for an affine map c.

``approx_max`` maximizes y -> f(y, x) over a centered ball and certifies
an additive eps-gap; ``subgradient`` selects an element of the convex
subdifferential of f(y_fixed, .) at x, choosing 0 at kinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .counterfunctions import Counterfunction
from .errors import DimensionMismatch, InvalidConfig, OracleFailure
from .operators import as_vector

GRID_MAX_DIM = 3
GRID_MAX_POINTS = 10 ** 7


# --- convex objectives for the minimization family -------------------------


@dataclass(frozen=True)
class WeightedOneNorm:
    """h(v) = sum_i weights_i * |v_i - center_i| with weights >= 0."""

    center: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        c = as_vector(self.center)
        w = as_vector(self.weights, c.shape[0])
        if np.any(w < 0):
            raise InvalidConfig("one-norm weights must be nonnegative")
        c.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def value(self, v) -> float:
        return float(self.weights @ np.abs(as_vector(v, self.dim) - self.center))

    def value_batch(self, V: np.ndarray) -> np.ndarray:
        return np.abs(V - self.center) @ self.weights

    def subgradient(self, v) -> np.ndarray:
        # sign convention: 0 on the kink, which is the least-norm selection
        return self.weights * np.sign(as_vector(v, self.dim) - self.center)

    def lipschitz(self, radius: float) -> float:
        return float(np.linalg.norm(self.weights))

    def known_minimizer(self) -> np.ndarray:
        return self.center.copy()

    def min_value(self) -> float:
        return 0.0

    def to_config(self) -> dict:
        return {"kind": "weighted_one_norm", "center": self.center.tolist(),
                "weights": self.weights.tolist()}


@dataclass(frozen=True)
class QuadraticForm:
    """h(v) = 0.5 v'Qv + q'v + const with symmetric positive semidefinite Q.

    When built via centered(), the global minimizer is recorded and the
    ball oracle can answer exactly.
    """

    matrix: np.ndarray
    linear: np.ndarray
    constant: float = 0.0
    minimizer: np.ndarray | None = None

    def __post_init__(self):
        q = np.asarray(self.matrix, dtype=float)
        lin = as_vector(self.linear)
        if q.shape != (lin.shape[0], lin.shape[0]):
            raise DimensionMismatch("quadratic matrix shape must match the linear term")
        if not np.allclose(q, q.T, atol=1e-10):
            raise InvalidConfig("quadratic matrix must be symmetric")
        if np.linalg.eigvalsh(q).min() < -1e-10:
            raise InvalidConfig("quadratic matrix must be positive semidefinite")
        q.flags.writeable = False
        lin.flags.writeable = False
        object.__setattr__(self, "matrix", q)
        object.__setattr__(self, "linear", lin)
        if self.minimizer is not None:
            m = as_vector(self.minimizer, lin.shape[0])
            m.flags.writeable = False
            object.__setattr__(self, "minimizer", m)

    @classmethod
    def centered(cls, matrix, center) -> "QuadraticForm":
        """h(v) = 0.5 (v - center)'Q(v - center), minimized at center."""
        q = np.asarray(matrix, dtype=float)
        c = as_vector(center)
        return cls(q, -(q @ c), 0.5 * float(c @ q @ c), minimizer=c)

    @property
    def dim(self) -> int:
        return self.linear.shape[0]

    def value(self, v) -> float:
        w = as_vector(v, self.dim)
        return 0.5 * float(w @ self.matrix @ w) + float(self.linear @ w) + self.constant

    def value_batch(self, V: np.ndarray) -> np.ndarray:
        return 0.5 * np.einsum("ij,jk,ik->i", V, self.matrix, V) + V @ self.linear + self.constant

    def subgradient(self, v) -> np.ndarray:
        return self.matrix @ as_vector(v, self.dim) + self.linear

    def lipschitz(self, radius: float) -> float:
        return float(np.linalg.norm(self.matrix, 2)) * radius + float(np.linalg.norm(self.linear))

    def known_minimizer(self) -> np.ndarray | None:
        return None if self.minimizer is None else self.minimizer.copy()

    def min_value(self) -> float:
        if self.minimizer is None:
            raise OracleFailure("quadratic objective without a recorded minimizer")
        return self.value(self.minimizer)

    def to_config(self) -> dict:
        cfg = {"kind": "quadratic", "matrix": self.matrix.tolist(),
               "linear": self.linear.tolist(), "constant": self.constant}
        if self.minimizer is not None:
            cfg["minimizer"] = self.minimizer.tolist()
        return cfg


def objective_from_config(cfg: dict):
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise InvalidConfig(f"objective config needs a 'kind' key: {cfg!r}")
    kind = cfg["kind"]
    if kind == "weighted_one_norm":
        return WeightedOneNorm(np.asarray(cfg["center"], dtype=float),
                               np.asarray(cfg["weights"], dtype=float))
    if kind == "quadratic":
        minimizer = cfg.get("minimizer")
        return QuadraticForm(np.asarray(cfg["matrix"], dtype=float),
                             np.asarray(cfg["linear"], dtype=float),
                             float(cfg.get("constant", 0.0)),
                             None if minimizer is None else np.asarray(minimizer, dtype=float))
    raise InvalidConfig(f"unknown objective kind {kind!r}")


# --- problem families -------------------------------------------------------


@dataclass(frozen=True)
class ZeroProblem:
    """f == 0; every point of Fix(T) is an equilibrium."""

    dim: int

    def eval(self, x, y) -> float:
        as_vector(x, self.dim), as_vector(y, self.dim)
        return 0.0

    def eval_first_batch(self, Y: np.ndarray, x) -> np.ndarray:
        return np.zeros(Y.shape[0])

    def subgradient(self, y_fixed, x) -> np.ndarray:
        as_vector(y_fixed, self.dim)
        return np.zeros(self.dim)

    def first_arg_lipschitz(self, radius: float, x) -> float:
        return 0.0

    def to_config(self) -> dict:
        return {"family": "zero", "dim": self.dim}


@dataclass(frozen=True)
class ConvexMinimizationProblem:
    """f(x, y) = h(y) - h(x); equilibria over C are the minimizers of h on C."""

    objective: object

    @property
    def dim(self) -> int:
        return self.objective.dim

    def eval(self, x, y) -> float:
        return self.objective.value(y) - self.objective.value(x)

    def eval_first_batch(self, Y: np.ndarray, x) -> np.ndarray:
        # f(Y_i, x) = h(x) - h(Y_i)
        return self.objective.value(x) - self.objective.value_batch(Y)

    def subgradient(self, y_fixed, x) -> np.ndarray:
        as_vector(y_fixed, self.dim)
        return self.objective.subgradient(x)

    def first_arg_lipschitz(self, radius: float, x) -> float:
        return self.objective.lipschitz(radius)

    def to_config(self) -> dict:
        return {"family": "convex_min", "h": self.objective.to_config()}


@dataclass(frozen=True)
class AffinePairedProblem:
    """f(x, y) = <c(x), y - x> with the affine map c(u) = matrix @ u + shift."""

    matrix: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        s = as_vector(self.shift)
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (s.shape[0], s.shape[0]):
            raise DimensionMismatch("affine map matrix shape must match the shift")
        m.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "shift", s)

    @classmethod
    def monotone_around(cls, matrix, root) -> "AffinePairedProblem":
        """c(u) = Q (u - root) with Q PSD: f(y, u) <= 0 for every y when u = root."""
        q = np.asarray(matrix, dtype=float)
        r = as_vector(root)
        return cls(q, -(q @ r))

    @property
    def dim(self) -> int:
        return self.shift.shape[0]

    def pairing(self, u) -> np.ndarray:
        return self.matrix @ as_vector(u, self.dim) + self.shift

    def eval(self, x, y) -> float:
        xv, yv = as_vector(x, self.dim), as_vector(y, self.dim)
        return float(self.pairing(xv) @ (yv - xv))

    def eval_first_batch(self, Y: np.ndarray, x) -> np.ndarray:
        xv = as_vector(x, self.dim)
        C = Y @ self.matrix.T + self.shift
        return np.einsum("ij,ij->i", C, xv - Y)

    def subgradient(self, y_fixed, x) -> np.ndarray:
        as_vector(x, self.dim)
        return self.pairing(y_fixed)

    def first_arg_lipschitz(self, radius: float, x) -> float:
        a = float(np.linalg.norm(self.matrix, 2))
        xn = float(np.linalg.norm(as_vector(x, self.dim)))
        return a * (xn + 2.0 * radius) + float(np.linalg.norm(self.shift))

    def to_config(self) -> dict:
        return {"family": "affine_paired", "matrix": self.matrix.tolist(),
                "shift": self.shift.tolist()}


def problem_from_config(cfg: dict):
    if not isinstance(cfg, dict) or "family" not in cfg:
        raise InvalidConfig(f"problem config needs a 'family' key: {cfg!r}")
    fam = cfg["family"]
    if fam == "zero":
        return ZeroProblem(int(cfg["dim"]))
    if fam == "convex_min":
        return ConvexMinimizationProblem(objective_from_config(cfg["h"]))
    if fam == "affine_paired":
        return AffinePairedProblem(np.asarray(cfg["matrix"], dtype=float),
                                   np.asarray(cfg["shift"], dtype=float))
    raise InvalidConfig(f"unknown problem family {fam!r}")


# --- module-level operations -------------------------------------------------


def evaluate(problem, x, y) -> float:
    """f(x, y); exactly 0.0 when x is y evaluated through the same path."""
    return problem.eval(x, y)


def subgradient(problem, y_fixed, x) -> np.ndarray:
    """An element of the subdifferential of f(y_fixed, .) at x (0 at kinks)."""
    return problem.subgradient(y_fixed, x)


# --- certified ball maximization ---------------------------------------------


def _concave_quadratic_ball_max(H: np.ndarray, c: np.ndarray, radius: float) -> np.ndarray:
    """argmax of -0.5 y'Hy + c'y over ||y|| <= radius, H symmetric PSD.

    Eigendecompose and either take the interior stationary point or solve
    ||(H + mu I)^-1 c|| = radius for mu > 0 by bisection (monotone in mu).
    """
    w, V = np.linalg.eigh(H)
    w = np.maximum(w, 0.0)
    ct = V.T @ c

    def y_of(mu: float) -> np.ndarray:
        return ct / (w + mu)

    pos = w > 1e-14 * max(1.0, w.max(initial=0.0))
    if np.all(np.abs(ct[~pos]) <= 1e-300):
        interior = np.zeros_like(ct)
        interior[pos] = ct[pos] / w[pos]
        if float(np.linalg.norm(interior)) <= radius:
            return V @ interior
    cn = float(np.linalg.norm(c))
    if cn == 0.0:
        return np.zeros_like(c)
    lo, hi = 0.0, cn / radius + 1e-30
    # ||y(hi)|| <= ||c||/hi <= radius; shrink the bracket to machine precision
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if float(np.linalg.norm(y_of(mid))) > radius:
            lo = mid
        else:
            hi = mid
    return V @ y_of(hi)


def _fw_gap(grad: np.ndarray, y: np.ndarray, radius: float) -> float:
    """max over the ball of <grad, u - y>: certifies optimality when ~0."""
    return radius * float(np.linalg.norm(grad)) - float(grad @ y)


def _grid_spacing(eps: float, lipschitz: float, dim: int,
                  modulus: Counterfunction | None) -> float:
    """Grid step whose covering radius keeps the value error at most eps."""
    if modulus is not None:
        k = max(0, math.ceil(1.0 / eps) - 1)
        delta = 1.0 / (modulus(k) + 1)
    else:
        if lipschitz <= 0.0:
            return math.inf
        delta = eps / lipschitz
    # covering radius of an axis grid with step s is s*sqrt(dim)/2 <= delta
    return delta / math.sqrt(dim)


def _grid_max(problem, x: np.ndarray, radius: float, eps: float,
              modulus: Counterfunction | None) -> tuple[np.ndarray, float]:
    dim = x.shape[0]
    if dim > GRID_MAX_DIM:
        raise OracleFailure(f"grid strategy supports dimension <= {GRID_MAX_DIM}, got {dim}")
    if eps <= 0.0:
        raise OracleFailure("grid strategy cannot certify eps = 0")
    lip = problem.first_arg_lipschitz(radius, x)
    step = _grid_spacing(eps, lip, dim, modulus)
    if step == math.inf:
        return x.copy(), float(problem.eval_first_batch(x[None, :], x)[0])
    per_axis = int(math.ceil(2.0 * radius / step)) + 1
    if per_axis ** dim > GRID_MAX_POINTS:
        raise OracleFailure(
            f"grid needs {per_axis}^{dim} points, past the {GRID_MAX_POINTS} cap")
    axes = [np.linspace(-radius, radius, per_axis) for _ in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    # clamp grid points into the ball; projection is nonexpansive so the
    # covering radius does not grow
    norms = np.linalg.norm(pts, axis=1)
    outside = norms > radius
    pts[outside] *= (radius / norms[outside])[:, None]
    vals = problem.eval_first_batch(pts, x)
    best = int(np.argmax(vals))  # first occurrence = lexicographically smallest
    return pts[best].copy(), float(vals[best])


def approx_max(problem, x, radius: float, eps: float,
               strategy: str = "auto",
               modulus: Counterfunction | None = None) -> tuple[np.ndarray, float]:
    """Maximize y -> f(y, x) over the ball ||y|| <= radius with certified gap.

    Returns (y, f(y, x)) with  max_{||u|| <= radius} f(u, x) <= f(y, x) + eps
    and f(y, x) >= 0 (x itself is always a candidate, f(x, x) = 0).

    Parameters
    ----------
    strategy : "auto" picks the cheapest certified route per family;
        "grid" forces the uniform grid; "exact" demands a closed form.
    modulus : optional counterfunction sigma so that moving the first
        argument by at most 1/(sigma(k)+1) changes f by at most 1/(k+1);
        replaces the internally derived Lipschitz spacing for the grid.

    Raises
    ------
    OracleFailure
        when ||x|| > radius, or no strategy can certify the eps-gap
        (for instance eps = 0 with the grid strategy).
    """
    xv = as_vector(x, problem.dim)
    if eps < 0.0:
        raise InvalidConfig("eps must be nonnegative")
    if float(np.linalg.norm(xv)) > radius:
        raise OracleFailure("query point lies outside the search ball")
    if strategy not in ("auto", "grid", "exact"):
        raise InvalidConfig(f"unknown approx_max strategy {strategy!r}")

    if strategy == "grid":
        y, val = _grid_max(problem, xv, radius, eps, modulus)
        return _keep_nonnegative(problem, xv, y, val)

    if isinstance(problem, ZeroProblem):
        return xv.copy(), 0.0

    if isinstance(problem, ConvexMinimizationProblem):
        h = problem.objective
        zmin = h.known_minimizer()
        if zmin is not None and float(np.linalg.norm(zmin)) <= radius:
            # global minimizer inside the ball: exact answer, gap 0
            val = float(problem.eval_first_batch(zmin[None, :], xv)[0])
            return _keep_nonnegative(problem, xv, zmin, val)
        if strategy == "exact":
            raise OracleFailure("no closed form: objective minimizer unknown or outside the ball")
        if isinstance(h, QuadraticForm):
            # minimize h over the ball == maximize -h; certify by the
            # linear-maximization gap at the solution
            y = _concave_quadratic_ball_max(h.matrix, -h.linear, radius)
            gap = _fw_gap(-h.subgradient(y), y, radius)
            if gap <= eps:
                val = float(problem.eval_first_batch(y[None, :], xv)[0])
                return _keep_nonnegative(problem, xv, y, val)
            raise OracleFailure(f"ball solve certified gap {gap:.3e} > eps {eps:.3e}")
        y, val = _grid_max(problem, xv, radius, eps, modulus)
        return _keep_nonnegative(problem, xv, y, val)

    if isinstance(problem, AffinePairedProblem):
        if strategy == "exact":
            raise OracleFailure("affine-paired family has no closed-form ball maximizer")
        H = problem.matrix + problem.matrix.T
        if float(np.linalg.eigvalsh(H).min()) >= -1e-10:
            # concave in y: maximize <Ay + d, x - y> exactly
            c = problem.matrix.T @ xv - problem.shift
            y = _concave_quadratic_ball_max(H, c, radius)
            grad = c - H @ y
            gap = _fw_gap(grad, y, radius)
            if gap <= eps:
                val = float(problem.eval_first_batch(y[None, :], xv)[0])
                return _keep_nonnegative(problem, xv, y, val)
            raise OracleFailure(f"ball solve certified gap {gap:.3e} > eps {eps:.3e}")
        y, val = _grid_max(problem, xv, radius, eps, modulus)
        return _keep_nonnegative(problem, xv, y, val)

    raise InvalidConfig(f"unsupported problem type {type(problem).__name__}")


def _keep_nonnegative(problem, x: np.ndarray, y: np.ndarray,
                      val: float) -> tuple[np.ndarray, float]:
    """Return the better of the candidate and x itself; f(x, x) = 0 exactly."""
    if val >= 0.0:
        return y, val
    return x.copy(), 0.0


# --- axiom validation --------------------------------------------------------


@dataclass(frozen=True)
class AxiomReport:
    """Sampled worst-case deviations from the bifunction axioms."""

    reflexivity_worst: float
    convexity_worst: float
    continuity_worst: float
    samples: int
    tol: float

    @property
    def passed(self) -> bool:
        return (self.reflexivity_worst <= self.tol
                and self.convexity_worst <= self.tol)


def validate_axioms(problem, samples: int = 200, side: float = 4.0,
                    seed: int = 0, tol: float = 1e-9) -> AxiomReport:
    """Sample f(x,x) = 0, midpoint convexity of f(x,.), continuity of f(.,y).

    Continuity is probed as the change of f under a 1e-6 perturbation of
    the first argument (reported, not thresholded: any finite bifunction
    built from the shipped families is continuous).
    """
    rng = np.random.default_rng(seed)
    dim = problem.dim
    half = side / 2.0
    worst_refl = 0.0
    worst_conv = 0.0
    worst_cont = 0.0
    for _ in range(samples):
        x = rng.uniform(-half, half, dim)
        y1 = rng.uniform(-half, half, dim)
        y2 = rng.uniform(-half, half, dim)
        worst_refl = max(worst_refl, abs(problem.eval(x, x)))
        mid = problem.eval(x, 0.5 * (y1 + y2))
        avg = 0.5 * (problem.eval(x, y1) + problem.eval(x, y2))
        worst_conv = max(worst_conv, mid - avg)
        dx = rng.normal(size=dim)
        dx *= 1e-6 / max(1e-300, float(np.linalg.norm(dx)))
        worst_cont = max(worst_cont, abs(problem.eval(x + dx, y1) - problem.eval(x, y1)))
    return AxiomReport(worst_refl, worst_conv, worst_cont, samples, tol)
