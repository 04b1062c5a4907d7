"""Euclidean vectors and firmly nonexpansive mappings.

A mapping T is firmly nonexpansive when

    ||Tx - Ty||^2  <=  <x - y, Tx - Ty>   for all x, y,

which implies nonexpansiveness and holds for every metric projection
onto a nonempty closed convex set.  Only variants that satisfy the
inequality by construction can be built here, and each one exposes an
analytically known fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidConfig


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate and convert to a finite 1-D float64 array."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise InvalidConfig("vector entries must be finite")
    return v


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


# --- nonexpansive building blocks (inner maps for HalfAveraged) -----------


@dataclass(frozen=True)
class PlaneRotation:
    """Rotation by `angle` in the (i, j) coordinate plane; an isometry.

    Fixed points: vectors with zero (i, j) components (for angle not a
    multiple of 2*pi), so the origin always works.
    """

    dim: int
    i: int
    j: int
    angle: float

    def __post_init__(self):
        if not (0 <= self.i < self.dim and 0 <= self.j < self.dim and self.i != self.j):
            raise InvalidConfig("plane rotation needs two distinct axes inside the dimension")

    def apply(self, x) -> np.ndarray:
        v = as_vector(x, self.dim).copy()
        c, s = np.cos(self.angle), np.sin(self.angle)
        vi, vj = v[self.i], v[self.j]
        v[self.i] = c * vi - s * vj
        v[self.j] = s * vi + c * vj
        return v

    def known_fixed_point(self) -> np.ndarray:
        return np.zeros(self.dim)

    def to_config(self) -> dict:
        return {"type": "plane_rotation", "dim": self.dim, "i": self.i,
                "j": self.j, "angle": self.angle}


@dataclass(frozen=True)
class PointReflection:
    """x -> 2p - x, the isometric reflection through p; Fix = {p}."""

    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", _frozen(as_vector(self.point)))

    @property
    def dim(self) -> int:
        return self.point.shape[0]

    def apply(self, x) -> np.ndarray:
        return 2.0 * self.point - as_vector(x, self.dim)

    def known_fixed_point(self) -> np.ndarray:
        return self.point.copy()

    def to_config(self) -> dict:
        return {"type": "point_reflection", "point": self.point.tolist()}


@dataclass(frozen=True)
class Scaling:
    """x -> center + factor*(x - center) with |factor| <= 1; Fix owns center."""

    center: np.ndarray
    factor: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(as_vector(self.center)))
        if abs(self.factor) > 1.0:
            raise InvalidConfig("scaling factor must satisfy |factor| <= 1 to stay nonexpansive")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def apply(self, x) -> np.ndarray:
        return self.center + self.factor * (as_vector(x, self.dim) - self.center)

    def known_fixed_point(self) -> np.ndarray:
        return self.center.copy()

    def to_config(self) -> dict:
        return {"type": "scaling", "center": self.center.tolist(), "factor": self.factor}


# --- firmly nonexpansive variants -----------------------------------------


@dataclass(frozen=True)
class Identity:
    dim: int

    def apply(self, x) -> np.ndarray:
        return as_vector(x, self.dim).copy()

    def known_fixed_point(self) -> np.ndarray:
        return np.zeros(self.dim)

    def to_config(self) -> dict:
        return {"type": "identity", "dim": self.dim}


@dataclass(frozen=True)
class BoxProjection:
    """Projection onto the box [lower, upper] (componentwise clamp)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower)
        hi = as_vector(self.upper, lo.shape[0])
        if np.any(lo > hi):
            raise InvalidConfig("box needs lower <= upper componentwise")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def apply(self, x) -> np.ndarray:
        return np.clip(as_vector(x, self.dim), self.lower, self.upper)

    def known_fixed_point(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def to_config(self) -> dict:
        return {"type": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True)
class BallProjection:
    """Projection onto the closed ball B(center, radius)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(as_vector(self.center)))
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise InvalidConfig("ball radius must be positive and finite")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def apply(self, x) -> np.ndarray:
        d = as_vector(x, self.dim) - self.center
        n = float(np.linalg.norm(d))
        if n <= self.radius:
            return self.center + d
        return self.center + d * (self.radius / n)

    def known_fixed_point(self) -> np.ndarray:
        return self.center.copy()

    def to_config(self) -> dict:
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class HalfspaceProjection:
    """Projection onto {v : <normal, v> <= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = as_vector(self.normal)
        if float(np.linalg.norm(n)) == 0.0:
            raise InvalidConfig("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", _frozen(n))

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def apply(self, x) -> np.ndarray:
        v = as_vector(x, self.dim)
        slack = float(self.normal @ v) - self.offset
        if slack <= 0.0:
            return v.copy()
        return v - self.normal * (slack / float(self.normal @ self.normal))

    def known_fixed_point(self) -> np.ndarray:
        # boundary point offset * a / ||a||^2 satisfies <a, x> = offset
        return self.normal * (self.offset / float(self.normal @ self.normal))

    def to_config(self) -> dict:
        return {"type": "halfspace", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True)
class AffineProjection:
    """Projection onto the affine set anchor + range(basis).

    basis holds orthonormal direction vectors as columns (N x k), so the
    projection is anchor + B B^T (x - anchor).  Use from_spanning() to
    orthonormalize an arbitrary spanning set first.
    """

    anchor: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        a = as_vector(self.anchor)
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise InvalidConfig("basis must be an (N x k) array matching the anchor dimension")
        if b.shape[1] > 0:
            gram = b.T @ b
            if not np.allclose(gram, np.eye(b.shape[1]), atol=1e-10):
                raise InvalidConfig("basis columns must be orthonormal (use from_spanning)")
        object.__setattr__(self, "anchor", _frozen(a))
        object.__setattr__(self, "basis", _frozen(b))

    @classmethod
    def from_spanning(cls, anchor, vectors) -> "AffineProjection":
        a = as_vector(anchor)
        m = np.asarray(vectors, dtype=float).reshape(-1, a.shape[0]).T
        q, r = np.linalg.qr(m)
        keep = np.abs(np.diag(r)) > 1e-12
        return cls(a, q[:, keep])

    @property
    def dim(self) -> int:
        return self.anchor.shape[0]

    def apply(self, x) -> np.ndarray:
        d = as_vector(x, self.dim) - self.anchor
        return self.anchor + self.basis @ (self.basis.T @ d)

    def known_fixed_point(self) -> np.ndarray:
        return self.anchor.copy()

    def to_config(self) -> dict:
        return {"type": "affine", "anchor": self.anchor.tolist(),
                "basis": self.basis.tolist()}


@dataclass(frozen=True)
class HalfAveraged:
    """T = (I + S)/2 for a nonexpansive S; firmly nonexpansive, Fix(T) = Fix(S)."""

    inner: object

    @property
    def dim(self) -> int:
        return self.inner.dim

    def apply(self, x) -> np.ndarray:
        v = as_vector(x, self.dim)
        return 0.5 * (v + self.inner.apply(v))

    def known_fixed_point(self) -> np.ndarray:
        return self.inner.known_fixed_point()

    def to_config(self) -> dict:
        return {"type": "half_averaged", "inner": self.inner.to_config()}


# --- module-level operations ----------------------------------------------


def apply(op, x) -> np.ndarray:
    return op.apply(x)


def fix_residual(op, x) -> float:
    """||x - Tx||, the distance-to-fixedness witness."""
    v = as_vector(x, getattr(op, "dim", None))
    return float(np.linalg.norm(v - op.apply(v)))


@dataclass(frozen=True)
class SampleReport:
    """Outcome of a sampled inequality check."""

    passed: bool
    worst_violation: float
    samples: int
    tol: float
    worst_index: int | None = None


def check_firm(op, pairs, tol: float = 1e-12) -> SampleReport:
    """Sample the firm nonexpansiveness inequality over (x, y) pairs.

    Violation at a pair: ||Tx - Ty||^2 - <x - y, Tx - Ty>.
    """
    worst = 0.0
    worst_i = None
    count = 0
    for i, (x, y) in enumerate(pairs):
        tx, ty = op.apply(x), op.apply(y)
        dt = tx - ty
        lhs = float(dt @ dt)
        rhs = float((as_vector(x) - as_vector(y)) @ dt)
        v = lhs - rhs
        if v > worst:
            worst, worst_i = v, i
        count += 1
    return SampleReport(worst <= tol, worst, count, tol, worst_i)


def check_nonexpansive(op, pairs, tol: float = 1e-12) -> SampleReport:
    """Sample ||Sx - Sy|| <= ||x - y|| over (x, y) pairs."""
    worst = 0.0
    worst_i = None
    count = 0
    for i, (x, y) in enumerate(pairs):
        v = float(np.linalg.norm(op.apply(x) - op.apply(y))
                  - np.linalg.norm(as_vector(x) - as_vector(y)))
        if v > worst:
            worst, worst_i = v, i
        count += 1
    return SampleReport(worst <= tol, worst, count, tol, worst_i)


def sample_pairs(dim: int, count: int, side: float, rng) -> list[tuple[np.ndarray, np.ndarray]]:
    """Uniform (x, y) pairs in the origin-centered box of the given side."""
    half = side / 2.0
    a = rng.uniform(-half, half, size=(count, dim))
    b = rng.uniform(-half, half, size=(count, dim))
    return [(a[i], b[i]) for i in range(count)]


_INNER_TYPES = {
    "plane_rotation": lambda c: PlaneRotation(c["dim"], c["i"], c["j"], c["angle"]),
    "point_reflection": lambda c: PointReflection(np.asarray(c["point"], dtype=float)),
    "scaling": lambda c: Scaling(np.asarray(c["center"], dtype=float), c["factor"]),
}


def op_from_config(cfg: dict):
    """Rebuild an operator from its to_config() dictionary."""
    if not isinstance(cfg, dict) or "type" not in cfg:
        raise InvalidConfig(f"operator config needs a 'type' key: {cfg!r}")
    t = cfg["type"]
    try:
        if t == "identity":
            return Identity(int(cfg["dim"]))
        if t == "box":
            return BoxProjection(cfg["lower"], cfg["upper"])
        if t == "ball":
            return BallProjection(cfg["center"], float(cfg["radius"]))
        if t == "halfspace":
            return HalfspaceProjection(cfg["normal"], float(cfg["offset"]))
        if t == "affine":
            return AffineProjection(cfg["anchor"], cfg["basis"])
        if t == "half_averaged":
            inner_cfg = cfg["inner"]
            it = inner_cfg.get("type")
            if it in _INNER_TYPES:
                return HalfAveraged(_INNER_TYPES[it](inner_cfg))
            return HalfAveraged(op_from_config(inner_cfg))
    except KeyError as exc:
        raise InvalidConfig(f"operator config {t!r} is missing key {exc}") from exc
    raise InvalidConfig(f"unknown operator type {t!r}")
