"""Approximation sets, the pointwise gap function, and modulus plumbing.

A run produces query points y_0, y_1, ... and a firmly nonexpansive T.
The k-th approximation set collects the points that are 1/(k+1)-fixed
under T and satisfy the first k+1 oracle constraints:

    member(x, k)  <=>  ||x - Tx|| <= 1/(k+1)  and
                       f(y_j, x) <= 1/(k+1) for all j <= k.

The sets are nested downward, and membership at every k characterizes
the solution set the iteration converges into.  G measures how badly the
oracle constraints fail (2 when already the 0-th level fails, 1/min
otherwise, 0 when no recorded level fails), and F = max(residual, G)
turns membership into a single scalar test:

    member(x, k)  <=>  F(x) <= 1/(k+1).

All evaluations here are float (they consume recorded trajectories);
everything is computed against a finite recorded horizon H, and values
that the truncation cannot settle carry an explicit flag.
"""

from __future__ import annotations

import math

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .counterfunctions import Counterfunction
from .errors import HorizonExceeded, Undecided
from .operators import as_vector, fix_residual

MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True)
class OmegaContext:
    """Operator + recorded query points + problem: all membership needs."""

    operator: object
    ys: np.ndarray
    problem: object

    def __post_init__(self):
        y = np.asarray(self.ys, dtype=float)
        if y.ndim != 2:
            raise ValueError("ys must be a (H+1, N) array of recorded query points")
        object.__setattr__(self, "ys", y)

    @property
    def horizon(self) -> int:
        return self.ys.shape[0] - 1

    @classmethod
    def from_trajectory(cls, operator, problem, traj) -> "OmegaContext":
        return cls(operator, traj.ys(), problem)


class MembershipProfile(NamedTuple):
    """Residual plus running maxima of the oracle constraints at a point."""

    residual: float
    prefix_max: np.ndarray  # prefix_max[k] = max_{j <= k} f(y_j, x)


def membership_profile(ctx: OmegaContext, x) -> MembershipProfile:
    """One pass of data from which every membership query below is answered."""
    xv = as_vector(x, ctx.ys.shape[1])
    fvals = ctx.problem.eval_first_batch(ctx.ys, xv)
    return MembershipProfile(fix_residual(ctx.operator, xv),
                             np.maximum.accumulate(fvals))


def _check_level(ctx: OmegaContext, k: int) -> None:
    if k < 0:
        raise ValueError("approximation level k is a natural")
    if k > ctx.horizon:
        raise HorizonExceeded(
            f"level {k} needs {k + 1} recorded query points, have {ctx.horizon + 1}")


def omega_prime_member(ctx: OmegaContext, x, k: int,
                       tol: float = MEMBERSHIP_TOL) -> bool:
    """Membership of x in the k-th approximation set (k <= horizon)."""
    _check_level(ctx, k)
    prof = membership_profile(ctx, x)
    thr = 1.0 / (k + 1) + tol
    return prof.residual <= thr and float(prof.prefix_max[k]) <= thr


def gamma_contains(ctx: OmegaContext, x, k: int) -> bool:
    """Whether level k is violated: some j <= k has f(y_j, x) > 1/(k+1).

    The violated-level set is upward closed, so its minimum summarizes it.
    """
    _check_level(ctx, k)
    prof = membership_profile(ctx, x)
    return float(prof.prefix_max[k]) > 1.0 / (k + 1)


class GValue(NamedTuple):
    value: float
    truncated: bool


class FValue(NamedTuple):
    value: float
    truncated: bool


def _gamma_min_from_profile(prof: MembershipProfile, horizon: int) -> int | None:
    thresholds = 1.0 / (np.arange(horizon + 1) + 1.0)
    hits = np.nonzero(prof.prefix_max > thresholds)[0]
    return int(hits[0]) if hits.size else None


def gamma_min(ctx: OmegaContext, x) -> int | None:
    """Least violated level within the horizon, None when no level fails."""
    return _gamma_min_from_profile(membership_profile(ctx, x), ctx.horizon)


def G_value(ctx: OmegaContext, x, strict: bool = False) -> GValue:
    """Scalar violation summary: 2, 1/min violated level, or 0.

    With no violated level up to the horizon the true value could still be
    positive (but at most 1/(horizon+1)); the result reports 0 with
    truncated=True then, or raises Undecided when strict.
    """
    kmin = gamma_min(ctx, x)
    if kmin is None:
        if strict:
            raise Undecided(
                f"no violated level up to horizon {ctx.horizon}; tail unknown")
        return GValue(0.0, True)
    if kmin == 0:
        return GValue(2.0, False)
    return GValue(1.0 / kmin, False)


def F_value(ctx: OmegaContext, x, strict: bool = False) -> FValue:
    """max(residual, G): membership at level k is exactly F <= 1/(k+1).

    Truncation can only hide a G contribution of at most 1/(horizon+1), so
    whenever the residual reaches that size F is settled despite the flag
    on G.
    """
    prof = membership_profile(ctx, x)
    kmin = _gamma_min_from_profile(prof, ctx.horizon)
    if kmin is None:
        g, g_trunc = 0.0, True
    elif kmin == 0:
        g, g_trunc = 2.0, False
    else:
        g, g_trunc = 1.0 / kmin, False
    truncated = g_trunc and prof.residual < 1.0 / (ctx.horizon + 1)
    if strict and truncated:
        raise Undecided(
            f"F undecided at horizon {ctx.horizon}: residual too small to dominate")
    return FValue(max(prof.residual, g), truncated)


# --- modulus conversions -------------------------------------------------------


@dataclass(frozen=True)
class RegularityModulus:
    """psi: accuracy -> level, certifying that members of the psi(eps)-th
    approximation set within `radius` of `center` lie within eps of a true
    equilibrium.

    The map is counterfunction-shaped: psi(eps) = shape(ceil(1/eps)), so it
    is nonincreasing as eps grows.
    """

    shape: Counterfunction
    radius: float = float("inf")
    center: np.ndarray | None = None

    def __call__(self, eps: Fraction) -> int:
        eps = Fraction(eps)
        if eps <= 0:
            raise ValueError("accuracy must be positive")
        return self.shape(math.ceil(1 / eps))

    def to_config(self) -> dict:
        return self.shape.to_config()


def psi_to_phi(psi):
    """Convert a level modulus into an accuracy transformer phi(eps) = 1/(psi(eps)+1)."""

    def phi(eps: Fraction) -> Fraction:
        return Fraction(1, psi(Fraction(eps)) + 1)

    return phi


def phi_to_psi_index(phi, eps: Fraction) -> int:
    """Back out the level index ceil(1/phi(eps)) an accuracy transformer encodes."""
    value = phi(Fraction(eps))
    if value <= 0:
        raise ValueError("phi must return positive accuracies")
    return math.ceil(1 / Fraction(value))
