"""Empirical verification of the per-step inequalities and certified bounds.

Every check confronts a statement with a recorded trajectory and reports
pass / fail / skipped with the worst margin and its location.  A check is
skipped (never passed) when its bound exceeds the feasibility cap or the
trajectory is too short to settle it; a witness found below a bound is
accepted as a pass regardless of trajectory length, since the witness
certifies the existential claim on its own.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rates
from .counterfunctions import Counterfunction
from .errors import HorizonExceeded
from .exact import DEFAULT_BITS
from .operators import as_vector, fix_residual
from .rates import Bound, RateInputs
from .regularity import OmegaContext, omega_prime_member
from .solver import Trajectory

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"

DEFAULT_TOL = 1e-9
MEMBERSHIP_DEFAULT = 1e-12
FEASIBILITY_CAP = 10 ** 6
SCAN_BUDGET = 10 ** 9  # pairwise-distance evaluations per witness scan

QUANTITIES = ("fvals", "fix_residuals", "norm_sq_to_u", "points")


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one named check."""

    check_id: str
    status: str
    worst_margin: float | None = None
    location: int | None = None
    detail: str = ""
    bound_digits: int | None = None

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {"check_id": self.check_id, "status": self.status,
                "worst_margin": self.worst_margin, "location": self.location,
                "detail": self.detail, "bound_digits": self.bound_digits}


def merge_reports(reports) -> list[CheckReport]:
    """Deterministic order: by check id."""
    return sorted(reports, key=lambda r: r.check_id)


def _worst(track: dict, margin: float, n: int) -> None:
    if track["margin"] is None or margin > track["margin"]:
        track["margin"] = margin
        track["n"] = n


def _report_from(check_id: str, track: dict, tol: float,
                 detail: str = "") -> CheckReport:
    if track["margin"] is None:
        return CheckReport(check_id, SKIPPED, detail=detail or "no data points")
    ok = track["margin"] <= tol
    return CheckReport(check_id, PASS if ok else FAIL, track["margin"],
                       track["n"], detail)


# --- per-step inequalities ------------------------------------------------------


def check_step_inequalities(traj: Trajectory, u, operator,
                            inputs: RateInputs,
                            tol: float = DEFAULT_TOL) -> list[CheckReport]:
    """All per-step inequalities against a certified reference point u.

    u must belong to Fix(T) and satisfy f(y_n, u) <= 0 for every recorded
    query point (analytically known per instance); that membership is
    itself re-checked and reported.
    """
    uv = as_vector(u, traj.dim)
    a_f, b_f = float(inputs.a), float(inputs.b)
    m_f, e_f = float(inputs.M), float(inputs.e)
    alpha_f = float(inputs.alpha)
    xs, fvals, lams = traj.xs(), traj.fvals(), traj.lams()
    xis = traj.xis()
    dist_sq = np.sum((xs - uv) ** 2, axis=1)

    tracks = {cid: {"margin": None, "n": None} for cid in (
        "fejer_monotone", "fejer_sharper", "decrease_lower", "step_jump",
        "residual_transfer", "subgradient_norm", "fval_upper", "omega_membership")}

    # reference-point membership: fixed under T, all oracle constraints <= 0
    _worst(tracks["omega_membership"], fix_residual(operator, uv), -1)
    for rec in traj.records:
        fyu = traj_problem_eval(traj, rec.y, uv)
        _worst(tracks["omega_membership"], fyu, rec.n)

    for n in range(len(traj) - 1):
        lam, f = float(lams[n]), float(fvals[n])
        drop = lam * (m_f * m_f * lam - 2.0) * f * f
        _worst(tracks["fejer_sharper"], dist_sq[n + 1] - (dist_sq[n] + drop), n)
        _worst(tracks["fejer_monotone"], dist_sq[n + 1] - dist_sq[n], n)
        delta = dist_sq[n] - dist_sq[n + 1]
        _worst(tracks["decrease_lower"], alpha_f * f * f - delta, n)
        jump = float(np.linalg.norm(xs[n] - xs[n + 1]))
        _worst(tracks["step_jump"],
               jump * jump - (delta + 2.0 * m_f * b_f * f * jump), n)
        res_next = fix_residual(operator, xs[n + 1])
        _worst(tracks["residual_transfer"], res_next - (jump + m_f * b_f * f), n)

    for n in range(len(traj)):
        _worst(tracks["subgradient_norm"], float(np.linalg.norm(xis[n])) - m_f, n)
        _worst(tracks["fval_upper"], float(fvals[n]) - e_f, n)

    return [_report_from(cid, tracks[cid], tol) for cid in tracks]


def traj_problem_eval(traj: Trajectory, y, u) -> float:
    """f(y, u) through the problem attached to the trajectory."""
    if traj.problem is None:
        raise ValueError("trajectory has no attached problem; set traj.problem first")
    return traj.problem.eval(y, u)


# --- uniform decrease modulus ------------------------------------------------------


def check_fejer_modulus(traj: Trajectory, ctx: OmegaContext,
                        inputs: RateInputs, n: int, m: int, r: int,
                        candidates, tol: float = DEFAULT_TOL,
                        bits: int = DEFAULT_BITS,
                        membership_tol: float = 0.0) -> CheckReport:
    """Distances to members of the chi(n,m,r)-th approximation set must grow
    by less than 1/(r+1) over the window [n, n+m]."""
    k = rates.fejer_modulus(n, m, r, inputs, bits).value
    check_id = f"fejer_modulus(n={n},m={m},r={r})"
    if k > ctx.horizon:
        raise HorizonExceeded(
            f"modulus level {k} exceeds recorded horizon {ctx.horizon}")
    if n + m >= len(traj):
        return CheckReport(check_id, SKIPPED,
                           detail=f"window [{n}, {n + m}] beyond trajectory")
    xs = traj.xs()
    track = {"margin": None, "n": None}
    members = 0
    for u in candidates:
        uv = as_vector(u, traj.dim)
        if not omega_prime_member(ctx, uv, k, tol=membership_tol):
            continue
        members += 1
        base = float(np.linalg.norm(xs[n] - uv))
        for step_l in range(m + 1):
            d = float(np.linalg.norm(xs[n + step_l] - uv))
            _worst(track, d - (base + 1.0 / (r + 1)), n + step_l)
    if members == 0:
        return CheckReport(check_id, SKIPPED,
                           detail="no candidate passed membership")
    rep = _report_from(check_id, track, tol)
    return CheckReport(check_id, rep.status, rep.worst_margin, rep.location,
                       f"members={members}, level={k}", None)


# --- metastability witness search --------------------------------------------------


def _window_ok(values: np.ndarray, xs: np.ndarray, quantity: str,
               lo: int, hi: int, threshold: float) -> bool:
    if quantity in ("fvals", "fix_residuals"):
        return bool(np.all(values[lo:hi + 1] < threshold))
    if quantity == "norm_sq_to_u":
        w = values[lo:hi + 1]
        return bool(w.max() - w.min() < threshold)
    w = xs[lo:hi + 1]
    for i in range(w.shape[0] - 1):
        if np.linalg.norm(w[i + 1:] - w[i], axis=1).max() > threshold:
            return False
    return True


def witness_search_metastability(traj: Trajectory, k: int, g: Counterfunction,
                                 bound: Bound, quantity: str,
                                 u=None, operator=None,
                                 cap: int = FEASIBILITY_CAP,
                                 start: int = 0) -> CheckReport:
    """Scan for the minimal n with the [n, n+g(n)] window stabilized.

    quantity selects the claim: 'fvals' and 'fix_residuals' need every
    window value strictly below 1/(k+1); 'norm_sq_to_u' needs the window
    oscillation of ||x_i - u||^2 strictly below 1/(k+1); 'points' needs
    all pairwise iterate distances at most 1/(k+1).
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; pick one of {QUANTITIES}")
    check_id = f"metastability({quantity},k={k},g={g.describe()})"
    if bound.value > cap:
        return CheckReport(check_id, SKIPPED, bound_digits=bound.digits,
                           detail=f"bound exceeds feasibility cap {cap}")
    xs = traj.xs()
    if quantity == "fvals":
        values = traj.fvals()
    elif quantity == "fix_residuals":
        if operator is None:
            raise ValueError("fix_residuals quantity needs the operator")
        values = np.array([fix_residual(operator, x) for x in xs])
    elif quantity == "norm_sq_to_u":
        if u is None:
            raise ValueError("norm_sq_to_u quantity needs the reference point u")
        uv = as_vector(u, traj.dim)
        values = np.sum((xs - uv) ** 2, axis=1)
    else:
        values = np.empty(0)

    threshold = 1.0 / (k + 1)
    horizon = len(traj) - 1
    budget = SCAN_BUDGET
    n = start
    while n <= bound.value:
        hi = n + g(n)
        if hi > horizon:
            break
        budget -= (g(n) + 1) ** 2 if quantity == "points" else (g(n) + 1)
        if budget < 0:
            return CheckReport(check_id, SKIPPED, bound_digits=bound.digits,
                               detail="scan budget exceeded before a verdict")
        if _window_ok(values, xs, quantity, n, hi, threshold):
            return CheckReport(check_id, PASS, None, n,
                               f"minimal witness {n} <= bound {bound.value}",
                               bound.digits)
        n += 1
    if n > bound.value:
        return CheckReport(check_id, FAIL, None, None,
                           f"no witness up to bound {bound.value}", bound.digits)
    return CheckReport(check_id, SKIPPED, bound_digits=bound.digits,
                       detail=(f"trajectory too short: scanned up to n={n - 1}, "
                               f"bound {bound.value} needs length {bound.value}+g"))


# --- approximate-point and regularity checks ---------------------------------------


def check_approx_point_bound(traj: Trajectory, ctx: OmegaContext, k: int,
                             inputs: RateInputs,
                             cap: int = FEASIBILITY_CAP,
                             tol: float = MEMBERSHIP_DEFAULT,
                             bits: int = DEFAULT_BITS) -> CheckReport:
    """Some iterate with index <= approx_point_bound(k) must belong to the
    k-th approximation set."""
    bound = rates.approx_point_bound(k, inputs, bits)
    check_id = f"approx_point(k={k})"
    if bound.value > cap:
        return CheckReport(check_id, SKIPPED, bound_digits=bound.digits,
                           detail=f"bound exceeds feasibility cap {cap}")
    if k > ctx.horizon:
        return CheckReport(check_id, SKIPPED, bound_digits=bound.digits,
                           detail=f"level {k} beyond recorded horizon {ctx.horizon}")
    xs = traj.xs()
    last = min(bound.value, len(traj) - 1)
    for n in range(last + 1):
        if omega_prime_member(ctx, xs[n], k, tol=tol):
            return CheckReport(check_id, PASS, None, n,
                               f"witness {n} <= bound {bound.value}", bound.digits)
    if len(traj) - 1 >= bound.value:
        return CheckReport(check_id, FAIL, None, None,
                           f"no member up to bound {bound.value}", bound.digits)
    return CheckReport(check_id, SKIPPED, bound_digits=bound.digits,
                       detail=f"trajectory shorter than bound {bound.value}")


def check_regularity_rate(traj: Trajectory, x_star, k_max: int, psi,
                          inputs: RateInputs,
                          cap: int = FEASIBILITY_CAP,
                          tol: float = 0.0,
                          bits: int = DEFAULT_BITS) -> CheckReport:
    """After the certified rate index, iterates stay within 1/(k+1) of the
    known limit, for every k <= k_max whose rate is checkable."""
    xv = as_vector(x_star, traj.dim)
    xs = traj.xs()
    dists = np.linalg.norm(xs - xv, axis=1)
    horizon = len(traj) - 1
    track = {"margin": None, "n": None}
    ran, skipped = 0, 0
    for k in range(k_max + 1):
        bound = rates.regularity_convergence_rate(k, psi, inputs, bits)
        if bound.value > cap or bound.value > horizon:
            skipped += 1
            continue
        ran += 1
        tail = dists[bound.value:]
        worst_i = int(np.argmax(tail)) + bound.value
        _worst(track, float(tail.max() - 1.0 / (k + 1)), worst_i)
    check_id = f"regularity_rate(k<={k_max})"
    if ran == 0:
        return CheckReport(check_id, SKIPPED,
                           detail=f"all {skipped} rates exceed cap or horizon")
    rep = _report_from(check_id, track, tol)
    return CheckReport(check_id, rep.status, rep.worst_margin, rep.location,
                       f"levels ran={ran}, skipped={skipped}")


# --- uniform closedness --------------------------------------------------------------


def check_uniform_closedness(ctx: OmegaContext, k: int, sigma_j,
                             pairs, tol: float = MEMBERSHIP_DEFAULT) -> CheckReport:
    """Members of the delta-level set drag nearby points (within 1/(omega+1))
    into the k-th level set.

    ``pairs`` yields (u_prime, u) candidates; pairs failing the premise
    (u_prime in the delta-set, ||u - u_prime|| <= 1/(omega+1)) are not
    counted.  Zero conclusion failures are required to pass.
    """
    delta_b, omega_b = rates.uniform_closedness_moduli(k, sigma_j)
    delta, omega = delta_b.value, omega_b.value
    check_id = f"uniform_closedness(k={k})"
    if delta > ctx.horizon:
        return CheckReport(check_id, SKIPPED,
                           detail=f"delta level {delta} beyond horizon {ctx.horizon}")
    reach = 1.0 / (omega + 1)
    used = 0
    failures = 0
    worst = {"margin": None, "n": None}
    for i, (u_prime, u) in enumerate(pairs):
        up = as_vector(u_prime, ctx.ys.shape[1])
        uv = as_vector(u, ctx.ys.shape[1])
        if float(np.linalg.norm(uv - up)) > reach:
            continue
        if not omega_prime_member(ctx, up, delta, tol=tol):
            continue
        used += 1
        if not omega_prime_member(ctx, uv, k, tol=tol):
            failures += 1
            _worst(worst, 1.0, i)
    if used == 0:
        return CheckReport(check_id, SKIPPED, detail="no pair satisfied the premise")
    status = PASS if failures == 0 else FAIL
    return CheckReport(check_id, status, float(failures), worst["n"],
                       f"premise pairs={used}, delta={delta}, omega={omega}")
