"""Certificate semantics of the check layer.

The load-bearing rules: a bound past the feasibility cap is SKIPPED and
never passes; a found witness passes regardless of trajectory length; a
FAIL verdict requires the scan to have seen every index up to the bound
with a full window; anything else is SKIPPED.
"""

import numpy as np
import pytest
from fractions import Fraction as F

import eqsubgrad.verify as verify
from eqsubgrad.counterfunctions import Counterfunction, constant
from eqsubgrad.equilibrium import (ConvexMinimizationProblem,
                                   WeightedOneNorm, ZeroProblem)
from eqsubgrad.errors import HorizonExceeded
from eqsubgrad.operators import BoxProjection, Identity
from eqsubgrad.rates import Bound, RateInputs
from eqsubgrad.regularity import OmegaContext
from eqsubgrad.solver import SolverConfig, StepRecord, Trajectory, run
from eqsubgrad.verify import (FAIL, PASS, SKIPPED, CheckReport,
                              check_approx_point_bound, check_fejer_modulus,
                              check_regularity_rate, check_step_inequalities,
                              check_uniform_closedness, merge_reports,
                              witness_search_metastability)

C0, C1 = constant(0), constant(1)


def _std_inputs(**kw):
    base = dict(a=F(1, 2), b=F(1, 2), M=F(1), L=F(1), c_u=F(1), e=F(1),
                n_dim=1, tau=C0)
    base.update(kw)
    return RateInputs(**base)


def _abs_run(steps=30):
    problem = ConvexMinimizationProblem(WeightedOneNorm([0.0], [1.0]))
    cfg = SolverConfig.basic(0.5, 0.5, 1.0, steps)
    return run(problem, Identity(1), cfg, [1.0])


def _flat_traj(fvals, x=1.0):
    recs = [StepRecord(n, np.array([x]), np.array([0.0]), np.array([0.0]),
                       abs(x), 0.5, 0.0, fv) for n, fv in enumerate(fvals)]
    return Trajectory(recs)


# --- witness search ------------------------------------------------------------


def test_cap_rule_first():
    # a bound past the cap must come back SKIPPED even when the trajectory
    # would trivially produce a witness
    traj = _abs_run(10)
    rep = witness_search_metastability(traj, 0, C0, Bound(10 ** 100, "t"), "fvals")
    assert rep.status == SKIPPED
    assert not rep.passed
    assert rep.bound_digits == 101
    assert "feasibility cap" in rep.detail


def test_minimal_witness_found():
    traj = _abs_run(20)
    # f_n = 2^-n: first window [n, n+1] strictly below 1/3 starts at n = 2
    rep = witness_search_metastability(traj, 2, C1, Bound(24, "t"), "fvals")
    assert rep.status == PASS
    assert rep.location == 2
    assert "minimal witness 2 <= bound 24" in rep.detail


def test_witness_respects_start():
    traj = _abs_run(20)
    rep = witness_search_metastability(traj, 2, C1, Bound(24, "t"), "fvals",
                                       start=5)
    assert rep.status == PASS
    assert rep.location == 5


def test_pass_does_not_need_full_horizon():
    # bound far past the recorded length, witness well inside: PASS
    traj = _abs_run(20)
    rep = witness_search_metastability(traj, 2, C1, Bound(10 ** 5, "t"), "fvals")
    assert rep.status == PASS
    assert rep.location == 2


def test_fail_needs_every_window():
    traj = _flat_traj([1.0] * 7)
    rep = witness_search_metastability(traj, 0, C1, Bound(5, "t"), "fvals")
    assert rep.status == FAIL
    assert "no witness up to bound 5" in rep.detail


def test_short_trajectory_is_skipped_not_failed():
    traj = _flat_traj([1.0] * 4)
    rep = witness_search_metastability(traj, 0, C1, Bound(5, "t"), "fvals")
    assert rep.status == SKIPPED
    assert "too short" in rep.detail


def test_points_quantity():
    traj = _abs_run(20)
    # pairwise gaps: |x_n - x_{n+1}| = 2^-(n+1) <= 1/3 first holds at n = 1
    rep = witness_search_metastability(traj, 2, C1, Bound(24, "t"), "points")
    assert rep.status == PASS
    assert rep.location == 1


def test_norm_sq_and_residual_quantities():
    traj = _abs_run(20)
    rep = witness_search_metastability(traj, 2, C1, Bound(10, "t"),
                                       "norm_sq_to_u", u=[0.0])
    assert rep.status == PASS
    rep = witness_search_metastability(traj, 2, C1, Bound(10, "t"),
                                       "fix_residuals", operator=Identity(1))
    assert rep.status == PASS
    assert rep.location == 0  # identity: residuals are identically zero


def test_quantity_argument_validation():
    traj = _abs_run(5)
    with pytest.raises(ValueError):
        witness_search_metastability(traj, 0, C0, Bound(1, "t"), "speed")
    with pytest.raises(ValueError):
        witness_search_metastability(traj, 0, C0, Bound(1, "t"), "norm_sq_to_u")
    with pytest.raises(ValueError):
        witness_search_metastability(traj, 0, C0, Bound(1, "t"), "fix_residuals")


def test_scan_budget_skips(monkeypatch):
    monkeypatch.setattr(verify, "SCAN_BUDGET", 4)
    traj = _abs_run(20)
    rep = witness_search_metastability(traj, 2, C1, Bound(24, "t"), "fvals")
    assert rep.status == SKIPPED
    assert "scan budget" in rep.detail


# --- per-step inequalities --------------------------------------------------------


def test_step_inequalities_clean_run():
    traj = _abs_run(40)
    reports = check_step_inequalities(traj, [0.0], Identity(1), _std_inputs())
    assert len(reports) == 8
    assert all(r.status == PASS for r in reports)
    ids = {r.check_id for r in reports}
    assert ids == {"fejer_monotone", "fejer_sharper", "decrease_lower",
                   "step_jump", "residual_transfer", "subgradient_norm",
                   "fval_upper", "omega_membership"}


def test_step_inequalities_catch_perturbation():
    problem = ConvexMinimizationProblem(WeightedOneNorm([0.0], [1.0]))
    cfg = SolverConfig.basic(0.5, 0.5, 1.0, 12)
    traj = run(problem, Identity(1), cfg, [1.0],
               perturb={"step": 2, "delta": [10.0]})
    reports = {r.check_id: r for r in
               check_step_inequalities(traj, [0.0], Identity(1), _std_inputs())}
    assert reports["fejer_monotone"].status == FAIL
    assert reports["fejer_monotone"].location == 2
    assert reports["fejer_sharper"].status == FAIL
    assert reports["decrease_lower"].status == FAIL


def test_step_inequalities_flag_bad_reference():
    # u = 0.3 is no equilibrium of |.|: f(0, 0.3) = 0.3 > 0
    traj = _abs_run(10)
    reports = {r.check_id: r for r in
               check_step_inequalities(traj, [0.3], Identity(1), _std_inputs())}
    assert reports["omega_membership"].status == FAIL
    assert reports["omega_membership"].worst_margin == pytest.approx(0.3)


# --- uniform decrease modulus -------------------------------------------------------


def _abs_ctx_from(traj):
    return OmegaContext.from_trajectory(Identity(1), traj.problem, traj)


def test_fejer_modulus_check_passes():
    traj = _abs_run(80)
    ctx = _abs_ctx_from(traj)
    rep = check_fejer_modulus(traj, ctx, _std_inputs(), 0, 2, 0,
                              candidates=[[0.0], traj[-1].x])
    assert rep.status == PASS
    assert rep.detail == "members=2, level=23"


def test_fejer_modulus_no_members():
    traj = _abs_run(80)
    ctx = _abs_ctx_from(traj)
    rep = check_fejer_modulus(traj, ctx, _std_inputs(), 0, 2, 0,
                              candidates=[[5.0]])
    assert rep.status == SKIPPED
    assert "no candidate passed membership" in rep.detail


def test_fejer_modulus_horizon_guard():
    traj = _abs_run(10)
    ctx = _abs_ctx_from(traj)
    with pytest.raises(HorizonExceeded):
        check_fejer_modulus(traj, ctx, _std_inputs(), 0, 2, 5, candidates=[[0.0]])


def test_fejer_modulus_window_beyond_short_slice():
    full = _abs_run(80)
    ctx = _abs_ctx_from(full)
    short = Trajectory(full.records[:11], problem=full.problem)
    rep = check_fejer_modulus(short, ctx, _std_inputs(), 9, 2, 0,
                              candidates=[[0.0]])
    assert rep.status == SKIPPED
    assert "window [9, 11] beyond trajectory" in rep.detail


# --- approximate-point bound ---------------------------------------------------------


def test_approx_point_witness():
    traj = _abs_run(80)
    ctx = _abs_ctx_from(traj)
    rep = check_approx_point_bound(traj, ctx, 2, _std_inputs())
    assert rep.status == PASS
    assert rep.location == 2  # 2^-2 = 0.25 <= 1/3
    assert "bound 663555" in rep.detail


def test_approx_point_cap_and_horizon_skips():
    traj = _abs_run(80)
    ctx = _abs_ctx_from(traj)
    rep = check_approx_point_bound(traj, ctx, 2, _std_inputs(), cap=10)
    assert rep.status == SKIPPED
    assert "feasibility cap" in rep.detail

    tiny = _inputs_tiny()
    short_ctx = OmegaContext(Identity(1), np.zeros((3, 1)), traj.problem)
    rep = check_approx_point_bound(traj, short_ctx, 5, tiny)
    assert rep.status == SKIPPED
    assert "beyond recorded horizon" in rep.detail


def _inputs_tiny():
    # rescaled run: bounds collapse to single digits
    return RateInputs(F(1, 2), F(1, 2), F(1), F(1, 4000), F(1, 16000000),
                      F(1, 4000), 1, C0)


def test_approx_point_fail_when_no_member():
    tiny = _inputs_tiny()
    # bound is 2*1 + max(5,0) + 1 = 8; a stuck trajectory has no member
    traj = _flat_traj([1.0] * 12)
    traj.problem = ConvexMinimizationProblem(WeightedOneNorm([0.0], [1.0]))
    ctx = OmegaContext(Identity(1), np.zeros((8, 1)), traj.problem)
    rep = check_approx_point_bound(traj, ctx, 5, tiny)
    assert rep.status == FAIL
    assert "no member up to bound 8" in rep.detail


# --- regularity rate ------------------------------------------------------------------


def _psi(eps):
    import math
    return math.ceil(1 / eps)


def test_regularity_all_rates_infeasible():
    traj = _abs_run(30)
    rep = check_regularity_rate(traj, [0.0], 2, _psi, _std_inputs())
    assert rep.status == SKIPPED
    assert "all 3 rates exceed cap or horizon" in rep.detail


def test_regularity_pass_on_converged_run():
    # c_u = 0 collapses the rate to 2k + 4; a run parked on the limit passes
    inputs = _std_inputs(c_u=F(0), L=F(0), e=F(0))
    cfg = SolverConfig.basic(0.5, 0.5, 1.0, 15)
    traj = run(ZeroProblem(1), Identity(1), cfg, [0.7])
    rep = check_regularity_rate(traj, [0.7], 3, _psi, inputs)
    assert rep.status == PASS
    assert rep.detail == "levels ran=4, skipped=0"
    assert rep.worst_margin == pytest.approx(-0.25)  # largest 1/(k+1) is k=3


def test_regularity_fail_when_limit_wrong():
    inputs = _std_inputs(c_u=F(0), L=F(0), e=F(0))
    cfg = SolverConfig.basic(0.5, 0.5, 1.0, 15)
    traj = run(ZeroProblem(1), Identity(1), cfg, [0.7])
    rep = check_regularity_rate(traj, [1.7], 3, _psi, inputs)
    assert rep.status == FAIL
    assert rep.worst_margin == pytest.approx(1.0 - 0.25)


# --- uniform closedness ----------------------------------------------------------------


def test_uniform_closedness_passes():
    traj = _abs_run(30)
    ctx = _abs_ctx_from(traj)
    # k = 2: delta = 5, omega = 11, reach = 1/12
    pairs = [([0.1], [0.1 + 1.0 / 13.0]), ([0.0], [0.0]), ([0.15], [0.15])]
    rep = check_uniform_closedness(ctx, 2, Counterfunction(1, 0), pairs)
    assert rep.status == PASS
    assert "premise pairs=3, delta=5, omega=11" in rep.detail


def test_uniform_closedness_filters_premise():
    traj = _abs_run(30)
    ctx = _abs_ctx_from(traj)
    pairs = [([0.1], [0.5]),   # too far apart: 0.4 > 1/12
             ([2.0], [2.0])]   # u' fails delta-membership
    rep = check_uniform_closedness(ctx, 2, Counterfunction(1, 0), pairs)
    assert rep.status == SKIPPED
    assert "no pair satisfied the premise" in rep.detail


class _Cliff:
    """Discontinuous constraint: 0 inside |x| <= 1/6, else 10.

    Breaks the closedness premise, so the conclusion check must fail.
    """

    dim = 1

    def eval_first_batch(self, Y, x):
        bad = abs(float(x[0])) > 1.0 / 6.0
        return np.full(Y.shape[0], 10.0 if bad else 0.0)


def test_uniform_closedness_catches_violation():
    ctx = OmegaContext(Identity(1), np.zeros((31, 1)), _Cliff())
    pairs = [([0.1], [0.1 + 0.9 / 12.0])]  # premise holds, conclusion cannot
    rep = check_uniform_closedness(ctx, 2, Counterfunction(1, 0), pairs)
    assert rep.status == FAIL
    assert rep.worst_margin == 1.0  # one conclusion failure


def test_uniform_closedness_horizon_skip():
    ctx = OmegaContext(Identity(1), np.zeros((4, 1)),
                       ConvexMinimizationProblem(WeightedOneNorm([0.0], [1.0])))
    rep = check_uniform_closedness(ctx, 2, Counterfunction(1, 0),
                                   [([0.0], [0.0])])
    assert rep.status == SKIPPED
    assert "delta level 5 beyond horizon 3" in rep.detail


# --- report plumbing --------------------------------------------------------------------


def test_merge_reports_sorts_by_id():
    reports = [CheckReport("zeta", PASS), CheckReport("alpha", FAIL),
               CheckReport("mid", SKIPPED)]
    merged = merge_reports(reports)
    assert [r.check_id for r in merged] == ["alpha", "mid", "zeta"]


def test_report_status_semantics():
    assert CheckReport("x", PASS).passed
    assert not CheckReport("x", FAIL).passed
    assert not CheckReport("x", SKIPPED).passed
    d = CheckReport("x", PASS, worst_margin=-0.5, location=3,
                    detail="d", bound_digits=2).to_dict()
    assert d == {"check_id": "x", "status": "pass", "worst_margin": -0.5,
                 "location": 3, "detail": "d", "bound_digits": 2}
