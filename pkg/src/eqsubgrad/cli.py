"""Config-driven command line front end.

Subcommands:
  solve   run the iteration from a JSON config, dump the trajectory CSV
  rates   print every certified bound computable from the config
  verify  run the iteration plus the full check suite, emit a report

Exit codes: 0 success (skipped checks allowed), 1 at least one check
failed, 2 configuration error, 3 oracle failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import rates as rates_mod
from . import verify as verify_mod
from .config import RunSetup, load_setup, require_run
from .counterfunctions import Counterfunction
from .equilibrium import validate_axioms
from .errors import (DimensionMismatch, HorizonExceeded, InvalidConfig,
                     InvalidRange, OracleFailure, SizeOverflow, Undecided)
from .exact import Enclosure, decimal_digits, format_fraction
from .operators import check_firm, sample_pairs
from .regularity import OmegaContext
from .solver import Trajectory, run

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_ORACLE = 3

PRINT_DIGIT_LIMIT = 10 ** 3

CHECK_NAMES = ("axioms", "operator", "step", "fejer", "metastability",
               "approx_point", "regularity", "uniform_closedness")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (InvalidConfig, InvalidRange, DimensionMismatch, Undecided) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleFailure as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqsubgrad",
        description="Subgradient-type equilibrium solver with certified rational "
                    "bounds and an empirical verification suite.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the iteration, dump trajectory CSV")
    p_solve.add_argument("--config", required=True, help="JSON run config")
    p_solve.add_argument("--out", default=None, metavar="DIR",
                         help="directory for trajectory.csv")
    p_solve.set_defaults(handler=_cmd_solve)

    p_rates = sub.add_parser("rates", help="print the certified bound table")
    p_rates.add_argument("--config", required=True)
    p_rates.add_argument("--k", type=int, default=0, help="accuracy level (default 0)")
    p_rates.add_argument("--g", default=None, metavar="FAMILY:PARAMS",
                         help="counterfunction, e.g. constant:2 or affine:1,0")
    p_rates.add_argument("--cap", type=int, default=None, metavar="DIGITS",
                         help="digit budget for the recursive rate (default 10^6)")
    p_rates.set_defaults(handler=_cmd_rates)

    p_verify = sub.add_parser("verify", help="run the iteration and all checks")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--checks", default=None,
                          help="comma-separated subset of: " + ",".join(CHECK_NAMES))
    p_verify.add_argument("--k", type=int, default=2, help="accuracy level (default 2)")
    p_verify.add_argument("--g", default=None, metavar="FAMILY:PARAMS")
    p_verify.add_argument("--cap", type=int, default=None, metavar="DIGITS",
                          help="feasibility cap: skip checks whose bound exceeds "
                               "10^DIGITS (default from config, 10^6)")
    p_verify.add_argument("--seed", type=int, default=None,
                          help="sampling seed (default from config)")
    p_verify.add_argument("--out", default=None, metavar="DIR",
                          help="directory for trajectory.csv, report.csv, report.json")
    p_verify.add_argument("--trajectory", default=None, metavar="CSV",
                          help="verify this recorded trajectory instead of running")
    p_verify.set_defaults(handler=_cmd_verify)
    return parser


# --- solve ---------------------------------------------------------------------


def _cmd_solve(args) -> int:
    setup = require_run(load_setup(args.config))
    try:
        traj = run(setup.problem, setup.operator, setup.solver, setup.x0,
                   perturb=setup.perturb)
    except OracleFailure as exc:
        partial = getattr(exc, "partial", None)
        if args.out and partial is not None and len(partial) > 0:
            path = _out_path(args.out, "trajectory.csv")
            partial.write_csv(path)
            print(f"partial trajectory ({len(partial)} records) kept at {path}",
                  file=sys.stderr)
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    _print_run_summary(traj)
    if args.out:
        path = _out_path(args.out, "trajectory.csv")
        traj.write_csv(path)
        print(f"trajectory_csv = {path}")
    return EXIT_OK


def _print_run_summary(traj: Trajectory) -> None:
    last = traj[-1]
    print(f"steps = {len(traj) - 1}")
    print("final_x = " + " ".join(f"{v:.17g}" for v in last.x))
    print(f"final_rho = {last.rho:.17g}")
    tail = traj.fvals()[-5:]
    print("fval_tail = " + " ".join(f"{v:.17g}" for v in tail))


def _out_path(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


# --- rates ---------------------------------------------------------------------


def _fmt_nat(value: int) -> str:
    d = decimal_digits(value)
    if d <= PRINT_DIGIT_LIMIT:
        return str(value)
    return f"[{d} digits]"


def _fmt_bound(bound) -> str:
    return _fmt_nat(bound.value)


def _decimal_directed(x, places: int, round_up: bool) -> str:
    """Exact decimal rendering of a Fraction, rounded toward the safe side."""
    num, den = x.numerator * 10 ** places, x.denominator
    scaled = -((-num) // den) if round_up else num // den
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    whole, frac = digits[:-places], digits[-places:].rstrip("0")
    return sign + whole + ("." + frac if frac else "")


def _fmt_enclosure(enc: Enclosure, places: int = 15) -> str:
    if enc.is_point:
        return "= " + format_fraction(enc.lo)
    lo = _decimal_directed(enc.lo, places, round_up=False)
    hi = _decimal_directed(enc.hi, places, round_up=True)
    return f"in [{lo}, {hi}]"


def _cmd_rates(args) -> int:
    setup = load_setup(args.config)
    inputs = setup.inputs
    k = args.k
    if k < 0:
        raise InvalidConfig("--k must be a natural number")
    g = Counterfunction.parse(args.g) if args.g else setup.g
    budget = args.cap if args.cap is not None else rates_mod.DIGIT_BUDGET
    if budget <= 0:
        raise InvalidConfig("--cap must be a positive digit count")

    cons = rates_mod.constants(inputs)
    rows: list[tuple[str, str]] = [
        ("step_decrease_coefficient", "= " + format_fraction(cons.alpha)),
        ("growth_envelope", _fmt_enclosure(cons.beta)),
        ("iterate_envelope", f"= {cons.sigma}"),
        ("residual_envelope", _fmt_enclosure(cons.eta)),
    ]
    tag = f"(k={k}, g={g.describe()})"
    ktag = f"(k={k})"

    def _row(label: str, make) -> None:
        try:
            rows.append((label, "= " + _fmt_bound(make())))
        except SizeOverflow as exc:
            rows.append((label, f"= [overflow: {exc}]"))

    _row("monotone_metastability" + tag,
         lambda: rates_mod.monotone_metastability(k, g, inputs.c_u,
                                                  digit_budget=budget))
    _row("fval_metastability" + tag,
         lambda: rates_mod.fval_metastability(k, g, inputs, digit_budget=budget))
    _row("fix_residual_metastability" + tag,
         lambda: rates_mod.fix_residual_metastability(k, g, inputs,
                                                      digit_budget=budget))
    _row("approx_point_bound" + ktag,
         lambda: rates_mod.approx_point_bound(k, inputs))
    _row("total_boundedness" + ktag,
         lambda: rates_mod.total_boundedness_modulus(k, inputs))
    _row("metastability_rate" + tag,
         lambda: rates_mod.metastability_rate(k, g, inputs, digit_budget=budget))
    if setup.sigma_j is not None:
        delta_b, omega_b = rates_mod.uniform_closedness_moduli(k, setup.sigma_j)
        rows.append(("closedness_level" + ktag, "= " + _fmt_bound(delta_b)))
        rows.append(("closedness_reach" + ktag, "= " + _fmt_bound(omega_b)))
        _row("metastability_rate_uc" + tag,
             lambda: rates_mod.metastability_rate_uc(k, g, setup.sigma_j, inputs,
                                                     digit_budget=budget))
    if setup.psi is not None:
        _row("regularity_rate" + ktag,
             lambda: rates_mod.regularity_convergence_rate(k, setup.psi, inputs))

    width = max(len(label) for label, _ in rows)
    for label, value in rows:
        print(f"{label:<{width}} {value}")
    return EXIT_OK


# --- verify --------------------------------------------------------------------


def _cmd_verify(args) -> int:
    setup = load_setup(args.config)
    selected = _parse_checks(args.checks)
    k = args.k
    if k < 0:
        raise InvalidConfig("--k must be a natural number")
    g = Counterfunction.parse(args.g) if args.g else setup.g
    cap = 10 ** args.cap if args.cap is not None else setup.bound_cap
    seed = args.seed if args.seed is not None else setup.seed

    needs_traj = bool(selected - {"axioms", "operator"})
    traj = None
    if needs_traj:
        if args.trajectory:
            traj = Trajectory.read_csv(args.trajectory)
            traj.problem = setup.problem
            if setup.problem is None:
                raise InvalidConfig(
                    "verifying a recorded trajectory still needs 'problem' in config")
            if setup.operator is None:
                raise InvalidConfig(
                    "verifying a recorded trajectory still needs 'operator' in config")
        else:
            require_run(setup)
            try:
                traj = run(setup.problem, setup.operator, setup.solver, setup.x0,
                           perturb=setup.perturb)
            except OracleFailure as exc:
                partial = getattr(exc, "partial", None)
                if args.out and partial is not None and len(partial) > 0:
                    partial.write_csv(_out_path(args.out, "trajectory.csv"))
                raise

    reports = _run_checks(selected, setup, traj, k, g, cap, seed)
    merged = verify_mod.merge_reports(reports)

    for rep in merged:
        bits = [f"{rep.status:<7} {rep.check_id}"]
        if rep.worst_margin is not None:
            bits.append(f"margin={rep.worst_margin:.6g}")
        if rep.location is not None:
            bits.append(f"at={rep.location}")
        if rep.bound_digits is not None:
            bits.append(f"bound_digits={rep.bound_digits}")
        if rep.detail:
            bits.append(rep.detail)
        print("  ".join(bits))
    n_pass = sum(r.status == verify_mod.PASS for r in merged)
    n_fail = sum(r.status == verify_mod.FAIL for r in merged)
    n_skip = sum(r.status == verify_mod.SKIPPED for r in merged)
    print(f"result: {n_pass} pass, {n_fail} fail, {n_skip} skipped")

    if args.out:
        if traj is not None and not args.trajectory:
            traj.write_csv(_out_path(args.out, "trajectory.csv"))
        _write_report(merged, args.out)
    return EXIT_CHECK_FAILED if n_fail else EXIT_OK


def _parse_checks(text: str | None) -> set[str]:
    if text is None:
        return set(CHECK_NAMES)
    names = {part.strip() for part in text.split(",") if part.strip()}
    if not names:
        raise InvalidConfig("no checks selected")
    unknown = names - set(CHECK_NAMES)
    if unknown:
        raise InvalidConfig(
            f"unknown checks: {', '.join(sorted(unknown))}; "
            f"available: {', '.join(CHECK_NAMES)}")
    return names


def _write_report(reports, out_dir: str) -> None:
    csv_path = _out_path(out_dir, "report.csv")
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("check_id,status,worst_margin,location,bound_digits,detail\n")
        for r in reports:
            margin = "" if r.worst_margin is None else f"{r.worst_margin:.17g}"
            loc = "" if r.location is None else str(r.location)
            digits = "" if r.bound_digits is None else str(r.bound_digits)
            detail = r.detail.replace(",", ";").replace("\n", " ")
            fh.write(f"{r.check_id},{r.status},{margin},{loc},{digits},{detail}\n")
    json_path = _out_path(out_dir, "report.json")
    with open(json_path, "w", encoding="ascii", newline="\n") as fh:
        json.dump([r.to_dict() for r in reports], fh, sort_keys=True, indent=2)
        fh.write("\n")


def _skip(check_id: str, why: str) -> verify_mod.CheckReport:
    return verify_mod.CheckReport(check_id, verify_mod.SKIPPED, detail=why)


def _run_checks(selected: set[str], setup: RunSetup, traj, k: int,
                g: Counterfunction, cap: int, seed: int) -> list:
    inputs = setup.inputs
    reports: list = []
    ctx = None
    if traj is not None and setup.operator is not None:
        ctx = OmegaContext.from_trajectory(setup.operator, setup.problem, traj)

    if "axioms" in selected:
        if setup.problem is None:
            reports.append(_skip("axioms", "config has no problem"))
        else:
            rep = validate_axioms(setup.problem, seed=seed)
            worst = max(rep.reflexivity_worst, rep.convexity_worst)
            status = verify_mod.PASS if rep.passed else verify_mod.FAIL
            reports.append(verify_mod.CheckReport(
                "axioms", status, worst, None,
                f"samples={rep.samples}, continuity_probe={rep.continuity_worst:.3g}"))

    if "operator" in selected:
        if setup.operator is None:
            reports.append(_skip("operator_firmness", "config has no operator"))
        else:
            rng = np.random.default_rng(seed)
            pairs = sample_pairs(setup.dimension, 1000, 4.0, rng)
            rep = check_firm(setup.operator, pairs)
            status = verify_mod.PASS if rep.passed else verify_mod.FAIL
            reports.append(verify_mod.CheckReport(
                "operator_firmness", status, rep.worst_violation, rep.worst_index,
                f"samples={rep.samples}"))

    if "step" in selected:
        if setup.u is None:
            reports.append(_skip("step_inequalities", "config has no u"))
        else:
            reports.extend(verify_mod.check_step_inequalities(
                traj, setup.u, setup.operator, inputs))

    if "fejer" in selected:
        if setup.u is None:
            reports.append(_skip("fejer_modulus", "config has no u"))
        else:
            candidates = [setup.u, traj[-1].x]
            try:
                reports.append(verify_mod.check_fejer_modulus(
                    traj, ctx, inputs, n=0, m=2, r=0, candidates=candidates))
            except HorizonExceeded as exc:
                reports.append(_skip("fejer_modulus(n=0,m=2,r=0)", str(exc)))

    if "metastability" in selected:
        reports.extend(_metastability_checks(setup, traj, k, g, cap))

    if "approx_point" in selected:
        reports.append(verify_mod.check_approx_point_bound(
            traj, ctx, k, inputs, cap=cap))

    if "regularity" in selected:
        if setup.x_star is None or setup.psi is None:
            reports.append(_skip(f"regularity_rate(k<={k})",
                                 "config has no x_star or no psi"))
        else:
            reports.append(verify_mod.check_regularity_rate(
                traj, setup.x_star, k, setup.psi, inputs, cap=cap))

    if "uniform_closedness" in selected:
        if setup.sigma_j is None:
            reports.append(_skip(f"uniform_closedness(k={k})", "config has no sigma_j"))
        else:
            pairs = _closedness_pairs(setup, traj, k, seed)
            reports.append(verify_mod.check_uniform_closedness(
                ctx, k, setup.sigma_j, pairs))
    return reports


def _metastability_checks(setup: RunSetup, traj, k: int, g: Counterfunction,
                          cap: int) -> list:
    inputs = setup.inputs
    out: list = []

    def guarded(quantity: str, make_bound, **kw):
        try:
            bound = make_bound()
        except SizeOverflow as exc:
            out.append(_skip(f"metastability({quantity},k={k},g={g.describe()})",
                             str(exc)))
            return
        out.append(verify_mod.witness_search_metastability(
            traj, k, g, bound, quantity, cap=cap, **kw))

    guarded("fvals",
            lambda: rates_mod.fval_metastability(k * k + 2 * k, g, inputs))
    guarded("fix_residuals",
            lambda: rates_mod.fix_residual_metastability(k, g, inputs),
            operator=setup.operator)
    if setup.u is not None:
        guarded("norm_sq_to_u",
                lambda: rates_mod.monotone_metastability(k, g, inputs.c_u),
                u=setup.u)
    else:
        out.append(_skip(f"metastability(norm_sq_to_u,k={k},g={g.describe()})",
                         "config has no u"))
    guarded("points",
            lambda: rates_mod.metastability_rate(k, g, inputs))
    return out


def _closedness_pairs(setup: RunSetup, traj, k: int, seed: int) -> list:
    """Deterministic premise candidates: near-solution base points nudged by
    random directions scaled to the admissible reach."""
    _, omega_b = rates_mod.uniform_closedness_moduli(k, setup.sigma_j)
    reach = 1.0 / (omega_b.value + 1)
    rng = np.random.default_rng(seed)
    bases = []
    if setup.u is not None:
        bases.append(np.asarray(setup.u, dtype=float))
    bases.append(traj[-1].x)
    pairs = []
    for base in bases:
        for t in (0.0, 0.5, 1.0):
            for _ in range(4):
                direction = rng.standard_normal(setup.dimension)
                norm = float(np.linalg.norm(direction))
                if norm == 0.0:
                    continue
                direction /= norm
                pairs.append((base, base + t * reach * direction))
    return pairs


if __name__ == "__main__":
    sys.exit(main())
