"""Bifunction families, the certified ball maximizer, and the axiom sampler.

The approx_max contract is checked against a brute-force grid oracle:
every grid point is feasible, so the grid maximum is a lower bound on
the true maximum and the certified gap must cover it.
"""

import numpy as np
import pytest

from eqsubgrad.counterfunctions import Counterfunction
from eqsubgrad.equilibrium import (AffinePairedProblem,
                                   ConvexMinimizationProblem, QuadraticForm,
                                   WeightedOneNorm, ZeroProblem, approx_max,
                                   evaluate, problem_from_config, subgradient,
                                   validate_axioms)
from eqsubgrad.errors import InvalidConfig, OracleFailure


def _abs_problem():
    return ConvexMinimizationProblem(WeightedOneNorm([0.0], [1.0]))


def _paired_identity():
    return AffinePairedProblem([[1.0]], [0.0])


# --- frozen evaluations -------------------------------------------------------


def test_convex_min_eval():
    assert evaluate(_abs_problem(), [2.0], [0.0]) == pytest.approx(-2.0)


def test_affine_paired_eval():
    # c(x) = x: f(1, 3) = <1, 3 - 1> = 2
    assert evaluate(_paired_identity(), [1.0], [3.0]) == pytest.approx(2.0)


def test_reflexivity_is_exact():
    rng = np.random.default_rng(0)
    problems = [_abs_problem(), _paired_identity(),
                ConvexMinimizationProblem(QuadraticForm.centered([[2.0]], [0.3]))]
    for p in problems:
        for _ in range(100):
            x = rng.uniform(-4, 4, 1)
            assert evaluate(p, x, x) == 0.0


def test_subgradient_values():
    p = _abs_problem()
    assert subgradient(p, [9.0], [2.0]) == pytest.approx([1.0])
    assert subgradient(p, [9.0], [-3.0]) == pytest.approx([-1.0])
    # least-norm selection on the kink
    assert subgradient(p, [9.0], [0.0]) == pytest.approx([0.0])
    assert subgradient(_paired_identity(), [5.0], [1.0]) == pytest.approx([5.0])


def test_subgradient_inequality():
    # f(y, z) >= f(y, x) + <xi, z - x> for xi in the subdifferential at x
    rng = np.random.default_rng(1)
    problems = [_abs_problem(), _paired_identity(),
                ConvexMinimizationProblem(WeightedOneNorm([0.5, -1.0], [1.0, 2.0])),
                AffinePairedProblem([[0.3, 0.1], [-0.1, 0.3]], [0.2, 0.0]),
                ConvexMinimizationProblem(QuadraticForm.centered(
                    [[2.0, 0.5], [0.5, 1.0]], [0.0, 0.0]))]
    for p in problems:
        d = p.dim
        for _ in range(1000):
            x, z, y = (rng.uniform(-4, 4, d) for _ in range(3))
            xi = subgradient(p, y, x)
            lhs = evaluate(p, y, z)
            rhs = evaluate(p, y, x) + float(xi @ (z - x))
            assert lhs >= rhs - 1e-10


def test_batch_matches_pointwise():
    rng = np.random.default_rng(2)
    for p in (_abs_problem(), _paired_identity()):
        x = rng.uniform(-2, 2, p.dim)
        Y = rng.uniform(-3, 3, (40, p.dim))
        batch = p.eval_first_batch(Y, x)
        for i in range(40):
            assert batch[i] == pytest.approx(evaluate(p, Y[i], x), abs=1e-12)


# --- approx_max oracle --------------------------------------------------------


def test_exact_route_absolute_value():
    y, val = approx_max(_abs_problem(), [1.0], 2.0, 0.0)
    assert y == pytest.approx([0.0])
    assert val == pytest.approx(1.0)


def test_zero_problem_maximizer():
    y, val = approx_max(ZeroProblem(2), [0.3, -0.4], 1.0, 0.0)
    assert val == 0.0
    assert y == pytest.approx([0.3, -0.4])


def test_affine_concave_route():
    # f(y, 1) = y (1 - y), maximized at y = 1/2 with value 1/4
    y, val = approx_max(_paired_identity(), [1.0], 2.0, 1e-3)
    assert y == pytest.approx([0.5], abs=1e-6)
    assert val == pytest.approx(0.25, abs=1e-6)


def test_value_never_negative():
    # x itself competes, so the certified value sits at or above f(x, x) = 0
    rng = np.random.default_rng(3)
    for _ in range(30):
        x = rng.uniform(-1, 1, 1)
        _, val = approx_max(_abs_problem(), x, 2.0, 1e-2)
        assert val >= 0.0


def test_outside_ball_raises():
    with pytest.raises(OracleFailure):
        approx_max(_abs_problem(), [3.0], 2.0, 1e-3)


def test_grid_refuses_zero_eps():
    with pytest.raises(OracleFailure):
        approx_max(_abs_problem(), [1.0], 2.0, 0.0, strategy="grid")


def test_exact_strategy_refuses_without_closed_form():
    with pytest.raises(OracleFailure):
        approx_max(_paired_identity(), [1.0], 2.0, 1e-3, strategy="exact")


def test_negative_eps_rejected():
    with pytest.raises(InvalidConfig):
        approx_max(_abs_problem(), [1.0], 2.0, -1e-3)


def _grid_oracle(problem, x, radius, per_axis):
    """Feasible-point maximum of y -> f(y, x) on a product grid."""
    d = problem.dim
    axes = [np.linspace(-radius, radius, per_axis)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    Y = np.stack([m.ravel() for m in mesh], axis=1)
    Y = Y[np.linalg.norm(Y, axis=1) <= radius]
    return float(problem.eval_first_batch(Y, x).max())


def _random_problem(rng, dim, allow_grid_fallback=True):
    # the indefinite family needs a dense grid; past 2 dimensions that
    # correctly trips the oracle's point cap, so keep it out of 3-D draws
    kind = rng.integers(0, 4 if allow_grid_fallback else 3)
    if kind == 0:
        return ConvexMinimizationProblem(WeightedOneNorm(
            rng.uniform(-0.5, 0.5, dim), rng.uniform(0.1, 2.0, dim)))
    if kind == 1:
        root = rng.normal(size=(dim, dim))
        return ConvexMinimizationProblem(QuadraticForm.centered(
            root @ root.T + 0.1 * np.eye(dim), rng.uniform(-0.5, 0.5, dim)))
    if kind == 2:
        root = rng.normal(size=(dim, dim))
        skew = rng.normal(size=(dim, dim))
        m = root @ root.T + 0.05 * np.eye(dim) + 0.5 * (skew - skew.T)
        return AffinePairedProblem(m, rng.uniform(-0.3, 0.3, dim))
    # symmetric part indefinite: forces the grid fallback
    m = np.diag(rng.uniform(-0.4, -0.1, dim))
    return AffinePairedProblem(m, rng.uniform(-0.3, 0.3, dim))


@pytest.mark.parametrize("dim,per_axis,calls", [(1, 4001, 60), (2, 201, 40), (3, 41, 10)])
def test_approx_max_contract(dim, per_axis, calls):
    rng = np.random.default_rng(100 + dim)
    for _ in range(calls):
        problem = _random_problem(rng, dim, allow_grid_fallback=dim <= 2)
        radius = float(rng.uniform(1.0, 2.5))
        x = rng.uniform(-0.5, 0.5, dim)
        eps = float(rng.uniform(1e-3, 0.1))
        y, val = approx_max(problem, x, radius, eps)
        assert val >= -1e-12
        assert np.linalg.norm(y) <= radius + 1e-9
        assert val == pytest.approx(evaluate(problem, y, x), abs=1e-9)
        assert _grid_oracle(problem, x, radius, per_axis) - val <= eps


def test_modulus_driven_grid():
    # sigma(k) = 4(k+1): first-argument shifts of 1/(sigma(k)+1) move f by <= 1/(k+1)
    sigma = Counterfunction(4, 4)
    y, val = approx_max(_abs_problem(), [1.0], 2.0, 0.05,
                        strategy="grid", modulus=sigma)
    assert val >= 1.0 - 0.05
    assert _grid_oracle(_abs_problem(), [1.0], 2.0, 4001) - val <= 0.05


# --- axioms and validation ------------------------------------------------------


def test_axioms_pass_for_shipped_families():
    for p in (_abs_problem(), _paired_identity(), ZeroProblem(2),
              ConvexMinimizationProblem(QuadraticForm.centered([[1.0]], [0.2]))):
        assert validate_axioms(p, seed=11).passed


class _Corrupted:
    dim = 1

    def eval(self, x, y):
        if np.array_equal(x, y):
            return 1.0
        return 0.0


def test_corrupted_reflexivity_fails():
    report = validate_axioms(_Corrupted(), seed=11)
    assert not report.passed
    assert report.reflexivity_worst == pytest.approx(1.0)


def test_quadratic_validation():
    with pytest.raises(InvalidConfig):
        QuadraticForm([[-1.0]], [0.0])
    with pytest.raises(InvalidConfig):
        QuadraticForm([[1.0, 5.0], [0.0, 1.0]], [0.0, 0.0])


def test_one_norm_rejects_negative_weights():
    with pytest.raises(InvalidConfig):
        WeightedOneNorm([0.0], [-1.0])


def test_config_roundtrip():
    problems = [_abs_problem(), _paired_identity(), ZeroProblem(3),
                ConvexMinimizationProblem(QuadraticForm.centered([[2.0]], [0.5]))]
    rng = np.random.default_rng(6)
    for p in problems:
        q = problem_from_config(p.to_config())
        for _ in range(20):
            x = rng.uniform(-2, 2, p.dim)
            y = rng.uniform(-2, 2, p.dim)
            assert evaluate(q, x, y) == pytest.approx(evaluate(p, x, y), abs=0)


def test_problem_config_rejects():
    with pytest.raises(InvalidConfig):
        problem_from_config({"family": "unknown"})
    with pytest.raises(InvalidConfig):
        problem_from_config({"matrix": [[1.0]]})
