"""Certified quantitative bounds for the subgradient-type iteration.

Every function here computes, in exact rational arithmetic with
directed-rounding root enclosures, a natural-number bound that is valid
for EVERY run of the iteration satisfying the stated input hypotheses:

* ``a, b``    step-size range, strictly inside (0, 2/M^2),
* ``M``       upper bound on ||xi_n|| along the run,
* ``L``       upper bound on the diameter of the iterate set,
* ``c_u``     upper bound on ||x_0 - u||^2 for the reference point u,
* ``e``       upper bound on the oracle values f(y_n, x_n),
* ``tau``     rate of convergence of the oracle errors (eps_n <= 1/(k+1)
              for all n >= tau(k)),
* ``n_dim``   the ambient dimension N.

Outputs are possibly enlarged (rounding is always upward) but never
invalid; each bound is nondecreasing in k, c_u, L, e, M, b and in
pointwise-larger g and tau, which is what makes upward rounding sound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .counterfunctions import Counterfunction
from .errors import InvalidRange, SizeOverflow
from .exact import (DEFAULT_BITS, Enclosure, decimal_digits, refined_ceil,
                    sqrt_enclosure)

DIGIT_BUDGET = 10 ** 6
LEVEL_BUDGET = 10 ** 6


@dataclass(frozen=True)
class Bound:
    """A certified natural-number bound with provenance metadata."""

    value: int
    formula: str

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("bounds are natural numbers")

    @property
    def digits(self) -> int:
        return decimal_digits(self.value)

    def __int__(self) -> int:
        return self.value


@dataclass(frozen=True)
class RateInputs:
    """Exact rational run parameters feeding every bound."""

    a: Fraction
    b: Fraction
    M: Fraction
    L: Fraction
    c_u: Fraction
    e: Fraction
    n_dim: int
    tau: Counterfunction

    def __post_init__(self):
        for name in ("a", "b", "M", "L", "c_u", "e"):
            v = getattr(self, name)
            if not isinstance(v, Fraction):
                object.__setattr__(self, name, Fraction(v))
        if not (self.a > 0 and self.b > 0 and self.M > 0):
            raise InvalidRange("a, b, M must be positive rationals")
        if self.L < 0 or self.c_u < 0 or self.e < 0:
            raise InvalidRange("L, c_u, e must be nonnegative rationals")
        if self.a > self.b:
            raise InvalidRange("need a <= b")
        if self.M * self.M * self.b >= 2:
            raise InvalidRange(
                f"lambda range not inside (0, 2/M^2): M^2*b = {self.M * self.M * self.b} >= 2")
        if self.n_dim < 1:
            raise InvalidRange("dimension must be at least 1")

    @property
    def alpha(self) -> Fraction:
        """a * (2 - M^2 b) > 0, the per-step decrease coefficient."""
        return self.a * (2 - self.M * self.M * self.b)


@dataclass(frozen=True)
class RateConstants:
    """The four derived constants every composite bound consumes."""

    alpha: Fraction
    beta: Enclosure
    sigma: int
    eta: Enclosure


def _beta_enclosure(inputs: RateInputs, bits: int) -> Enclosure:
    """(1 + sqrt(2*b*e*(1+M)))^2."""
    t = 2 * inputs.b * inputs.e * (1 + inputs.M)
    return (sqrt_enclosure(t, bits) + 1).power(2)


def _sigma_expr(inputs: RateInputs, bits: int) -> Enclosure:
    """sqrt(2*M*b*L)/alpha^(1/4) + (M*b + 1)/sqrt(alpha) + 1."""
    alpha = Enclosure.point(inputs.alpha)
    root = sqrt_enclosure(2 * inputs.M * inputs.b * inputs.L, bits)
    term1 = root / alpha.fourth_root(bits)
    term2 = Enclosure.point(inputs.M * inputs.b + 1) / alpha.sqrt(bits)
    return term1 + term2 + 1


def _eta_enclosure(inputs: RateInputs, bits: int) -> Enclosure:
    """sqrt(2*M*b*L)/alpha^(1/4) + M*b/sqrt(alpha) + 1 (no outer ceiling)."""
    alpha = Enclosure.point(inputs.alpha)
    root = sqrt_enclosure(2 * inputs.M * inputs.b * inputs.L, bits)
    term1 = root / alpha.fourth_root(bits)
    term2 = Enclosure.point(inputs.M * inputs.b) / alpha.sqrt(bits)
    return term1 + term2 + 1


def constants(inputs: RateInputs, bits: int = DEFAULT_BITS) -> RateConstants:
    """alpha exactly; beta, eta as enclosures; sigma as a decided ceiling."""
    sigma = refined_ceil(lambda b: _sigma_expr(inputs, b), bits)
    return RateConstants(inputs.alpha, _beta_enclosure(inputs, bits),
                         sigma, _eta_enclosure(inputs, bits))


def derived_constants(c_u: Fraction, a: Fraction, b: Fraction, M: Fraction,
                      bits: int = DEFAULT_BITS) -> tuple[Fraction, Fraction]:
    """Certified rational upper bounds (L_default, e_default).

    L_default >= 2*sqrt(c_u) bounds the iterate-set diameter whenever some
    reference point u has ||x_0 - u||^2 <= c_u; e_default >= sqrt(c_u/alpha)
    bounds the oracle values on such runs.  Exact when the roots are
    rational.
    """
    probe = RateInputs(a, b, M, Fraction(1), Fraction(c_u), Fraction(0),
                       1, Counterfunction(0, 0))
    l_up = (sqrt_enclosure(Fraction(c_u), bits) * 2).hi
    e_up = sqrt_enclosure(Fraction(c_u) / probe.alpha, bits).hi
    return l_up, e_up


def _ceil_frac(x: Fraction) -> int:
    return math.ceil(x)


# --- metastability of monotone sequences (start-anchored) -------------------


def monotone_metastability(k: int, g: Counterfunction, c_u: Fraction,
                           start: int = 0,
                           digit_budget: int | None = DIGIT_BUDGET) -> Bound:
    """Metastability rate for nonincreasing sequences in [0, c_u].

    Some n in [start, bound] has the whole window [n, n + g(n)] varying by
    less than 1/(k+1): iterate n -> n + g(n) exactly ceil(c_u*(k+1)) times
    from start.
    """
    if k < 0 or start < 0:
        raise ValueError("k and start are naturals")
    reps = _ceil_frac(Fraction(c_u) * (k + 1))
    value = g.expansion_iterate(reps, start, digit_budget)
    return Bound(value, "phi1_prime")


def fval_metastability(k: int, g: Counterfunction, inputs: RateInputs,
                       digit_budget: int | None = DIGIT_BUDGET) -> Bound:
    """Metastability rate for the oracle-value sequence f(y_n, x_n).

    Guarantees a window [n, n + g(n)] with every value below 1/(k+1);
    callers encoding a squared target substitute k^2 + 2k themselves.
    """
    inner = _ceil_frac(Fraction(k + 1) / inputs.alpha) - 1
    value = monotone_metastability(inner, g.plus_one(), inputs.c_u,
                                   digit_budget=digit_budget).value
    return Bound(value, "phi2")


def fix_residual_metastability(k: int, g: Counterfunction, inputs: RateInputs,
                               bits: int = DEFAULT_BITS,
                               digit_budget: int | None = DIGIT_BUDGET) -> Bound:
    """Metastability rate for the fixed-point residuals ||x_n - T x_n||."""
    if k < 0:
        raise ValueError("k is a natural")
    scale = Fraction((k + 1) ** 4)

    def expr(b: int) -> Enclosure:
        return _eta_enclosure(inputs, b).power(4) * scale

    inner = refined_ceil(expr, bits) - 1
    shifted = g.shifted_successor()
    value = monotone_metastability(inner, shifted, inputs.c_u,
                                   digit_budget=digit_budget).value + 1
    return Bound(value, "phi3")


# --- approximate equilibrium points ------------------------------------------


def _approx_point_value(k: int, inputs: RateInputs, sigma: int) -> int:
    quarter = Fraction(inputs.c_u) * (sigma ** 4) * 16 * (k + 1) ** 4
    return 2 * _ceil_frac(quarter) + max(k, inputs.tau(2 * k + 1)) + 1


def approx_point_bound(k: int, inputs: RateInputs,
                       bits: int = DEFAULT_BITS) -> Bound:
    """Index bound below which some iterate is a 1/(k+1)-approximate point.

    Covers both a fixed-point residual and the first k+1 oracle
    constraints simultaneously.
    """
    if k < 0:
        raise ValueError("k is a natural")
    sigma = constants(inputs, bits).sigma
    return Bound(_approx_point_value(k, inputs, sigma), "approx_point")


# --- uniform decrease modulus --------------------------------------------------


def fejer_modulus(n: int, m: int, r: int, inputs: RateInputs,
                  bits: int = DEFAULT_BITS) -> Bound:
    """k such that membership in the k-th approximation set tames the next
    m steps after n: distances to such points grow by less than 1/(r+1).

    max(n + m, floor((r+1)^2 * m^2 * beta)) with beta's certified upper value.
    """
    if n < 0 or m < 0 or r < 0:
        raise ValueError("n, m, r are naturals")
    beta = _beta_enclosure(inputs, bits)
    floor_term = (beta * Fraction(((r + 1) ** 2) * m * m)).floor_up()
    return Bound(max(n + m, floor_term), "chi")


def fejer_modulus_g(n: int, r: int, g: Counterfunction, inputs: RateInputs,
                    bits: int = DEFAULT_BITS) -> Bound:
    """fejer_modulus with the window m = g(n)."""
    return Bound(fejer_modulus(n, g(n), r, inputs, bits).value, "chi_g")


def fejer_modulus_g_max(n: int, r: int, g: Counterfunction, inputs: RateInputs,
                        bits: int = DEFAULT_BITS, scan: bool = False) -> Bound:
    """max over i <= n of fejer_modulus_g(i, r).

    Both shipped counterfunction families are nondecreasing, so the max is
    attained at i = n; scan=True forces the explicit sweep (testing aid).
    """
    if not scan:
        return Bound(fejer_modulus_g(n, r, g, inputs, bits).value, "chi_g_max")
    best = 0
    for i in range(n + 1):
        best = max(best, fejer_modulus_g(i, r, g, inputs, bits).value)
    return Bound(best, "chi_g_max")


# --- full metastability rate ----------------------------------------------------


def total_boundedness_modulus(k: int, inputs: RateInputs,
                              bits: int = DEFAULT_BITS) -> Bound:
    """ceil((8k+8) * sqrt(N) * L)^N, the covering count driving the recursion."""
    if k < 0:
        raise ValueError("k is a natural")
    scale = Fraction(8 * k + 8) * inputs.L

    def expr(b: int) -> Enclosure:
        return sqrt_enclosure(Fraction(inputs.n_dim), b) * scale

    root = refined_ceil(expr, bits)
    return Bound(root ** inputs.n_dim, "total_bdd")


def _digit_guard(value: int, digit_budget: int, what: str) -> None:
    # digits >= floor((bits-1)*log10(2)) + 1; only a certain overflow aborts
    low = int((value.bit_length() - 1) * 0.30102999566398114) + 1
    if low > digit_budget:
        raise SizeOverflow(f"{what} exceeded the {digit_budget}-digit budget")


def _sigma_recursion(levels: int, r_arg: int, g: Counterfunction,
                     inputs: RateInputs, chi_floor: int, bits: int,
                     digit_budget: int, level_budget: int) -> int:
    """levels-fold iteration s -> Phi(max(chi_floor, chi_g_max(s, r_arg)))."""
    if levels > level_budget:
        raise SizeOverflow(
            f"recursion needs {levels} levels, past the {level_budget}-level budget")
    sigma = constants(inputs, bits).sigma
    beta_hi = _beta_enclosure(inputs, bits).hi
    r_scale = Fraction((r_arg + 1) ** 2) * beta_hi
    s = 0
    for _ in range(levels):
        m = g(s)
        kk = max(s + m, math.floor(r_scale * m * m), chi_floor)
        s = _approx_point_value(kk, inputs, sigma)
        _digit_guard(s, digit_budget, "metastability rate")
    return s


def metastability_rate(k: int, g: Counterfunction, inputs: RateInputs,
                       bits: int = DEFAULT_BITS,
                       digit_budget: int = DIGIT_BUDGET,
                       level_budget: int = LEVEL_BUDGET) -> Bound:
    """Full metastability rate: some n <= bound has all iterate pairs in
    [n, n + g(n)] within 1/(k+1) of each other.

    Iterates the approximate-point bound through the uniform decrease
    modulus, total_boundedness_modulus(k) many times.
    """
    if k < 0:
        raise ValueError("k is a natural")
    levels = total_boundedness_modulus(k, inputs, bits).value
    value = _sigma_recursion(levels, 4 * k + 3, g, inputs, 0, bits,
                             digit_budget, level_budget)
    return Bound(value, "sigma_total")


# --- uniformly closed variant -----------------------------------------------------


def _sigma_max(sigma_j, j_max: int, m: int, level_budget: int) -> int:
    """max over j <= j_max of sigma_j(m); uniform moduli skip the scan."""
    if isinstance(sigma_j, Counterfunction):
        return sigma_j(m)
    if j_max > level_budget:
        raise SizeOverflow(
            f"modulus scan needs {j_max + 1} evaluations, past the budget")
    return max(sigma_j(j)(m) for j in range(j_max + 1))


def uniform_closedness_moduli(k: int, sigma_j,
                              level_budget: int = LEVEL_BUDGET) -> tuple[Bound, Bound]:
    """(delta, omega) for the closedness transfer between approximation sets.

    delta = 2k+1; omega = max(4k+3, max_{j<=k} sigma_j(2k+1)).  sigma_j is
    either one Counterfunction used uniformly or a callable j -> Counterfunction.
    """
    if k < 0:
        raise ValueError("k is a natural")
    delta = 2 * k + 1
    omega = max(4 * k + 3, _sigma_max(sigma_j, k, delta, level_budget))
    return Bound(delta, "delta_omega"), Bound(omega, "omega_omega")


def metastability_rate_uc(k: int, g: Counterfunction, sigma_j,
                          inputs: RateInputs,
                          bits: int = DEFAULT_BITS,
                          digit_budget: int = DIGIT_BUDGET,
                          level_budget: int = LEVEL_BUDGET) -> Bound:
    """Metastability rate when membership needs uniform-continuity moduli.

    Lifts k to k0 = max(k, ceil((omega-1)/2)) and floors the decrease
    modulus at delta so the produced approximation sets survive the
    closedness transfer.
    """
    delta, omega = uniform_closedness_moduli(k, sigma_j, level_budget)
    k0 = max(k, _ceil_frac(Fraction(omega.value - 1, 2)))
    levels = total_boundedness_modulus(k0, inputs, bits).value
    value = _sigma_recursion(levels, 4 * k0 + 3, g, inputs, delta.value, bits,
                             digit_budget, level_budget)
    return Bound(value, "sigma_total_uc")


# --- convergence rate under a regularity modulus ------------------------------------


def regularity_convergence_rate(k: int, psi, inputs: RateInputs,
                                bits: int = DEFAULT_BITS) -> Bound:
    """Index bound after which iterates stay within 1/(k+1) of the limit,
    given a modulus psi certifying that good-enough approximate points lie
    close to true equilibria.

    psi maps a positive rational accuracy to a natural index; the bound
    evaluates the approximate-point index at accuracy phi = 1/(psi(eps)+1)
    with eps = 1/(2(k+1)).
    """
    if k < 0:
        raise ValueError("k is a natural")
    eps = Fraction(1, 2 * (k + 1))
    m = psi(eps)
    if not isinstance(m, int) or m < 0:
        raise ValueError("psi must return a natural index")
    big_k = m + 1  # ceil(1/phi) for phi = 1/(m+1)
    sigma = constants(inputs, bits).sigma
    return Bound(_approx_point_value(big_k, inputs, sigma), "regularity_rate")
