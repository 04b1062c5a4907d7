"""Subgradient-type equilibrium solver over fixed-point sets, with exact
rational bound certification and an empirical verification suite.

The public surface groups into five layers:

* problems and operators  (equilibrium, operators)
* the iteration           (solver)
* certified bounds        (rates, exact, counterfunctions)
* approximation sets      (regularity)
* checks and plumbing     (verify, config, cli)
"""

from .counterfunctions import Counterfunction, affine, constant
from .equilibrium import (AffinePairedProblem, ConvexMinimizationProblem,
                          QuadraticForm, WeightedOneNorm, ZeroProblem,
                          approx_max, validate_axioms)
from .errors import (DimensionMismatch, EqSubgradError, HorizonExceeded,
                     InvalidConfig, InvalidRange, OracleFailure, SizeOverflow,
                     Undecided)
from .exact import Enclosure, parse_fraction, sqrt_enclosure
from .operators import (AffineProjection, BallProjection, BoxProjection,
                        HalfAveraged, HalfspaceProjection, Identity,
                        check_firm, check_nonexpansive, fix_residual)
from .rates import (Bound, RateConstants, RateInputs, approx_point_bound,
                    constants, derived_constants, fejer_modulus,
                    fejer_modulus_g, fejer_modulus_g_max,
                    fix_residual_metastability, fval_metastability,
                    metastability_rate, metastability_rate_uc,
                    monotone_metastability, regularity_convergence_rate,
                    total_boundedness_modulus, uniform_closedness_moduli)
from .regularity import (F_value, G_value, OmegaContext, RegularityModulus,
                         gamma_min, membership_profile, omega_prime_member)
from .solver import (ConstantEps, ConstantLambda, GeometricEps, HarmonicEps,
                     IterationState, SolverConfig, StepRecord, Trajectory,
                     diameter_bound, run, step)
from .verify import (CheckReport, check_approx_point_bound,
                     check_fejer_modulus, check_regularity_rate,
                     check_step_inequalities, check_uniform_closedness,
                     merge_reports, witness_search_metastability)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
