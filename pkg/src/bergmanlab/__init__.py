"""Numerical laboratory for Bergman-space operator theory on the unit ball.

Computable objects: reproducing kernels and their norms, Berezin
transforms and Bergman-ball averages of positive measures, hyperbolic
lattices on the disk, truncated Toeplitz and embedding operators, and
estimators that bracket absolutely-summing norms from both sides.  The
``lab`` command line drives config-driven sweeps that compare the operator
brackets against the measure-side norms they are expected to match.
"""

from ._fastpath import BACKEND
from .geometry import (BallPoint, Lattice, bergman_distance, ball_volume,
                       covering_multiplicity, generate_lattice, mobius_map,
                       pseudo_hyperbolic)
from .kernels import (HoloPoly, KernelParams, UNWEIGHTED, apply_forelli_rudin,
                      apply_fractional, derivative_kernel, forelli_rudin,
                      kernel_ap_norm, kernel_eval, kernel_poly,
                      normalized_kernel_eval)
from .measures import (AtomicMeasure, GridDensityMeasure, MeasureSpec,
                       RadialPowerMeasure, ball_average, berezin_transform,
                       carleson_snorm, invariant_lp_norm, kappa_exponent,
                       lattice_seq_norm, measure_from_json, measure_to_json,
                       s_exponent)
from .operators import (BasisSpec, SummingEstimate, TruncatedOperator,
                        build_basis, embedding_gram, hs_norm, op_norm,
                        toeplitz_apply, toeplitz_matrix)
from .quadrature import (DEFAULT_SCHEME, QuadratureScheme, integrate_ball,
                         integrate_bergman_ball, integrate_euclidean_disk)
from .summing import (DualSampler, TestFamily, build_dual_sampler,
                      derivative_family, kernel_family, khinchine_probe,
                      onb_family, order_bounded_upper, pi2_embedding_exact,
                      proof_exponents, rademacher_family, summing_lower_bound,
                      weak_r_norm)
from .experiments import (ExperimentConfig, ExperimentReport, builtin_family,
                          emit_report, run_scenario)

__version__ = "0.1.0"
