"""Heat kernels and gradient estimates of 1-D stable-like operators.

Two independent evaluation routes for the kernel of the operator with jump
density kappa(y) |y|^{-1-alpha}: direct Fourier inversion of the Levy symbol,
and a compound-Poisson perturbation series around a base coefficient.  On top
of them, the package constructs bump-cascade coefficients whose kernel
gradient violates the sharp (2+alpha)-decay estimate while keeping the
ordinary (1+alpha)-decay gradient bound.
"""

from .errors import (AccuracyNotReached, BoundsViolated, DivergentIntensity,
                     GridOverflow, NonPositiveDelta, OverlappingBumps,
                     QuadratureFailure, StableLikeError, TailBoundNotObserved,
                     TailDominates, TruncationInsufficient)
from .symbol import (Alpha, BumpSet, BumpShape, Cascade, Constant, KappaSpec,
                     LevySymbol, SinglePairBump, Tabulated, cascade_positions,
                     eval_kappa, eval_symbol, kappa_spec_from_json,
                     kappa_spec_to_json, stable_constant, validate_kappa_spec)
from .kernel import (KernelEvaluator, KernelPoint, cauchy_closed_form,
                     fft_uniform_grid, normalization, rescale_kappa,
                     semigroup_residuals, sharp_bound_integral,
                     subordination_density_alpha1, weighted_density_sweep,
                     weighted_gradient_sweep)
from .perturb import (CauchyBase, GridBase, JSplit, JumpLaw,
                      PerturbationProblem, PerturbationSpec, j_decomposition,
                      jump_intensity, jump_law, mc_density, mc_gradient,
                      poisson_weights,
                      series_density, series_density_grid, series_gradient,
                      series_gradient_grid, stirling_tail_check,
                      truncation_order)
from .counterexample import (CounterexampleConfig, Es1Report, Es2Report,
                             LevelRecord, LowerBoundReport, corollary_report,
                             estimate_delta, estimate_gamma_A, lambda_tilde_bound,
                             lemma21_verify, lemma23_es1_check,
                             lemma23_es2_check, make_base, theorem_verify,
                             working_threshold)

__version__ = "0.1.0"
