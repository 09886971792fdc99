"""Bayesian population-model estimation under informative survey sampling.

Implements a joint model for (response, inclusion probability) whose
likelihood is adjusted to the observed sample by Bayes rule, alongside the
sampling-weighted pseudo likelihood and the unadjusted model, a
self-contained no-U-turn HMC sampler, informative-sampling simulators and
a Monte Carlo study harness.
"""

__version__ = "0.1.0"

from .designs import (Population, gen_nonlinear_population,
                      gen_slr_population, pps_sample, srs_sample)
from .fit import FitResult, fit_posterior
from .harness import (CurveMetrics, MetricsTable, ReplicateResult,
                      ScenarioConfig, run_curve_study, run_replicate,
                      run_study, run_weight_dist_experiment)
from .model import (Kappa, Observation, ParamVector, SplinePenalty,
                    ThetaLinear, ThetaProbit, denominator_oracle,
                    grad_log_posterior, log_posterior, log_prior,
                    log_ps_linear, log_ps_probit, log_ps_weights_only,
                    log_pseudo_likelihood, make_linear_posterior,
                    make_probit_posterior, make_spline_posterior,
                    make_weights_only_posterior, mgf_bernoulli, mgf_normal,
                    normalize_weights, pack_linear, unpack_linear)
from .sampler import ChainConfig, Draws, Summary, run_hmc, summarize
from .splines import (SplineBasis, build_basis, design_matrix, eval_row,
                      log_spline_penalty, penalty_matrix)

__all__ = [name for name in dir() if not name.startswith("_")]
