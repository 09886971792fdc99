"""Monte Carlo studies: bias, MSE and coverage of the three estimators.

Each replicate draws a fresh informative sample (and an SRS comparator),
fits the fully adjusted model and the weighted pseudo likelihood on the
informative sample and the plain model on the SRS, and scores the slope
(or the fitted curve) against the generating truth.  Replicates are
independent tasks seeded by (base_seed, replicate index), so the study
result is a pure function of its configuration regardless of how many
workers execute it.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .designs import (gen_nonlinear_population, gen_slr_population, pps_sample,
                      srs_sample)
from .exceptions import DomainError, FitFailure, StudyError
from .fit import FitResult, fit_posterior, fit_spline
from .model import make_linear_posterior, make_weights_only_posterior
from .sampler import ChainConfig, Summary, summarize

SCENARIO_KINDS = ("slr_skewed", "slr_symmetric", "nonlinear", "weights_only")
METHOD_ORDER = ("full", "pseudo", "srs")

SLOPE_TRUE = 1.0
CURVE_GRID = np.arange(81) / 40.0


def curve_truth(x):
    """Population regression function of the nonlinear scenario."""
    x = np.asarray(x, dtype=float)
    return x + 2.0 - 0.5 * x * x


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    N: int = 20000
    n: int = 500
    M: int = 200
    b_pi_true: float = 2.0
    base_seed: int = 0
    n_warmup: int = 1000
    n_draws: int = 2000
    spline_b: int = 8
    spline_k: int = 4

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise DomainError(f"unknown scenario kind: {self.kind!r}")
        if not self.n < self.N:
            raise DomainError("sample size must be below population size")
        if self.M < 1:
            raise DomainError("at least one replicate required")

    def chain(self) -> ChainConfig:
        return ChainConfig(n_warmup=self.n_warmup, n_draws=self.n_draws)


@dataclass
class ReplicateResult:
    method: str
    point_estimate: float
    ci_low: float
    ci_high: float
    covered: bool
    ci_length: float


@dataclass
class MethodMetrics:
    bias: float
    mse: float
    coverage_95: float
    avg_ci_length: float


@dataclass
class MetricsTable:
    scenario: ScenarioConfig
    methods: Dict[str, MethodMetrics]
    n_failed: int = 0

    def row(self, method):
        return self.methods[method]


@dataclass
class CurveMetrics:
    scenario: ScenarioConfig
    grid: np.ndarray
    truth: np.ndarray
    mean_fit: Dict[str, np.ndarray]
    bias: Dict[str, np.ndarray]
    mse: Dict[str, np.ndarray]
    coverage: Dict[str, np.ndarray]
    avg_ci_length: Dict[str, np.ndarray]
    grid_avg_coverage: Dict[str, float]
    grid_avg_coverage_se: Dict[str, float]
    n_failed: int = 0


# ----------------------------------------------------------------------
# seeds
# ----------------------------------------------------------------------

def _replicate_seeds(base_seed, replicate_id):
    """Independent streams for one replicate: population, two samples, three fits."""
    root = np.random.SeedSequence((int(base_seed), 1, int(replicate_id)))
    return root.spawn(6)


def _shared_population_seed(base_seed):
    return np.random.SeedSequence((int(base_seed), 0))


# ----------------------------------------------------------------------
# replicates
# ----------------------------------------------------------------------

def _slope_result(method, fitres: FitResult) -> ReplicateResult:
    row = fitres.summary.row("beta_1")
    lo, hi = row["q2.5"], row["q97.5"]
    return ReplicateResult(
        method=method,
        point_estimate=row["mean"],
        ci_low=lo,
        ci_high=hi,
        covered=bool(lo <= SLOPE_TRUE <= hi),
        ci_length=hi - lo,
    )


def run_replicate(scenario: ScenarioConfig, replicate_id: int) -> List[ReplicateResult]:
    """One SLR replicate: regenerate the population, sample, fit, score."""
    if scenario.kind not in ("slr_skewed", "slr_symmetric"):
        raise DomainError("run_replicate handles the linear scenarios")
    s_pop, s_is, s_srs, s_full, s_pseudo, s_srsfit = _replicate_seeds(
        scenario.base_seed, replicate_id)
    pop = gen_slr_population(scenario.N, scenario.b_pi_true,
                             symmetric=scenario.kind == "slr_symmetric",
                             seed=s_pop)
    chain = scenario.chain()
    is_idx = pps_sample(pop.pi_raw, scenario.n, seed=s_is)
    srs_idx = srs_sample(scenario.N, scenario.n, seed=s_srs)

    def xy(idx):
        return np.column_stack([np.ones(idx.size), pop.x[idx, 0]])

    y_is, logpi_is = pop.y[is_idx], np.log(pop.pi_raw[is_idx])
    ones = np.ones((scenario.n, 1))
    results = []
    post = make_linear_posterior(y_is, logpi_is, xy(is_idx), ones, method="full")
    results.append(_slope_result("full", fit_posterior(post, chain, s_full)))
    post = make_linear_posterior(y_is, logpi_is, xy(is_idx), method="pseudo")
    results.append(_slope_result("pseudo", fit_posterior(post, chain, s_pseudo)))
    y_srs, logpi_srs = pop.y[srs_idx], np.log(pop.pi_raw[srs_idx])
    post = make_linear_posterior(y_srs, logpi_srs, xy(srs_idx), method="ignore")
    results.append(_slope_result("srs", fit_posterior(post, chain, s_srsfit)))
    return results


def run_curve_replicate(scenario: ScenarioConfig, replicate_id: int) -> Dict[str, dict]:
    """One nonlinear replicate: spline fits scored pointwise on the grid."""
    if scenario.kind != "nonlinear":
        raise DomainError("run_curve_replicate handles the nonlinear scenario")
    pop = gen_nonlinear_population(scenario.N,
                                   seed=_shared_population_seed(scenario.base_seed))
    _, s_is, s_srs, s_full, s_pseudo, s_srsfit = _replicate_seeds(
        scenario.base_seed, replicate_id)
    chain = scenario.chain()
    is_idx = pps_sample(pop.pi_raw, scenario.n, seed=s_is)
    srs_idx = srs_sample(scenario.N, scenario.n, seed=s_srs)
    truth = curve_truth(CURVE_GRID)

    out = {}
    jobs = (
        ("full", is_idx, "full", s_full),
        ("pseudo", is_idx, "pseudo", s_pseudo),
        ("srs", srs_idx, "ignore", s_srsfit),
    )
    for label, idx, method, seed in jobs:
        fitres = fit_spline(
            pop.y[idx], np.log(pop.pi_raw[idx]), pop.x[idx, 0], chain, seed,
            b=scenario.spline_b, k=scenario.spline_k,
            Xpi=np.ones((idx.size, 1)), method=method)
        curves = fitres.curve_draws(CURVE_GRID)
        lo, hi = np.quantile(curves, [0.025, 0.975], axis=0, method="linear")
        est = curves.mean(axis=0)
        out[label] = {
            "estimate": est,
            "lo": lo,
            "hi": hi,
            "covered": (lo <= truth) & (truth <= hi),
            "length": hi - lo,
        }
    return out


# ----------------------------------------------------------------------
# studies
# ----------------------------------------------------------------------

def worker_count(workers: Optional[int] = None) -> int:
    """Worker pool size: explicit argument, else ISAMP_THREADS, else all CPUs."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("ISAMP_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _try_replicate(args):
    fn, scenario, rep_id = args
    try:
        return rep_id, fn(scenario, rep_id)
    except FitFailure:
        return rep_id, None


def _map_replicates(fn, scenario, workers):
    nw = worker_count(workers)
    tasks = [(fn, scenario, m) for m in range(scenario.M)]
    if nw == 1:
        results = [_try_replicate(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(_try_replicate, tasks, chunksize=1))
    results.sort(key=lambda pair: pair[0])
    ok = [r for _, r in results if r is not None]
    n_failed = scenario.M - len(ok)
    if n_failed > 0.05 * scenario.M:
        raise StudyError(f"{n_failed} of {scenario.M} replicates failed")
    return ok, n_failed


def run_study(scenario: ScenarioConfig, workers: Optional[int] = None) -> MetricsTable:
    """Full SLR Monte Carlo study; aggregation is order-independent."""
    replicates, n_failed = _map_replicates(run_replicate, scenario, workers)
    methods = {}
    for method in METHOD_ORDER:
        rows = [r for rep in replicates for r in rep if r.method == method]
        est = np.array([r.point_estimate for r in rows])
        methods[method] = MethodMetrics(
            bias=float(est.mean() - SLOPE_TRUE),
            mse=float(np.mean((est - SLOPE_TRUE) ** 2)),
            coverage_95=float(np.mean([r.covered for r in rows])),
            avg_ci_length=float(np.mean([r.ci_length for r in rows])),
        )
    return MetricsTable(scenario=scenario, methods=methods, n_failed=n_failed)


def run_curve_study(scenario: ScenarioConfig,
                    workers: Optional[int] = None) -> CurveMetrics:
    """Nonlinear Monte Carlo study with pointwise metrics on the grid."""
    replicates, n_failed = _map_replicates(run_curve_replicate, scenario, workers)
    truth = curve_truth(CURVE_GRID)
    mean_fit, bias, mse, coverage, avg_len = {}, {}, {}, {}, {}
    gac, gac_se = {}, {}
    for method in METHOD_ORDER:
        est = np.array([rep[method]["estimate"] for rep in replicates])
        cov = np.array([rep[method]["covered"] for rep in replicates], dtype=float)
        ln = np.array([rep[method]["length"] for rep in replicates])
        mean_fit[method] = est.mean(axis=0)
        bias[method] = est.mean(axis=0) - truth
        mse[method] = np.mean((est - truth) ** 2, axis=0)
        coverage[method] = cov.mean(axis=0)
        avg_len[method] = ln.mean(axis=0)
        per_rep = cov.mean(axis=1)
        gac[method] = float(per_rep.mean())
        gac_se[method] = float(per_rep.std(ddof=1) / math.sqrt(len(per_rep)))
    return CurveMetrics(scenario=scenario, grid=CURVE_GRID.copy(), truth=truth,
                        mean_fit=mean_fit, bias=bias, mse=mse, coverage=coverage,
                        avg_ci_length=avg_len, grid_avg_coverage=gac,
                        grid_avg_coverage_se=gac_se, n_failed=n_failed)


# ----------------------------------------------------------------------
# population weight-distribution experiment
# ----------------------------------------------------------------------

@dataclass
class WeightDistResult:
    summary: Summary
    kappa_draws: np.ndarray
    sigma_pi_sq_draws: np.ndarray
    sampled_log_pi: np.ndarray
    hist_edges: np.ndarray
    hist_density: np.ndarray
    density_grid: np.ndarray
    true_density: np.ndarray
    estimated_density: np.ndarray
    N: int = 0
    n: int = 0
    seed: int = 0
    pi_scale: float = 1.0


def run_weight_dist_experiment(N: int, n: int, seed=0,
                               chain: Optional[ChainConfig] = None,
                               pi_scale: float = 1.0) -> WeightDistResult:
    """Estimate the population law of inclusion probabilities from a sample.

    Generates lognormal(0, 1) size measures, draws a size-biased sample of
    n of them, and fits the inclusion-probability-only model, which
    corrects for the fact that large sizes are over-represented in the
    sample.  ``pi_scale`` multiplies every size measure; the location
    estimate shifts by log(pi_scale) since only proportionality matters.
    """
    if not n < N:
        raise DomainError("need n < N")
    chain = chain or ChainConfig()
    root = np.random.SeedSequence((int(seed), 2))
    s_pop, s_is, s_fit = root.spawn(3)
    rng = np.random.default_rng(s_pop)
    pi = np.exp(rng.normal(0.0, 1.0, N)) * pi_scale
    idx = pps_sample(pi, n, seed=s_is)
    log_pi = np.log(pi[idx])
    post = make_weights_only_posterior(log_pi, np.ones((n, 1)))
    fitres = fit_posterior(post, chain, s_fit)

    kappa = fitres.draws.values[:, 0]
    sig2 = np.exp(2.0 * fitres.draws.values[:, 1])

    def to_report(values):
        out = np.column_stack([values[:, 0], np.exp(2.0 * values[:, 1])])
        return out

    summary = summarize(fitres.draws, constrain=to_report,
                        names=("kappa", "sigma_pi_sq"))

    dens, edges = np.histogram(log_pi, bins=20, density=True)
    grid = np.linspace(edges[0] - 1.0, edges[-1] + 1.0, 201)
    true_mu, true_var = math.log(pi_scale), 1.0
    true_d = np.exp(-0.5 * (grid - true_mu) ** 2 / true_var) / math.sqrt(2 * math.pi * true_var)
    est_mu = float(summary.mean[0])
    est_var = float(summary.mean[1])
    est_d = np.exp(-0.5 * (grid - est_mu) ** 2 / est_var) / math.sqrt(2 * math.pi * est_var)
    return WeightDistResult(
        summary=summary, kappa_draws=kappa, sigma_pi_sq_draws=sig2,
        sampled_log_pi=log_pi, hist_edges=edges, hist_density=dens,
        density_grid=grid, true_density=true_d, estimated_density=est_d,
        N=N, n=n, seed=int(seed), pi_scale=pi_scale)
