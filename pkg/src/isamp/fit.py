"""Model fitting: posterior + chain configuration -> draws and summaries."""

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import FitFailure, InitializationError
from .model import Posterior, make_spline_nc_posterior
from .sampler import ChainConfig, Draws, Summary, run_hmc, summarize
from .splines import (SplineBasis, build_basis, design_matrix,
                      penalty_factors, penalty_matrix)


@dataclass
class FitResult:
    posterior: Posterior
    draws: Draws
    summary: Summary
    basis: Optional[SplineBasis] = None
    n_retries: int = 0

    def constrained_draws(self) -> np.ndarray:
        return self.posterior.constrain(self.draws.values)

    def beta_draws(self) -> np.ndarray:
        cols = [i for i, n in enumerate(self.posterior.names) if n.startswith("beta_")]
        return self.draws.values[:, cols]


def _seed_ints(seed_seq, k):
    return [int(s) for s in np.random.SeedSequence(seed_seq).generate_state(k, np.uint64)] \
        if isinstance(seed_seq, (int, np.integer)) else \
        [int(s) for s in seed_seq.generate_state(k, np.uint64)]


def fit_posterior(post: Posterior, chain: ChainConfig, seed_seq) -> FitResult:
    """Sample a posterior with one retry on a failed initialization.

    ``seed_seq`` is an int or ``numpy.random.SeedSequence``; the chain seed
    and the initialization jitter are derived from it deterministically.
    """
    init_seed, chain_seed, retry_seed = _seed_ints(seed_seq, 3)
    cfg = dataclasses.replace(chain, seed=chain_seed)
    n_retries = 0
    for attempt, jitter_seed in enumerate((init_seed, retry_seed)):
        rng = np.random.default_rng(jitter_seed)
        init = chain.init_jitter * rng.uniform(-1.0, 1.0, post.dim)
        try:
            draws = run_hmc(post.logpost, post.grad, init, cfg, names=post.names)
            break
        except InitializationError:
            n_retries = attempt + 1
            if attempt == 1:
                raise FitFailure("sampler failed to initialize after retry")
    summary = summarize(draws, constrain=post.constrain, names=post.constrained_names)
    return FitResult(posterior=post, draws=draws, summary=summary,
                     n_retries=n_retries)


@dataclass
class SplineFitResult:
    """Spline fit reported in the natural coefficient coordinates.

    The sampler runs in the funnel-free non-centered coordinates; this
    wrapper maps draws back to the spline coefficients ``beta`` (plus any
    unpenalized extra-column coefficients) for reporting and curve
    evaluation.
    """

    posterior: Posterior
    draws: Draws
    basis: SplineBasis
    beta_draws: np.ndarray
    report_draws: np.ndarray
    report_names: tuple
    summary: Summary
    n_retries: int = 0

    def curve_draws(self, grid) -> np.ndarray:
        gdesign = design_matrix(self.basis, np.asarray(grid, dtype=float))
        b = gdesign.shape[1]
        return self.beta_draws[:, :b] @ gdesign.T


def fit_spline(y, logpi, x_spline, chain: ChainConfig, seed_seq, *,
               b: int = 8, k: int = 4, degree: int = 3, extra_design=None,
               Xpi=None, method: str = "full",
               basis: Optional[SplineBasis] = None) -> SplineFitResult:
    """Fit the penalized-spline model and report natural-scale draws."""
    y = np.asarray(y, dtype=float)
    logpi = np.asarray(logpi, dtype=float)
    xs = np.asarray(x_spline, dtype=float)
    if basis is None:
        basis = build_basis(xs, b, degree=degree)
    B = design_matrix(basis, xs)
    Q = penalty_matrix(b, k)
    null_T, pen_T = penalty_factors(Q, b, k)
    A = np.ascontiguousarray(B @ null_T)
    Zd = np.ascontiguousarray(B @ pen_T)
    Xe = (np.asarray(extra_design, dtype=float)
          if extra_design is not None and np.size(extra_design) else None)
    if Xe is not None and Xe.ndim == 1:
        Xe = Xe[:, None]
    post = make_spline_nc_posterior(y, logpi, A, Zd, Xe, Xpi=Xpi, method=method)
    base = fit_posterior(post, chain, seed_seq)

    names = post.names
    k0 = null_T.shape[1]
    r = pen_T.shape[1]
    e = Xe.shape[1] if Xe is not None else 0
    values = base.draws.values
    a_draws = values[:, :k0]
    z_draws = values[:, k0:k0 + r]
    c_draws = values[:, k0 + r:k0 + r + e]
    ls_b = values[:, names.index("log_sigma_beta")]
    sb = np.exp(ls_b)
    beta = a_draws @ null_T.T + (sb[:, None] * z_draws) @ pen_T.T
    beta_draws = np.hstack([beta, c_draws]) if e else beta

    tail_names = []
    tail_cols = []
    for nm in ("log_sigma_y", "log_sigma_beta", "kappa_y"):
        if nm in names:
            tail_names.append(nm[4:] if nm.startswith("log_") else nm)
            col = values[:, names.index(nm)]
            tail_cols.append(np.exp(col) if nm.startswith("log_") else col)
    for j, nm in enumerate(names):
        if nm.startswith("kappa_x_"):
            tail_names.append(nm)
            tail_cols.append(values[:, j])
    if "log_sigma_pi" in names:
        tail_names.append("sigma_pi")
        tail_cols.append(np.exp(values[:, names.index("log_sigma_pi")]))

    report_names = tuple(f"beta_{i}" for i in range(beta_draws.shape[1])) \
        + tuple(tail_names)
    report_draws = np.column_stack([beta_draws] + [c[:, None] for c in tail_cols])
    report = Draws(values=report_draws, names=report_names,
                   accept_rate=base.draws.accept_rate,
                   divergence_count=base.draws.divergence_count,
                   step_size=base.draws.step_size)
    summary = summarize(report)
    return SplineFitResult(posterior=post, draws=base.draws, basis=basis,
                           beta_draws=beta_draws, report_draws=report_draws,
                           report_names=report_names, summary=summary,
                           n_retries=base.n_retries)
