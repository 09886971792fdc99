"""Synthetic finite populations and survey sampling designs.

Every generator is a deterministic function of its seed; distinct seeds
(or distinct ``SeedSequence`` children) give independent streams, which is
what makes replicate-level parallelism reproducible regardless of worker
scheduling.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DesignError, DomainError


@dataclass
class Population:
    """A finite population: responses, unnormalized size measures, covariates."""

    y: np.ndarray
    pi_raw: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        if not (len(self.y) == len(self.pi_raw) == len(self.x)):
            raise DomainError("population arrays must have equal length")
        if np.any(self.pi_raw <= 0):
            raise DomainError("size measures must be positive")

    @property
    def size(self):
        return len(self.y)


def _rng(seed):
    return np.random.default_rng(seed)


def gen_slr_population(N: int, b_pi: float, symmetric: bool = False,
                       seed=0) -> Population:
    """Linear-regression population with response-correlated size measures.

    x ~ uniform(0,1); pi ~ gamma(2, rate=b_pi) or, in the symmetric
    variant, positive-truncated normal(1, 0.1^2); y ~ normal(x + pi, 0.1^2).
    """
    if N < 10:
        raise DomainError("population size must be at least 10")
    rng = _rng(seed)
    x = rng.uniform(0.0, 1.0, N)
    if symmetric:
        # rejection from the untruncated normal; acceptance is ~1 here
        pi = rng.normal(1.0, 0.1, N)
        while True:
            bad = pi <= 0
            if not bad.any():
                break
            pi[bad] = rng.normal(1.0, 0.1, int(bad.sum()))
    else:
        if not b_pi > 0:
            raise DomainError("gamma rate must be positive")
        pi = rng.gamma(2.0, 1.0 / b_pi, N)
    y = rng.normal(0.0 + 1.0 * x + 1.0 * pi, 0.1)
    return Population(y=y, pi_raw=pi, x=x[:, None])


def gen_nonlinear_population(N: int, seed=0) -> Population:
    """Quadratic-mean population: y ~ normal(x + pi - 0.5 x^2, 0.1^2)."""
    if N < 10:
        raise DomainError("population size must be at least 10")
    rng = _rng(seed)
    x = rng.uniform(0.0, 2.0, N)
    pi = rng.gamma(2.0, 1.0, N)
    y = rng.normal(1.0 * x + 1.0 * pi - 0.5 * x * x, 0.1)
    return Population(y=y, pi_raw=pi, x=x[:, None])


def target_inclusion_probs(pi_raw, n: int) -> np.ndarray:
    """First-order inclusion probabilities min(1, n*pi/sum(pi)).

    Units whose raw probability exceeds one are capped there and the
    excess is redistributed over the rest until all probabilities are
    feasible (fixed total n).
    """
    pi = np.asarray(pi_raw, dtype=float)
    if np.any(pi <= 0):
        raise DomainError("size measures must be positive")
    N = pi.size
    if n > N:
        raise DesignError("sample size exceeds population size")
    p = np.empty(N)
    capped = np.zeros(N, dtype=bool)
    while True:
        n_rem = n - int(capped.sum())
        if n_rem < 0:
            raise DesignError("more than n units forced to certainty")
        rest = ~capped
        total = pi[rest].sum()
        p[rest] = n_rem * pi[rest] / total if total > 0 else 0.0
        p[capped] = 1.0
        newly = rest & (p >= 1.0)
        if not newly.any():
            break
        capped |= newly
    return p


def pps_sample(pi_raw, n: int, seed=0) -> np.ndarray:
    """Fixed-size probability-proportional-to-size sample.

    Randomized systematic sampling on a uniformly permuted population,
    which realizes the capped first-order probabilities exactly and costs
    O(N).  Returns n distinct indices.
    """
    pi = np.asarray(pi_raw, dtype=float)
    p = target_inclusion_probs(pi, n)
    rng = _rng(seed)
    perm = rng.permutation(pi.size)
    csum = np.cumsum(p[perm])
    marks = rng.uniform(0.0, 1.0) + np.arange(n)
    picks = np.searchsorted(csum, marks, side="right")
    picks = np.minimum(picks, pi.size - 1)  # guard against cumsum rounding
    idx = perm[picks]
    if np.unique(idx).size != n:
        raise DesignError("systematic pass selected a unit twice")
    return idx


def srs_sample(N: int, n: int, seed=0) -> np.ndarray:
    """Simple random sample without replacement (partial Fisher-Yates)."""
    if n > N:
        raise DomainError("sample size exceeds population size")
    rng = _rng(seed)
    idx = np.arange(N)
    for i in range(n):
        j = i + int(rng.integers(0, N - i))
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:n].copy()
