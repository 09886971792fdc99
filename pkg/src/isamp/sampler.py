"""Self-contained Hamiltonian Monte Carlo with no-U-turn trajectories.

One chain is one deterministic function of (seed, target, init, config):

* warmup adapts the step size by dual averaging toward the target
  acceptance rate and estimates a diagonal mass matrix from warmup draws
  in doubling windows;
* sampling uses multinomial selection along dynamically doubled
  trajectories, capped at ``max_leapfrog`` steps per iteration;
* a leapfrog step whose energy error exceeds 1000 is a divergence: the
  offending subtree is discarded and the event is counted.

The target is supplied as two callbacks (log density and gradient) on the
unconstrained scale.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import DomainError, InitializationError

ENERGY_ERROR_THRESHOLD = 1000.0


@dataclass(frozen=True)
class ChainConfig:
    n_warmup: int = 1000
    n_draws: int = 2000
    target_accept: float = 0.8
    max_leapfrog: int = 1024
    seed: int = 0
    init_jitter: float = 1.0

    def __post_init__(self):
        if self.n_warmup < 100:
            raise DomainError("n_warmup must be at least 100")
        if self.n_draws < 1:
            raise DomainError("n_draws must be positive")
        if not 0.0 < self.target_accept < 1.0:
            raise DomainError("target_accept must lie in (0, 1)")
        if self.max_leapfrog < 1:
            raise DomainError("max_leapfrog must be positive")


@dataclass
class Draws:
    """Posterior sample on the unconstrained scale."""

    values: np.ndarray
    names: tuple
    accept_rate: float
    divergence_count: int
    step_size: float = float("nan")

    @property
    def n_draws(self):
        return self.values.shape[0]

    @property
    def flagged(self) -> bool:
        """True when more than 10% of kept iterations diverged."""
        return self.divergence_count > 0.1 * self.n_draws


@dataclass
class Summary:
    """Per-parameter posterior summaries on the constrained scale."""

    names: tuple
    mean: np.ndarray
    sd: np.ndarray
    q2_5: np.ndarray
    q97_5: np.ndarray

    @property
    def ci_length(self):
        return self.q97_5 - self.q2_5

    def row(self, name):
        i = self.names.index(name)
        return {
            "mean": float(self.mean[i]),
            "sd": float(self.sd[i]),
            "q2.5": float(self.q2_5[i]),
            "q97.5": float(self.q97_5[i]),
            "ci_length": float(self.q97_5[i] - self.q2_5[i]),
        }


def summarize(draws: Draws, constrain: Optional[Callable] = None,
              names: Optional[tuple] = None) -> Summary:
    """Mean, sd and central-95% quantiles of (transformed) draws.

    ``constrain`` maps the unconstrained draw matrix to the reporting
    scale (e.g. exponentiating log-sd columns); quantiles use linear
    interpolation of order statistics.
    """
    values = draws.values if constrain is None else constrain(draws.values)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    names = tuple(names) if names is not None else tuple(draws.names)
    mean = values.mean(axis=0)
    sd = values.std(axis=0, ddof=1) if values.shape[0] > 1 else np.zeros(values.shape[1])
    q = np.quantile(values, [0.025, 0.975], axis=0, method="linear")
    return Summary(names=names, mean=mean, sd=sd, q2_5=q[0], q97_5=q[1])


# ----------------------------------------------------------------------
# trajectory machinery
# ----------------------------------------------------------------------

class _Tree:
    """State of one (sub)trajectory, oriented on the time axis.

    ``m_*`` fields describe the backward (minus) end, ``p_*`` the forward
    (plus) end; ``r_sum`` accumulates the momenta of all leaves, which
    drives the generalized U-turn criterion.
    """

    __slots__ = ("m_theta", "m_r", "m_grad", "p_theta", "p_r", "p_grad",
                 "r_sum", "log_w", "prop_theta", "prop_lp", "prop_grad",
                 "ok", "divergent", "alpha", "n_alpha")

    def __init__(self, theta, r, grad, lp, log_w, ok, divergent, alpha):
        self.m_theta = theta
        self.m_r = r
        self.m_grad = grad
        self.p_theta = theta
        self.p_r = r
        self.p_grad = grad
        self.r_sum = r.copy()
        self.log_w = log_w
        self.prop_theta = theta
        self.prop_lp = lp
        self.prop_grad = grad
        self.ok = ok
        self.divergent = divergent
        self.alpha = alpha
        self.n_alpha = 1


class _NutsKernel:
    def __init__(self, logpost, grad, dim, rng, max_depth):
        self.logpost = logpost
        self.grad = grad
        self.dim = dim
        self.rng = rng
        self.max_depth = max_depth
        self.inv_mass = np.ones(dim)
        self.mom_sd = np.ones(dim)  # sqrt of mass matrix diagonal
        self.eps = 1.0

    def set_inv_mass(self, inv_mass):
        self.inv_mass = inv_mass
        self.mom_sd = 1.0 / np.sqrt(inv_mass)

    def _kinetic(self, r):
        with np.errstate(over="ignore", invalid="ignore"):
            return 0.5 * float(r @ (self.inv_mass * r))

    def _leapfrog(self, theta, r, grad_vec, eps):
        with np.errstate(over="ignore", invalid="ignore"):
            r1 = r + 0.5 * eps * grad_vec
            theta1 = theta + eps * (self.inv_mass * r1)
        if np.all(np.isfinite(theta1)):
            lp1 = self.logpost(theta1)
        else:
            lp1 = -math.inf
        if math.isfinite(lp1):
            g1 = np.asarray(self.grad(theta1))
            if not np.all(np.isfinite(g1)):
                lp1, g1 = -math.inf, np.zeros(self.dim)
            else:
                r1 = r1 + 0.5 * eps * g1
        else:
            lp1, g1 = -math.inf, np.zeros(self.dim)
        return theta1, r1, lp1, g1

    def _leaf(self, theta, r, grad_vec, v, h0):
        theta1, r1, lp1, g1 = self._leapfrog(theta, r, grad_vec, v * self.eps)
        if math.isfinite(lp1):
            dh = lp1 - self._kinetic(r1) - h0
        else:
            dh = -math.inf
        divergent = not dh > -ENERGY_ERROR_THRESHOLD
        log_w = -math.inf if divergent else dh
        alpha = 0.0 if dh == -math.inf else min(1.0, math.exp(min(dh, 0.0)))
        return _Tree(theta1, r1, g1, lp1, log_w, not divergent, divergent, alpha)

    def _no_uturn(self, r_sum, r_minus, r_plus):
        return (float(r_sum @ (self.inv_mass * r_minus)) > 0.0
                and float(r_sum @ (self.inv_mass * r_plus)) > 0.0)

    def _merge_ok(self, left: _Tree, right: _Tree):
        """Generalized U-turn tests across a merge of adjacent subtrees."""
        rho = left.r_sum + right.r_sum
        if not self._no_uturn(rho, left.m_r, right.p_r):
            return False
        if not self._no_uturn(left.r_sum + right.m_r, left.m_r, right.m_r):
            return False
        if not self._no_uturn(right.r_sum + left.p_r, left.p_r, right.p_r):
            return False
        return True

    def _combine(self, first: _Tree, second: _Tree, v, biased):
        """Fold ``second`` (built in direction v from ``first``) into ``first``."""
        left, right = (first, second) if v > 0 else (second, first)
        first.alpha += second.alpha
        first.n_alpha += second.n_alpha
        first.divergent |= second.divergent
        if not second.ok:
            first.ok = False
            return
        # U-turn tests must see the pre-merge end states
        ok = self._merge_ok(left, right)
        r_sum = left.r_sum + right.r_sum
        total = np.logaddexp(first.log_w, second.log_w)
        if biased:
            p_new = (1.0 if second.log_w >= first.log_w
                     else math.exp(second.log_w - first.log_w))
        else:
            p_new = math.exp(second.log_w - total) if total > -math.inf else 0.0
        if self.rng.random() < p_new:
            first.prop_theta = second.prop_theta
            first.prop_lp = second.prop_lp
            first.prop_grad = second.prop_grad
        first.log_w = total
        if v > 0:
            first.p_theta, first.p_r, first.p_grad = second.p_theta, second.p_r, second.p_grad
        else:
            first.m_theta, first.m_r, first.m_grad = second.m_theta, second.m_r, second.m_grad
        first.ok = ok
        first.r_sum = r_sum

    def _build(self, theta, r, grad_vec, depth, v, h0):
        if depth == 0:
            return self._leaf(theta, r, grad_vec, v, h0)
        tree = self._build(theta, r, grad_vec, depth - 1, v, h0)
        if not tree.ok:
            return tree
        if v > 0:
            sub = self._build(tree.p_theta, tree.p_r, tree.p_grad, depth - 1, v, h0)
        else:
            sub = self._build(tree.m_theta, tree.m_r, tree.m_grad, depth - 1, v, h0)
        self._combine(tree, sub, v, biased=False)
        return tree

    def transition(self, theta, lp, grad_vec):
        """One NUTS iteration; returns (theta', lp', grad', alpha, divergent)."""
        r0 = self.rng.standard_normal(self.dim) * self.mom_sd
        h0 = lp - self._kinetic(r0)
        tree = _Tree(theta, r0, grad_vec, lp, 0.0, True, False, 1.0)
        tree.n_alpha = 0
        tree.alpha = 0.0
        for depth in range(self.max_depth):
            v = 1 if self.rng.random() < 0.5 else -1
            if v > 0:
                sub = self._build(tree.p_theta, tree.p_r, tree.p_grad, depth, v, h0)
            else:
                sub = self._build(tree.m_theta, tree.m_r, tree.m_grad, depth, v, h0)
            self._combine(tree, sub, v, biased=True)
            if not tree.ok:
                break
        alpha = tree.alpha / max(tree.n_alpha, 1)
        return tree.prop_theta, tree.prop_lp, tree.prop_grad, alpha, tree.divergent

    def find_reasonable_epsilon(self, theta, lp, grad_vec):
        """Double/halve the step size until the one-step accept ratio crosses 1/2."""
        eps = 1.0
        r = self.rng.standard_normal(self.dim) * self.mom_sd
        h = lp - self._kinetic(r)
        _, r1, lp1, _ = self._leapfrog(theta, r, grad_vec, eps)
        dh = (lp1 - self._kinetic(r1) - h) if math.isfinite(lp1) else -math.inf
        direction = 1.0 if dh > math.log(0.5) else -1.0
        for _ in range(100):
            if direction > 0 and not dh > math.log(0.5):
                break
            if direction < 0 and not dh < math.log(0.5):
                break
            eps *= 2.0 ** direction
            if eps > 1e7 or eps < 1e-10:
                break
            _, r1, lp1, _ = self._leapfrog(theta, r, grad_vec, eps)
            dh = (lp1 - self._kinetic(r1) - h) if math.isfinite(lp1) else -math.inf
        return eps


class _DualAveraging:
    """Nesterov dual averaging of log step size (gamma=0.05, t0=10, kappa=0.75)."""

    def __init__(self, eps0, target):
        self.mu = math.log(10.0 * eps0)
        self.target = target
        self.log_eps = math.log(eps0)
        self.log_eps_bar = 0.0
        self.h_bar = 0.0
        self.count = 0

    def step(self, alpha):
        self.count += 1
        t = self.count
        eta_h = 1.0 / (t + 10.0)
        self.h_bar = (1.0 - eta_h) * self.h_bar + eta_h * (self.target - alpha)
        self.log_eps = self.mu - math.sqrt(t) / 0.05 * self.h_bar
        eta = t ** -0.75
        self.log_eps_bar = eta * self.log_eps + (1.0 - eta) * self.log_eps_bar
        return math.exp(self.log_eps)

    @property
    def eps_bar(self):
        return math.exp(self.log_eps_bar)


def _mass_windows(n_warmup):
    """(start, end) pairs of the doubling variance-estimation windows."""
    init_buf = max(1, int(round(0.15 * n_warmup)))
    term_buf = max(1, int(round(0.10 * n_warmup)))
    base = max(1, int(round(0.05 * n_warmup)))
    windows = []
    start = init_buf
    size = base
    while start + size <= n_warmup - term_buf:
        end = start + size
        # absorb a remainder too small for another doubling
        if end + 2 * size > n_warmup - term_buf:
            end = n_warmup - term_buf
        windows.append((start, end))
        start = end
        size *= 2
    return windows


def run_hmc(logpost: Callable, grad: Callable, init, config: ChainConfig,
            names: Optional[tuple] = None) -> Draws:
    """Run one adaptive NUTS chain and return the kept draws.

    Deterministic given (seed, callbacks, init, config).  Raises
    ``InitializationError`` when the target is not finite at ``init``.
    """
    theta = np.array(init, dtype=float)
    dim = theta.size
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(dim))
    lp = logpost(theta)
    if not math.isfinite(lp):
        raise InitializationError("log posterior is not finite at the initial point")
    g = np.asarray(grad(theta))
    if not np.all(np.isfinite(g)):
        raise InitializationError("gradient is not finite at the initial point")

    rng = np.random.default_rng(config.seed)
    max_depth = max(1, int(math.floor(math.log2(config.max_leapfrog))))
    kernel = _NutsKernel(logpost, grad, dim, rng, max_depth)

    kernel.eps = kernel.find_reasonable_epsilon(theta, lp, g)
    da = _DualAveraging(kernel.eps, config.target_accept)
    windows = _mass_windows(config.n_warmup)
    window_idx = 0
    welford_n = 0
    welford_mean = np.zeros(dim)
    welford_m2 = np.zeros(dim)

    for it in range(config.n_warmup):
        theta, lp, g, alpha, _ = kernel.transition(theta, lp, g)
        kernel.eps = da.step(alpha)
        if window_idx < len(windows):
            start, end = windows[window_idx]
            if start <= it < end:
                welford_n += 1
                delta = theta - welford_mean
                welford_mean += delta / welford_n
                welford_m2 += delta * (theta - welford_mean)
            if it == end - 1:
                var = welford_m2 / max(welford_n - 1, 1)
                shrink = welford_n / (welford_n + 5.0)
                inv_mass = shrink * var + (1.0 - shrink) * 1e-3
                inv_mass = np.maximum(inv_mass, 1e-10)
                kernel.set_inv_mass(inv_mass)
                window_idx += 1
                welford_n = 0
                welford_mean[:] = 0.0
                welford_m2[:] = 0.0
                kernel.eps = kernel.find_reasonable_epsilon(theta, lp, g)
                da = _DualAveraging(kernel.eps, config.target_accept)

    kernel.eps = da.eps_bar

    values = np.empty((config.n_draws, dim))
    alphas = np.empty(config.n_draws)
    divergences = 0
    for it in range(config.n_draws):
        theta, lp, g, alpha, divergent = kernel.transition(theta, lp, g)
        values[it] = theta
        alphas[it] = alpha
        divergences += int(divergent)

    return Draws(values=values, names=names,
                 accept_rate=float(alphas.mean()),
                 divergence_count=divergences,
                 step_size=kernel.eps)
