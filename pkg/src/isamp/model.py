"""Population models, sample-adjusted likelihoods, priors and posteriors.

The central object is the sample-adjusted joint density ``p_s(y, pi | x)``
for one observed unit: the population density of ``(y, pi)`` times the
inclusion probability ``pi``, renormalized by the unit's marginal
probability of selection ``E_y[E(pi | y)]``.  For a lognormal conditional
model ``pi | y ~ lognormal(kappa_y*y + x_pi'kappa_x, sigma_pi^2)`` that
denominator has the closed form

    exp{x_pi'kappa_x + sigma_pi^2/2} * M_y(kappa_y),

with ``M_y`` the moment generating function of the population response
model.  ``denominator_oracle`` evaluates the same expectation by
Gauss-Hermite quadrature and exists so tests can check the closed form
against an independent route.

Scalar functions here (one observation at a time) are the readable
reference; dataset-level evaluation for the sampler goes through the
backend kernels (see ``isamp.kernels``).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from . import kernels
from .exceptions import DomainError, NumericalError

LOG2PI = math.log(2.0 * math.pi)
PROBIT_EPS = 1e-12

MODEL_KINDS = ("linear", "probit", "spline", "weights_only")
METHODS = ("full", "pseudo", "ignore")


# ----------------------------------------------------------------------
# domain types
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Observation:
    """One sampled unit.

    ``log_pi`` is the natural log of the (unnormalized) inclusion
    probability; only proportionality matters, so no sum constraint is
    imposed on the pi's.  ``x_y`` and ``x_pi`` are the design rows of the
    response model and the inclusion-probability model.  ``x_spline``
    optionally carries the abscissa used to build a spline design row.
    """

    y: float
    log_pi: float
    x_y: np.ndarray
    x_pi: np.ndarray
    x_spline: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "x_y", np.asarray(self.x_y, dtype=float))
        object.__setattr__(self, "x_pi", np.asarray(self.x_pi, dtype=float))
        if not math.isfinite(self.log_pi):
            raise DomainError("log_pi must be finite (pi > 0)")
        if self.x_y.size == 0 or self.x_pi.size == 0:
            raise DomainError("design rows must be non-empty")


@dataclass(frozen=True)
class ThetaLinear:
    """Parameters of the gaussian response model: coefficients and sd."""

    beta: np.ndarray
    sigma_y: float

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if not self.sigma_y > 0:
            raise DomainError("sigma_y must be positive")


@dataclass(frozen=True)
class Kappa:
    """Parameters of the conditional inclusion-probability model."""

    kappa_y: float
    kappa_x: np.ndarray
    sigma_pi: float

    def __post_init__(self):
        object.__setattr__(self, "kappa_x", np.asarray(self.kappa_x, dtype=float))
        if not self.sigma_pi > 0:
            raise DomainError("sigma_pi must be positive")


@dataclass(frozen=True)
class ThetaProbit:
    """Coefficients of the probit response model for binary outcomes."""

    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if not np.all(np.isfinite(self.beta)):
            raise DomainError("probit coefficients must be finite")


@dataclass(frozen=True)
class ParamVector:
    """Unconstrained parameter vector with a named layout.

    Location parameters are stored raw; every positive scale is stored as
    its natural log (names carry a ``log_`` prefix).
    """

    values: np.ndarray
    names: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.size != len(self.names):
            raise DomainError("values and names must have equal length")

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])


# ----------------------------------------------------------------------
# moment generating functions
# ----------------------------------------------------------------------

def mgf_normal(t: float, m: float, s2: float) -> float:
    """MGF of a normal(m, s2) variable at t: exp(t*m + t^2*s2/2)."""
    if not (math.isfinite(t) and math.isfinite(m) and math.isfinite(s2)):
        raise DomainError("mgf_normal requires finite arguments")
    if s2 < 0:
        raise DomainError("variance must be non-negative")
    return math.exp(t * m + t * t * s2 / 2.0)


def mgf_bernoulli(t: float, p: float) -> float:
    """MGF of a Bernoulli(p) variable at t: 1 - p + p*exp(t)."""
    if not (math.isfinite(t) and math.isfinite(p)):
        raise DomainError("mgf_bernoulli requires finite arguments")
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    return 1.0 - p + p * math.exp(t)


def _log_normal_pdf(z, m, v):
    return -0.5 * math.log(2.0 * math.pi * v) - (z - m) ** 2 / (2.0 * v)


# ----------------------------------------------------------------------
# per-observation sample-adjusted log likelihoods
# ----------------------------------------------------------------------

def log_ps_linear(obs: Observation, theta: ThetaLinear, kappa: Kappa) -> float:
    """Exact (normalized) log of p_s(y, pi | x) for the gaussian model."""
    m = float(obs.x_y @ theta.beta)
    a = float(obs.x_pi @ kappa.kappa_x)
    sy2 = theta.sigma_y ** 2
    sp2 = kappa.sigma_pi ** 2
    return (_log_normal_pdf(obs.log_pi, kappa.kappa_y * obs.y + a, sp2)
            - (a + sp2 / 2.0 + kappa.kappa_y * m + kappa.kappa_y ** 2 * sy2 / 2.0)
            + _log_normal_pdf(obs.y, m, sy2))


def log_ps_probit(obs: Observation, theta: ThetaProbit, kappa: Kappa) -> float:
    """Sample-adjusted log density for a binary response under a probit link."""
    if obs.y not in (0.0, 1.0):
        raise DomainError("probit response must be 0 or 1")
    p = float(ndtr(float(obs.x_y @ theta.beta)))
    p = min(max(p, PROBIT_EPS), 1.0 - PROBIT_EPS)
    a = float(obs.x_pi @ kappa.kappa_x)
    sp2 = kappa.sigma_pi ** 2
    return (_log_normal_pdf(obs.log_pi, kappa.kappa_y * obs.y + a, sp2)
            - (a + sp2 / 2.0 + math.log(mgf_bernoulli(kappa.kappa_y, p)))
            + obs.y * math.log(p) + (1.0 - obs.y) * math.log(1.0 - p))


def log_ps_weights_only(log_pi: float, x_pi, kappa: Kappa) -> float:
    """Sample-adjusted log density of an inclusion probability alone.

    The response term is switched off entirely (kappa_y is ignored), which
    makes exp(result) the size-biased lognormal density
    lognormal(x_pi'kappa_x + sigma_pi^2, sigma_pi^2) evaluated at pi.
    """
    x_pi = np.asarray(x_pi, dtype=float)
    a = float(x_pi @ kappa.kappa_x)
    sp2 = kappa.sigma_pi ** 2
    return _log_normal_pdf(log_pi, a, sp2) - (a + sp2 / 2.0)


# ----------------------------------------------------------------------
# pseudo likelihood and sampling weights
# ----------------------------------------------------------------------

def normalize_weights(pi) -> np.ndarray:
    """Inverse-probability weights standardized to sum to the sample size."""
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0) or not np.all(np.isfinite(pi)):
        raise DomainError("inclusion probabilities must be positive and finite")
    w = 1.0 / pi
    return w * (pi.size / w.sum())


def log_pseudo_likelihood(dataset: Sequence[Observation], w, theta: ThetaLinear) -> float:
    """Sampling-weight-exponentiated gaussian log likelihood."""
    w = np.asarray(w, dtype=float)
    if w.size != len(dataset):
        raise DomainError("one weight per observation required")
    if np.any(w < 0):
        raise DomainError("weights must be non-negative")
    sy2 = theta.sigma_y ** 2
    total = 0.0
    for obs, wi in zip(dataset, w):
        total += wi * _log_normal_pdf(obs.y, float(obs.x_y @ theta.beta), sy2)
    return total


# ----------------------------------------------------------------------
# priors (unconstrained scale, log-Jacobian included for log-scales)
# ----------------------------------------------------------------------

def _halfnormal_var_logpdf_u(ls):
    # sigma^2 ~ half-normal(0,1); u = log(sigma); Jacobian |d sigma^2/du| = 2e^{2u}
    return 2.0 * math.log(2.0) - 0.5 * LOG2PI - 0.5 * math.exp(4.0 * ls) + 2.0 * ls


def _halfnormal_sd_logpdf_u(ls, var):
    return (math.log(2.0) - 0.5 * (LOG2PI + math.log(var))
            - math.exp(2.0 * ls) / (2.0 * var) + ls)


def _halfcauchy_sd_logpdf_u(ls, scale):
    return (math.log(2.0) - math.log(math.pi * scale)
            - math.log1p(math.exp(2.0 * ls) / scale ** 2) + ls)


def _normal100_logpdf(v):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return float(-0.5 * v.size * (LOG2PI + math.log(100.0)) - v @ v / 200.0)


@dataclass(frozen=True)
class SplinePenalty:
    """Difference-penalty block for the spline coefficient prior."""

    Q: np.ndarray
    b: int
    k: int

    @property
    def rank(self):
        return self.b - self.k


def log_prior(params: ParamVector, model_kind: str,
              penalty: Optional[SplinePenalty] = None) -> float:
    """Joint log prior on the unconstrained scale.

    Regression models place N(0, 100) on every location parameter and
    half-normal(0, 1) on each variance; the spline model uses
    half-normal(0, 10) on sigma_y, half-Cauchy(0, 10) on sigma_beta,
    half-Cauchy(0, 1) on sigma_pi and the rank-deficient quadratic
    penalty on the spline coefficients.
    """
    if model_kind not in MODEL_KINDS:
        raise DomainError(f"unknown model kind: {model_kind!r}")
    names = params.names
    v = params.values
    total = 0.0
    if model_kind in ("linear", "probit", "weights_only"):
        for name, x in zip(names, v):
            if name.startswith("log_sigma"):
                total += _halfnormal_var_logpdf_u(x)
            else:
                total += _normal100_logpdf(x)
        return total
    # spline
    if penalty is None:
        raise DomainError("spline prior requires a SplinePenalty")
    beta = np.array([x for name, x in zip(names, v) if name.startswith("beta_")])
    ls_b = v[names.index("log_sigma_beta")]
    bp = beta[:penalty.b]
    qf = float(bp @ (penalty.Q @ bp))
    total += -penalty.rank * ls_b - qf / (2.0 * math.exp(2.0 * ls_b))
    if beta.size > penalty.b:
        total += _normal100_logpdf(beta[penalty.b:])
    for name, x in zip(names, v):
        if name == "log_sigma_y":
            total += _halfnormal_sd_logpdf_u(x, 10.0)
        elif name == "log_sigma_beta":
            total += _halfcauchy_sd_logpdf_u(x, 10.0)
        elif name == "log_sigma_pi":
            total += _halfcauchy_sd_logpdf_u(x, 1.0)
        elif name.startswith("kappa"):
            total += _normal100_logpdf(x)
    return total


# ----------------------------------------------------------------------
# denominator oracle (quadrature route for the closed form)
# ----------------------------------------------------------------------

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(64)


def denominator_oracle(theta: ThetaLinear, kappa: Kappa, x_y, x_pi) -> float:
    """E_{y|x}[E(pi | y, x)] by 64-node Gauss-Hermite quadrature.

    The inner expectation is the lognormal mean
    exp(kappa_y*y + x_pi'kappa_x + sigma_pi^2/2); the outer integral over
    y ~ normal(x_y'beta, sigma_y^2) is done numerically so the closed form
    exp{x_pi'kappa_x + sigma_pi^2/2} * mgf_normal(kappa_y, x_y'beta,
    sigma_y^2) can be verified against an independent route.
    """
    x_y = np.asarray(x_y, dtype=float)
    x_pi = np.asarray(x_pi, dtype=float)
    m = float(x_y @ theta.beta)
    a = float(x_pi @ kappa.kappa_x)
    sp2 = kappa.sigma_pi ** 2
    ys = m + math.sqrt(2.0) * theta.sigma_y * _GH_NODES
    vals = np.exp(kappa.kappa_y * ys + a + sp2 / 2.0)
    out = float(_GH_WEIGHTS @ vals) / math.sqrt(math.pi)
    if not math.isfinite(out):
        raise NumericalError("quadrature produced a non-finite value")
    return out


# ----------------------------------------------------------------------
# posterior construction
# ----------------------------------------------------------------------

def _as2d(x):
    a = np.ascontiguousarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def _layout_names(kind, method, p, q, n_pen=None):
    beta = tuple(f"beta_{i}" for i in range(p))
    kx = tuple(f"kappa_x_{j}" for j in range(q))
    if kind == "weights_only":
        return kx + ("log_sigma_pi",)
    if kind == "linear":
        if method == "full":
            return beta + ("log_sigma_y", "kappa_y") + kx + ("log_sigma_pi",)
        return beta + ("log_sigma_y",)
    if kind == "probit":
        if method == "full":
            return beta + ("kappa_y",) + kx + ("log_sigma_pi",)
        return beta
    if kind == "spline":
        if method == "full":
            return (beta + ("log_sigma_y", "log_sigma_beta", "kappa_y")
                    + kx + ("log_sigma_pi",))
        return beta + ("log_sigma_y", "log_sigma_beta")
    raise DomainError(f"unknown model kind: {kind!r}")


@dataclass
class Posterior:
    """A log posterior, its gradient and the parameter bookkeeping.

    ``logpost``/``grad`` operate on the unconstrained vector; ``constrain``
    maps draws back to the natural scale (exponentiating log-sd entries).
    """

    kind: str
    method: str
    names: tuple
    logpost: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    penalty: Optional[SplinePenalty] = None
    _log_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        self._log_mask = np.array([n.startswith("log_") for n in self.names])

    @property
    def dim(self):
        return len(self.names)

    @property
    def constrained_names(self):
        return tuple(n[4:] if n.startswith("log_") else n for n in self.names)

    def constrain(self, values: np.ndarray) -> np.ndarray:
        out = np.array(values, dtype=float, copy=True)
        out[..., self._log_mask] = np.exp(out[..., self._log_mask])
        return out

    def param_vector(self, values) -> ParamVector:
        return ParamVector(np.asarray(values, dtype=float), self.names)


def _check_method(method):
    if method not in METHODS:
        raise DomainError(f"unknown method: {method!r}")


def _weights_for(method, logpi, n):
    if method == "pseudo":
        return normalize_weights(np.exp(logpi))
    return np.ones(n)


def make_linear_posterior(y, logpi, Xy, Xpi=None, method="full") -> Posterior:
    _check_method(method)
    y = np.ascontiguousarray(y, dtype=float)
    logpi = np.ascontiguousarray(logpi, dtype=float)
    Xy = _as2d(Xy)
    if method == "full":
        Xpi = _as2d(Xpi)
        names = _layout_names("linear", "full", Xy.shape[1], Xpi.shape[1])
        return Posterior(
            "linear", method, names,
            lambda u: kernels.linear_full_logpost(u, y, logpi, Xy, Xpi),
            lambda u: kernels.linear_full_grad(u, y, logpi, Xy, Xpi),
        )
    w = np.ascontiguousarray(_weights_for(method, logpi, y.size))
    names = _layout_names("linear", method, Xy.shape[1], 0)
    return Posterior(
        "linear", method, names,
        lambda u: kernels.gauss_weighted_logpost(u, y, Xy, w),
        lambda u: kernels.gauss_weighted_grad(u, y, Xy, w),
    )


def make_probit_posterior(y, logpi, Xy, Xpi=None, method="full") -> Posterior:
    _check_method(method)
    y = np.ascontiguousarray(y, dtype=float)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DomainError("probit response must be 0 or 1")
    logpi = np.ascontiguousarray(logpi, dtype=float)
    Xy = _as2d(Xy)
    if method == "full":
        Xpi = _as2d(Xpi)
        names = _layout_names("probit", "full", Xy.shape[1], Xpi.shape[1])
        return Posterior(
            "probit", method, names,
            lambda u: kernels.probit_full_logpost(u, y, logpi, Xy, Xpi),
            lambda u: kernels.probit_full_grad(u, y, logpi, Xy, Xpi),
        )
    w = np.ascontiguousarray(_weights_for(method, logpi, y.size))
    names = _layout_names("probit", method, Xy.shape[1], 0)
    return Posterior(
        "probit", method, names,
        lambda u: kernels.probit_weighted_logpost(u, y, Xy, w),
        lambda u: kernels.probit_weighted_grad(u, y, Xy, w),
    )


def make_weights_only_posterior(logpi, Xpi) -> Posterior:
    logpi = np.ascontiguousarray(logpi, dtype=float)
    Xpi = _as2d(Xpi)
    names = _layout_names("weights_only", "full", 0, Xpi.shape[1])
    return Posterior(
        "weights_only", "full", names,
        lambda u: kernels.weights_only_logpost(u, logpi, Xpi),
        lambda u: kernels.weights_only_grad(u, logpi, Xpi),
    )


def make_spline_posterior(y, logpi, design, penalty: SplinePenalty,
                          Xpi=None, method="full") -> Posterior:
    _check_method(method)
    y = np.ascontiguousarray(y, dtype=float)
    logpi = np.ascontiguousarray(logpi, dtype=float)
    B = _as2d(design)
    Q = np.ascontiguousarray(penalty.Q, dtype=float)
    n_pen, rank = penalty.b, penalty.rank
    if method == "full":
        Xpi = _as2d(Xpi)
        names = _layout_names("spline", "full", B.shape[1], Xpi.shape[1])
        return Posterior(
            "spline", method, names,
            lambda u: kernels.spline_full_logpost(u, y, logpi, B, Xpi, Q, n_pen, rank),
            lambda u: kernels.spline_full_grad(u, y, logpi, B, Xpi, Q, n_pen, rank),
            penalty=penalty,
        )
    w = np.ascontiguousarray(_weights_for(method, logpi, y.size))
    names = _layout_names("spline", method, B.shape[1], 0)
    return Posterior(
        "spline", method, names,
        lambda u: kernels.spline_weighted_logpost(u, y, B, w, Q, n_pen, rank),
        lambda u: kernels.spline_weighted_grad(u, y, B, w, Q, n_pen, rank),
        penalty=penalty,
    )


def make_spline_nc_posterior(y, logpi, null_design, pen_design, extra_design,
                             Xpi=None, method="full") -> Posterior:
    """Non-centered spline posterior used by the fitting layer.

    Exact reparameterization of the spline model: the penalized
    coefficient block is ``sigma_beta * z`` with z standard normal, which
    removes the smoothing-scale funnel during HMC.  ``null_design`` and
    ``pen_design`` come from ``splines.penalty_factors``.
    """
    _check_method(method)
    y = np.ascontiguousarray(y, dtype=float)
    logpi = np.ascontiguousarray(logpi, dtype=float)
    A = _as2d(null_design)
    Z = _as2d(pen_design)
    Xe = (np.ascontiguousarray(extra_design, dtype=float)
          if extra_design is not None and np.size(extra_design)
          else np.empty((y.size, 0)))
    if Xe.ndim == 1:
        Xe = Xe[:, None]
    k0, r, e = A.shape[1], Z.shape[1], Xe.shape[1]
    names = (tuple(f"a_{i}" for i in range(k0))
             + tuple(f"z_{i}" for i in range(r))
             + tuple(f"c_{i}" for i in range(e))
             + ("log_sigma_y", "log_sigma_beta"))
    if method == "full":
        Xpi = _as2d(Xpi)
        q = Xpi.shape[1]
        names = names + ("kappa_y",) + tuple(f"kappa_x_{j}" for j in range(q)) \
            + ("log_sigma_pi",)
        return Posterior(
            "spline", method, names,
            lambda u: kernels.spline_nc_full_logpost(u, y, logpi, A, Z, Xe, Xpi),
            lambda u: kernels.spline_nc_full_grad(u, y, logpi, A, Z, Xe, Xpi),
        )
    w = np.ascontiguousarray(_weights_for(method, logpi, y.size))
    return Posterior(
        "spline", method, names,
        lambda u: kernels.spline_nc_weighted_logpost(u, y, A, Z, Xe, w),
        lambda u: kernels.spline_nc_weighted_grad(u, y, A, Z, Xe, w),
    )


def _posterior_from_observations(dataset, model_kind, method, penalty):
    y = np.array([o.y for o in dataset])
    logpi = np.array([o.log_pi for o in dataset])
    Xy = np.array([o.x_y for o in dataset])
    Xpi = np.array([o.x_pi for o in dataset])
    if model_kind == "linear":
        return make_linear_posterior(y, logpi, Xy, Xpi, method)
    if model_kind == "probit":
        return make_probit_posterior(y, logpi, Xy, Xpi, method)
    if model_kind == "weights_only":
        return make_weights_only_posterior(logpi, Xpi)
    if model_kind == "spline":
        # x_y already holds the basis-augmented design row
        return make_spline_posterior(y, logpi, Xy, penalty, Xpi, method)
    raise DomainError(f"unknown model kind: {model_kind!r}")


def log_posterior(dataset: Sequence[Observation], params, model_kind: str,
                  method: str = "full",
                  penalty: Optional[SplinePenalty] = None) -> float:
    """Joint log posterior of a dataset at an unconstrained parameter vector."""
    if len(dataset) == 0:
        raise DomainError("dataset must be non-empty")
    post = _posterior_from_observations(dataset, model_kind, method, penalty)
    values = params.values if isinstance(params, ParamVector) else np.asarray(params, float)
    return post.logpost(np.ascontiguousarray(values))


def grad_log_posterior(dataset: Sequence[Observation], params, model_kind: str,
                       method: str = "full",
                       penalty: Optional[SplinePenalty] = None) -> np.ndarray:
    """Gradient of ``log_posterior`` in the unconstrained parameterization.

    Analytic for the linear and weights-only models; central finite
    differences for the probit and spline models.
    """
    if len(dataset) == 0:
        raise DomainError("dataset must be non-empty")
    post = _posterior_from_observations(dataset, model_kind, method, penalty)
    values = params.values if isinstance(params, ParamVector) else np.asarray(params, float)
    g = np.asarray(post.grad(np.ascontiguousarray(values)))
    bad = np.flatnonzero(~np.isfinite(g))
    if bad.size:
        raise NumericalError(f"non-finite gradient entry at coordinate {bad[0]}")
    return g


# ----------------------------------------------------------------------
# packing helpers
# ----------------------------------------------------------------------

def pack_linear(theta: ThetaLinear, kappa: Kappa) -> ParamVector:
    """Full-model parameter vector for the gaussian response model."""
    p, q = theta.beta.size, kappa.kappa_x.size
    names = _layout_names("linear", "full", p, q)
    values = np.concatenate([
        theta.beta,
        [math.log(theta.sigma_y), kappa.kappa_y],
        kappa.kappa_x,
        [math.log(kappa.sigma_pi)],
    ])
    return ParamVector(values, names)


def unpack_linear(params: ParamVector):
    names = params.names
    v = params.values
    p = sum(1 for n in names if n.startswith("beta_"))
    q = sum(1 for n in names if n.startswith("kappa_x_"))
    theta = ThetaLinear(v[:p], math.exp(v[p]))
    kappa = Kappa(v[p + 1], v[p + 2:p + 2 + q], math.exp(v[p + 2 + q]))
    return theta, kappa
