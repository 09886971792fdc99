"""NumPy implementations of the log-posterior kernels.

These functions are the hot path of the HMC sampler: each one evaluates a
joint log posterior (or its gradient) for a whole dataset at once, on the
unconstrained scale where every positive scale parameter enters as its
natural log (the change-of-variable Jacobian is included in the returned
value).  A compiled twin with identical signatures lives in
``isamp._ckernels``; ``isamp.kernels`` picks one of the two at import time.

Parameter vector layouts (``u``):

* linear, full:      [beta (p), log_sigma_y, kappa_y, kappa_x (q), log_sigma_pi]
* gaussian, weighted: [beta (p), log_sigma_y]
* weights-only:      [kappa_x (q), log_sigma_pi]
* probit, full:      [beta (p), kappa_y, kappa_x (q), log_sigma_pi]
* probit, weighted:  [beta (p)]
* spline, full:      [beta (b_tot), log_sigma_y, log_sigma_beta,
                      kappa_y, kappa_x (q), log_sigma_pi]
* spline, weighted:  [beta (b_tot), log_sigma_y, log_sigma_beta]

The linear/probit/weights-only families carry the weakly informative
priors of the regression models (coefficients N(0, 100), variances
half-normal(0, 1)); the spline family carries the smoothing-spline priors
(sd half-normal(0, 10), penalty scale half-Cauchy(0, 10), lognormal scale
half-Cauchy(0, 1)) plus the rank-deficient difference penalty on the first
``n_pen`` coefficients.
"""

import math

import numpy as np
from scipy.special import ndtr

LOG2PI = math.log(2.0 * math.pi)
PROBIT_EPS = 1e-12

__all__ = [
    "linear_full_logpost",
    "linear_full_grad",
    "gauss_weighted_logpost",
    "gauss_weighted_grad",
    "weights_only_logpost",
    "weights_only_grad",
    "probit_full_logpost",
    "probit_full_grad",
    "probit_weighted_logpost",
    "probit_weighted_grad",
    "spline_full_logpost",
    "spline_full_grad",
    "spline_weighted_logpost",
    "spline_weighted_grad",
    "spline_nc_full_logpost",
    "spline_nc_full_grad",
    "spline_nc_weighted_logpost",
    "spline_nc_weighted_grad",
]


# ----------------------------------------------------------------------
# prior blocks (all on the unconstrained scale, Jacobian included)
# ----------------------------------------------------------------------

def _normal100_logprior(v):
    """iid N(0, 100) on location parameters."""
    v = np.atleast_1d(v)
    return -0.5 * v.size * (LOG2PI + math.log(100.0)) - float(v @ v) / 200.0


def _normal100_grad(v):
    return -v / 100.0


def _halfnormal_var_logprior(ls):
    """sigma^2 ~ half-normal(0, 1), parameterized by u = log(sigma)."""
    return 2.0 * math.log(2.0) - 0.5 * LOG2PI - 0.5 * math.exp(4.0 * ls) + 2.0 * ls


def _halfnormal_var_grad(ls):
    return 2.0 - 2.0 * math.exp(4.0 * ls)


def _halfnormal_sd_logprior(ls, var):
    """sigma ~ half-normal(0, var), parameterized by u = log(sigma)."""
    return (math.log(2.0) - 0.5 * (LOG2PI + math.log(var))
            - math.exp(2.0 * ls) / (2.0 * var) + ls)


def _halfcauchy_sd_logprior(ls, scale):
    """sigma ~ half-Cauchy(0, scale), parameterized by u = log(sigma)."""
    return (math.log(2.0) - math.log(math.pi * scale)
            - math.log1p(math.exp(2.0 * ls) / (scale * scale)) + ls)


def _finite_or_neginf(x):
    return float(x) if math.isfinite(x) else -math.inf


# ----------------------------------------------------------------------
# linear regression population model, full correction
# ----------------------------------------------------------------------

def linear_full_logpost(u, y, logpi, Xy, Xpi):
    n, p = Xy.shape
    q = Xpi.shape[1]
    beta = u[:p]
    ls_y = u[p]
    kappa_y = u[p + 1]
    kappa_x = u[p + 2:p + 2 + q]
    ls_pi = u[p + 2 + q]
    with np.errstate(over="ignore", invalid="ignore"):
        sy2 = math.exp(2.0 * ls_y) if ls_y < 300.0 else math.inf
        sp2 = math.exp(2.0 * ls_pi) if ls_pi < 300.0 else math.inf
        m = Xy @ beta
        a = Xpi @ kappa_x
        ry = y - m
        rp = logpi - kappa_y * y - a
        ll = (n * (-LOG2PI - ls_y - ls_pi)
              - float(ry @ ry) / (2.0 * sy2)
              - float(rp @ rp) / (2.0 * sp2)
              - float(a.sum()) - n * sp2 / 2.0
              - kappa_y * float(m.sum()) - n * kappa_y * kappa_y * sy2 / 2.0)
        lp = (_normal100_logprior(beta)
              + _normal100_logprior(kappa_y)
              + _normal100_logprior(kappa_x)
              + _halfnormal_var_logprior(ls_y)
              + _halfnormal_var_logprior(ls_pi))
    return _finite_or_neginf(ll + lp)


def linear_full_grad(u, y, logpi, Xy, Xpi):
    n, p = Xy.shape
    q = Xpi.shape[1]
    beta = u[:p]
    ls_y = u[p]
    kappa_y = u[p + 1]
    kappa_x = u[p + 2:p + 2 + q]
    ls_pi = u[p + 2 + q]
    g = np.empty_like(u)
    with np.errstate(over="ignore", invalid="ignore"):
        sy2 = math.exp(2.0 * ls_y) if ls_y < 300.0 else math.inf
        sp2 = math.exp(2.0 * ls_pi) if ls_pi < 300.0 else math.inf
        m = Xy @ beta
        a = Xpi @ kappa_x
        ry = y - m
        rp = logpi - kappa_y * y - a
        g[:p] = Xy.T @ (ry / sy2) - kappa_y * Xy.sum(axis=0) + _normal100_grad(beta)
        g[p] = (-n + float(ry @ ry) / sy2 - n * kappa_y * kappa_y * sy2
                + _halfnormal_var_grad(ls_y))
        g[p + 1] = (float(rp @ y) / sp2 - float(m.sum()) - n * kappa_y * sy2
                    - kappa_y / 100.0)
        g[p + 2:p + 2 + q] = (Xpi.T @ (rp / sp2) - Xpi.sum(axis=0)
                              + _normal100_grad(kappa_x))
        g[p + 2 + q] = (-n + float(rp @ rp) / sp2 - n * sp2
                        + _halfnormal_var_grad(ls_pi))
    return g


# ----------------------------------------------------------------------
# weighted gaussian regression (pseudo / unadjusted fits)
# ----------------------------------------------------------------------

def gauss_weighted_logpost(u, y, Xy, w):
    n, p = Xy.shape
    beta = u[:p]
    ls_y = u[p]
    with np.errstate(over="ignore", invalid="ignore"):
        sy2 = math.exp(2.0 * ls_y) if ls_y < 300.0 else math.inf
        ry = y - Xy @ beta
        wsum = float(w.sum())
        ll = wsum * (-0.5 * LOG2PI - ls_y) - float(w @ (ry * ry)) / (2.0 * sy2)
        lp = _normal100_logprior(beta) + _halfnormal_var_logprior(ls_y)
    return _finite_or_neginf(ll + lp)


def gauss_weighted_grad(u, y, Xy, w):
    n, p = Xy.shape
    beta = u[:p]
    ls_y = u[p]
    g = np.empty_like(u)
    with np.errstate(over="ignore", invalid="ignore"):
        sy2 = math.exp(2.0 * ls_y) if ls_y < 300.0 else math.inf
        ry = y - Xy @ beta
        g[:p] = Xy.T @ (w * ry) / sy2 + _normal100_grad(beta)
        g[p] = (-float(w.sum()) + float(w @ (ry * ry)) / sy2
                + _halfnormal_var_grad(ls_y))
    return g


# ----------------------------------------------------------------------
# inclusion-probability-only model (population weight distribution)
# ----------------------------------------------------------------------

def weights_only_logpost(u, logpi, Xpi):
    n, q = Xpi.shape
    kappa_x = u[:q]
    ls_pi = u[q]
    with np.errstate(over="ignore", invalid="ignore"):
        sp2 = math.exp(2.0 * ls_pi) if ls_pi < 300.0 else math.inf
        a = Xpi @ kappa_x
        r = logpi - a
        ll = (n * (-0.5 * LOG2PI - ls_pi) - float(r @ r) / (2.0 * sp2)
              - float(a.sum()) - n * sp2 / 2.0)
        lp = _normal100_logprior(kappa_x) + _halfnormal_var_logprior(ls_pi)
    return _finite_or_neginf(ll + lp)


def weights_only_grad(u, logpi, Xpi):
    n, q = Xpi.shape
    kappa_x = u[:q]
    ls_pi = u[q]
    g = np.empty_like(u)
    with np.errstate(over="ignore", invalid="ignore"):
        sp2 = math.exp(2.0 * ls_pi) if ls_pi < 300.0 else math.inf
        a = Xpi @ kappa_x
        r = logpi - a
        g[:q] = Xpi.T @ (r / sp2) - Xpi.sum(axis=0) + _normal100_grad(kappa_x)
        g[q] = -n + float(r @ r) / sp2 - n * sp2 + _halfnormal_var_grad(ls_pi)
    return g


# ----------------------------------------------------------------------
# probit population model for binary responses
# ----------------------------------------------------------------------

def probit_full_logpost(u, y, logpi, Xy, Xpi):
    n, p = Xy.shape
    q = Xpi.shape[1]
    beta = u[:p]
    kappa_y = u[p]
    kappa_x = u[p + 1:p + 1 + q]
    ls_pi = u[p + 1 + q]
    with np.errstate(over="ignore", invalid="ignore"):
        sp2 = math.exp(2.0 * ls_pi) if ls_pi < 300.0 else math.inf
        prob = np.clip(ndtr(Xy @ beta), PROBIT_EPS, 1.0 - PROBIT_EPS)
        a = Xpi @ kappa_x
        rp = logpi - kappa_y * y - a
        eky = math.exp(kappa_y) if kappa_y < 700.0 else math.inf
        denom = np.log1p(prob * (eky - 1.0))
        ll = (n * (-0.5 * LOG2PI - ls_pi) - float(rp @ rp) / (2.0 * sp2)
              - float(a.sum()) - n * sp2 / 2.0
              - float(denom.sum())
              + float(y @ np.log(prob)) + float((1.0 - y) @ np.log1p(-prob)))
        lp = (_normal100_logprior(beta)
              + _normal100_logprior(kappa_y)
              + _normal100_logprior(kappa_x)
              + _halfnormal_var_logprior(ls_pi))
    return _finite_or_neginf(ll + lp)


def probit_weighted_logpost(u, y, Xy, w):
    p = Xy.shape[1]
    beta = u[:p]
    with np.errstate(over="ignore", invalid="ignore"):
        prob = np.clip(ndtr(Xy @ beta), PROBIT_EPS, 1.0 - PROBIT_EPS)
        ll = float(w @ (y * np.log(prob) + (1.0 - y) * np.log1p(-prob)))
        lp = _normal100_logprior(beta)
    return _finite_or_neginf(ll + lp)


def _central_fd(f, u, args):
    """Central finite differences with step 1e-6 * max(1, |u_j|)."""
    g = np.empty_like(u)
    up = u.copy()
    for j in range(u.size):
        h = 1e-6 * max(1.0, abs(u[j]))
        uj = u[j]
        up[j] = uj + h
        fp = f(up, *args)
        up[j] = uj - h
        fm = f(up, *args)
        up[j] = uj
        g[j] = (fp - fm) / (2.0 * h)
    return g


def probit_full_grad(u, y, logpi, Xy, Xpi):
    return _central_fd(probit_full_logpost, u, (y, logpi, Xy, Xpi))


def probit_weighted_grad(u, y, Xy, w):
    return _central_fd(probit_weighted_logpost, u, (y, Xy, w))


# ----------------------------------------------------------------------
# penalized spline population model
# ----------------------------------------------------------------------

def spline_full_logpost(u, y, logpi, B, Xpi, Q, n_pen, pen_rank):
    n, btot = B.shape
    q = Xpi.shape[1]
    beta = u[:btot]
    ls_y = u[btot]
    ls_b = u[btot + 1]
    kappa_y = u[btot + 2]
    kappa_x = u[btot + 3:btot + 3 + q]
    ls_pi = u[btot + 3 + q]
    with np.errstate(over="ignore", invalid="ignore"):
        sy2 = math.exp(2.0 * ls_y) if ls_y < 300.0 else math.inf
        sb2 = math.exp(2.0 * ls_b) if ls_b < 300.0 else math.inf
        sp2 = math.exp(2.0 * ls_pi) if ls_pi < 300.0 else math.inf
        m = B @ beta
        a = Xpi @ kappa_x
        ry = y - m
        rp = logpi - kappa_y * y - a
        ll = (n * (-LOG2PI - ls_y - ls_pi)
              - float(ry @ ry) / (2.0 * sy2)
              - float(rp @ rp) / (2.0 * sp2)
              - float(a.sum()) - n * sp2 / 2.0
              - kappa_y * float(m.sum()) - n * kappa_y * kappa_y * sy2 / 2.0)
        bp = beta[:n_pen]
        qf = float(bp @ (Q @ bp))
        pen = -pen_rank * ls_b - qf / (2.0 * sb2)
        lp = (_halfnormal_sd_logprior(ls_y, 10.0)
              + _halfcauchy_sd_logprior(ls_b, 10.0)
              + _halfcauchy_sd_logprior(ls_pi, 1.0)
              + _normal100_logprior(kappa_y)
              + _normal100_logprior(kappa_x))
        if btot > n_pen:
            lp += _normal100_logprior(beta[n_pen:])
    return _finite_or_neginf(ll + pen + lp)


def spline_full_grad(u, y, logpi, B, Xpi, Q, n_pen, pen_rank):
    return _central_fd(spline_full_logpost, u, (y, logpi, B, Xpi, Q, n_pen, pen_rank))


def spline_nc_full_logpost(u, y, logpi, A, Z, Xe, Xpi):
    """Non-centered spline posterior: beta = A-part + sigma_beta * Z-part.

    Exact reparameterization of ``spline_full_logpost`` used by the fitting
    layer because it removes the smoothing-scale funnel: the penalized
    coefficients enter as standard-normal ``z`` scaled by sigma_beta, and
    the penalty kernel plus change-of-variables Jacobian reduce to a unit
    normal prior on z.  Layout: [a (null-space), z (penalized),
    c (extra columns), log_sigma_y, log_sigma_beta, kappa_y, kappa_x,
    log_sigma_pi].
    """
    n = y.shape[0]
    k0, r, e, q = A.shape[1], Z.shape[1], Xe.shape[1], Xpi.shape[1]
    a_c = u[:k0]
    z = u[k0:k0 + r]
    c = u[k0 + r:k0 + r + e]
    ls_y = u[k0 + r + e]
    ls_b = u[k0 + r + e + 1]
    kappa_y = u[k0 + r + e + 2]
    kappa_x = u[k0 + r + e + 3:k0 + r + e + 3 + q]
    ls_pi = u[k0 + r + e + 3 + q]
    with np.errstate(over="ignore", invalid="ignore"):
        sy2 = math.exp(2.0 * ls_y) if ls_y < 300.0 else math.inf
        sb = math.exp(ls_b) if ls_b < 300.0 else math.inf
        sp2 = math.exp(2.0 * ls_pi) if ls_pi < 300.0 else math.inf
        m = A @ a_c + sb * (Z @ z)
        if e:
            m = m + Xe @ c
        a = Xpi @ kappa_x
        ry = y - m
        rp = logpi - kappa_y * y - a
        ll = (n * (-LOG2PI - ls_y - ls_pi)
              - float(ry @ ry) / (2.0 * sy2)
              - float(rp @ rp) / (2.0 * sp2)
              - float(a.sum()) - n * sp2 / 2.0
              - kappa_y * float(m.sum()) - n * kappa_y * kappa_y * sy2 / 2.0)
        lp = (-0.5 * r * LOG2PI - float(z @ z) / 2.0
              + _halfnormal_sd_logprior(ls_y, 10.0)
              + _halfcauchy_sd_logprior(ls_b, 10.0)
              + _halfcauchy_sd_logprior(ls_pi, 1.0)
              + _normal100_logprior(kappa_y)
              + _normal100_logprior(kappa_x))
        if e:
            lp += _normal100_logprior(c)
    return _finite_or_neginf(ll + lp)


def spline_nc_full_grad(u, y, logpi, A, Z, Xe, Xpi):
    return _central_fd(spline_nc_full_logpost, u, (y, logpi, A, Z, Xe, Xpi))


def spline_nc_weighted_logpost(u, y, A, Z, Xe, w):
    """Non-centered twin of ``spline_weighted_logpost``."""
    k0, r, e = A.shape[1], Z.shape[1], Xe.shape[1]
    a_c = u[:k0]
    z = u[k0:k0 + r]
    c = u[k0 + r:k0 + r + e]
    ls_y = u[k0 + r + e]
    ls_b = u[k0 + r + e + 1]
    with np.errstate(over="ignore", invalid="ignore"):
        sy2 = math.exp(2.0 * ls_y) if ls_y < 300.0 else math.inf
        sb = math.exp(ls_b) if ls_b < 300.0 else math.inf
        m = A @ a_c + sb * (Z @ z)
        if e:
            m = m + Xe @ c
        ry = y - m
        wsum = float(w.sum())
        ll = wsum * (-0.5 * LOG2PI - ls_y) - float(w @ (ry * ry)) / (2.0 * sy2)
        lp = (-0.5 * r * LOG2PI - float(z @ z) / 2.0
              + _halfnormal_sd_logprior(ls_y, 10.0)
              + _halfcauchy_sd_logprior(ls_b, 10.0))
        if e:
            lp += _normal100_logprior(c)
    return _finite_or_neginf(ll + lp)


def spline_nc_weighted_grad(u, y, A, Z, Xe, w):
    return _central_fd(spline_nc_weighted_logpost, u, (y, A, Z, Xe, w))


def spline_weighted_logpost(u, y, B, w, Q, n_pen, pen_rank):
    n, btot = B.shape
    beta = u[:btot]
    ls_y = u[btot]
    ls_b = u[btot + 1]
    with np.errstate(over="ignore", invalid="ignore"):
        sy2 = math.exp(2.0 * ls_y) if ls_y < 300.0 else math.inf
        sb2 = math.exp(2.0 * ls_b) if ls_b < 300.0 else math.inf
        ry = y - B @ beta
        wsum = float(w.sum())
        ll = wsum * (-0.5 * LOG2PI - ls_y) - float(w @ (ry * ry)) / (2.0 * sy2)
        bp = beta[:n_pen]
        qf = float(bp @ (Q @ bp))
        pen = -pen_rank * ls_b - qf / (2.0 * sb2)
        lp = (_halfnormal_sd_logprior(ls_y, 10.0)
              + _halfcauchy_sd_logprior(ls_b, 10.0))
        if btot > n_pen:
            lp += _normal100_logprior(beta[n_pen:])
    return _finite_or_neginf(ll + pen + lp)


def spline_weighted_grad(u, y, B, w, Q, n_pen, pen_rank):
    return _central_fd(spline_weighted_logpost, u, (y, B, w, Q, n_pen, pen_rank))
