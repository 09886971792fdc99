# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of ``isamp._pykernels``.

Same function names, signatures and semantics; plain C loops instead of
NumPy vector expressions.  See the pure-Python module for the parameter
layout documentation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, erfc, exp, isfinite, log, log1p, sqrt

cnp.import_array()

cdef double LOG2PI = 1.8378770664093453
cdef double PROBIT_EPS = 1e-12


cdef inline double _normal100_logprior(const double[::1] v, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(lo, hi):
        s += v[i] * v[i]
    return -0.5 * (hi - lo) * (LOG2PI + log(100.0)) - s / 200.0


cdef inline double _halfnormal_var_logprior(double ls) noexcept nogil:
    return 2.0 * log(2.0) - 0.5 * LOG2PI - 0.5 * exp(4.0 * ls) + 2.0 * ls


cdef inline double _halfnormal_var_grad(double ls) noexcept nogil:
    return 2.0 - 2.0 * exp(4.0 * ls)


cdef inline double _halfnormal_sd_logprior(double ls, double var) noexcept nogil:
    return log(2.0) - 0.5 * (LOG2PI + log(var)) - exp(2.0 * ls) / (2.0 * var) + ls


cdef inline double _halfcauchy_sd_logprior(double ls, double scale) noexcept nogil:
    return (log(2.0) - log(3.141592653589793 * scale)
            - log1p(exp(2.0 * ls) / (scale * scale)) + ls)


cdef inline double _ndtr(double x) noexcept nogil:
    return 0.5 * erfc(-x * 0.7071067811865476)


cdef inline double _sq_exp(double ls) noexcept nogil:
    if ls < 300.0:
        return exp(2.0 * ls)
    return INFINITY


# ----------------------------------------------------------------------
# linear regression population model, full correction
# ----------------------------------------------------------------------

cdef double _linear_full_logpost(const double[::1] u, const double[::1] y,
                                 const double[::1] logpi,
                                 const double[:, ::1] Xy,
                                 const double[:, ::1] Xpi) noexcept nogil:
    cdef Py_ssize_t n = Xy.shape[0]
    cdef Py_ssize_t p = Xy.shape[1]
    cdef Py_ssize_t q = Xpi.shape[1]
    cdef double ls_y = u[p]
    cdef double kappa_y = u[p + 1]
    cdef double ls_pi = u[p + 2 + q]
    cdef double sy2 = _sq_exp(ls_y)
    cdef double sp2 = _sq_exp(ls_pi)
    cdef double ssy = 0.0, ssp = 0.0, asum = 0.0, msum = 0.0
    cdef double m, a, ry, rp, ll, lp
    cdef Py_ssize_t i, j
    for i in range(n):
        m = 0.0
        for j in range(p):
            m += Xy[i, j] * u[j]
        a = 0.0
        for j in range(q):
            a += Xpi[i, j] * u[p + 2 + j]
        ry = y[i] - m
        rp = logpi[i] - kappa_y * y[i] - a
        ssy += ry * ry
        ssp += rp * rp
        asum += a
        msum += m
    ll = (n * (-LOG2PI - ls_y - ls_pi)
          - ssy / (2.0 * sy2) - ssp / (2.0 * sp2)
          - asum - n * sp2 / 2.0
          - kappa_y * msum - n * kappa_y * kappa_y * sy2 / 2.0)
    lp = (_normal100_logprior(u, 0, p)
          + _normal100_logprior(u, p + 1, p + 2 + q)
          + _halfnormal_var_logprior(ls_y)
          + _halfnormal_var_logprior(ls_pi))
    if isfinite(ll + lp):
        return ll + lp
    return -INFINITY


def linear_full_logpost(const double[::1] u, const double[::1] y,
                        const double[::1] logpi, const double[:, ::1] Xy,
                        const double[:, ::1] Xpi):
    return _linear_full_logpost(u, y, logpi, Xy, Xpi)


def linear_full_grad(const double[::1] u, const double[::1] y,
                     const double[::1] logpi, const double[:, ::1] Xy,
                     const double[:, ::1] Xpi):
    cdef Py_ssize_t n = Xy.shape[0]
    cdef Py_ssize_t p = Xy.shape[1]
    cdef Py_ssize_t q = Xpi.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(u.shape[0], dtype=np.float64)
    cdef double[::1] g = out
    cdef double ls_y = u[p]
    cdef double kappa_y = u[p + 1]
    cdef double ls_pi = u[p + 2 + q]
    cdef double sy2 = _sq_exp(ls_y)
    cdef double sp2 = _sq_exp(ls_pi)
    cdef double ssy = 0.0, ssp = 0.0, msum = 0.0, rpy = 0.0
    cdef double m, a, ry, rp
    cdef Py_ssize_t i, j
    with nogil:
        for j in range(u.shape[0]):
            g[j] = 0.0
        for i in range(n):
            m = 0.0
            for j in range(p):
                m += Xy[i, j] * u[j]
            a = 0.0
            for j in range(q):
                a += Xpi[i, j] * u[p + 2 + j]
            ry = y[i] - m
            rp = logpi[i] - kappa_y * y[i] - a
            ssy += ry * ry
            ssp += rp * rp
            msum += m
            rpy += rp * y[i]
            for j in range(p):
                g[j] += Xy[i, j] * (ry / sy2 - kappa_y)
            for j in range(q):
                g[p + 2 + j] += Xpi[i, j] * (rp / sp2 - 1.0)
        for j in range(p):
            g[j] -= u[j] / 100.0
        g[p] = -<double>n + ssy / sy2 - n * kappa_y * kappa_y * sy2 + _halfnormal_var_grad(ls_y)
        g[p + 1] = rpy / sp2 - msum - n * kappa_y * sy2 - kappa_y / 100.0
        for j in range(q):
            g[p + 2 + j] -= u[p + 2 + j] / 100.0
        g[p + 2 + q] = -<double>n + ssp / sp2 - n * sp2 + _halfnormal_var_grad(ls_pi)
    return out


# ----------------------------------------------------------------------
# weighted gaussian regression (pseudo / unadjusted fits)
# ----------------------------------------------------------------------

cdef double _gauss_weighted_logpost(const double[::1] u, const double[::1] y,
                                    const double[:, ::1] Xy,
                                    const double[::1] w) noexcept nogil:
    cdef Py_ssize_t n = Xy.shape[0]
    cdef Py_ssize_t p = Xy.shape[1]
    cdef double ls_y = u[p]
    cdef double sy2 = _sq_exp(ls_y)
    cdef double wss = 0.0, wsum = 0.0
    cdef double m, ry, ll, lp
    cdef Py_ssize_t i, j
    for i in range(n):
        m = 0.0
        for j in range(p):
            m += Xy[i, j] * u[j]
        ry = y[i] - m
        wss += w[i] * ry * ry
        wsum += w[i]
    ll = wsum * (-0.5 * LOG2PI - ls_y) - wss / (2.0 * sy2)
    lp = _normal100_logprior(u, 0, p) + _halfnormal_var_logprior(ls_y)
    if isfinite(ll + lp):
        return ll + lp
    return -INFINITY


def gauss_weighted_logpost(const double[::1] u, const double[::1] y,
                           const double[:, ::1] Xy, const double[::1] w):
    return _gauss_weighted_logpost(u, y, Xy, w)


def gauss_weighted_grad(const double[::1] u, const double[::1] y,
                        const double[:, ::1] Xy, const double[::1] w):
    cdef Py_ssize_t n = Xy.shape[0]
    cdef Py_ssize_t p = Xy.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(u.shape[0], dtype=np.float64)
    cdef double[::1] g = out
    cdef double ls_y = u[p]
    cdef double sy2 = _sq_exp(ls_y)
    cdef double wss = 0.0, wsum = 0.0
    cdef double m, ry
    cdef Py_ssize_t i, j
    with nogil:
        for j in range(p):
            g[j] = 0.0
        for i in range(n):
            m = 0.0
            for j in range(p):
                m += Xy[i, j] * u[j]
            ry = y[i] - m
            wss += w[i] * ry * ry
            wsum += w[i]
            for j in range(p):
                g[j] += Xy[i, j] * w[i] * ry / sy2
        for j in range(p):
            g[j] -= u[j] / 100.0
        g[p] = -wsum + wss / sy2 + _halfnormal_var_grad(ls_y)
    return out


# ----------------------------------------------------------------------
# inclusion-probability-only model
# ----------------------------------------------------------------------

cdef double _weights_only_logpost(const double[::1] u, const double[::1] logpi,
                                  const double[:, ::1] Xpi) noexcept nogil:
    cdef Py_ssize_t n = Xpi.shape[0]
    cdef Py_ssize_t q = Xpi.shape[1]
    cdef double ls_pi = u[q]
    cdef double sp2 = _sq_exp(ls_pi)
    cdef double ss = 0.0, asum = 0.0
    cdef double a, r, ll, lp
    cdef Py_ssize_t i, j
    for i in range(n):
        a = 0.0
        for j in range(q):
            a += Xpi[i, j] * u[j]
        r = logpi[i] - a
        ss += r * r
        asum += a
    ll = n * (-0.5 * LOG2PI - ls_pi) - ss / (2.0 * sp2) - asum - n * sp2 / 2.0
    lp = _normal100_logprior(u, 0, q) + _halfnormal_var_logprior(ls_pi)
    if isfinite(ll + lp):
        return ll + lp
    return -INFINITY


def weights_only_logpost(const double[::1] u, const double[::1] logpi,
                         const double[:, ::1] Xpi):
    return _weights_only_logpost(u, logpi, Xpi)


def weights_only_grad(const double[::1] u, const double[::1] logpi,
                      const double[:, ::1] Xpi):
    cdef Py_ssize_t n = Xpi.shape[0]
    cdef Py_ssize_t q = Xpi.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(u.shape[0], dtype=np.float64)
    cdef double[::1] g = out
    cdef double ls_pi = u[q]
    cdef double sp2 = _sq_exp(ls_pi)
    cdef double ss = 0.0
    cdef double a, r
    cdef Py_ssize_t i, j
    with nogil:
        for j in range(q):
            g[j] = 0.0
        for i in range(n):
            a = 0.0
            for j in range(q):
                a += Xpi[i, j] * u[j]
            r = logpi[i] - a
            ss += r * r
            for j in range(q):
                g[j] += Xpi[i, j] * (r / sp2 - 1.0)
        for j in range(q):
            g[j] -= u[j] / 100.0
        g[q] = -<double>n + ss / sp2 - n * sp2 + _halfnormal_var_grad(ls_pi)
    return out


# ----------------------------------------------------------------------
# probit population model
# ----------------------------------------------------------------------

cdef double _probit_full_logpost(const double[::1] u, const double[::1] y,
                                 const double[::1] logpi,
                                 const double[:, ::1] Xy,
                                 const double[:, ::1] Xpi) noexcept nogil:
    cdef Py_ssize_t n = Xy.shape[0]
    cdef Py_ssize_t p = Xy.shape[1]
    cdef Py_ssize_t q = Xpi.shape[1]
    cdef double kappa_y = u[p]
    cdef double ls_pi = u[p + 1 + q]
    cdef double sp2 = _sq_exp(ls_pi)
    cdef double eky = exp(kappa_y) if kappa_y < 700.0 else INFINITY
    cdef double ssp = 0.0, asum = 0.0, dsum = 0.0, bern = 0.0
    cdef double eta, prob, a, rp, ll, lp
    cdef Py_ssize_t i, j
    for i in range(n):
        eta = 0.0
        for j in range(p):
            eta += Xy[i, j] * u[j]
        prob = _ndtr(eta)
        if prob < PROBIT_EPS:
            prob = PROBIT_EPS
        elif prob > 1.0 - PROBIT_EPS:
            prob = 1.0 - PROBIT_EPS
        a = 0.0
        for j in range(q):
            a += Xpi[i, j] * u[p + 1 + j]
        rp = logpi[i] - kappa_y * y[i] - a
        ssp += rp * rp
        asum += a
        dsum += log1p(prob * (eky - 1.0))
        bern += y[i] * log(prob) + (1.0 - y[i]) * log1p(-prob)
    ll = (n * (-0.5 * LOG2PI - ls_pi) - ssp / (2.0 * sp2)
          - asum - n * sp2 / 2.0 - dsum + bern)
    lp = (_normal100_logprior(u, 0, p)
          + _normal100_logprior(u, p, p + 1 + q)
          + _halfnormal_var_logprior(ls_pi))
    if isfinite(ll + lp):
        return ll + lp
    return -INFINITY


def probit_full_logpost(const double[::1] u, const double[::1] y,
                        const double[::1] logpi, const double[:, ::1] Xy,
                        const double[:, ::1] Xpi):
    return _probit_full_logpost(u, y, logpi, Xy, Xpi)


cdef double _probit_weighted_logpost(const double[::1] u, const double[::1] y,
                                     const double[:, ::1] Xy,
                                     const double[::1] w) noexcept nogil:
    cdef Py_ssize_t n = Xy.shape[0]
    cdef Py_ssize_t p = Xy.shape[1]
    cdef double bern = 0.0
    cdef double eta, prob, ll, lp
    cdef Py_ssize_t i, j
    for i in range(n):
        eta = 0.0
        for j in range(p):
            eta += Xy[i, j] * u[j]
        prob = _ndtr(eta)
        if prob < PROBIT_EPS:
            prob = PROBIT_EPS
        elif prob > 1.0 - PROBIT_EPS:
            prob = 1.0 - PROBIT_EPS
        bern += w[i] * (y[i] * log(prob) + (1.0 - y[i]) * log1p(-prob))
    ll = bern
    lp = _normal100_logprior(u, 0, p)
    if isfinite(ll + lp):
        return ll + lp
    return -INFINITY


def probit_weighted_logpost(const double[::1] u, const double[::1] y,
                            const double[:, ::1] Xy, const double[::1] w):
    return _probit_weighted_logpost(u, y, Xy, w)


def probit_full_grad(const double[::1] u, const double[::1] y,
                     const double[::1] logpi, const double[:, ::1] Xy,
                     const double[:, ::1] Xpi):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(u.shape[0], dtype=np.float64)
    cdef double[::1] g = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ubuf = np.array(u, dtype=np.float64)
    cdef double[::1] up = ubuf
    cdef double h, uj, fp, fm
    cdef Py_ssize_t j
    with nogil:
        for j in range(u.shape[0]):
            uj = up[j]
            h = 1e-6 * (1.0 if uj < 1.0 and uj > -1.0 else (uj if uj > 0 else -uj))
            up[j] = uj + h
            fp = _probit_full_logpost(up, y, logpi, Xy, Xpi)
            up[j] = uj - h
            fm = _probit_full_logpost(up, y, logpi, Xy, Xpi)
            up[j] = uj
            g[j] = (fp - fm) / (2.0 * h)
    return out


def probit_weighted_grad(const double[::1] u, const double[::1] y,
                         const double[:, ::1] Xy, const double[::1] w):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(u.shape[0], dtype=np.float64)
    cdef double[::1] g = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ubuf = np.array(u, dtype=np.float64)
    cdef double[::1] up = ubuf
    cdef double h, uj, fp, fm
    cdef Py_ssize_t j
    with nogil:
        for j in range(u.shape[0]):
            uj = up[j]
            h = 1e-6 * (1.0 if uj < 1.0 and uj > -1.0 else (uj if uj > 0 else -uj))
            up[j] = uj + h
            fp = _probit_weighted_logpost(up, y, Xy, w)
            up[j] = uj - h
            fm = _probit_weighted_logpost(up, y, Xy, w)
            up[j] = uj
            g[j] = (fp - fm) / (2.0 * h)
    return out


# ----------------------------------------------------------------------
# penalized spline population model
# ----------------------------------------------------------------------

cdef double _spline_full_logpost(const double[::1] u, const double[::1] y,
                                 const double[::1] logpi,
                                 const double[:, ::1] B,
                                 const double[:, ::1] Xpi,
                                 const double[:, ::1] Q,
                                 Py_ssize_t n_pen, long pen_rank) noexcept nogil:
    cdef Py_ssize_t n = B.shape[0]
    cdef Py_ssize_t btot = B.shape[1]
    cdef Py_ssize_t q = Xpi.shape[1]
    cdef double ls_y = u[btot]
    cdef double ls_b = u[btot + 1]
    cdef double kappa_y = u[btot + 2]
    cdef double ls_pi = u[btot + 3 + q]
    cdef double sy2 = _sq_exp(ls_y)
    cdef double sb2 = _sq_exp(ls_b)
    cdef double sp2 = _sq_exp(ls_pi)
    cdef double ssy = 0.0, ssp = 0.0, asum = 0.0, msum = 0.0, qf = 0.0
    cdef double m, a, ry, rp, ll, pen, lp
    cdef Py_ssize_t i, j
    for i in range(n):
        m = 0.0
        for j in range(btot):
            m += B[i, j] * u[j]
        a = 0.0
        for j in range(q):
            a += Xpi[i, j] * u[btot + 3 + j]
        ry = y[i] - m
        rp = logpi[i] - kappa_y * y[i] - a
        ssy += ry * ry
        ssp += rp * rp
        asum += a
        msum += m
    for i in range(n_pen):
        for j in range(n_pen):
            qf += u[i] * Q[i, j] * u[j]
    ll = (n * (-LOG2PI - ls_y - ls_pi)
          - ssy / (2.0 * sy2) - ssp / (2.0 * sp2)
          - asum - n * sp2 / 2.0
          - kappa_y * msum - n * kappa_y * kappa_y * sy2 / 2.0)
    pen = -pen_rank * ls_b - qf / (2.0 * sb2)
    lp = (_halfnormal_sd_logprior(ls_y, 10.0)
          + _halfcauchy_sd_logprior(ls_b, 10.0)
          + _halfcauchy_sd_logprior(ls_pi, 1.0)
          + _normal100_logprior(u, btot + 2, btot + 3 + q))
    if btot > n_pen:
        lp += _normal100_logprior(u, n_pen, btot)
    if isfinite(ll + pen + lp):
        return ll + pen + lp
    return -INFINITY


def spline_full_logpost(const double[::1] u, const double[::1] y,
                        const double[::1] logpi, const double[:, ::1] B,
                        const double[:, ::1] Xpi, const double[:, ::1] Q,
                        Py_ssize_t n_pen, long pen_rank):
    return _spline_full_logpost(u, y, logpi, B, Xpi, Q, n_pen, pen_rank)


def spline_full_grad(const double[::1] u, const double[::1] y,
                     const double[::1] logpi, const double[:, ::1] B,
                     const double[:, ::1] Xpi, const double[:, ::1] Q,
                     Py_ssize_t n_pen, long pen_rank):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(u.shape[0], dtype=np.float64)
    cdef double[::1] g = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ubuf = np.array(u, dtype=np.float64)
    cdef double[::1] up = ubuf
    cdef double h, uj, fp, fm
    cdef Py_ssize_t j
    with nogil:
        for j in range(u.shape[0]):
            uj = up[j]
            h = 1e-6 * (1.0 if uj < 1.0 and uj > -1.0 else (uj if uj > 0 else -uj))
            up[j] = uj + h
            fp = _spline_full_logpost(up, y, logpi, B, Xpi, Q, n_pen, pen_rank)
            up[j] = uj - h
            fm = _spline_full_logpost(up, y, logpi, B, Xpi, Q, n_pen, pen_rank)
            up[j] = uj
            g[j] = (fp - fm) / (2.0 * h)
    return out


cdef double _spline_nc_full_logpost(const double[::1] u, const double[::1] y,
                                    const double[::1] logpi,
                                    const double[:, ::1] A,
                                    const double[:, ::1] Z,
                                    const double[:, ::1] Xe,
                                    const double[:, ::1] Xpi) noexcept nogil:
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t k0 = A.shape[1]
    cdef Py_ssize_t r = Z.shape[1]
    cdef Py_ssize_t e = Xe.shape[1]
    cdef Py_ssize_t q = Xpi.shape[1]
    cdef double ls_y = u[k0 + r + e]
    cdef double ls_b = u[k0 + r + e + 1]
    cdef double kappa_y = u[k0 + r + e + 2]
    cdef double ls_pi = u[k0 + r + e + 3 + q]
    cdef double sy2 = _sq_exp(ls_y)
    cdef double sb = exp(ls_b) if ls_b < 300.0 else INFINITY
    cdef double sp2 = _sq_exp(ls_pi)
    cdef double ssy = 0.0, ssp = 0.0, asum = 0.0, msum = 0.0, zz = 0.0
    cdef double m, a, ry, rp, ll, lp
    cdef Py_ssize_t i, j
    for i in range(n):
        m = 0.0
        for j in range(k0):
            m += A[i, j] * u[j]
        for j in range(r):
            m += sb * Z[i, j] * u[k0 + j]
        for j in range(e):
            m += Xe[i, j] * u[k0 + r + j]
        a = 0.0
        for j in range(q):
            a += Xpi[i, j] * u[k0 + r + e + 3 + j]
        ry = y[i] - m
        rp = logpi[i] - kappa_y * y[i] - a
        ssy += ry * ry
        ssp += rp * rp
        asum += a
        msum += m
    for j in range(r):
        zz += u[k0 + j] * u[k0 + j]
    ll = (n * (-LOG2PI - ls_y - ls_pi)
          - ssy / (2.0 * sy2) - ssp / (2.0 * sp2)
          - asum - n * sp2 / 2.0
          - kappa_y * msum - n * kappa_y * kappa_y * sy2 / 2.0)
    lp = (-0.5 * r * LOG2PI - zz / 2.0
          + _halfnormal_sd_logprior(ls_y, 10.0)
          + _halfcauchy_sd_logprior(ls_b, 10.0)
          + _halfcauchy_sd_logprior(ls_pi, 1.0)
          + _normal100_logprior(u, k0 + r + e + 2, k0 + r + e + 3 + q))
    if e > 0:
        lp += _normal100_logprior(u, k0 + r, k0 + r + e)
    if isfinite(ll + lp):
        return ll + lp
    return -INFINITY


def spline_nc_full_logpost(const double[::1] u, const double[::1] y,
                           const double[::1] logpi, const double[:, ::1] A,
                           const double[:, ::1] Z, const double[:, ::1] Xe,
                           const double[:, ::1] Xpi):
    return _spline_nc_full_logpost(u, y, logpi, A, Z, Xe, Xpi)


def spline_nc_full_grad(const double[::1] u, const double[::1] y,
                        const double[::1] logpi, const double[:, ::1] A,
                        const double[:, ::1] Z, const double[:, ::1] Xe,
                        const double[:, ::1] Xpi):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(u.shape[0], dtype=np.float64)
    cdef double[::1] g = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ubuf = np.array(u, dtype=np.float64)
    cdef double[::1] up = ubuf
    cdef double h, uj, fp, fm
    cdef Py_ssize_t j
    with nogil:
        for j in range(u.shape[0]):
            uj = up[j]
            h = 1e-6 * (1.0 if uj < 1.0 and uj > -1.0 else (uj if uj > 0 else -uj))
            up[j] = uj + h
            fp = _spline_nc_full_logpost(up, y, logpi, A, Z, Xe, Xpi)
            up[j] = uj - h
            fm = _spline_nc_full_logpost(up, y, logpi, A, Z, Xe, Xpi)
            up[j] = uj
            g[j] = (fp - fm) / (2.0 * h)
    return out


cdef double _spline_nc_weighted_logpost(const double[::1] u, const double[::1] y,
                                        const double[:, ::1] A,
                                        const double[:, ::1] Z,
                                        const double[:, ::1] Xe,
                                        const double[::1] w) noexcept nogil:
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t k0 = A.shape[1]
    cdef Py_ssize_t r = Z.shape[1]
    cdef Py_ssize_t e = Xe.shape[1]
    cdef double ls_y = u[k0 + r + e]
    cdef double ls_b = u[k0 + r + e + 1]
    cdef double sy2 = _sq_exp(ls_y)
    cdef double sb = exp(ls_b) if ls_b < 300.0 else INFINITY
    cdef double wss = 0.0, wsum = 0.0, zz = 0.0
    cdef double m, ry, ll, lp
    cdef Py_ssize_t i, j
    for i in range(n):
        m = 0.0
        for j in range(k0):
            m += A[i, j] * u[j]
        for j in range(r):
            m += sb * Z[i, j] * u[k0 + j]
        for j in range(e):
            m += Xe[i, j] * u[k0 + r + j]
        ry = y[i] - m
        wss += w[i] * ry * ry
        wsum += w[i]
    for j in range(r):
        zz += u[k0 + j] * u[k0 + j]
    ll = wsum * (-0.5 * LOG2PI - ls_y) - wss / (2.0 * sy2)
    lp = (-0.5 * r * LOG2PI - zz / 2.0
          + _halfnormal_sd_logprior(ls_y, 10.0)
          + _halfcauchy_sd_logprior(ls_b, 10.0))
    if e > 0:
        lp += _normal100_logprior(u, k0 + r, k0 + r + e)
    if isfinite(ll + lp):
        return ll + lp
    return -INFINITY


def spline_nc_weighted_logpost(const double[::1] u, const double[::1] y,
                               const double[:, ::1] A, const double[:, ::1] Z,
                               const double[:, ::1] Xe, const double[::1] w):
    return _spline_nc_weighted_logpost(u, y, A, Z, Xe, w)


def spline_nc_weighted_grad(const double[::1] u, const double[::1] y,
                            const double[:, ::1] A, const double[:, ::1] Z,
                            const double[:, ::1] Xe, const double[::1] w):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(u.shape[0], dtype=np.float64)
    cdef double[::1] g = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ubuf = np.array(u, dtype=np.float64)
    cdef double[::1] up = ubuf
    cdef double h, uj, fp, fm
    cdef Py_ssize_t j
    with nogil:
        for j in range(u.shape[0]):
            uj = up[j]
            h = 1e-6 * (1.0 if uj < 1.0 and uj > -1.0 else (uj if uj > 0 else -uj))
            up[j] = uj + h
            fp = _spline_nc_weighted_logpost(up, y, A, Z, Xe, w)
            up[j] = uj - h
            fm = _spline_nc_weighted_logpost(up, y, A, Z, Xe, w)
            up[j] = uj
            g[j] = (fp - fm) / (2.0 * h)
    return out


cdef double _spline_weighted_logpost(const double[::1] u, const double[::1] y,
                                     const double[:, ::1] B,
                                     const double[::1] w,
                                     const double[:, ::1] Q,
                                     Py_ssize_t n_pen, long pen_rank) noexcept nogil:
    cdef Py_ssize_t n = B.shape[0]
    cdef Py_ssize_t btot = B.shape[1]
    cdef double ls_y = u[btot]
    cdef double ls_b = u[btot + 1]
    cdef double sy2 = _sq_exp(ls_y)
    cdef double sb2 = _sq_exp(ls_b)
    cdef double wss = 0.0, wsum = 0.0, qf = 0.0
    cdef double m, ry, ll, pen, lp
    cdef Py_ssize_t i, j
    for i in range(n):
        m = 0.0
        for j in range(btot):
            m += B[i, j] * u[j]
        ry = y[i] - m
        wss += w[i] * ry * ry
        wsum += w[i]
    for i in range(n_pen):
        for j in range(n_pen):
            qf += u[i] * Q[i, j] * u[j]
    ll = wsum * (-0.5 * LOG2PI - ls_y) - wss / (2.0 * sy2)
    pen = -pen_rank * ls_b - qf / (2.0 * sb2)
    lp = _halfnormal_sd_logprior(ls_y, 10.0) + _halfcauchy_sd_logprior(ls_b, 10.0)
    if btot > n_pen:
        lp += _normal100_logprior(u, n_pen, btot)
    if isfinite(ll + pen + lp):
        return ll + pen + lp
    return -INFINITY


def spline_weighted_logpost(const double[::1] u, const double[::1] y,
                            const double[:, ::1] B, const double[::1] w,
                            const double[:, ::1] Q, Py_ssize_t n_pen,
                            long pen_rank):
    return _spline_weighted_logpost(u, y, B, w, Q, n_pen, pen_rank)


def spline_weighted_grad(const double[::1] u, const double[::1] y,
                         const double[:, ::1] B, const double[::1] w,
                         const double[:, ::1] Q, Py_ssize_t n_pen,
                         long pen_rank):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(u.shape[0], dtype=np.float64)
    cdef double[::1] g = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ubuf = np.array(u, dtype=np.float64)
    cdef double[::1] up = ubuf
    cdef double h, uj, fp, fm
    cdef Py_ssize_t j
    with nogil:
        for j in range(u.shape[0]):
            uj = up[j]
            h = 1e-6 * (1.0 if uj < 1.0 and uj > -1.0 else (uj if uj > 0 else -uj))
            up[j] = uj + h
            fp = _spline_weighted_logpost(up, y, B, w, Q, n_pen, pen_rank)
            up[j] = uj - h
            fm = _spline_weighted_logpost(up, y, B, w, Q, n_pen, pen_rank)
            up[j] = uj
            g[j] = (fp - fm) / (2.0 * h)
    return out
