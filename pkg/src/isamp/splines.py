"""Cubic B-spline bases and the difference-penalty smoothing prior.

Bases are clamped: boundary knots are replicated ``degree + 1`` times and
the first/last breakpoints sit at the data minimum/maximum, so evaluation
at the boundaries interpolates.  The coefficient prior is the improper
rank-(b-k) Gaussian kernel built from the k-th order difference operator.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError


@dataclass
class SplineBasis:
    """A clamped B-spline basis on a fixed knot span.

    ``knots`` is the full (nondecreasing) knot vector of length
    ``b + degree + 1``.  Evaluation outside the span clamps to the nearest
    boundary; the number of clamped evaluations is counted in
    ``clamp_count`` so prediction grids that touch the boundary stay
    usable without silently hiding genuine extrapolation.
    """

    knots: np.ndarray
    degree: int
    b: int
    clamp_count: int = field(default=0, compare=False)

    @property
    def x_min(self):
        return float(self.knots[self.degree])

    @property
    def x_max(self):
        return float(self.knots[self.b])


def build_basis(x_values, b: int, degree: int = 3) -> SplineBasis:
    """Basis with equally spaced interior knots covering the data range."""
    x = np.asarray(x_values, dtype=float)
    if b <= degree:
        raise DomainError("need more basis functions than the degree")
    lo, hi = float(np.min(x)), float(np.max(x))
    if not lo < hi:
        raise DomainError("x values must not be constant")
    # b - degree + 1 breakpoints from min to max, clamped ends
    breaks = np.linspace(lo, hi, b - degree + 1)
    knots = np.concatenate([np.full(degree, lo), breaks, np.full(degree, hi)])
    return SplineBasis(knots=knots, degree=degree, b=b)


def eval_row(basis: SplineBasis, x: float) -> np.ndarray:
    """Length-b row of basis values at x (de Boor recursion).

    Entries are non-negative and sum to one on the knot span; out-of-span
    x is clamped to the boundary and counted.
    """
    t = basis.knots
    d = basis.degree
    if x < basis.x_min or x > basis.x_max:
        basis.clamp_count += 1
        x = min(max(x, basis.x_min), basis.x_max)
    # locate the knot interval [t[i], t[i+1]) containing x
    i = int(np.searchsorted(t, x, side="right") - 1)
    i = min(max(i, d), basis.b - 1)
    # triangular de Boor scheme for the d+1 local nonzero functions
    vals = np.zeros(d + 1)
    vals[0] = 1.0
    for r in range(1, d + 1):
        left = np.empty(r)
        right = np.empty(r)
        for j in range(r):
            left[j] = x - t[i + 1 - r + j]
            right[j] = t[i + 1 + j] - x
        saved = 0.0
        for j in range(r):
            term = vals[j] / (right[j] + left[j])
            vals[j] = saved + right[j] * term
            saved = left[j] * term
        vals[r] = saved
    row = np.zeros(basis.b)
    row[i - d:i + 1] = vals
    return row


def design_matrix(basis: SplineBasis, x_values) -> np.ndarray:
    """Stack of ``eval_row`` over a vector of x values."""
    x = np.asarray(x_values, dtype=float)
    return np.vstack([eval_row(basis, xi) for xi in x])


def penalty_matrix(b: int, k: int) -> np.ndarray:
    """Q = D'D with D the (b-k) x b k-th order difference operator."""
    if not 0 < k < b:
        raise DomainError("difference order must satisfy 0 < k < b")
    D = np.diff(np.eye(b), k, axis=0)
    return D.T @ D


def penalty_factors(Q, b: int, k: int):
    """Eigen-split of the penalty: flat (null) and penalized directions.

    Returns ``(null_T, pen_T)`` with shapes (b, k) and (b, b-k) such that
    ``beta = null_T @ a + sigma_beta * pen_T @ z`` has exactly the
    rank-deficient kernel prior when ``z`` is standard normal and ``a`` is
    unrestricted.  Used for the funnel-free sampling parameterization.
    """
    Q = np.asarray(Q, dtype=float)
    lam, vec = np.linalg.eigh(Q)
    null_T = vec[:, :k]
    pen_T = vec[:, k:] / np.sqrt(lam[k:])
    return null_T, pen_T


def log_spline_penalty(beta, sigma_beta: float, Q, b: int, k: int) -> float:
    """Improper smoothing kernel on the spline coefficients.

    Returns -((b-k)/2) log(sigma_beta^2) - beta'Q beta / (2 sigma_beta^2);
    the kernel is flat along the k-dimensional null space of Q.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.size != b:
        raise DomainError("coefficient vector must have length b")
    if not sigma_beta > 0:
        raise DomainError("sigma_beta must be positive")
    Q = np.asarray(Q, dtype=float)
    qf = float(beta @ (Q @ beta))
    return -(b - k) * math.log(sigma_beta) - qf / (2.0 * sigma_beta ** 2)
