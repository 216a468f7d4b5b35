"""Infinite-horizon discounted reward under slowly drifting transitions.

For a sequence ``P_1, P_2, ...`` the target is
``kappa = sum_j exp(-alpha j) mu P_1 ... P_j r``. The approximations expand
``kappa`` around the stationary value of the base matrix ``P``; with
``A = I - q P`` and ``q = exp(-alpha)`` every correction is a chain of
solves against the same ``A``.
"""
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .linalg import LU, mnorm
from .model import RewardSpec, _check_zero_rows, validate_stochastic

TAIL_RTOL = 1e-12


@dataclass(frozen=True)
class DiscountSpec:
    """Discount rate ``alpha > 0`` and reward specification."""

    alpha: float
    reward: RewardSpec

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive, got %r" % (self.alpha,))

    @property
    def q(self):
        return math.exp(-self.alpha)


@dataclass(frozen=True)
class CoeffSeq:
    """Drift coefficients ``a1(k)``, ``a2(k)`` with polynomial growth exponent ``p``."""

    a1: Callable[[int], float]
    a2: Optional[Callable[[int], float]] = None
    p: float = 1.0

    @classmethod
    def linear(cls):
        """``a1(k) = k - 1``, ``a2(k) = (k - 1)^2``, the ``P((k-1) eps)`` family."""
        return cls(lambda k: k - 1.0, lambda k: (k - 1.0) ** 2, 2.0)

    @classmethod
    def constant(cls):
        return cls(lambda k: 1.0, lambda k: 1.0, 0.0)


class FirstOrder(NamedTuple):
    kappa1: float
    nu: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray


def stationary_value(P, spec):
    """Value ``nu = (I - q P)^-1 r`` and ``kappa0 = mu nu``."""
    P = validate_stochastic(P)
    nu = LU(np.eye(P.shape[0]) - spec.q * P).solve(spec.reward.r)
    return nu, float(spec.reward.mu @ nu)


def truncation_length(alpha, eps_report, rnorm):
    """Horizon ``n`` with ``exp(-alpha n) ||r|| / (1 - exp(-alpha)) <= eps_report^6``."""
    if rnorm == 0:
        return 1
    n = -math.log(eps_report ** 6 * -math.expm1(-alpha) / rnorm) / alpha
    return max(1, math.ceil(n))


def exact_truncated(seq, spec, eps_report):
    """Truncated sum ``sum_{j<n} exp(-alpha j) mu P_1 ... P_j r``.

    Parameters
    ----------
    seq : TransitionSequence
    spec : DiscountSpec
    eps_report : float
        Accuracy target; the tail beyond ``n`` is at most ``eps_report**6``.

    Returns
    -------
    kappa : float
    n : int
        Number of summed terms.
    """
    r, mu = spec.reward.r, spec.reward.mu
    n = truncation_length(spec.alpha, eps_report, np.abs(r).max())
    seq.require(n - 1)
    q = spec.q
    v = mu.copy()
    total = 0.0
    w = 1.0
    for j in range(n):
        total += w * float(v @ r)
        if j < n - 1:
            v = v @ seq(j + 1)
            w *= q
    return total, n


def _tail_length(q, dnorm, p):
    # smallest K with q^K (K+1)^p ||D|| <= 1e-12 (1-q)
    if dnorm == 0:
        return 0
    bound = TAIL_RTOL * (1.0 - q)
    K = 0
    while q ** K * (K + 1) ** p * dnorm > bound:
        K += 1
    return K


def _weighted_sum(mu, X, coef, w, K):
    # sum_{k=0..K} coef(k+1) mu X^k w
    eta = mu.copy()
    acc = 0.0
    for k in range(K + 1):
        acc += coef(k + 1) * float(eta @ w)
        eta = eta @ X
    return acc


def first_order_general(base, D, coeffs, spec, K=None):
    """First-order value for general drift coefficients.

    ``kappa ~ mu A^-1 r + q mu sum_k a1(k+1) (qP)^k D A^-1 r``.

    Parameters
    ----------
    base : array_like
        Base matrix ``P``.
    D : array_like
        Drift direction with zero row sums (drift scale included).
    coeffs : CoeffSeq
    spec : DiscountSpec
    K : int, optional
        Last series index; by default the smallest ``K`` with
        ``q^K (K+1)^(p+1) ||D|| <= 1e-12 (1 - q)``.
    """
    P = validate_stochastic(base)
    D = _check_zero_rows(D, "D")
    q = spec.q
    mu, r = spec.reward.mu, spec.reward.r
    nu = LU(np.eye(P.shape[0]) - q * P).solve(r)
    if K is None:
        K = _tail_length(q, mnorm(D), coeffs.p + 1)
    return float(mu @ nu) + q * _weighted_sum(mu, q * P, coeffs.a1, D @ nu, K)


def second_order_general(base, D1, D2, coeffs, spec, K=None):
    """Second-order value for general drift coefficients.

    Adds to :func:`first_order_general` the curvature series
    ``q/2 mu sum_k a2(k+1) (qP)^k D2 nu`` and the drift cross series
    ``q^2 mu sum_{k>=1} a1(k) (qP)^(k-1) D1 sum_{l>k} a1(l) (qP)^(l-k-1) D1 nu``,
    the double sum being evaluated as nested truncated sums.
    """
    if coeffs.a2 is None:
        raise ValueError("second-order expansion needs coefficients a2")
    P = validate_stochastic(base)
    D1 = _check_zero_rows(D1, "D1")
    D2 = _check_zero_rows(D2, "D2")
    q = spec.q
    mu, r = spec.reward.mu, spec.reward.r
    X = q * P
    nu = LU(np.eye(P.shape[0]) - X).solve(r)
    if K is None:
        K = _tail_length(q, max(mnorm(D1), mnorm(D2)), coeffs.p + 2)
    value = float(mu @ nu)
    value += q * _weighted_sum(mu, X, coeffs.a1, D1 @ nu, K)
    value += 0.5 * q * _weighted_sum(mu, X, coeffs.a2, D2 @ nu, K)
    # inner sums g_k = sum_{l=k+1..K+1} a1(l) X^(l-k-1) D1 nu, built backwards
    d1nu = D1 @ nu
    g = np.zeros((K + 2, P.shape[0]))
    for k in range(K, 0, -1):
        g[k] = coeffs.a1(k + 1) * d1nu + X @ g[k + 1]
    eta = mu.copy()
    cross = 0.0
    for k in range(1, K + 1):
        cross += coeffs.a1(k) * float(eta @ (D1 @ g[k]))
        eta = eta @ X
    return value + q * q * cross


def first_order_linear(dm, spec):
    """First-order value for ``P_k = P + (k-1) E1``.

    Three solves against ``A = I - qP``: ``A nu = r``, ``A nu1 = E1 nu`` and
    ``A nu2 = nu1``; then ``kappa1 = mu nu + q^2 mu P nu2``.
    """
    q = spec.q
    mu, r = spec.reward.mu, spec.reward.r
    lu = LU(np.eye(dm.dim) - q * dm.base)
    nu = lu.solve(r)
    nu1 = lu.solve(dm.e1 @ nu)
    nu2 = lu.solve(nu1)
    return FirstOrder(float(mu @ nu) + q * q * float(mu @ dm.base @ nu2), nu, nu1, nu2)


def second_order_terms(dm, spec, form="derived"):
    """Term breakdown of the second-order value for ``P_k = P + (k-1) E1 + (k-1)^2 E2 / 2``.

    Returns
    -------
    dict
        ``order0`` (stationary value), ``order1`` (drift), ``curvature``
        (``E2`` term), ``cross`` and ``cross_shift`` (the two ``E1 E1``
        terms). All solves reuse one factorization.

    Notes
    -----
    ``form='single_drift'`` replaces ``cross_shift`` by the single-drift
    expression ``q^4 mu P A^-2 E1 P A^-1 r``, which is not second order in
    the drift. It is kept only for comparison with the two-drift term
    ``q^4 mu P A^-2 E1 P A^-2 E1 A^-1 r``.
    """
    if dm.e2 is None:
        raise ValueError("second-order expansion needs e2")
    if form not in ("derived", "single_drift"):
        raise ValueError("form must be 'derived' or 'single_drift'")
    q = spec.q
    mu, r = spec.reward.mu, spec.reward.r
    P, E1, E2 = dm.base, dm.e1, dm.e2
    lu = LU(np.eye(dm.dim) - q * P)
    inv = lu.solve
    muP = mu @ P
    nu = inv(r)
    nu2 = inv(inv(E1 @ nu))
    w2 = inv(inv(E2 @ nu))
    w3 = inv(w2)
    terms = {
        "order0": float(mu @ nu),
        "order1": q * q * float(muP @ nu2),
        "curvature": 0.5 * q * q * float(muP @ (2.0 * q * (P @ w3) + w2)),
        "cross": 2.0 * q ** 3 * float(muP @ inv(inv(inv(E1 @ inv(E1 @ nu))))),
    }
    if form == "derived":
        terms["cross_shift"] = q ** 4 * float(muP @ inv(inv(E1 @ (P @ nu2))))
    else:
        terms["cross_shift"] = q ** 4 * float(muP @ inv(inv(E1 @ (P @ nu))))
    return terms


def second_order_linear(dm, spec, form="derived"):
    """Second-order value, the sum of :func:`second_order_terms`."""
    return math.fsum(second_order_terms(dm, spec, form).values())
