"""Transient reward ``E r(X_n) = mu P_1 ... P_n r`` under slow drift.

Two expansions are provided. The forward one expands around ``P_1`` and
suits moderate ``n``; the backward one expands around ``P_n`` and forgets
the initial law. ``Z = (I - P + e pi)^-1`` is the fundamental matrix of the
base matrix.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import LU, fundamental_matrix, stationary_distribution


@dataclass(frozen=True)
class TransientResult:
    """Approximate value with its additive term breakdown."""

    terms: dict = field(default_factory=dict)

    @property
    def value(self):
        return math.fsum(self.terms.values())

    def __float__(self):
        return self.value


def _reward_vector(reward):
    return np.asarray(getattr(reward, "r", reward), dtype=float)


def exact_transient(seq, reward, n):
    """``mu P_1 ... P_n r`` by propagating ``mu`` through ``n`` steps."""
    seq.require(n)
    v = reward.mu.copy()
    for k in range(1, n + 1):
        v = v @ seq(k)
    return float(v @ reward.r)


def _base_parts(P):
    pi = stationary_distribution(P)
    return pi, fundamental_matrix(P, pi)


def forward_first(dm, reward, n):
    """First-order forward expansion ``pi r + n pi E1 Z r - pi E1 Z^2 r``.

    Expands ``P_k = P + (k-1) E1`` around ``P = P_1``.
    """
    r = reward.r
    pi, Z = _base_parts(dm.base)
    zr = Z @ r
    g = pi @ dm.e1
    return TransientResult({
        "order0": float(pi @ r),
        "order1_n": n * float(g @ zr),
        "order1_const": -float(g @ (Z @ zr)),
    })


def backward_first(dm_at_n, reward):
    """First-order backward expansion ``pi r - pi E1 Z^2 P r``.

    ``dm_at_n.base`` is ``P_n`` and ``dm_at_n.e1`` the backward drift, so
    that ``P_{n-k} = P - k E1``. The initial law does not enter.
    """
    r = _reward_vector(reward)
    P = dm_at_n.base
    pi, Z = _base_parts(P)
    return TransientResult({
        "order0": float(pi @ r),
        "order1": -float(pi @ dm_at_n.e1 @ (Z @ (Z @ (P @ r)))),
    })


def poisson_correction(P_n, E1, reward, check=True):
    """First-order backward correction through two Poisson equations.

    Solves ``(I - P + e pi) h1 = P r`` and ``(I - P + e pi) h2 = h1`` and
    returns ``-pi E1 h2``.

    Parameters
    ----------
    check : bool
        Also confirm that ``h1`` solves the centred equation
        ``(I - P) h1 = P r - (pi r) e`` up to a multiple of ``e``.
    """
    r = _reward_vector(reward)
    P = np.asarray(P_n, dtype=float)
    d = P.shape[0]
    pi = stationary_distribution(P)
    lu = LU(np.eye(d) - P + np.outer(np.ones(d), pi))
    h1 = lu.solve(P @ r)
    h2 = lu.solve(h1)
    if check:
        res = (h1 - P @ h1) - (P @ r - float(pi @ r))
        scale = 1.0 + np.abs(h1).max() + np.abs(r).max()
        if np.ptp(res) > 1e-8 * scale:
            raise ArithmeticError("centred Poisson equation residual %.3e" % np.ptp(res))
    return -float(pi @ E1 @ h2)


def backward_second(dm_at_n, reward, form="z2"):
    """Second-order backward expansion.

    With ``W = 2 Z^3 - Z^2`` the terms are ``pi r``, ``-pi E1 Z^2 P r``,
    ``pi E1 Z^2 E1 Z^2 P r``, ``pi E2 W P r / 2`` and ``pi E1 Z E1 W P r``.

    Parameters
    ----------
    form : {'z2', 'z1'}
        ``z1`` uses ``Z`` instead of ``Z^2`` in the first-order
        term; it is kept for comparison and is not second order accurate.
    """
    if dm_at_n.e2 is None:
        raise ValueError("second-order expansion needs e2")
    if form not in ("z2", "z1"):
        raise ValueError("form must be 'z2' or 'z1'")
    r = _reward_vector(reward)
    P, E1, E2 = dm_at_n.base, dm_at_n.e1, dm_at_n.e2
    pi, Z = _base_parts(P)
    pr = P @ r
    z2pr = Z @ (Z @ pr)
    wpr = 2.0 * (Z @ z2pr) - z2pr
    g = pi @ E1
    first = z2pr if form == "z2" else Z @ pr
    return TransientResult({
        "order0": float(pi @ r),
        "order1": -float(g @ first),
        "cross": float(g @ (Z @ (Z @ (E1 @ z2pr)))),
        "curvature": 0.5 * float(pi @ (E2 @ wpr)),
        "cross_curvature": float(g @ (Z @ (E1 @ wpr))),
    })
