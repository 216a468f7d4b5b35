"""Markov jump processes with slowly varying rate matrices.

Approximations of ``E r(X(t))`` are expressed through ``M = e pi - Q`` for
the rate matrix ``Q`` in force near ``t``. The reference value comes from
integrating the forward equation ``mu'(s) = mu(s) Q(s)`` with RK4.
"""
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotStochastic
from .linalg import LU, ctmc_stationary, mnorm
from .model import _check_zero_rows, validate_stochastic

RATE_TOL = 1e-9


def validate_rate(Q, tol=RATE_TOL):
    """Return a read-only copy of ``Q`` checked to be a rate matrix."""
    Q = np.array(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise NotStochastic("rate matrix must be square, got shape %s" % (Q.shape,))
    off = Q - np.diag(np.diag(Q))
    neg = (off < -tol).any(axis=1)
    if neg.any():
        bad = int(np.nonzero(neg)[0][0])
        raise NotStochastic("rate row %d has a negative off-diagonal rate" % bad, row=bad)
    off[off < 0] = 0.0
    Q = off + np.diag(np.diag(Q))
    dev = np.abs(Q.sum(axis=1))
    if (dev > tol).any():
        bad = int(np.argmax(dev > tol))
        raise NotStochastic("rate row %d sums to %.3e" % (bad, Q[bad].sum()), row=bad)
    Q.flags.writeable = False
    return Q


@dataclass(frozen=True)
class RateDriftModel:
    """Rate matrix near ``t`` with backward drift ``f1`` and curvature ``f2``.

    Encodes ``Q(t - u) = base - u f1 + u^2 f2 / 2``.
    """

    base: np.ndarray
    f1: np.ndarray
    f2: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "base", validate_rate(self.base))
        object.__setattr__(self, "f1", _check_zero_rows(self.f1, "f1"))
        if self.f2 is not None:
            object.__setattr__(self, "f2", _check_zero_rows(self.f2, "f2"))

    def scaled(self, h):
        f2 = None if self.f2 is None else h * h * self.f2
        return RateDriftModel(self.base, h * self.f1, f2)


@dataclass(frozen=True)
class RatePath:
    """Time-indexed rate matrices ``s -> Q(s)`` on ``[0, T]``."""

    provider: Callable[[float], np.ndarray]
    T: float
    dim: int

    def __call__(self, s):
        if s < -1e-12 or s > self.T * (1 + 1e-12) + 1e-12:
            raise ValueError("time %g outside [0, %g]" % (s, self.T))
        return np.asarray(self.provider(s), dtype=float)


def default_lambda(Q):
    """Uniformization rate ``||Q|| / 2 + 1``."""
    return 0.5 * mnorm(Q) + 1.0


def uniformize(Q, lam=None):
    """Jump matrix ``R = I + Q / lam``.

    Raises
    ------
    NotStochastic
        If ``lam`` is below the largest exit rate.
    """
    Q = validate_rate(Q)
    if lam is None:
        lam = default_lambda(Q)
    if lam <= 0 or lam < np.abs(np.diag(Q)).max(initial=0.0) - 1e-12:
        raise NotStochastic("uniformization rate %g is below the largest exit rate" % lam)
    return validate_stochastic(np.eye(Q.shape[0]) + Q / lam)


def _parts(Q):
    pi = ctmc_stationary(Q)
    d = Q.shape[0]
    return pi, LU(np.outer(np.ones(d), pi) - Q)


def jump_first(rm, reward):
    """First-order value ``pi r - pi F1 M^-2 r``."""
    r = np.asarray(getattr(reward, "r", reward), dtype=float)
    pi, lu = _parts(rm.base)
    return float(pi @ r) - float(pi @ rm.f1 @ lu.solve(lu.solve(r)))


def jump_second_terms(rm, reward, form="derived"):
    """Term breakdown of the second-order value.

    Terms are ``pi r``, ``-pi F1 M^-2 r``, ``c pi F2 M^-3 r`` and
    ``pi F1 (M^-2 F1 M^-2 + 2 M^-1 F1 M^-3) r``. The curvature weight ``c``
    is 1 for ``form='derived'`` (from ``int u^2/2 exp(-M u) du = M^-3``)
    and 1/2 for ``form='half_curvature'``.
    """
    if rm.f2 is None:
        raise ValueError("second-order expansion needs f2")
    if form not in ("derived", "half_curvature"):
        raise ValueError("form must be 'derived' or 'half_curvature'")
    r = np.asarray(getattr(reward, "r", reward), dtype=float)
    pi, lu = _parts(rm.base)
    m1 = lu.solve(r)
    m2 = lu.solve(m1)
    m3 = lu.solve(m2)
    g = pi @ rm.f1
    c = 1.0 if form == "derived" else 0.5
    return {
        "order0": float(pi @ r),
        "order1": -float(g @ m2),
        "curvature": c * float(pi @ rm.f2 @ m3),
        "cross": float(g @ lu.solve(lu.solve(rm.f1 @ m2)))
                 + 2.0 * float(g @ lu.solve(rm.f1 @ m3)),
    }


def jump_second(rm, reward, form="derived"):
    """Second-order value, the sum of :func:`jump_second_terms`."""
    return math.fsum(jump_second_terms(rm, reward, form).values())


def lambda_form_correction(rm, reward, lam):
    """``pi F1 (lam e pi - Q)^-2 r``; independent of ``lam > 0``."""
    r = np.asarray(getattr(reward, "r", reward), dtype=float)
    Q = rm.base
    pi = ctmc_stationary(Q)
    lu = LU(lam * np.outer(np.ones(Q.shape[0]), pi) - Q)
    return float(pi @ rm.f1 @ lu.solve(lu.solve(r)))


def _max_exit_rate(path, t, samples=200):
    ts = np.linspace(0.0, t, samples + 1)
    return max(np.abs(np.diag(path(s))).max() for s in ts)


def exact_jump(path, mu, reward, t, h=None, renormalize=True):
    """``mu P(0, t) r`` by fixed-step RK4 on the forward equation.

    Parameters
    ----------
    path : RatePath
    mu : array_like
        Initial distribution.
    reward : array_like or RewardSpec
    t : float
        Horizon, at most ``path.T``.
    h : float, optional
        Step size, at most ``0.1 / max exit rate``. Defaults to a fifth of
        that bound. The final step is shortened to land on ``t``.
    renormalize : bool
        Rescale to unit mass after each step. RK4 conserves mass exactly
        for rate matrices, so this only removes rounding drift.
    """
    r = np.asarray(getattr(reward, "r", reward), dtype=float)
    if t > path.T * (1 + 1e-12):
        raise ValueError("horizon %g beyond path end %g" % (t, path.T))
    qmax = _max_exit_rate(path, t)
    limit = 0.1 / qmax if qmax > 0 else math.inf
    if h is None:
        h = min(limit / 5.0, max(t, 1.0))
    if h > limit * (1 + 1e-12):
        raise ValueError("step %g exceeds 0.1 / max exit rate = %g" % (h, limit))
    v = np.array(mu, dtype=float)
    s = 0.0
    while s < t - 1e-14 * max(t, 1.0):
        dt = min(h, t - s)
        Qa = path(s)
        Qb = path(s + 0.5 * dt)
        Qc = path(s + dt)
        k1 = v @ Qa
        k2 = (v + 0.5 * dt * k1) @ Qb
        k3 = (v + 0.5 * dt * k2) @ Qb
        k4 = (v + dt * k3) @ Qc
        v = v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if v.min() < -1e-9:
            raise ArithmeticError("negative mass %.3e at time %g" % (v.min(), s + dt))
        if renormalize:
            v /= v.sum()
        s += dt
    return float(v @ r)
