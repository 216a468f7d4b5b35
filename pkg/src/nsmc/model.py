"""Transition families, drift models and finite-difference drift estimates."""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import HorizonExceeded, NotStochastic

STOCH_TOL = 1e-9


def validate_stochastic(A, tol=STOCH_TOL):
    """Return a read-only copy of ``A`` checked to be row-stochastic.

    Entries in ``[-tol, 0)`` are clamped to zero.

    Raises
    ------
    NotStochastic
        Carries the first offending row in ``.row``.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotStochastic("matrix must be square, got shape %s" % (A.shape,))
    if not np.all(np.isfinite(A)):
        bad = int(np.nonzero(~np.isfinite(A).all(axis=1))[0][0])
        raise NotStochastic("row %d has non-finite entries" % bad, row=bad)
    neg = (A < -tol).any(axis=1)
    if neg.any():
        bad = int(np.nonzero(neg)[0][0])
        raise NotStochastic("row %d has entry %.3e below zero" % (bad, A[bad].min()), row=bad)
    A[A < 0] = 0.0
    dev = np.abs(A.sum(axis=1) - 1.0)
    if (dev > tol).any():
        bad = int(np.argmax(dev > tol))
        raise NotStochastic("row %d sums to %.12g" % (bad, A[bad].sum()), row=bad)
    A.flags.writeable = False
    return A


def _check_zero_rows(M, name, tol=STOCH_TOL):
    M = np.asarray(M, dtype=float)
    dev = np.abs(M.sum(axis=1))
    if (dev > tol).any():
        bad = int(np.argmax(dev > tol))
        raise ValueError("%s row %d sums to %.3e, expected 0" % (name, bad, M[bad].sum()))
    return M


@dataclass(frozen=True)
class RewardSpec:
    """Reward column ``r`` and initial distribution ``mu``."""

    r: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        if r.ndim != 1 or mu.shape != r.shape:
            raise ValueError("r and mu must be vectors of equal length")
        if mu.min() < -1e-12 or abs(mu.sum() - 1.0) > STOCH_TOL:
            raise ValueError("mu must be a probability vector")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "mu", np.clip(mu, 0.0, None))


@dataclass(frozen=True)
class DriftModel:
    """Base matrix with per-step drift ``e1`` and curvature ``e2``.

    The drift parameter is folded into ``e1`` and ``e2``: the family reads
    ``P_k = base + (k-1) e1 + (k-1)^2 e2 / 2``.
    """

    base: np.ndarray
    e1: np.ndarray
    e2: Optional[np.ndarray] = None

    def __post_init__(self):
        base = validate_stochastic(self.base)
        e1 = _check_zero_rows(self.e1, "e1")
        if e1.shape != base.shape:
            raise ValueError("e1 shape %s does not match base %s" % (e1.shape, base.shape))
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "e1", e1)
        if self.e2 is not None:
            e2 = _check_zero_rows(self.e2, "e2")
            if e2.shape != base.shape:
                raise ValueError("e2 shape %s does not match base %s" % (e2.shape, base.shape))
            object.__setattr__(self, "e2", e2)

    @property
    def dim(self):
        return self.base.shape[0]

    def scaled(self, h):
        """Same base with ``e1 -> h e1`` and ``e2 -> h^2 e2``."""
        e2 = None if self.e2 is None else h * h * self.e2
        return DriftModel(self.base, h * self.e1, e2)


class TransitionSequence:
    """Indexed family ``k -> P_k`` for ``k >= 1``.

    Parameters
    ----------
    provider : callable
        Pure function of ``k`` returning a square matrix.
    dim : int
    horizon : int, optional
        Largest valid index; ``None`` means unbounded.
    validate : bool
        Check stochasticity of every produced matrix.
    """

    def __init__(self, provider: Callable[[int], np.ndarray], dim: int,
                 horizon: Optional[int] = None, validate: bool = True):
        self.provider = provider
        self.dim = int(dim)
        self.horizon = horizon
        self.validate = validate

    def __call__(self, k):
        if k < 1:
            raise IndexError("sequence index starts at 1, got %d" % k)
        if self.horizon is not None and k > self.horizon:
            raise HorizonExceeded("index %d beyond horizon %d" % (k, self.horizon))
        P = self.provider(k)
        if not self.validate:
            return np.asarray(P, dtype=float)
        try:
            P = validate_stochastic(P)
        except NotStochastic as exc:
            raise NotStochastic("P_%d: %s" % (k, exc), row=exc.row, k=k) from None
        if P.shape[0] != self.dim:
            raise ValueError("P_%d has dim %d, expected %d" % (k, P.shape[0], self.dim))
        return P

    def require(self, k):
        """Raise :class:`HorizonExceeded` unless index ``k`` is defined."""
        if self.horizon is not None and k > self.horizon:
            raise HorizonExceeded("need index %d, horizon is %d" % (k, self.horizon))

    @classmethod
    def from_list(cls, mats, hold_last=False):
        """Sequence ``P_1, ..., P_n`` from a list, optionally held constant after ``n``."""
        mats = [validate_stochastic(M) for M in mats]
        if not mats:
            raise ValueError("empty sequence")
        n = len(mats)

        def provider(k):
            return mats[min(k, n) - 1]
        return cls(provider, mats[0].shape[0], None if hold_last else n, validate=False)

    @classmethod
    def constant(cls, P):
        P = validate_stochastic(P)
        return cls(lambda k: P, P.shape[0], validate=False)


def default_fd_index(alpha):
    """Finite-difference index ``ceil(1 / (1 - exp(-alpha)))`` for discounting."""
    return int(np.ceil(1.0 / -np.expm1(-alpha)))


def fd_first(seq, j):
    """First-difference drift estimate ``(P_j - P_1) / (j - 1)``."""
    if j < 2:
        raise ValueError("fd index must be at least 2, got %d" % j)
    seq.require(j)
    return (seq(j) - seq(1)) / (j - 1)


def fd_second(seq, j):
    """Second-difference curvature estimate ``(P_{2j-1} - 2 P_j + P_1) / (j-1)^2``."""
    if j < 2:
        raise ValueError("fd index must be at least 2, got %d" % j)
    seq.require(2 * j - 1)
    return (seq(2 * j - 1) - 2.0 * seq(j) + seq(1)) / (j - 1) ** 2


def fd_drift(seq, j, second=True):
    """:class:`DriftModel` fitted to ``seq`` by finite differences at index ``j``."""
    e2 = fd_second(seq, j) if second else None
    return DriftModel(seq(1), fd_first(seq, j), e2)


def drift_sequence(dm, k_max=None):
    """Polynomial sequence ``P_k = base + (k-1) e1 + (k-1)^2 e2 / 2``.

    Each matrix is validated on demand, so an index where the drift pushes
    an entry negative raises :class:`NotStochastic` carrying ``k``.
    """
    e2 = dm.e2 if dm.e2 is not None else np.zeros_like(dm.base)

    def provider(k):
        t = k - 1.0
        return dm.base + t * dm.e1 + 0.5 * t * t * e2
    return TransitionSequence(provider, dm.dim, k_max)


def first_violation(dm, k_max):
    """First index ``k <= k_max`` at which :func:`drift_sequence` leaves the simplex."""
    seq = drift_sequence(dm, k_max)
    for k in range(1, k_max + 1):
        try:
            seq(k)
        except NotStochastic:
            return k
    return None
