"""Generators for the (s,S) inventory chain and auxiliary test chains."""
import math
from dataclasses import dataclass

import numpy as np

from .linalg import stationary_distribution
from .model import DriftModel, TransitionSequence

VARIANTS = ("below-s", "below-S", "review")
INITIAL_KINDS = ("S", "s", "uniform", "stationary", "poisson", "binomial")
LOG_SPACE_ABOVE = 700.0


def poisson_pmf(lam, dmax):
    """Poisson pmf on ``0..dmax``.

    Uses the recurrence ``pmf(d+1) = pmf(d) lam / (d+1)`` from ``exp(-lam)``,
    switching to log space when ``exp(-lam)`` would underflow.
    """
    if lam < 0:
        raise ValueError("Poisson mean must be nonnegative, got %g" % lam)
    d = np.arange(dmax + 1, dtype=float)
    if lam == 0.0:
        out = np.zeros(dmax + 1)
        out[0] = 1.0
        return out
    if lam <= LOG_SPACE_ABOVE:
        ratios = np.empty(dmax + 1)
        ratios[0] = math.exp(-lam)
        ratios[1:] = lam / d[1:]
        return np.cumprod(ratios)
    logfact = np.concatenate(([0.0], np.cumsum(np.log(d[1:]))))
    return np.exp(d * math.log(lam) - lam - logfact)


def poisson_pmf_derivative(lam, dmax, order):
    """Derivative of the Poisson pmf with respect to its mean.

    ``order=1`` gives ``pmf(d-1) - pmf(d)`` and ``order=2`` gives
    ``pmf(d-2) - 2 pmf(d-1) + pmf(d)``.
    """
    g = poisson_pmf(lam, dmax)
    for _ in range(order):
        g = np.concatenate(([0.0], g[:-1])) - g
    return g


@dataclass(frozen=True)
class InventoryParams:
    """Reorder level ``s``, order-up-to level ``S``, base demand ``m``, drift ``eps``."""

    s: int
    S: int
    m: float = 1.0
    eps: float = 0.0

    def __post_init__(self):
        if not 0 <= self.s < self.S:
            raise ValueError("need 0 <= s < S, got s=%r S=%r" % (self.s, self.S))
        if self.m <= 0:
            raise ValueError("base demand must be positive")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")

    def mean(self, k):
        """Demand mean driving the ``k``-th transition."""
        return self.m + self.eps * (k - 1)


def inventory_states(p, variant="review"):
    """Inventory levels spanned by the chain of ``variant``."""
    _check_variant(variant)
    lo = 0 if variant == "review" else p.s
    return np.arange(lo, p.S + 1)


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError("unknown inventory variant %r (choose from %s)" % (variant, ", ".join(VARIANTS)))


def _support(lam, S):
    return int(max(S, lam + 12.0 * math.sqrt(lam) + 40.0)) + 2


def _assemble(p, variant, g):
    # g[d] is a demand weight (pmf or a derivative); tails come from a
    # reverse cumulative sum so that each row is built from one array
    states = inventory_states(p, variant)
    lo = states[0]
    n = states.size
    tail = np.cumsum(g[::-1])[::-1]
    P = np.zeros((n, n))
    for i, x in enumerate(states):
        if variant == "review":
            y = p.S if x < p.s else x
            thr, sink = 1, 0
        else:
            y = x
            thr = p.s if variant == "below-s" else p.S
            sink = p.S
        keep = y - thr
        if keep >= 0:
            P[i, thr - lo:y - lo + 1] += g[keep::-1]
        P[i, sink - lo] += tail[max(keep + 1, 0)]
    return P


def inventory_matrix(p, k=1, variant="review"):
    """Transition matrix driven by Poisson demand of mean ``m + eps (k-1)``.

    Parameters
    ----------
    p : InventoryParams
    k : int
        Transition index, ``k >= 1``.
    variant : {'review', 'below-s', 'below-S'}
        ``review``: at each period, stock below ``s`` is raised to ``S``, then
        demand is served and unmet demand is lost; levels ``0..S``.
        ``below-s``: levels ``s..S``; ``x - D`` is kept while it is at least
        ``s``, otherwise the chain jumps to ``S``. ``below-S`` is the same
        rule with threshold ``S``.

    Returns
    -------
    ndarray
        Row-stochastic matrix indexed by :func:`inventory_states`.
    """
    _check_variant(variant)
    lam = p.mean(k)
    return _assemble(p, variant, poisson_pmf(lam, _support(lam, p.S)))


def inventory_derivative(p, order, k=1, variant="review"):
    """Derivative of :func:`inventory_matrix` with respect to the demand mean.

    Rows sum to zero; the lumped tail carries minus the kept mass.
    """
    _check_variant(variant)
    lam = p.mean(k)
    return _assemble(p, variant, poisson_pmf_derivative(lam, _support(lam, p.S), order))


def inventory_sequence(p, variant="review"):
    """Unbounded :class:`TransitionSequence` ``k -> inventory_matrix(p, k)``."""
    n = inventory_states(p, variant).size
    return TransitionSequence(lambda k: inventory_matrix(p, k, variant), n)


def inventory_drift(p, variant="review"):
    """Drift model with analytic derivatives, ``e1 = eps P'`` and ``e2 = eps^2 P''``."""
    return DriftModel(inventory_matrix(p, 1, variant),
                      p.eps * inventory_derivative(p, 1, 1, variant),
                      p.eps ** 2 * inventory_derivative(p, 2, 1, variant))


def inventory_reward(p, variant="review"):
    """Reward ``r(x) = x`` on the inventory levels."""
    return inventory_states(p, variant).astype(float)


def inventory_initial(p, kind, variant="review"):
    """Candidate initial distributions for the inventory chain.

    Parameters
    ----------
    kind : {'S', 's', 'uniform', 'stationary', 'poisson', 'binomial'}
        Point mass at ``S`` or ``s``, uniform on ``s..S``, stationary law of
        ``P_1``, or the stock level drawn from Poisson(m) or
        Binomial(S, m/S). Mass outside the state space is moved to the
        nearest level.
    """
    states = inventory_states(p, variant)
    lo = states[0]
    mu = np.zeros(states.size)
    if kind == "S":
        mu[-1] = 1.0
    elif kind == "s":
        mu[p.s - lo] = 1.0
    elif kind == "uniform":
        mu[p.s - lo:] = 1.0 / (p.S - p.s + 1)
    elif kind == "stationary":
        mu = stationary_distribution(inventory_matrix(p, 1, variant))
    elif kind in ("poisson", "binomial"):
        levels = np.arange(p.S + 1)
        if kind == "poisson":
            w = poisson_pmf(p.m, p.S)
            w[-1] += max(0.0, 1.0 - w.sum())
        else:
            q = min(p.m / p.S, 1.0)
            w = np.array([math.comb(p.S, x) * q ** x * (1 - q) ** (p.S - x) for x in levels])
        np.add.at(mu, np.clip(levels, lo, p.S) - lo, w)
    else:
        raise ValueError("unknown initial distribution %r (choose from %s)"
                         % (kind, ", ".join(INITIAL_KINDS)))
    return mu / mu.sum()


def birth_death(p_up, p_down):
    """Tridiagonal stochastic matrix with up/down probabilities per state."""
    up = np.asarray(p_up, dtype=float)
    down = np.asarray(p_down, dtype=float)
    if up.shape != down.shape or up.ndim != 1 or up.size == 0:
        raise ValueError("p_up and p_down must be vectors of equal length")
    if (up < 0).any() or (down < 0).any() or (up + down > 1 + 1e-12).any():
        raise ValueError("birth-death masses must be nonnegative with p_up + p_down <= 1")
    if up[-1] != 0 or down[0] != 0:
        raise ValueError("p_up of the last state and p_down of the first must be 0")
    n = up.size
    P = np.diag(1.0 - up - down)
    P[np.arange(n - 1), np.arange(1, n)] = up[:-1]
    P[np.arange(1, n), np.arange(n - 1)] = down[1:]
    return P


def random_chain(dim, seed):
    """Seeded stochastic matrix with strictly positive entries."""
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.05, 1.0, size=(dim, dim))
    return A / A.sum(axis=1, keepdims=True)


def random_rate_matrix(dim, seed):
    """Seeded irreducible rate matrix with off-diagonal rates in ``[0.1, 1]``."""
    rng = np.random.default_rng(seed)
    Q = rng.uniform(0.1, 1.0, size=(dim, dim))
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


def random_drift(dim, seed, scale=1.0):
    """Seeded matrix with zero row sums and max-row-sum norm ``scale``."""
    rng = np.random.default_rng(seed)
    D = rng.normal(size=(dim, dim))
    D -= D.mean(axis=1, keepdims=True)
    size = np.abs(D).sum(axis=1).max()
    return scale * D / size if size > 0 else D


class SmoothFamily:
    """Smooth path ``theta -> (1 - w) A + w B`` with ``w = (1 + tanh(theta + shift)) / 2``.

    Stays a convex combination for every real ``theta``, so stochastic
    (or rate) endpoints give a stochastic (or rate) family, and all
    derivatives are available in closed form.
    """

    def __init__(self, A, B, shift=0.3):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.shift = shift

    def _w(self, theta, order):
        t = math.tanh(theta + self.shift)
        if order == 0:
            return 0.5 * (1.0 + t)
        if order == 1:
            return 0.5 * (1.0 - t * t)
        if order == 2:
            return -t * (1.0 - t * t)
        raise ValueError("order must be 0, 1 or 2")

    def __call__(self, theta):
        w = self._w(theta, 0)
        return (1.0 - w) * self.A + w * self.B

    def derivative(self, theta, order):
        return self._w(theta, order) * (self.B - self.A)

    def taylor(self, theta, eps):
        """``(M(theta), eps M'(theta), eps^2 M''(theta))``."""
        return self(theta), eps * self.derivative(theta, 1), eps * eps * self.derivative(theta, 2)

    def forward_sequence(self, eps):
        """``P_k = M((k-1) eps)``."""
        return TransitionSequence(lambda k: self((k - 1) * eps), self.A.shape[0])

    def backward_sequence(self, eps, n):
        """``P_k = M((k-n) eps)``, anchored so that ``P_n = M(0)``."""
        return TransitionSequence(lambda k: self((k - n) * eps), self.A.shape[0])

    def drift_model(self, eps, theta=0.0):
        return DriftModel(*self.taylor(theta, eps))
