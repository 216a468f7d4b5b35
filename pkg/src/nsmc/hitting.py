"""Expected reward accumulated until the chain leaves a set ``C``.

With ``T`` the first entry time into the complement of ``C``, the measure
``delta = E sum_{j<=T} r(X_j)`` is written through the substochastic blocks
``B_j = P_j[C, C]`` and effective rewards
``r_j(x) = r(x) + sum_{y not in C} P_j(x, y) r(y)`` as
``delta = sum_j mu B_1 ... B_j r_{j+1}``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NotContracting
from .linalg import LU, contraction_power, mnorm

MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class AbsorbingSpec:
    """Transient set ``C``, reward on the full space and initial law on ``C``.

    ``mu`` may be given on the full space (it must vanish off ``C``) or
    directly on ``C``.
    """

    C: tuple
    r: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        C = tuple(sorted(set(int(i) for i in self.C)))
        if not C or len(C) >= r.size or C[0] < 0 or C[-1] >= r.size:
            raise ValueError("C must be a nonempty proper subset of 0..%d" % (r.size - 1))
        mu = np.asarray(self.mu, dtype=float)
        if mu.size == r.size:
            off = np.delete(mu, C)
            if np.abs(off).max(initial=0.0) > 1e-12:
                raise ValueError("mu must be supported on C")
            mu = mu[list(C)]
        elif mu.size != len(C):
            raise ValueError("mu must have length %d or %d" % (r.size, len(C)))
        if mu.min() < -1e-12 or abs(mu.sum() - 1.0) > 1e-9:
            raise ValueError("mu restricted to C must be a probability vector")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "mu", np.clip(mu, 0.0, None))

    @property
    def inside(self):
        return np.array(self.C)

    @property
    def outside(self):
        return np.setdiff1d(np.arange(self.r.size), self.C)


@dataclass(frozen=True)
class BlockData:
    """Block ``B = P[C, C]`` and effective reward ``r_eff`` on ``C``."""

    B: np.ndarray
    r_eff: np.ndarray


def build_block(P, spec):
    P = np.asarray(P, dtype=float)
    c, o = spec.inside, spec.outside
    return BlockData(P[np.ix_(c, c)], spec.r[c] + P[np.ix_(c, o)] @ spec.r[o])


def _require_contraction(B):
    l = contraction_power(B, 4 * B.shape[0])
    if l is None:
        raise NotContracting("no power of the C-block up to %d has norm below one; "
                             "the complement of C is not reachable from every state of C"
                             % (4 * B.shape[0]))
    return l


def stationary_hitting(block, mu):
    """``w = (I - B)^-1 r_eff`` and ``delta0 = mu w``."""
    _require_contraction(block.B)
    w = LU(np.eye(block.B.shape[0]) - block.B).solve(block.r_eff)
    return w, float(np.asarray(mu) @ w)


def exact_hitting(seq, spec, tol=1e-10):
    """Sum ``sum_j mu B_1 ... B_j r_{j+1}`` by row-vector propagation.

    Contraction is verified on consecutive windows of ``l`` blocks, where
    ``l`` is the contraction power of ``B_1``. After each window the tail is
    bounded by ``||eta|| ||r|| l / (1 - beta)``, with ``eta`` the mass still
    inside ``C`` and ``beta`` the largest window norm seen, and the sum
    stops once that bound is below ``tol``.

    Raises
    ------
    NotContracting
        If ``B_1`` has no contracting power or a window product has norm
        at least one.
    """
    c, o = spec.inside, spec.outside
    rbound = np.abs(spec.r[c]).max() + np.abs(spec.r[o]).max()
    first = build_block(seq(1), spec)
    l = _require_contraction(first.B)
    eta = spec.mu.copy()
    total = 0.0
    beta = 0.0
    window = np.eye(len(c))
    block = first
    for j in range(MAX_STEPS):
        # block holds B_{j+1}, r_{j+1}
        total += float(eta @ block.r_eff)
        eta = eta @ block.B
        window = window @ block.B
        if (j + 1) % l == 0:
            wn = mnorm(window)
            if wn >= 1.0:
                raise NotContracting("product of blocks %d..%d has norm %.6f >= 1"
                                     % (j + 2 - l, j + 1, wn))
            beta = max(beta, wn)
            window = np.eye(len(c))
            if np.abs(eta).sum() * rbound * l / (1.0 - beta) <= tol:
                return total
        block = build_block(seq(j + 2), spec)
    raise NotContracting("tail bound not reached within %d steps" % MAX_STEPS)


def first_order_hitting(dm, spec):
    """First-order hitting value for ``P_k = P + (k-1) E1``.

    ``delta ~ mu A^-1 r~ + mu B A^-2 B1 A^-1 r~ + mu B A^-2 r1`` with
    ``A = I - B``, ``B1 = E1[C, C]`` and ``r1 = E1[C, not C] r``.
    """
    c, o = spec.inside, spec.outside
    base = build_block(dm.base, spec)
    B1 = dm.e1[np.ix_(c, c)]
    r1 = dm.e1[np.ix_(c, o)] @ spec.r[o]
    _require_contraction(base.B)
    lu = LU(np.eye(len(c)) - base.B)
    w = lu.solve(base.r_eff)
    xi = lu.solve_left(lu.solve_left(spec.mu @ base.B))
    return float(spec.mu @ w) + float(xi @ (B1 @ w)) + float(xi @ r1)
