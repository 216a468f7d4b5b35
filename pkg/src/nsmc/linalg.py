"""Dense linear algebra kernels and Markov-specific solves.

Everything here works on small dense ``numpy`` arrays. Distributions are
1-D arrays used as row vectors, rewards are 1-D arrays used as column
vectors.
"""
import math

import numpy as np

from .errors import NotContracting, NotIrreducible, SingularMatrix

PIVOT_RTOL = 1e-13
DUST = 1e-12


def norm(kind, obj):
    """Norms used throughout the package.

    Parameters
    ----------
    kind : {'row_l1', 'col_max', 'mat_maxrowsum'}
        ``row_l1`` is the l1 norm of a signed measure, ``col_max`` the sup
        norm of a function and ``mat_maxrowsum`` the induced operator norm.
    obj : array_like
        Vector for the first two kinds, square matrix for the last.

    Returns
    -------
    float
    """
    a = np.asarray(obj, dtype=float)
    if kind == "row_l1":
        if a.ndim != 1:
            raise ValueError("row_l1 needs a vector, got shape %s" % (a.shape,))
        return float(np.abs(a).sum())
    if kind == "col_max":
        if a.ndim != 1:
            raise ValueError("col_max needs a vector, got shape %s" % (a.shape,))
        return float(np.abs(a).max()) if a.size else 0.0
    if kind == "mat_maxrowsum":
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("mat_maxrowsum needs a square matrix, got shape %s" % (a.shape,))
        return float(np.abs(a).sum(axis=1).max()) if a.size else 0.0
    raise ValueError("unknown norm kind %r" % (kind,))


def mnorm(A):
    """Shorthand for the max-row-sum norm of a matrix."""
    return norm("mat_maxrowsum", A)


def _square(A):
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix, got shape %s" % (A.shape,))
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


class LU:
    """LU factorization with partial pivoting, ``A[piv] = L @ U``.

    A pivot with ``|pivot| <= 1e-13 * ||A||`` raises :class:`SingularMatrix`.
    One factorization serves any number of right (``solve``) and left
    (``solve_left``) solves.

    Parameters
    ----------
    A : array_like, shape (n, n)
    """

    def __init__(self, A):
        lu = _square(A)
        n = lu.shape[0]
        scale = mnorm(lu)
        tiny = PIVOT_RTOL * scale
        piv = np.arange(n)
        for k in range(n):
            p = k + int(np.argmax(np.abs(lu[k:, k])))
            if abs(lu[p, k]) <= tiny or scale == 0.0:
                raise SingularMatrix("pivot %.3e at column %d below threshold %.3e"
                                     % (abs(lu[p, k]), k, tiny))
            if p != k:
                lu[[k, p]] = lu[[p, k]]
                piv[[k, p]] = piv[[p, k]]
            lu[k + 1:, k] /= lu[k, k]
            lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
        self.lu = lu
        self.piv = piv
        self.n = n
        self.lu.flags.writeable = False

    def solve(self, b):
        """Solve ``A x = b`` for a vector or a stack of columns."""
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError("right-hand side has %d rows, expected %d" % (b.shape[0], self.n))
        lu = self.lu
        x = b[self.piv].copy()
        for i in range(1, self.n):
            x[i] -= lu[i, :i] @ x[:i]
        for i in range(self.n - 1, -1, -1):
            x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
        return x

    def solve_left(self, b):
        """Solve ``x A = b`` for a row vector ``b``."""
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError("left-hand side has %d entries, expected %d" % (b.shape[0], self.n))
        lu = self.lu
        w = b.copy()
        # U^T y = b
        for i in range(self.n):
            w[i] = (w[i] - lu[:i, i] @ w[:i]) / lu[i, i]
        # L^T z = y
        for i in range(self.n - 2, -1, -1):
            w[i] -= lu[i + 1:, i] @ w[i + 1:]
        x = np.empty_like(w)
        x[self.piv] = w
        return x


def solve(A, b):
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    Raises
    ------
    SingularMatrix
        If a pivot is below ``1e-13 * ||A||``.
    """
    return LU(A).solve(b)


def inverse(A):
    """Matrix inverse, column by column from one factorization."""
    lu = LU(A)
    return lu.solve(np.eye(lu.n))


CONTRACTION_MARGIN = 1e-12


def contraction_power(A, l_max):
    """Smallest ``l <= l_max`` with ``||A^l|| < 1``, or ``None``.

    Norms within ``CONTRACTION_MARGIN`` of one count as one, so rounding in
    powers of a stochastic matrix is not mistaken for contraction.
    """
    A = _square(A)
    M = A.copy()
    for l in range(1, int(l_max) + 1):
        if mnorm(M) < 1.0 - CONTRACTION_MARGIN:
            return l
        M = M @ A
    return None


def neumann_identity_residual(A, j, K):
    """Residual of the weighted Neumann series identity.

    Computes ``|| sum_{n<=K} (n+j)...(n+1) A^n - j! (I-A)^(-j-1) ||``.

    Parameters
    ----------
    A : array_like, shape (d, d)
        Must have some power of norm below one within ``K`` steps.
    j : int
        Nonnegative order of the identity.
    K : int
        Last series index.

    Raises
    ------
    NotContracting
        If no power ``A^l`` with ``l <= K`` has norm below one.
    """
    A = _square(A)
    if j < 0:
        raise ValueError("j must be nonnegative")
    if not np.any(A):
        l = 1
    else:
        l = contraction_power(A, K)
    if l is None:
        raise NotContracting("no power of A up to %d has norm below one" % K)
    d = A.shape[0]
    total = np.zeros((d, d))
    power = np.eye(d)
    for n in range(K + 1):
        total += math.prod(range(n + 1, n + j + 1)) * power
        power = power @ A
        if not np.any(power):
            break
    target = np.eye(d)
    G = inverse(np.eye(d) - A)
    for _ in range(j + 1):
        target = target @ G
    return mnorm(total - math.factorial(j) * target)


def _normalized_null_row(M):
    # solve x M = 0, x e = 1 by swapping the last equation for normalization
    d = M.shape[0]
    A = M.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(d)
    b[-1] = 1.0
    try:
        x = solve(A, b)
    except SingularMatrix as exc:
        raise NotIrreducible("balance equations are singular: %s" % exc) from None
    if x.min() < -DUST:
        raise NotIrreducible("stationary solve produced negative mass %.3e" % x.min())
    x = np.clip(x, 0.0, None)
    return x / x.sum()


def stationary_distribution(P):
    """Stationary distribution ``pi P = pi`` of an irreducible chain.

    Raises
    ------
    NotIrreducible
        If the balance system is singular or yields negative mass.
    """
    P = _square(P)
    return _normalized_null_row(np.eye(P.shape[0]) - P)


def ctmc_stationary(Q):
    """Stationary distribution ``pi Q = 0`` of an irreducible rate matrix."""
    Q = _square(Q)
    return _normalized_null_row(-Q)


def fundamental_matrix(P, pi=None):
    """Fundamental matrix ``Z = (I - P + e pi)^-1``.

    Parameters
    ----------
    P : array_like, shape (d, d)
    pi : array_like, optional
        Stationary distribution of ``P``; computed if omitted.
    """
    P = _square(P)
    if pi is None:
        pi = stationary_distribution(P)
    d = P.shape[0]
    return inverse(np.eye(d) - P + np.outer(np.ones(d), pi))


def is_primitive(P):
    """True if some power of ``P`` is strictly positive.

    Uses repeated squaring of the support pattern up to Wielandt's bound
    ``(d-1)^2 + 1``.
    """
    P = _square(P)
    d = P.shape[0]
    M = (P > 0).astype(np.int64)
    bound = (d - 1) ** 2 + 1
    power = 1
    while power < bound:
        M = ((M @ M) > 0).astype(np.int64)
        power *= 2
    return bool(M.all())
