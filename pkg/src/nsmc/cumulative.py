"""Expected cumulative reward ``tau_n = E sum_{j<n} r(X_j)``."""

from .transient import TransientResult, _base_parts


def exact_cumulative(seq, reward, n):
    """``sum_{j<n} mu P_1 ... P_j r`` in one pass."""
    if n < 1:
        return 0.0
    seq.require(n - 1)
    v = reward.mu.copy()
    total = float(v @ reward.r)
    for k in range(1, n):
        v = v @ seq(k)
        total += float(v @ reward.r)
    return total


def cumulative_first(dm, reward, n, form="centred"):
    """First-order expansion of ``tau_n`` for ``P_k = P + (k-1) E1``.

    Terms grouped by powers of ``n``::

        (n-1) pi r + mu Z r
        + (n-1)(n-2)/2 pi E1 Z r - (n-1) pi E1 Z^2 P r
        + mu (P - e pi) Z^2 E1 Z r + pi E1 Z^3 P r

    Parameters
    ----------
    form : {'centred', 'uncentred'}
        ``uncentred`` uses ``mu P Z^2 E1 Z r`` in place of the centred
        ``mu (P - e pi) Z^2 E1 Z r``; the two differ by ``pi E1 Z r``.
    """
    if form not in ("centred", "uncentred"):
        raise ValueError("form must be 'centred' or 'uncentred'")
    mu, r = reward.mu, reward.r
    P, E1 = dm.base, dm.e1
    pi, Z = _base_parts(P)
    zr = Z @ r
    g = pi @ E1
    start = mu @ P
    if form == "centred":
        start = start - pi
    return TransientResult({
        "order0_n": (n - 1) * float(pi @ r),
        "order0_const": float(mu @ zr),
        "order1_n2": 0.5 * (n - 1) * (n - 2) * float(g @ zr),
        "order1_n": -(n - 1) * float(g @ (Z @ (Z @ (P @ r)))),
        "order1_const": float(start @ (Z @ (Z @ (E1 @ zr))))
                        + float(g @ (Z @ (Z @ (Z @ (P @ r))))),
    })
