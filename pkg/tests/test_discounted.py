import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmc.chains import SmoothFamily, random_chain, random_drift
from nsmc.discounted import (CoeffSeq, DiscountSpec, exact_truncated, first_order_general,
                             first_order_linear, second_order_general, second_order_linear,
                             second_order_terms, stationary_value, truncation_length)
from nsmc.model import DriftModel, RewardSpec, TransitionSequence, drift_sequence

from _fixtures import MU4, R4, family4, ratios, reward4


def _spec(alpha=0.5):
    return DiscountSpec(alpha, RewardSpec(R4, MU4))


def test_spec_checks():
    with pytest.raises(ValueError):
        DiscountSpec(0.0, reward4())
    assert _spec(1.0).q == pytest.approx(math.exp(-1))


def test_stationary_value_oracle():
    P = random_chain(4, 3)
    spec = _spec(0.3)
    nu, k0 = stationary_value(P, spec)
    ref = np.linalg.solve(np.eye(4) - spec.q * P, R4)
    assert np.allclose(nu, ref, rtol=1e-12)
    assert k0 == pytest.approx(MU4 @ ref, rel=1e-12)


def test_stationary_value_constant_reward():
    spec = DiscountSpec(0.2, RewardSpec(np.ones(3), np.ones(3) / 3))
    _, k0 = stationary_value(random_chain(3, 0), spec)
    assert k0 == pytest.approx(1 / (1 - math.exp(-0.2)), rel=1e-13)


def test_truncation_length_bound():
    for alpha, eps, rn in [(0.1, 1e-3, 10.0), (1.0, 1e-2, 100.0), (0.5, 1e-4, 1.0)]:
        n = truncation_length(alpha, eps, rn)
        tail = lambda m: math.exp(-alpha * m) * rn / (1 - math.exp(-alpha))
        assert tail(n) <= eps ** 6 * (1 + 1e-12)
        assert tail(n - 1) > eps ** 6


def test_exact_truncated_brute_force():
    F = family4()
    seq = F.forward_sequence(0.05)
    spec = _spec(0.7)
    kappa, n = exact_truncated(seq, spec, 1e-2)
    total = 0.0
    prod = np.eye(4)
    for j in range(n):
        total += math.exp(-0.7 * j) * MU4 @ prod @ R4
        prod = prod @ F(j * 0.05)
    assert kappa == pytest.approx(total, rel=1e-12)


def test_exact_truncated_constant_matches_stationary():
    P = random_chain(4, 5)
    spec = _spec(0.4)
    kappa, _ = exact_truncated(TransitionSequence.constant(P), spec, 1e-3)
    assert kappa == pytest.approx(stationary_value(P, spec)[1], abs=1e-15 * 100)


def _dm(seed, s1=0.01, s2=0.002):
    return DriftModel(random_chain(4, seed), random_drift(4, seed + 1, s1), random_drift(4, seed + 2, s2))


def test_first_order_linear_dense_oracle():
    dm = _dm(0)
    spec = _spec(0.5)
    q = spec.q
    Ai = np.linalg.inv(np.eye(4) - q * dm.base)
    ref = MU4 @ Ai @ R4 + q * q * MU4 @ dm.base @ Ai @ Ai @ dm.e1 @ Ai @ R4
    assert first_order_linear(dm, spec).kappa1 == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
def test_first_order_linear_matches_series(alpha):
    dm = _dm(3)
    spec = _spec(alpha)
    fast = first_order_linear(dm, spec).kappa1
    series = first_order_general(dm.base, dm.e1, CoeffSeq.linear(), spec)
    assert fast == pytest.approx(series, rel=1e-11)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
def test_second_order_closed_form_matches_nested_series(alpha):
    dm = _dm(7)
    spec = _spec(alpha)
    closed = second_order_linear(dm, spec)
    series = second_order_general(dm.base, dm.e1, dm.e2, CoeffSeq.linear(), spec)
    assert closed == pytest.approx(series, rel=1e-11)
    printed = second_order_linear(dm, spec, "single_drift")
    assert abs(printed - series) > 1e3 * abs(closed - series)


def test_second_order_dense_cross_terms():
    dm = _dm(11)
    spec = _spec(0.5)
    q, P, E1, E2 = spec.q, dm.base, dm.e1, dm.e2
    Ai = np.linalg.inv(np.eye(4) - q * P)
    nu = Ai @ R4
    t = second_order_terms(dm, spec)
    assert t["order1"] == pytest.approx(q * q * MU4 @ P @ Ai @ Ai @ E1 @ nu, rel=1e-12)
    curv = 0.5 * q * q * MU4 @ P @ (2 * q * P @ Ai @ Ai @ Ai + Ai @ Ai) @ E2 @ nu
    assert t["curvature"] == pytest.approx(curv, rel=1e-12)
    cross = 2 * q ** 3 * MU4 @ P @ Ai @ Ai @ Ai @ E1 @ Ai @ E1 @ nu
    assert t["cross"] == pytest.approx(cross, rel=1e-12)
    shift = q ** 4 * MU4 @ P @ Ai @ Ai @ E1 @ P @ Ai @ Ai @ E1 @ nu
    assert t["cross_shift"] == pytest.approx(shift, rel=1e-12)


def test_zero_drift_reduces_to_stationary():
    P = random_chain(4, 2)
    spec = _spec(0.3)
    dm = DriftModel(P, np.zeros((4, 4)), np.zeros((4, 4)))
    k0 = stationary_value(P, spec)[1]
    assert first_order_linear(dm, spec).kappa1 == pytest.approx(k0, rel=1e-14)
    assert second_order_linear(dm, spec) == pytest.approx(k0, rel=1e-14)


def test_general_constant_coefficients():
    # a1 = 1: every step uses P + D, so the first-order value is the
    # derivative of the stationary value in direction D
    P = random_chain(3, 4)
    D = random_drift(3, 5, 1.0)
    spec = DiscountSpec(0.6, RewardSpec([1.0, 2.0, 4.0], [1 / 3] * 3))
    h = 1e-6
    fd = (stationary_value(P + h * D, spec)[1] - stationary_value(P - h * D, spec)[1]) / (2 * h)
    k0 = stationary_value(P, spec)[1]
    got = first_order_general(P, h * D, CoeffSeq.constant(), spec)
    assert (got - k0) / h == pytest.approx(fd, rel=1e-6)


def test_second_order_needs_e2():
    dm = DriftModel(random_chain(3, 0), random_drift(3, 1, 0.01))
    with pytest.raises(ValueError):
        second_order_linear(dm, DiscountSpec(0.5, RewardSpec(np.ones(3), np.ones(3) / 3)))


def test_quadratic_sequence_error_orders():
    # exact quadratic family: second order is exact up to O(eps^3)
    dm = _dm(13, 0.004, 0.0004)
    spec = _spec(1.0)
    kappa, _ = exact_truncated(drift_sequence(dm), spec, 1e-3)
    e1 = abs(first_order_linear(dm, spec).kappa1 - kappa)
    e2 = abs(second_order_linear(dm, spec) - kappa)
    assert e2 < e1 / 10


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 500), st.floats(0.2, 2.0))
def test_first_order_error_is_second_order(seed, alpha):
    # successive differences of error / eps^2 halve for an O(eps^2) error
    F = SmoothFamily(random_chain(4, seed), random_chain(4, seed + 1))
    spec = _spec(alpha)
    scaled = []
    for eps in (0.002, 0.001, 0.0005):
        ex, _ = exact_truncated(F.forward_sequence(eps), spec, 1e-3)
        scaled.append((first_order_linear(F.drift_model(eps), spec).kappa1 - ex) / eps ** 2)
    d1, d2 = abs(scaled[0] - scaled[1]), abs(scaled[1] - scaled[2])
    assert d2 <= 0.8 * d1 + 1e-4


def test_second_order_ladder():
    F = family4()
    spec = _spec(0.5)
    errs = []
    for i in range(4):
        eps = 0.02 / 2 ** i
        ex, _ = exact_truncated(F.forward_sequence(eps), spec, 1e-3)
        errs.append(abs(second_order_linear(F.drift_model(eps), spec) - ex))
    assert min(ratios(errs)) > 7.0
