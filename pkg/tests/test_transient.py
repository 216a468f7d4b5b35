import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmc.chains import random_chain, random_drift
from nsmc.linalg import fundamental_matrix, stationary_distribution
from nsmc.model import DriftModel, TransitionSequence
from nsmc.transient import (TransientResult, backward_first, backward_second, exact_transient,
                            forward_first, poisson_correction)

from _fixtures import family3, family4, ratios, reward3, reward4


def test_result_value_is_sum():
    res = TransientResult({"a": 1.0, "b": 1e-17, "c": -1.0})
    assert res.value == 1e-17
    assert float(res) == res.value


def test_exact_transient_matrix_power():
    P = random_chain(4, 3)
    rw = reward4()
    for n in (1, 5, 40):
        ref = rw.mu @ np.linalg.matrix_power(P, n) @ rw.r
        assert exact_transient(TransitionSequence.constant(P), rw, n) == pytest.approx(ref, rel=1e-12)


def test_exact_transient_product():
    F = family4()
    seq = F.forward_sequence(0.1)
    rw = reward4()
    prod = np.eye(4)
    for k in range(1, 13):
        prod = prod @ F((k - 1) * 0.1)
    assert exact_transient(seq, rw, 12) == pytest.approx(rw.mu @ prod @ rw.r, rel=1e-12)


def test_zero_drift_gives_stationary_mean():
    P = random_chain(4, 1)
    rw = reward4()
    pi = stationary_distribution(P)
    dm = DriftModel(P, np.zeros((4, 4)), np.zeros((4, 4)))
    assert forward_first(dm, rw, 50).value == pytest.approx(pi @ rw.r, rel=1e-13)
    assert backward_first(dm, rw).value == pytest.approx(pi @ rw.r, rel=1e-13)
    assert backward_second(dm, rw).value == pytest.approx(pi @ rw.r, rel=1e-13)


def test_backward_terms_dense_oracle():
    P = random_chain(3, 5)
    E1 = random_drift(3, 6, 0.01)
    E2 = random_drift(3, 7, 0.001)
    r = np.array([1.0, 2.0, -1.0])
    pi = stationary_distribution(P)
    Z = np.linalg.inv(np.eye(3) - P + np.outer(np.ones(3), pi))
    W = 2 * Z @ Z @ Z - Z @ Z
    t = backward_second(DriftModel(P, E1, E2), r).terms
    assert t["order1"] == pytest.approx(-pi @ E1 @ Z @ Z @ P @ r, rel=1e-11)
    assert t["cross"] == pytest.approx(pi @ E1 @ Z @ Z @ E1 @ Z @ Z @ P @ r, rel=1e-11)
    assert t["curvature"] == pytest.approx(0.5 * pi @ E2 @ W @ P @ r, rel=1e-11)
    assert t["cross_curvature"] == pytest.approx(pi @ E1 @ Z @ E1 @ W @ P @ r, rel=1e-11)
    printed = backward_second(DriftModel(P, E1, E2), r, "z1").terms
    assert printed["order1"] == pytest.approx(-pi @ E1 @ Z @ P @ r, rel=1e-11)


def test_forward_terms():
    P = random_chain(3, 2)
    E1 = random_drift(3, 3, 0.01)
    rw = reward3()
    pi = stationary_distribution(P)
    Z = fundamental_matrix(P, pi)
    t = forward_first(DriftModel(P, E1), rw, 20).terms
    assert t["order1_n"] == pytest.approx(20 * pi @ E1 @ Z @ rw.r)
    assert t["order1_const"] == pytest.approx(-pi @ E1 @ Z @ Z @ rw.r)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10_000))
def test_poisson_route_matches_closed_form(d, seed):
    P = random_chain(d, seed)
    E1 = random_drift(d, seed + 1, 0.01)
    r = np.random.default_rng(seed).normal(size=d)
    corr = backward_first(DriftModel(P, E1), r).terms["order1"]
    assert poisson_correction(P, E1, r) == pytest.approx(corr, abs=1e-10)


def test_poisson_correction_checks_residual():
    P = random_chain(3, 0)
    poisson_correction(P, random_drift(3, 1, 0.1), np.ones(3), check=True)


def test_forward_ladder():
    F = family3()
    rw = reward3()
    errs = []
    for i in range(4):
        eps = 0.01 / 2 ** i
        ex = exact_transient(F.forward_sequence(eps), rw, 30)
        errs.append(abs(forward_first(F.drift_model(eps), rw, 30).value - ex))
    assert min(ratios(errs)) > 3.5


@pytest.mark.parametrize("form,expected_order", [("z2", 3), ("z1", 1)])
def test_backward_second_forms(form, expected_order):
    F = family4()
    rw = reward4()
    n = 300
    errs = []
    for i in range(4):
        eps = 0.02 / 2 ** i
        ex = exact_transient(F.backward_sequence(eps, n), rw, n)
        errs.append(abs(backward_second(F.drift_model(eps), rw, form).value - ex))
    rs = ratios(errs)
    assert min(rs) > 2 ** expected_order * 0.875
    assert max(rs) < 2 ** expected_order * 1.15


def test_bad_forms():
    dm = DriftModel(random_chain(2, 0), random_drift(2, 1, 0.01))
    with pytest.raises(ValueError):
        backward_second(dm, np.ones(2))
    dm2 = DriftModel(dm.base, dm.e1, dm.e1)
    with pytest.raises(ValueError):
        backward_second(dm2, np.ones(2), form="z3")
