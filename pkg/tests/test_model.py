import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmc.chains import random_chain, random_drift
from nsmc.errors import HorizonExceeded, NotStochastic
from nsmc.model import (DriftModel, RewardSpec, TransitionSequence, default_fd_index,
                        drift_sequence, fd_drift, fd_first, fd_second, first_violation,
                        validate_stochastic)


def test_validate_stochastic_accepts_and_freezes():
    P = validate_stochastic([[0.5, 0.5], [0.0, 1.0]])
    assert not P.flags.writeable
    # dust below zero is clamped
    Q = validate_stochastic([[1.0 + 5e-10, -5e-10], [0.5, 0.5]])
    assert Q.min() == 0.0


@pytest.mark.parametrize("bad,row", [
    ([[0.5, 0.6], [0.5, 0.5]], 0),
    ([[0.5, 0.5], [1.2, -0.2]], 1),
    ([[0.5, 0.5], [np.nan, 1.0]], 1),
])
def test_validate_stochastic_reports_row(bad, row):
    with pytest.raises(NotStochastic) as exc:
        validate_stochastic(bad)
    assert exc.value.row == row


def test_validate_stochastic_shape():
    with pytest.raises(NotStochastic):
        validate_stochastic(np.ones((2, 3)) / 3)


def test_reward_spec_checks():
    RewardSpec([1.0, 2.0], [0.25, 0.75])
    with pytest.raises(ValueError):
        RewardSpec([1.0, 2.0], [0.5, 0.6])
    with pytest.raises(ValueError):
        RewardSpec([1.0, 2.0, 3.0], [0.5, 0.5])


def test_drift_model_checks():
    P = random_chain(3, 0)
    DriftModel(P, random_drift(3, 1, 0.1))
    with pytest.raises(ValueError):
        DriftModel(P, np.ones((3, 3)))
    with pytest.raises(ValueError):
        DriftModel(P, random_drift(3, 1), np.ones((3, 3)))
    with pytest.raises(ValueError):
        DriftModel(P, random_drift(2, 1))


def test_drift_model_scaled():
    dm = DriftModel(random_chain(3, 0), random_drift(3, 1, 0.1), random_drift(3, 2, 0.1))
    half = dm.scaled(0.5)
    assert np.allclose(half.e1, 0.5 * dm.e1)
    assert np.allclose(half.e2, 0.25 * dm.e2)


def test_sequence_from_list_horizon():
    A, B = random_chain(2, 0), random_chain(2, 1)
    seq = TransitionSequence.from_list([A, B])
    assert np.array_equal(seq(2), B)
    with pytest.raises(HorizonExceeded):
        seq(3)
    with pytest.raises(IndexError):
        seq(0)
    held = TransitionSequence.from_list([A, B], hold_last=True)
    assert np.array_equal(held(50), B)


def test_sequence_reports_index_of_bad_matrix():
    good = random_chain(2, 0)
    seq = TransitionSequence(lambda k: good if k < 4 else [[1.5, -0.5], [0.5, 0.5]], 2)
    seq(3)
    with pytest.raises(NotStochastic) as exc:
        seq(4)
    assert exc.value.k == 4 and exc.value.row == 0


@pytest.mark.parametrize("alpha,j", [(0.1, 11), (0.5, 3), (1.0, 2), (3.0, 2)])
def test_default_fd_index(alpha, j):
    assert default_fd_index(alpha) == j
    assert default_fd_index(alpha) == int(np.ceil(1 / (1 - np.exp(-alpha))))


def test_fd_recovers_quadratic_exactly():
    dm = DriftModel(random_chain(4, 3), random_drift(4, 1, 0.01), random_drift(4, 2, 0.001))
    seq = drift_sequence(dm)
    for j in (2, 3, 7):
        fit = fd_drift(seq, j)
        assert np.allclose(fit.e1, dm.e1 + 0.5 * (j - 1) * dm.e2, atol=1e-14)
        assert np.allclose(fit.e2, dm.e2, atol=1e-13)


def test_fd_linear_drift_exact():
    dm = DriftModel(random_chain(3, 3), random_drift(3, 1, 0.01))
    seq = drift_sequence(dm)
    assert np.allclose(fd_first(seq, 5), dm.e1, atol=1e-15)
    assert np.allclose(fd_second(seq, 5), 0.0, atol=1e-15)


def test_fd_errors():
    seq = TransitionSequence.constant(random_chain(2, 0))
    with pytest.raises(ValueError):
        fd_first(seq, 1)
    short = TransitionSequence.from_list([random_chain(2, 0)] * 3)
    with pytest.raises(HorizonExceeded):
        fd_second(short, 3)


def test_first_violation():
    P = np.array([[0.9, 0.1], [0.5, 0.5]])
    e1 = np.array([[-0.1, 0.1], [0.0, 0.0]])
    dm = DriftModel(P, e1)
    # P_k[0,0] = 0.9 - 0.1 (k-1) < 0 first at k = 11
    assert first_violation(dm, 20) == 11
    assert first_violation(dm, 10) is None


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 1000), st.integers(1, 30))
def test_drift_sequence_rows_sum_to_one(d, seed, k):
    dm = DriftModel(random_chain(d, seed), random_drift(d, seed + 1, 1e-4))
    P = drift_sequence(dm)(k)
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-13)
