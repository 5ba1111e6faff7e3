"""
Tests for utils.metrization: the exponent q, the chain metric against exhaustive
enumeration, and the sandwich rho_q <= rho^q <= 4 rho_q.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from core.config import settings
from core.errors import CapExceededError, PreconditionError
from utils.metric import DistanceMatrix, quasi_constant, random_quasimetric
from utils.metrization import chain_metric, chain_metric_bruteforce, exponent_q, metrize_sample, sandwich_check

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_exponent_q():
    assert exponent_q(1.0) == 1.0
    assert exponent_q(2.0) == pytest.approx(0.5)
    assert (2 * 3.0) ** exponent_q(3.0) == pytest.approx(2.0)
    with pytest.raises(PreconditionError):
        exponent_q(0.5)


def test_chain_of_a_metric_is_itself():
    x = np.array([0.0, 1.0, 3.0, 7.0])
    m = DistanceMatrix(np.abs(x[:, None] - x[None, :]))
    result = chain_metric(m, 1.0)
    assert np.allclose(result.chain.d, m.d)
    assert result.max_sandwich_ratio == pytest.approx(1.0)
    assert result.summary()["n"] == 4


def test_chain_takes_the_shortcut():
    """With q = 1/2 the direct edge of length 9 costs 3 but the two-step chain costs 2"""
    m = DistanceMatrix([[0, 1, 9], [1, 0, 1], [9, 1, 0]])
    result = chain_metric(m, 0.5)
    assert result.chain.d[0, 2] == pytest.approx(2.0)
    assert result.max_sandwich_ratio == pytest.approx(1.5)


def test_chain_rejects_bad_exponent():
    m = DistanceMatrix([[0, 1], [1, 0]])
    for q in (0.0, 1.5):
        with pytest.raises(PreconditionError):
            chain_metric(m, q)


def test_chain_respects_the_apsp_cap(monkeypatch):
    monkeypatch.setattr(settings, "APSP_CAP", 3)
    with pytest.raises(CapExceededError):
        chain_metric(random_quasimetric(4, np.random.default_rng(0)), 1.0)


def test_bruteforce_is_limited_to_small_samples():
    with pytest.raises(CapExceededError):
        chain_metric_bruteforce(random_quasimetric(9, np.random.default_rng(0)), 1.0)


def test_sandwich_on_three_points():
    check = sandwich_check(DistanceMatrix([[0, 1, 4], [1, 0, 1], [4, 1, 0]]))
    assert check.passed
    assert check.quasi_constant == pytest.approx(2.0)
    assert check.q == pytest.approx(0.5)
    assert check.max_sandwich_ratio <= 4.0


@given(seeds, st.integers(min_value=3, max_value=6))
@hsettings(max_examples=25, deadline=None)
def test_chain_matches_enumeration(seed, n):
    m = random_quasimetric(n, np.random.default_rng(seed))
    q = exponent_q(quasi_constant(m))
    assert np.allclose(chain_metric(m, q).chain.d, chain_metric_bruteforce(m, q), rtol=0, atol=1e-12)


@given(seeds, st.integers(min_value=3, max_value=12), st.floats(min_value=0.01, max_value=0.5))
@hsettings(max_examples=40, deadline=None)
def test_sandwich_holds_on_random_quasimetrics(seed, n, low):
    check = sandwich_check(random_quasimetric(n, np.random.default_rng(seed), low=low))
    assert check.passed
    assert check.chain_quasi_constant <= 1 + 1e-9
    assert 1.0 - 1e-9 <= check.max_sandwich_ratio <= 4.0 + 1e-9
    assert math.isclose((2 * check.quasi_constant) ** check.q, 2.0)


@given(seeds, st.integers(min_value=3, max_value=10))
@hsettings(max_examples=30, deadline=None)
def test_adding_a_point_never_lengthens_a_chain(seed, n):
    big = random_quasimetric(n + 1, np.random.default_rng(seed))
    q = exponent_q(quasi_constant(big))
    small = chain_metric(big.submatrix(range(n)), q).chain.d
    grown = chain_metric(big, q).chain.d[:n, :n]
    assert np.all(grown <= small + 1e-12)


def test_metrize_sample_returns_the_chain_it_checked():
    m = DistanceMatrix([[0, 1, 4], [1, 0, 1], [4, 1, 0]])
    check, result = metrize_sample(m, q=0.25)
    assert check.q == result.q == 0.25
    assert check.bound == "lower"
    assert result.chain.d[0, 2] == pytest.approx(2 ** 0.5)
    assert sandwich_check(m).q == pytest.approx(0.5)
