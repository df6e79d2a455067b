import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fvc.errors import DomainError
from fvc.special import beta, gamma, log_gamma, power_inequality_gap


def test_gamma_values():
    assert gamma(1.0) == 1.0
    assert gamma(5.0) == 24.0
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)


def test_gamma_rejects_bad_arguments():
    for bad in (0.0, -1.0, -0.5, math.inf, math.nan):
        with pytest.raises(DomainError):
            gamma(bad)


def test_gamma_recurrence():
    for x in np.linspace(0.1, 30.0, 200):
        lhs = gamma(x + 1.0)
        assert abs(lhs - x * gamma(x)) <= 1e-12 * lhs


def test_log_gamma_consistent():
    for x in (0.3, 1.0, 4.5, 20.0):
        assert log_gamma(x) == pytest.approx(math.log(gamma(x)), rel=1e-13)


def test_beta_values():
    assert beta(1.0, 1.0) == pytest.approx(1.0, rel=1e-13)
    assert beta(0.5, 0.5) == pytest.approx(math.pi, rel=1e-13)
    assert beta(2.0, 3.0) == pytest.approx(1.0 / 12.0, rel=1e-13)


def test_beta_symmetry():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a, b = rng.uniform(0.05, 40.0, 2)
        assert beta(a, b) == beta(b, a)


def test_beta_rejects_bad_arguments():
    with pytest.raises(DomainError):
        beta(0.0, 1.0)
    with pytest.raises(DomainError):
        beta(1.0, -2.0)


def test_power_inequality_examples():
    assert power_inequality_gap(0.5, 1.0, 1.0) == (0.0, 0.0)
    assert power_inequality_gap(1.0, 1.0, 3.0) == (4.0, 4.0)
    lhs, rhs = power_inequality_gap(0.5, 1.0, 4.0)
    assert lhs == pytest.approx(1.0)
    assert rhs == pytest.approx(0.5 * 3.0**1.5)


def test_power_inequality_bulk():
    rng = np.random.default_rng(42)
    for _ in range(10_000):
        alpha = rng.uniform(1e-6, 1.0)
        s1 = rng.uniform(1e-6, 100.0)
        s2 = s1 + rng.uniform(0.0, 100.0 - min(s1, 100.0) + 1e-9)
        lhs, rhs = power_inequality_gap(alpha, s1, s2)
        assert 0.0 <= lhs <= rhs + 1e-12 * max(1.0, rhs)


@given(
    st.floats(min_value=1e-3, max_value=1.0),
    st.floats(min_value=1e-3, max_value=100.0),
    st.floats(min_value=0.0, max_value=100.0),
)
def test_power_inequality_property(alpha, s1, gap):
    lhs, rhs = power_inequality_gap(alpha, s1, s1 + gap)
    assert 0.0 <= lhs <= rhs + 1e-12 * max(1.0, rhs)


def test_power_inequality_rejects_bad_ordering():
    with pytest.raises(DomainError):
        power_inequality_gap(0.5, 2.0, 1.0)
    with pytest.raises(DomainError):
        power_inequality_gap(1.5, 1.0, 2.0)
