import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from kext.errors import DomainError
from kext.quadrature import integrate
from kext.special import EULER_GAMMA, a_integral, digamma_int, harmonic, log_beta, log_gamma

mpmath.mp.dps = 40


def mp_lgamma(x):
    return float(mpmath.loggamma(mpmath.mpf(x)))


@pytest.mark.parametrize("x, expected", [
    (1.0, 0.0),
    (2.0, 0.0),
    (5.0, math.log(24.0)),
    (0.5, 0.5 * math.log(math.pi)),
])
def test_log_gamma_examples(x, expected):
    assert log_gamma(x) == pytest.approx(expected, abs=1e-15)


def test_log_gamma_relative_accuracy_on_range():
    # dense near the roots at 1 and 2 where cancellation is worst
    xs = np.concatenate([
        np.linspace(0.5, 3.0, 2001),
        np.geomspace(3.0, 1e6, 400),
        1.0 + np.array([1e-12, -1e-9, 1e-6, -1e-4, 0.05]),
        2.0 + np.array([-1e-12, 1e-9, -1e-6, 1e-4, -0.05]),
    ])
    worst = 0.0
    for x in xs:
        ref = mp_lgamma(x)
        got = log_gamma(float(x))
        if ref == 0.0:
            assert got == 0.0
            continue
        worst = max(worst, abs(got - ref) / abs(ref))
    assert worst <= 1e-13


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5, math.inf, math.nan])
def test_log_gamma_rejects_non_positive(x):
    with pytest.raises(DomainError):
        log_gamma(x)


def test_log_gamma_factorials_exact():
    for k in range(1, 21):
        assert math.exp(log_gamma(k)) == pytest.approx(math.factorial(k - 1), rel=1e-12)


@given(st.floats(min_value=0.5, max_value=1e5))
def test_log_gamma_recurrence(x):
    # lnG(x+1) = lnG(x) + ln x
    lhs = log_gamma(x + 1.0)
    rhs = log_gamma(x) + math.log(x)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("k, expected", [(0, 0.0), (1, 1.0), (4, 25 / 12)])
def test_harmonic_examples(k, expected):
    assert harmonic(k) == pytest.approx(expected, abs=1e-15)


def test_harmonic_matches_direct_sum():
    for k in (2, 10, 63, 64, 65, 1000, 12345):
        assert harmonic(k) == pytest.approx(math.fsum(1.0 / i for i in range(1, k + 1)), rel=1e-14)


def test_harmonic_log_limit():
    assert abs(harmonic(10**6) - math.log(10**6) - EULER_GAMMA) < 1e-6


def test_harmonic_asymptotic_branch_is_continuous():
    below = harmonic(10**7)
    above = harmonic(10**7 + 1)
    assert above - below == pytest.approx(1.0 / (10**7 + 1), rel=1e-5)


def test_harmonic_rejects_negative():
    with pytest.raises(DomainError):
        harmonic(-1)


def test_euler_gamma_digits():
    assert EULER_GAMMA == pytest.approx(float(mpmath.euler), abs=1e-16)


def test_digamma_int_matches_scipy():
    from scipy.special import digamma
    for k in range(1, 40):
        assert digamma_int(k) == pytest.approx(digamma(k), rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("k, expected", [
    (1, -EULER_GAMMA),
    (2, 1.0 - EULER_GAMMA),
    (3, 3.0 - 2.0 * EULER_GAMMA),
])
def test_a_integral_examples(k, expected):
    assert a_integral(k) == pytest.approx(expected, abs=1e-14)


def test_a_integral_recursion():
    for k in range(2, 13):
        lhs = a_integral(k)
        rhs = (k - 1) * a_integral(k - 1) + math.gamma(k - 1)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@pytest.mark.parametrize("k", range(1, 9))
def test_a_integral_against_quadrature(k):
    def f(u):
        out = np.zeros_like(u)
        pos = u > 0
        up = u[pos]
        out[pos] = np.exp((k - 1) * np.log(up) - up) * np.log(up)
        return out

    res = integrate(f, 0.0, math.inf, 1e-9, points=[1.0, float(k)])
    assert res.converged
    assert abs(res.value - a_integral(k)) <= 1e-8


def test_a_integral_rejects_zero():
    with pytest.raises(DomainError):
        a_integral(0)


@pytest.mark.parametrize("n, k, expected", [
    (2, 1, math.log(0.5)),
    (3, 3, math.log(1 / 3)),
    (10, 2, math.log(1 / 90)),
])
def test_log_beta_examples(n, k, expected):
    assert log_beta(n, k) == pytest.approx(expected, rel=1e-12)


@given(st.integers(min_value=1, max_value=10**6), st.data())
def test_log_beta_matches_mpmath(n, data):
    k = data.draw(st.integers(min_value=1, max_value=min(n, 60)))
    ref = float(mpmath.log(mpmath.beta(n - k + 1, k)))
    assert log_beta(n, k) == pytest.approx(ref, rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("n, k", [(3, 4), (3, 0), (1, 2)])
def test_log_beta_domain(n, k):
    with pytest.raises(DomainError):
        log_beta(n, k)
