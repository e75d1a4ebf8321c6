import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirsup.bounds import (
    abel_ratio,
    balance_exponent,
    comp_value,
    halasz_predictor,
    km_profile,
    prime_sum_ratio,
    nu_balance,
    pj_asymptotic_ratio,
    pj_asymptotic_ratios,
    queffelec_predictor,
    improved_rate_exponent,
    improved_rate_predictor,
    weighted_predictor,
    smooth_regime_boundaries,
    smooth_upper_functional,
)
from dirsup.numtheory import _primes_upto, nth_prime
from dirsup.weights import B_STAR, WeightSpec, cumulative_profile, weight_array


def test_classical_predictors():
    assert halasz_predictor(1024) == pytest.approx(147.73, abs=5e-3)
    assert halasz_predictor(math.e**2) == pytest.approx(math.e**2 / 2)
    assert queffelec_predictor(10**4, 0.5) == pytest.approx(10.857, abs=5e-4)
    with pytest.raises(ValueError):
        halasz_predictor(1)
    with pytest.raises(ValueError):
        queffelec_predictor(10, 0.7)


@given(st.floats(3, 1e9), st.floats(0, 0.5))
def test_predictor_specialisations(N, sigma):
    assert weighted_predictor(N, sigma) == queffelec_predictor(N, sigma)
    assert queffelec_predictor(N, 0) == halasz_predictor(N)
    assert halasz_predictor(N * 1.01) > halasz_predictor(N)
    assert queffelec_predictor(N, min(0.5, sigma + 0.01)) < queffelec_predictor(N, sigma) or \
        sigma == 0.5


def test_weighted_predictor_with_profile():
    d2 = cumulative_profile(WeightSpec("divisor"), 10**4).d2_tilde_at(10**4)
    assert weighted_predictor(10**4, 0, WeightSpec("divisor")) == pytest.approx(
        10**4 * d2 / math.log(10**4))
    m2 = cumulative_profile(WeightSpec("mangoldt"), 10**4).d2_tilde_at(10**4)
    assert weighted_predictor(10**4, 0.5, WeightSpec("mangoldt")) == pytest.approx(
        100 * m2 / math.log(10**4))


def test_improved_rate_exponent():
    assert improved_rate_exponent(0.4) == pytest.approx(1.0786, abs=5e-5)
    assert improved_rate_exponent(B_STAR, check_domain=False) == pytest.approx(1.0, abs=1e-15)
    for b in (B_STAR, 0.5, 0.1):
        with pytest.raises(ValueError):
            improved_rate_exponent(b)
    bs = np.linspace(B_STAR, 0.5, 1001)[1:-1]
    assert all(improved_rate_exponent(b) < 1 + b for b in bs)
    assert improved_rate_predictor(10**4, 0.5, 0.4) == pytest.approx(
        (10**4) ** (improved_rate_exponent(0.4) - 0.5) / math.sqrt(math.log(10**4)))


def test_smooth_upper_examples():
    lo, hi = smooth_regime_boundaries(10**6)
    assert lo == pytest.approx(117.29, abs=0.01) and hi == pytest.approx(1620.43, abs=0.01)
    a = smooth_upper_functional(10**6, 1000)
    assert a.regime == 2 and a.value == pytest.approx(40.25, abs=0.01)
    b = smooth_upper_functional(10**6, 50)
    assert b.regime == 3 and b.value == pytest.approx(26.28, abs=0.01)
    c = smooth_upper_functional(10**6, 5000)
    assert c.regime == 1
    assert c.value == pytest.approx(math.sqrt(5000 / math.log(5000)
                                              * math.log(10**6 / nth_prime(5000))))
    with pytest.raises(ValueError):
        smooth_upper_functional(10**6, 0)
    with pytest.raises(ValueError):
        smooth_regime_boundaries(15)


@pytest.mark.parametrize("N", [10**3, 10**4, 10**5])
def test_smooth_upper_boundary_jumps(N):
    pi_n = int(_primes_upto(N).size)
    vals = [smooth_upper_functional(N, t) for t in range(1, pi_n + 1)]
    jumps = [a.value / b.value for a, b in zip(vals, vals[1:]) if a.regime != b.regime]
    assert len(jumps) == 2
    assert all(0.25 <= r <= 4 for r in jumps)
    # regime 1 at the lower edge against regime 2: same size up to the lnln factor
    hi = math.ceil(smooth_regime_boundaries(N)[1])
    r = vals[hi - 1].value / (N * math.log(math.log(N))) ** 0.25
    assert 0.5 <= r <= 2


def prime_sum_brute(b, N):
    s = sum(p**-0.5 * (N / p) ** b for p in _primes_upto(N).tolist())
    return s / (math.sqrt(N) / math.log(N))


def test_prime_sum_ratio():
    assert prime_sum_ratio(0.3, 1000) == pytest.approx(prime_sum_brute(0.3, 1000), rel=1e-12)
    ps = _primes_upto(5000).astype(float)
    assert prime_sum_ratio(0, 5000) == pytest.approx(
        math.log(5000) * np.sum(ps**-0.5) / math.sqrt(5000), rel=1e-12)
    with pytest.raises(ValueError):
        prime_sum_ratio(0.5, 100)


def km_brute(N, sigma, nu, tau, weight):
    d = weight_array(weight, N)
    ps = _primes_upto(N).tolist()
    out = []
    for m in range(1, N // ps[nu - 1] + 1):
        s = sum(d[m] ** 2 * (m * ps[j - 1]) ** (-2 * sigma)
                for j in range(nu + 1, tau + 1) if m * ps[j - 1] <= N)
        out.append(math.sqrt(s))
    return np.array(out)


def test_km_example():
    k = km_profile(100, 0, 2, 25)
    assert k.K[0] == pytest.approx(math.sqrt(23))
    assert k.m.size == 100 // 3
    assert k.K[-1] == 0  # m = 33 has no admissible prime above p_2


@given(st.integers(30, 600), st.floats(0, 0.5), st.integers(1, 6),
       st.sampled_from(["unit", "divisor", "mangoldt"]))
def test_km_against_brute(N, sigma, nu, kind):
    pi_n = int(_primes_upto(N).size)
    tau = pi_n
    if nu >= tau:
        return
    w = WeightSpec(kind)
    k = km_profile(N, sigma, nu, tau, w)
    assert np.allclose(k.K, km_brute(N, sigma, nu, tau, w), rtol=1e-12, atol=1e-12)


def test_km_sigma0_counts_primes():
    N, nu, tau = 500, 3, 60
    k = km_profile(N, 0, nu, tau, WeightSpec("divisor"))
    d = weight_array(WeightSpec("divisor"), N)
    ps = _primes_upto(N)
    for m in (1, 2, 7, 30):
        cnt = sum(1 for j in range(nu + 1, tau + 1) if ps[j - 1] <= N / m)
        assert k.K[m - 1] ** 2 == pytest.approx(d[m] ** 2 * cnt)


def test_km_domain():
    with pytest.raises(ValueError):
        km_profile(100, 0, 5, 5)


def test_abel_ratio():
    assert abel_ratio(WeightSpec(), 0, 1000) == pytest.approx(1.0)
    assert abel_ratio(WeightSpec("divisor"), 0.25, 10**5) <= 4
    r = abel_ratio(WeightSpec("mangoldt"), 0.5, 10**5)
    assert math.isfinite(r) and r > 0


def test_pj_ratio():
    assert pj_asymptotic_ratio(10) == pytest.approx(29 / (10 * math.log(10)))
    assert pj_asymptotic_ratio(10) == pytest.approx(1.259, abs=5e-4)
    assert pj_asymptotic_ratio(100) == pytest.approx(1.175, abs=5e-4)
    arr = pj_asymptotic_ratios(200)
    assert np.allclose(arr, [pj_asymptotic_ratio(j) for j in range(2, 201)])
    with pytest.raises(ValueError):
        pj_asymptotic_ratio(1)


def test_nu_balance():
    assert balance_exponent(0) == 0.5
    assert comp_value(B_STAR) == pytest.approx(0, abs=1e-15)
    nu, tag, comp = nu_balance(10**6, 0.25)
    assert nu == 251 and tag == "power" and comp < 0
    nu, tag, comp = nu_balance(10**6)
    assert nu == 1000 and comp is None
    lnN = math.log(100)
    assert nu_balance(100)[0] == round(min(max(10, lnN**2 / math.log(lnN) ** 2), 100 / lnN**2))
    with pytest.raises(ValueError):
        nu_balance(10**6, 0.5)
