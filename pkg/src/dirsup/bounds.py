"""Constant-free predictors and numeric checks of intermediate estimates.

Every predictor drops the unspecified absolute constant; experiments report
measured / predictor ratios, never pass/fail against an invented constant.
All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cube import log_plus, smooth_lower_functional
from .numtheory import _primes_upto, first_primes, nth_prime
from .weights import B_STAR, WeightSpec, cumulative_profile, weight_array

__all__ = [
    "Predictor",
    "KmProfile",
    "halasz_predictor",
    "queffelec_predictor",
    "weighted_predictor",
    "improved_rate_exponent",
    "improved_rate_predictor",
    "smooth_upper_functional",
    "smooth_regime_boundaries",
    "smooth_lower_functional",
    "prime_sum_ratio",
    "km_profile",
    "abel_ratio",
    "pj_asymptotic_ratio",
    "pj_asymptotic_ratios",
    "nu_balance",
    "balance_exponent",
    "comp_value",
]


@dataclass(frozen=True)
class Predictor:
    name: str
    value: float
    params: dict = field(default_factory=dict)
    regime: int | None = None


def _check_N(N: float):
    if N < 2:
        raise ValueError("N must be at least 2")


def _check_sigma(sigma: float):
    if not 0.0 <= sigma <= 0.5:
        raise ValueError(f"sigma={sigma} outside [0, 1/2]")


def halasz_predictor(N: float) -> float:
    """``N / ln N``."""
    _check_N(N)
    return N / math.log(N)


def queffelec_predictor(N: float, sigma: float) -> float:
    """``N^(1 - sigma) / ln N``."""
    _check_N(N)
    _check_sigma(sigma)
    return N ** (1.0 - sigma) / math.log(N)


def weighted_predictor(N: int, sigma: float, weight: WeightSpec | None = None) -> float:
    """``N^(1 - sigma) * D2_tilde(N) / ln N``."""
    _check_N(N)
    _check_sigma(sigma)
    weight = weight or WeightSpec()
    if weight.kind == "unit":
        d2t = 1.0
    else:
        d2t = cumulative_profile(weight, int(N)).d2_tilde_at(int(N))
    return N ** (1.0 - sigma) * d2t / math.log(N)


def improved_rate_exponent(b: float, check_domain: bool = True) -> float:
    """``r(b) = b + (2b + 3) / (4 (1 + b))`` for ``b`` in ``(b_*, 1/2)``."""
    if check_domain and not B_STAR < b < 0.5:
        raise ValueError(f"b={b} outside ({B_STAR:.6f}, 1/2)")
    return b + (2.0 * b + 3.0) / (4.0 * (1.0 + b))


def improved_rate_predictor(N: float, sigma: float, b: float) -> float:
    """``N^(r(b) - sigma) / (ln N)^(1/2)``."""
    _check_N(N)
    _check_sigma(sigma)
    return N ** (improved_rate_exponent(b) - sigma) / math.sqrt(math.log(N))


def smooth_regime_boundaries(N: float) -> tuple[float, float]:
    """Regime edges ``((N lnln N)^(1/2) / ln N, (N lnln N)^(1/2))``."""
    if N < 16:
        raise ValueError("regime boundaries need N >= 16 so that lnln N > 0")
    root = math.sqrt(N * math.log(math.log(N)))
    return root / math.log(N), root


def smooth_upper_functional(N: int, tau: int) -> Predictor:
    """Three-regime upper functional for the ``p_tau``-smooth sum at sigma = 1/2.

    Regime 3 for ``tau <= lo``, regime 2 for ``lo < tau < hi``, regime 1 for
    ``tau >= hi`` (also used past ``N / ln N`` up to ``pi(N)``).
    """
    lo, hi = smooth_regime_boundaries(N)
    pi_n = _primes_upto(N).size
    if not 1 <= tau <= pi_n:
        raise ValueError(f"tau={tau} outside [1, pi(N)={pi_n}]")
    lnN = math.log(N)
    if tau <= lo:
        regime, value = 3, math.sqrt(tau * lnN)
    elif tau < hi:
        regime, value = 2, (N * math.log(lnN)) ** 0.25
    else:
        regime = 1
        value = math.sqrt(tau / math.log(tau) * log_plus(N / nth_prime(tau)))
    return Predictor(name="smooth_upper", value=value, params={"N": N, "tau": tau, "sigma": 0.5},
                     regime=regime)


def prime_sum_ratio(b: float, N: int) -> float:
    """``sum_{p <= N} p^(-1/2) (N/p)^b`` divided by ``N^(1/2) / ln N``."""
    if b >= 0.5:
        raise ValueError("b must be below 1/2")
    if b < 0:
        raise ValueError("b must be nonnegative")
    if N < 10:
        raise ValueError("N must be at least 10")
    p = _primes_upto(N).astype(float)
    s = float(np.sum(p**-0.5 * (N / p) ** b))
    return s / (math.sqrt(N) / math.log(N))


@dataclass(frozen=True, eq=False)
class KmProfile:
    m: np.ndarray
    K: np.ndarray
    ratio: np.ndarray

    @property
    def max_ratio(self) -> float:
        r = self.ratio[np.isfinite(self.ratio)]
        return float(r.max()) if r.size else math.nan


def km_profile(N: int, sigma: float, nu: int, tau: int,
               weight: WeightSpec | None = None) -> KmProfile:
    """Coefficients ``K_m`` for ``m <= N / p_nu`` and their ratio to the bound.

    ``K_m^2 = sum_{nu < j <= tau, m p_j <= N} d(m)^2 (m p_j)^(-2 sigma)``.
    For ``sigma < 1/2`` the reference is
    ``d(m) N^-sigma (N/m)^(1/2) ln(N/m)^(-1/2)``; at ``sigma = 1/2`` it is
    ``d(m) m^(-1/2) lnln(N/m)^(1/2)``.  Ratios are NaN where the reference
    vanishes or is undefined.
    """
    _check_sigma(sigma)
    weight = weight or WeightSpec()
    primes = _primes_upto(N).astype(float)
    if not 1 <= nu < tau <= primes.size:
        raise ValueError(f"need 1 <= nu < tau <= pi(N); got nu={nu}, tau={tau}")
    mmax = int(N // primes[nu - 1])
    m = np.arange(1, mmax + 1, dtype=float)
    d = weight_array(weight, mmax)[1:]
    pj = primes[nu:tau]
    # prefix sums of p_j^(-2 sigma) over the admissible j
    w = np.concatenate([[0.0], np.cumsum(pj ** (-2.0 * sigma))])
    count = np.searchsorted(pj, N / m, side="right")
    K = np.abs(d) * m**-sigma * np.sqrt(w[count])
    with np.errstate(divide="ignore", invalid="ignore"):
        if sigma < 0.5:
            ref = np.abs(d) * N**-sigma * np.sqrt(N / m) / np.sqrt(np.log(N / m))
        else:
            ref = np.abs(d) * m**-0.5 * np.sqrt(np.log(np.log(N / m)))
        ratio = np.where(ref > 0, K / ref, np.nan)
    return KmProfile(m=m.astype(np.int64), K=K, ratio=ratio)


def abel_ratio(weight: WeightSpec, sigma: float, M: int) -> float:
    """Partial sum of ``d(m)^2 m^(-2 sigma)`` over its summation-by-parts bound."""
    _check_sigma(sigma)
    if M < 2:
        raise ValueError("M must be at least 2")
    d = weight_array(weight, M)[1:]
    m = np.arange(1, M + 1, dtype=float)
    s = float(np.sum(d * d * m ** (-2.0 * sigma)))
    d2t = cumulative_profile(weight, M).d2_tilde_at(M)
    if sigma < 0.5:
        return s / (d2t**2 * M ** (1.0 - 2.0 * sigma))
    return s / (d2t**2 * math.log(M))


def pj_asymptotic_ratio(j: int) -> float:
    """``p_j / (j ln j)``."""
    if j < 2:
        raise ValueError("j must be at least 2")
    return nth_prime(j) / (j * math.log(j))


def pj_asymptotic_ratios(jmax: int) -> np.ndarray:
    """``p_j / (j ln j)`` for ``j = 2..jmax``."""
    if jmax < 2:
        raise ValueError("jmax must be at least 2")
    p = first_primes(jmax)[1:].astype(float)
    j = np.arange(2, jmax + 1, dtype=float)
    return p / (j * np.log(j))


def balance_exponent(b: float) -> float:
    """``h(b) = 1 / (2 (b + 1))``."""
    return 1.0 / (2.0 * (b + 1.0))


def comp_value(b: float) -> float:
    """``(4b^2 + 2b - 1) / (4 (b + 1))``; negative exactly for ``b < b_*``."""
    return (4.0 * b * b + 2.0 * b - 1.0) / (4.0 * (b + 1.0))


def nu_balance(N: int, b: float | None = None) -> tuple[int, str, float | None]:
    """Split parameter ``nu`` and a tag for how it was chosen.

    Without ``b``: ``N^(1/2)`` clamped into ``[ln^2 N / lnln^2 N, N / ln^2 N]``.
    With ``b``: ``round(N^h(b))``.  The third item is :func:`comp_value` when
    ``b`` is given.
    """
    if N < 16:
        raise ValueError("N must be at least 16")
    if b is None:
        lnN = math.log(N)
        lo = lnN**2 / math.log(lnN) ** 2
        hi = N / lnN**2
        nu = min(max(math.sqrt(N), lo), hi)
        return max(1, int(round(nu))), "vast_range", None
    if b >= 0.5:
        raise ValueError("b must be below 1/2")
    nu = int(round(N ** balance_exponent(b)))
    tag = "power" if b < B_STAR else "power_beyond_b_star"
    return max(1, nu), tag, comp_value(b)
