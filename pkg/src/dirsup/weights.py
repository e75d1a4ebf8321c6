"""Weight sequences d(n) and their cumulative characteristics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .numtheory import _primes_upto, _rounded, smallest_prime_factor_table

__all__ = [
    "B_STAR",
    "WEIGHT_KINDS",
    "WeightSpec",
    "WeightProfile",
    "PowerGrowth",
    "weight_value",
    "weight_array",
    "cumulative_profile",
    "growth_condition_scan",
    "power_growth_check",
]

B_STAR = (math.sqrt(5.0) - 1.0) / 4.0

WEIGHT_KINDS = ("unit", "divisor", "mangoldt", "table", "multiplicative")


@dataclass(frozen=True)
class WeightSpec:
    """A named weight sequence.

    ``table`` carries explicit values ``d(1..len(values))``; ``multiplicative``
    carries ``prime_power(p, k) -> d(p**k)`` for ``k >= 1``.
    """

    kind: str = "unit"
    values: tuple[float, ...] | None = None
    prime_power: Callable[[int, int], float] | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "table" and not self.values:
            raise ValueError("table weight needs values")
        if self.kind == "multiplicative" and self.prime_power is None:
            raise ValueError("multiplicative weight needs prime_power")

    @property
    def label(self) -> str:
        return self.name or self.kind

    @classmethod
    def table(cls, values: Sequence[float], name: str | None = None) -> "WeightSpec":
        return cls(kind="table", values=tuple(float(v) for v in values), name=name)

    @classmethod
    def multiplicative(cls, prime_power: Callable[[int, int], float],
                       name: str | None = None) -> "WeightSpec":
        return cls(kind="multiplicative", prime_power=prime_power, name=name)


def _factor_pairs(N: int):
    """Yield ``(rows, p, k)`` for the exact prime-power factorisation of 1..N."""
    spf = smallest_prime_factor_table(_rounded(N))
    rest = np.arange(N + 1, dtype=np.int64)
    idx = np.arange(N + 1)
    active = rest > 1
    while active.any():
        r = idx[active]
        p = spf[rest[r]]
        k = np.zeros(r.size, dtype=np.int64)
        cur = rest[r]
        while True:
            div = cur % p == 0
            if not div.any():
                break
            cur = np.where(div, cur // p, cur)
            k += div
        rest[r] = cur
        yield r, p, k
        active = rest > 1


def weight_array(spec: WeightSpec, N: int) -> np.ndarray:
    """``d(0..N)`` as floats; index 0 is unused and set to 0."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    out = np.zeros(N + 1)
    if N == 0:
        return out
    kind = spec.kind
    if kind == "unit":
        out[1:] = 1.0
    elif kind == "table":
        if N > len(spec.values):
            raise ValueError(f"weight table covers n <= {len(spec.values)}, asked {N}")
        out[1:] = spec.values[:N]
    elif kind == "mangoldt":
        primes = _primes_upto(N)
        logs = np.log(primes.astype(float))
        pk = primes.copy()
        live = pk <= N
        while live.any():
            out[pk[live]] = logs[live]
            pk = np.where(live, pk * primes, pk)
            live = live & (pk <= N)
    elif kind == "divisor":
        d = np.ones(N + 1, dtype=np.int64)
        for rows, _, k in _factor_pairs(N):
            d[rows] *= k + 1
        d[0] = 0
        out = d.astype(float)
    else:  # multiplicative
        out[1:] = 1.0
        for rows, p, k in _factor_pairs(N):
            pairs, inv = np.unique(np.stack([p, k]), axis=1, return_inverse=True)
            vals = np.array([float(spec.prime_power(int(a), int(b))) for a, b in pairs.T])
            out[rows] *= vals[inv.ravel()]
    return out


def weight_value(spec: WeightSpec, n: int) -> float:
    if n < 1:
        raise ValueError("n must be positive")
    kind = spec.kind
    if kind == "unit":
        return 1.0
    if kind == "table":
        if n > len(spec.values):
            raise ValueError(f"weight table covers n <= {len(spec.values)}, asked {n}")
        return float(spec.values[n - 1])
    factors = _factorize(n)
    if kind == "divisor":
        return float(math.prod(k + 1 for k in factors.values()))
    if kind == "mangoldt":
        return math.log(next(iter(factors))) if len(factors) == 1 else 0.0
    return float(math.prod(spec.prime_power(p, k) for p, k in factors.items()))


def _factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True, eq=False)
class WeightProfile:
    """Prefix characteristics of a weight for ``m = 1..M``.

    Arrays are 0-based: entry ``i`` belongs to ``m = i + 1``.  Use the
    ``*_at`` accessors to index by ``m``.
    """

    M: int
    D1: np.ndarray
    D2: np.ndarray
    D1_tilde: np.ndarray
    D2_tilde: np.ndarray

    def _at(self, arr: np.ndarray, m: int) -> float:
        if not 1 <= m <= self.M:
            raise IndexError(f"m={m} outside 1..{self.M}")
        return float(arr[m - 1])

    def d1_at(self, m: int) -> float:
        return self._at(self.D1, m)

    def d2_at(self, m: int) -> float:
        return self._at(self.D2, m)

    def d1_tilde_at(self, m: int) -> float:
        return self._at(self.D1_tilde, m)

    def d2_tilde_at(self, m: int) -> float:
        return self._at(self.D2_tilde, m)


def cumulative_profile(spec: WeightSpec, M: int) -> WeightProfile:
    if M < 1:
        raise ValueError("M must be positive")
    d = weight_array(spec, M)[1:]
    m = np.arange(1, M + 1, dtype=float)
    if spec.kind in ("unit", "divisor"):
        di = d.astype(np.int64)
        D1 = np.cumsum(di).astype(float)
        D2 = np.cumsum(di * di).astype(float)
    else:
        D1 = np.cumsum(d)
        D2 = np.cumsum(d * d)
    D1t = np.maximum.accumulate(D1 / m)
    D2t = np.sqrt(np.maximum.accumulate(D2 / m))
    for a in (D1, D2, D1t, D2t):
        a.setflags(write=False)
    return WeightProfile(M=M, D1=D1, D2=D2, D1_tilde=D1t, D2_tilde=D2t)


def growth_condition_scan(spec: WeightSpec, H: float, N: int) -> float:
    """Smallest C with ``d(k p^j) <= C d(k) j^H`` over ``k >= 2``, ``k p^j <= N``.

    Returns ``inf`` when some ``d(k) = 0`` while ``d(k p^j) != 0``.
    """
    if H < 0:
        raise ValueError("H must be nonnegative")
    if N < 4:
        return 0.0
    d = weight_array(spec, N)
    best = 0.0
    for p in _primes_upto(N // 2).tolist():
        j = 1
        pj = p
        while 2 * pj <= N:
            k = np.arange(2, N // pj + 1)
            num = d[k * pj]
            den = d[k] * j**H
            if np.any((den == 0) & (num != 0)):
                return math.inf
            ok = den != 0
            if ok.any():
                best = max(best, float(np.max(num[ok] / den[ok])))
            j += 1
            pj *= p
    return best


class PowerGrowth(NamedTuple):
    constant: float
    b: float
    b_star: float


def power_growth_check(spec: WeightSpec, b: float, M_list: Sequence[int]) -> PowerGrowth:
    """Empirical constant ``max_M D2_tilde(M) / M**b`` over ``M_list``."""
    if b < 0:
        raise ValueError("b must be nonnegative")
    if not M_list:
        raise ValueError("M_list is empty")
    prof = cumulative_profile(spec, max(M_list))
    c = max(prof.d2_tilde_at(M) / M**b for M in M_list)
    return PowerGrowth(constant=c, b=b, b_star=B_STAR)
