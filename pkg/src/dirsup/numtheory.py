"""Primes, prime-exponent vectors and the index-set decompositions.

Everything downstream works with integers ``n <= N`` identified by the
exponent vector of their factorisation over the first ``tau`` primes.  The
sets built here are

* ``E_j``: integers in ``[2, N]`` whose largest prime factor is ``p_j``;
* ``E_tau``: the ``p_tau``-smooth integers in ``[2, N]``;
* ``L_j``: for upper-half indices ``j``, the integers ``p_j * m`` with
  ``m <= N / p_j`` and ``m`` smooth below ``p_{tau // 2}``.

Primes are indexed from 1 (``p_1 = 2``) to match the usual notation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SmoothnessError",
    "PrimeTable",
    "ExponentVector",
    "IndexPartition",
    "sieve_primes",
    "prime_pi",
    "nth_prime",
    "first_primes",
    "factor_exponents",
    "exponent_matrix",
    "largest_prime_factor",
    "largest_prime_factor_table",
    "smallest_prime_factor_table",
    "e_partition",
    "smooth_set",
    "l_sets",
    "upper_block_range",
]

_SPF_LIMIT = 10**7
_SMALL_TABLE = 1 << 16


class SmoothnessError(ValueError):
    """An integer has a prime factor beyond the admitted range."""

    def __init__(self, n: int, factor: int, bound: int):
        super().__init__(
            f"{n} has prime factor {factor} exceeding p_tau = {bound}"
        )
        self.n = n
        self.factor = factor
        self.bound = bound


@dataclass(frozen=True, eq=False)
class PrimeTable:
    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return int(self.primes.size)

    def p(self, j: int) -> int:
        """The j-th prime, 1-based."""
        if j < 1 or j > self.primes.size:
            raise IndexError(f"p_{j} not in table (have {self.primes.size} primes)")
        return int(self.primes[j - 1])


@dataclass(frozen=True)
class ExponentVector:
    tau: int
    exps: tuple[int, ...]

    def value(self, table: PrimeTable) -> int:
        out = 1
        for j, a in enumerate(self.exps):
            if a:
                out *= int(table.primes[j]) ** a
        return out


@dataclass(frozen=True)
class IndexPartition:
    N: int
    sets: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def __getitem__(self, j: int) -> tuple[int, ...]:
        return self.sets.get(j, ())

    def union(self) -> list[int]:
        return sorted(n for s in self.sets.values() for n in s)


def _rounded(n: int) -> int:
    """Cache key for table sizes: next power of two, at least 2**16."""
    return max(_SMALL_TABLE, 1 << max(int(n) - 1, 1).bit_length())


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=8)
def _sieve_array(limit: int) -> np.ndarray:
    if limit < 2:
        return _readonly(np.zeros(0, dtype=np.int64))
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return _readonly(np.flatnonzero(is_prime).astype(np.int64))


def _primes_upto(n: int) -> np.ndarray:
    base = _sieve_array(_rounded(n))
    return base[: int(np.searchsorted(base, n, side="right"))]


def sieve_primes(limit: int) -> PrimeTable:
    """All primes ``<= limit`` by a plain Eratosthenes sieve."""
    if limit < 0:
        raise ValueError("limit must be nonnegative")
    return PrimeTable(limit=int(limit), primes=_primes_upto(int(limit)))


def prime_pi(table: PrimeTable, N: int) -> int:
    if N > table.limit:
        raise ValueError(f"N={N} exceeds prime table limit {table.limit}")
    return int(np.searchsorted(table.primes, N, side="right"))


def _nth_prime_bound(j: int) -> int:
    # Rosser: p_j < j (ln j + ln ln j) for j >= 6
    return 15 if j < 6 else int(j * (math.log(j) + math.log(math.log(j)))) + 1


def first_primes(k: int) -> np.ndarray:
    """``p_1..p_k`` as a read-only array."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return _readonly(np.zeros(0, dtype=np.int64))
    return _sieve_array(_rounded(_nth_prime_bound(k)))[:k]


def nth_prime(j: int) -> int:
    """``p_j`` for ``j >= 1``, sieving as far as needed."""
    if j < 1:
        raise ValueError("prime index starts at 1")
    return int(first_primes(j)[j - 1])


@lru_cache(maxsize=4)
def smallest_prime_factor_table(limit: int) -> np.ndarray:
    """``spf[n]`` for ``0 <= n <= limit``; ``spf[0] = 0`` and ``spf[1] = 1``."""
    spf = np.arange(limit + 1, dtype=np.int64)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == p:
            block = spf[p * p :: p]
            np.minimum(block, p, out=block)
    return _readonly(spf)


@lru_cache(maxsize=4)
def largest_prime_factor_table(limit: int) -> np.ndarray:
    """``lpf[n]`` for ``0 <= n <= limit`` with ``lpf[1] = 1``."""
    lpf = np.arange(limit + 1, dtype=np.int64)
    lpf[0] = 0
    for p in _sieve_array(limit).tolist():
        lpf[p::p] = p
    return _readonly(lpf)


def largest_prime_factor(n: int) -> int:
    """P+(n), with the convention P+(1) = 1."""
    if n < 1:
        raise ValueError("largest prime factor undefined for n < 1")
    if n <= _SMALL_TABLE:
        return int(largest_prime_factor_table(_SMALL_TABLE)[n])
    largest = 1
    m = n
    d = 2
    while d * d <= m:
        while m % d == 0:
            largest = d
            m //= d
        d += 1 if d == 2 else 2
    return m if m > 1 else largest


def factor_exponents(n: int, tau: int, table: PrimeTable) -> ExponentVector:
    """Exponent vector of ``n`` over ``p_1 .. p_tau``."""
    if n < 1:
        raise ValueError("n must be positive")
    if tau > len(table):
        raise ValueError(f"tau={tau} exceeds the {len(table)} primes in the table")
    exps = [0] * tau
    m = n
    for j in range(tau):
        if m == 1:
            break
        p = int(table.primes[j])
        while m % p == 0:
            m //= p
            exps[j] += 1
    if m != 1:
        bound = int(table.primes[tau - 1]) if tau else 1
        raise SmoothnessError(n, _smallest_factor(m), bound)
    return ExponentVector(tau=tau, exps=tuple(exps))


def _smallest_factor(m: int) -> int:
    if m % 2 == 0:
        return 2
    d = 3
    while d * d <= m:
        if m % d == 0:
            return d
        d += 2
    return m


def exponent_matrix(ns: np.ndarray, tau: int) -> sp.csr_matrix:
    """Sparse ``len(ns) x tau`` matrix whose row i is the exponent vector of ns[i].

    Factorises through the smallest-prime-factor table, so the cost is
    ``O(len(ns) * max Omega(n))``.
    """
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size == 0:
        return sp.csr_matrix((0, tau), dtype=np.int64)
    top = int(ns.max())
    if top > _SPF_LIMIT:
        raise ValueError(f"exponent_matrix supports n <= {_SPF_LIMIT}")
    spf = smallest_prime_factor_table(_rounded(top))
    primes = _sieve_array(_rounded(top))
    rows_out, cols_out = [], []
    rows = np.arange(ns.size)
    rest = ns.copy()
    active = rest > 1
    while active.any():
        r = rows[active]
        p = spf[rest[active]]
        cols = np.searchsorted(primes, p)
        rows_out.append(r)
        cols_out.append(cols)
        rest[active] //= p
        active = rest > 1
    rr = np.concatenate(rows_out) if rows_out else np.zeros(0, dtype=np.int64)
    cc = np.concatenate(cols_out) if cols_out else np.zeros(0, dtype=np.int64)
    bad = cc >= tau
    if bad.any():
        i = int(np.argmax(bad))
        bound = int(primes[tau - 1]) if tau else 1
        raise SmoothnessError(int(ns[rr[i]]), int(primes[cc[i]]), bound)
    data = np.ones(rr.size, dtype=np.int64)
    m = sp.coo_matrix((data, (rr, cc)), shape=(ns.size, tau)).tocsr()
    m.sum_duplicates()
    return m


def e_partition(N: int, table: PrimeTable | None = None) -> IndexPartition:
    """``E_j = {2 <= n <= N : P+(n) = p_j}`` for every ``p_j <= N``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    lpf = largest_prime_factor_table(_rounded(N))
    primes = _primes_upto(N) if table is None else table.primes[table.primes <= N]
    ns = np.arange(2, N + 1)
    keys = lpf[2 : N + 1]
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    sorted_ns = ns[order]
    bounds = np.searchsorted(sorted_keys, primes, side="left")
    ends = np.searchsorted(sorted_keys, primes, side="right")
    sets = {
        j + 1: tuple(int(x) for x in sorted_ns[b:e])
        for j, (b, e) in enumerate(zip(bounds, ends))
    }
    return IndexPartition(N=N, sets=sets)


def smooth_set(N: int, tau: int) -> list[int]:
    """The ``p_tau``-smooth integers in ``[2, N]``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    primes = _primes_upto(N)
    if not 1 <= tau <= primes.size:
        raise ValueError(f"tau={tau} outside [1, pi(N)={primes.size}]")
    return smooth_array(N, tau).tolist()


def smooth_array(N: int, tau: int) -> np.ndarray:
    lpf = largest_prime_factor_table(_rounded(N))
    cap = nth_prime(tau)
    ns = np.arange(2, N + 1)
    return ns[lpf[2 : N + 1] <= cap]


def upper_block_range(tau: int) -> range:
    """Block indices ``j`` in ``(tau/2, tau]``; odd tau uses ``floor(tau/2)+1 .. tau``."""
    return range(tau // 2 + 1, tau + 1)


def l_sets(N: int, tau: int) -> IndexPartition:
    """The blocks ``L_j = {p_j * m : m <= N / p_j, P+(m) <= p_{tau//2}}``.

    ``m = 1`` is admitted, so ``p_j`` itself lies in ``L_j`` when ``p_j <= N``.
    """
    if tau < 2:
        raise ValueError("tau must be at least 2")
    if N < 2:
        raise ValueError("N must be at least 2")
    p_half = nth_prime(tau // 2)
    lpf = largest_prime_factor_table(_rounded(N))
    sets: dict[int, tuple[int, ...]] = {}
    for j in upper_block_range(tau):
        p = nth_prime(j)
        mmax = N // p
        if mmax < 1:
            sets[j] = ()
            continue
        m = np.arange(1, mmax + 1)
        m = m[lpf[1 : mmax + 1] <= p_half]
        sets[j] = tuple(int(x) for x in p * m)
    return IndexPartition(N=N, sets=sets)
