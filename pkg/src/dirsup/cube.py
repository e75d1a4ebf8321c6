"""Lower-bound machinery on the discrete cube.

On the cube ``Z`` (``z_j = 0`` for ``j <= tau/2`` and ``z_j in {0, 1/2}``
above) every character ``exp(2 pi i <a(n), z>)`` is ``+-1``.  For ``n`` in a
block ``L_j = p_j * (p_{tau//2}-smooth)`` the character depends on ``z_j``
alone, so the restricted polynomial is ``sum_j eta_j S_j`` with free signs
``eta_j`` and block sums ``S_j = sum_{n in L_j} d(n) eps_n n^(-sigma)``.
Its supremum over ``Z`` is therefore ``sum_j |S_j|``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dirichlet import LiftedPolynomial, PolynomialSpec, SignAssignment, eval_torus_many
from .numtheory import (
    IndexPartition,
    _primes_upto,
    _rounded,
    exponent_matrix,
    l_sets,
    largest_prime_factor_table,
    nth_prime,
    upper_block_range,
)
from .supremum import BudgetError, MCEstimate
from .weights import WeightSpec, weight_array

__all__ = [
    "KHINTCHINE_L1",
    "CubeDecomposition",
    "BlockSums",
    "cube_decomposition",
    "block_sums",
    "cube_sup",
    "cube_points",
    "cube_sup_bruteforce",
    "block_abs_expectations",
    "expected_cube_sup",
    "khintchine_band",
    "block_norm_functional",
    "smooth_lower_functional",
    "log_plus",
    "full_vs_block_expectations",
]

KHINTCHINE_L1 = 2.0**-0.5
EXACT_BLOCK_LIMIT = 20


def log_plus(x: float) -> float:
    return math.log(x) if x > 1.0 else 0.0


@dataclass(frozen=True, eq=False)
class CubeDecomposition:
    N: int
    tau: int
    sigma: float
    weight: WeightSpec
    blocks: IndexPartition
    coeffs: dict[int, np.ndarray] = field(repr=False)
    masses: dict[int, float] = field(default_factory=dict)

    @property
    def block_ids(self) -> list[int]:
        return sorted(self.blocks.sets)

    def sqrt_mass_sum(self) -> float:
        return float(sum(math.sqrt(m) for m in self.masses.values()))


@dataclass(frozen=True)
class BlockSums:
    S: dict[int, float]


def cube_decomposition(N: int, tau: int, sigma: float = 0.0,
                       weight: WeightSpec | None = None) -> CubeDecomposition:
    weight = weight or WeightSpec()
    if not 0.0 <= sigma <= 0.5:
        raise ValueError(f"sigma={sigma} outside [0, 1/2]")
    pi_n = _primes_upto(N).size
    if not 2 <= tau <= pi_n:
        raise ValueError(f"tau={tau} outside [2, pi(N)={pi_n}]")
    blocks = l_sets(N, tau)
    d = weight_array(weight, N)
    coeffs, masses = {}, {}
    for j, ns in blocks.sets.items():
        n = np.asarray(ns, dtype=np.int64)
        c = d[n] * np.exp(-sigma * np.log(n.astype(float))) if n.size else np.zeros(0)
        c.setflags(write=False)
        coeffs[j] = c
        masses[j] = float(np.sum(c * c))
    return CubeDecomposition(N=N, tau=tau, sigma=sigma, weight=weight, blocks=blocks,
                             coeffs=coeffs, masses=masses)


def block_sums(decomp: CubeDecomposition, signs: SignAssignment) -> BlockSums:
    if signs.N < decomp.N:
        raise ValueError(f"signs cover n <= {signs.N}, need {decomp.N}")
    S = {}
    for j in decomp.block_ids:
        ns = decomp.blocks[j]
        S[j] = float(np.dot(signs.at(ns), decomp.coeffs[j])) if ns else 0.0
    return BlockSums(S=S)


def cube_sup(decomp: CubeDecomposition, signs: SignAssignment) -> float:
    """``max_{z in Z} |Q'(z)| = sum_j |S_j|``."""
    return float(sum(abs(s) for s in block_sums(decomp, signs).S.values()))


def cube_points(tau: int) -> np.ndarray:
    """All ``2**(tau - tau//2)`` points of the cube, one per row."""
    upper = list(upper_block_range(tau))
    pts = np.zeros((2 ** len(upper), tau))
    for r, bits in enumerate(itertools.product((0.0, 0.5), repeat=len(upper))):
        pts[r, [j - 1 for j in upper]] = bits
    return pts


def _restricted_lift(ns: np.ndarray, coeffs: np.ndarray, tau: int) -> LiftedPolynomial:
    return LiftedPolynomial(tau=tau, ns=ns, freqs=exponent_matrix(ns, tau), coeffs=coeffs)


def cube_sup_bruteforce(decomp: CubeDecomposition, signs: SignAssignment) -> float:
    """``max_{z in Z} |Q'(z)|`` by evaluating the lifted polynomial at every cube point."""
    ids = [j for j in decomp.block_ids if decomp.blocks[j]]
    if not ids:
        return 0.0
    ns = np.concatenate([np.asarray(decomp.blocks[j], dtype=np.int64) for j in ids])
    c = np.concatenate([decomp.coeffs[j] for j in ids]) * signs.at(ns)
    lift = _restricted_lift(ns, c, decomp.tau)
    return float(np.max(np.abs(eval_torus_many(lift, cube_points(decomp.tau)))))


def _all_signs(k: int, chunk: int = 1 << 16):
    """Sign matrices covering ``{+-1}^k`` with the first sign fixed to +1."""
    total = 1 << max(k - 1, 0)
    shifts = np.arange(max(k - 1, 0))
    for a in range(0, total, chunk):
        codes = np.arange(a, min(total, a + chunk), dtype=np.int64)
        bits = (codes[:, None] >> shifts[None, :]) & 1
        rest = 1 - 2 * bits.astype(np.int8)
        yield np.concatenate([np.ones((codes.size, 1), dtype=np.int8), rest], axis=1)


def _exact_abs_mean(c: np.ndarray) -> float:
    """``E |sum_i eps_i c_i|`` by enumerating all sign patterns."""
    k = c.size
    if k == 0:
        return 0.0
    total = 0.0
    for E in _all_signs(k):
        total += float(np.abs(E @ c).sum())
    return total / (1 << (k - 1))


def block_abs_expectations(decomp: CubeDecomposition, mode: str = "auto",
                           n_draws: int = 4000, seed: int = 0):
    """Per-block ``E|S_j|`` and the variance of each estimate.

    ``exact`` enumerates every block (each ``|L_j| <= 20``); ``mc`` samples
    every block; ``auto`` enumerates small blocks and samples the rest.
    Block ``j`` samples from its own seeded stream ``(seed, j)``.
    """
    if mode not in ("exact", "mc", "auto"):
        raise ValueError(f"unknown mode {mode!r}")
    means, variances = {}, {}
    for j in decomp.block_ids:
        c = decomp.coeffs[j]
        small = c.size <= EXACT_BLOCK_LIMIT
        if mode == "exact" and not small:
            raise BudgetError(f"block L_{j} has {c.size} > {EXACT_BLOCK_LIMIT} elements")
        if c.size == 0:
            means[j], variances[j] = 0.0, 0.0
        elif mode == "exact" or (mode == "auto" and small):
            means[j], variances[j] = _exact_abs_mean(c), 0.0
        else:
            if n_draws < 2:
                raise ValueError("n_draws must be at least 2 for sampling")
            rng = np.random.default_rng([int(seed), int(j)])
            vals = np.empty(n_draws)
            step = max(1, (1 << 22) // c.size)
            for a in range(0, n_draws, step):
                m = min(step, n_draws - a)
                E = 2.0 * rng.integers(0, 2, size=(m, c.size), dtype=np.int8) - 1.0
                vals[a : a + m] = np.abs(E @ c)
            means[j] = float(vals.mean())
            variances[j] = float(vals.var(ddof=1) / n_draws)
    return means, variances


def expected_cube_sup(decomp: CubeDecomposition, mode: str = "exact",
                      n_draws: int = 4000, seed: int = 0) -> MCEstimate:
    """``E max_{z in Z} |Q'(z)| = sum_j E|S_j|`` (blocks are independent)."""
    means, variances = block_abs_expectations(decomp, mode, n_draws, seed)
    ids = decomp.block_ids
    mean = float(sum(means[j] for j in ids))
    stderr = math.sqrt(sum(variances[j] for j in ids))
    sampled = any(variances[j] > 0 for j in ids) or mode == "mc"
    return MCEstimate(mean=mean, stderr=stderr, n_draws=n_draws if sampled else 0,
                      seed=int(seed))


def khintchine_band(decomp: CubeDecomposition, c: float = KHINTCHINE_L1) -> tuple[float, float]:
    """``(c * sum_j sqrt(m_j), sum_j sqrt(m_j))``."""
    s = decomp.sqrt_mass_sum()
    return c * s, s


def block_norm_functional(N: int, tau: int, sigma: float = 0.0,
                           weight: WeightSpec | None = None) -> float:
    """``sum_j d(p_j) p_j^-sigma (sum_m (d(m) m^-sigma)^2)^(1/2)`` over smooth cofactors ``m``.

    Equals ``sum_j sqrt(m_j)`` when the weight is multiplicative.
    """
    weight = weight or WeightSpec()
    d = weight_array(weight, N)
    p_half = nth_prime(tau // 2)
    lpf = largest_prime_factor_table(_rounded(N))
    total = 0.0
    for j in upper_block_range(tau):
        p = nth_prime(j)
        mmax = N // p
        if mmax < 1:
            continue
        m = np.arange(1, mmax + 1)
        m = m[lpf[1 : mmax + 1] <= p_half]
        inner = np.sum((d[m] * np.exp(-sigma * np.log(m.astype(float)))) ** 2)
        total += d[p] * p**-sigma * math.sqrt(inner)
    return float(total)


def smooth_lower_functional(N: int, tau: int) -> float:
    """``(tau / ln tau * min(log+(N / p_tau), ln p_{tau//2}))^(1/2)``, constant-free."""
    if tau < 2:
        raise ValueError("tau must be at least 2 (ln tau = 0 otherwise)")
    pi_n = _primes_upto(N).size
    if tau > pi_n:
        raise ValueError(f"tau={tau} exceeds pi(N)={pi_n}")
    inner = min(log_plus(N / nth_prime(tau)), math.log(nth_prime(tau // 2)))
    return math.sqrt(tau / math.log(tau) * inner)


def full_vs_block_expectations(N: int, tau: int, sigma: float = 0.0, weight: WeightSpec | None = None,
                 max_terms: int = 18) -> tuple[float, float]:
    """Exact ``(E max_Z |Q|, E max_Z |Q'|)`` over all sign patterns.

    ``Q`` runs over the ``p_tau``-smooth integers in ``[2, N]`` and ``Q'`` over
    the blocks ``L_j``; the first expectation dominates the second.
    """
    weight = weight or WeightSpec()
    spec = PolynomialSpec(N=N, sigma=sigma, weight=weight, smooth_cap=tau, include_unit=False)
    ns = spec.indices
    if ns.size > max_terms:
        raise BudgetError(f"{ns.size} terms exceed enumeration limit {max_terms}")
    decomp = cube_decomposition(N, tau, sigma, weight)
    in_blocks = np.isin(ns, decomp.blocks.union())
    pts = cube_points(tau)
    chars = np.real(np.exp(2j * np.pi * (exponent_matrix(ns, tau) @ pts.T)))  # (terms, points)
    chars = np.rint(chars)
    full = (spec.base_coefficients[:, None] * chars)
    part = full * in_blocks[:, None]
    tot_q = tot_qp = 0.0
    count = 0
    for E in _all_signs(ns.size):
        tot_q += float(np.abs(E @ full).max(axis=1).sum())
        tot_qp += float(np.abs(E @ part).max(axis=1).sum())
        count += E.shape[0]
    return tot_q / count, tot_qp / count
