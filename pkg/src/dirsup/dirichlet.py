"""Random Dirichlet polynomials on the critical strip and their torus lift.

A polynomial ``D(sigma + it) = sum_n eps_n d(n) n^(-sigma - it)`` is lifted to
``Q(z) = sum_n eps_n d(n) n^(-sigma) exp(2 pi i <a(n), z>)`` on the torus
``T^tau`` by sending each prime ``p_j`` to its own coordinate.  The line
``t -> z(t)`` with ``z_j = frac(-t ln p_j / 2 pi)`` maps ``D`` onto ``Q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .numtheory import _primes_upto, exponent_matrix, first_primes, smooth_array
from .weights import WeightSpec, weight_array

__all__ = [
    "PolynomialSpec",
    "SignAssignment",
    "TorusPoint",
    "LiftedPolynomial",
    "derive_seed",
    "eval_line",
    "eval_line_many",
    "eval_line_grid_abs2",
    "bohr_lift",
    "eval_torus",
    "eval_torus_many",
    "torus_gradient",
    "line_to_torus",
    "triangle_bound",
]

TWO_PI = 2.0 * math.pi


def derive_seed(master: int, *keys: int) -> int:
    """64-bit child seed from a master seed and an integer path.

    Uses numpy's SeedSequence hashing, which is stable across platforms
    and independent of evaluation order.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class PolynomialSpec:
    N: int
    sigma: float = 0.0
    weight: WeightSpec = field(default_factory=WeightSpec)
    smooth_cap: int | None = None
    include_unit: bool = True

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not 0.0 <= self.sigma <= 0.5:
            raise ValueError(f"sigma={self.sigma} outside [0, 1/2]")
        if self.smooth_cap is not None:
            pi_n = _primes_upto(self.N).size
            if not 1 <= self.smooth_cap <= pi_n:
                raise ValueError(f"smooth_cap={self.smooth_cap} outside [1, pi(N)={pi_n}]")
        if not self.include_unit and self.N < 2:
            raise ValueError("empty index set")

    @property
    def tau(self) -> int:
        """Torus dimension of the lift."""
        if self.smooth_cap is not None:
            return self.smooth_cap
        return int(_primes_upto(self.N).size)

    @cached_property
    def indices(self) -> np.ndarray:
        if self.smooth_cap is not None and self.N >= 2:
            ns = smooth_array(self.N, self.smooth_cap)
        else:
            ns = np.arange(2, self.N + 1)
        if self.include_unit:
            ns = np.concatenate([[1], ns])
        ns = ns.astype(np.int64)
        ns.setflags(write=False)
        return ns

    @cached_property
    def base_coefficients(self) -> np.ndarray:
        """``d(n) n^(-sigma)`` over :attr:`indices` (signs not applied)."""
        d = weight_array(self.weight, self.N)[self.indices]
        c = d * np.exp(-self.sigma * np.log(self.indices.astype(float)))
        c.setflags(write=False)
        return c

    @cached_property
    def log_indices(self) -> np.ndarray:
        out = np.log(self.indices.astype(float))
        out.setflags(write=False)
        return out


@dataclass(frozen=True, eq=False)
class SignAssignment:
    """Rademacher signs ``eps_1..eps_N`` (entry ``i`` belongs to ``n = i + 1``)."""

    N: int
    signs: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        s = np.asarray(self.signs, dtype=np.int8)
        if s.shape != (self.N,):
            raise ValueError(f"expected {self.N} signs, got shape {s.shape}")
        if not np.all(np.abs(s) == 1):
            raise ValueError("signs must be +1 or -1")
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    @classmethod
    def draw(cls, N: int, seed: int) -> "SignAssignment":
        rng = np.random.default_rng(seed)
        signs = (2 * rng.integers(0, 2, size=N, dtype=np.int8) - 1).astype(np.int8)
        return cls(N=N, signs=signs, seed=int(seed))

    @classmethod
    def ones(cls, N: int) -> "SignAssignment":
        return cls(N=N, signs=np.ones(N, dtype=np.int8))

    def __neg__(self) -> "SignAssignment":
        return SignAssignment(N=self.N, signs=-self.signs.astype(np.int8))

    def flipped(self, n: int) -> "SignAssignment":
        s = self.signs.copy()
        s[n - 1] = -s[n - 1]
        return SignAssignment(N=self.N, signs=s)

    def at(self, ns: np.ndarray) -> np.ndarray:
        return self.signs[np.asarray(ns) - 1].astype(float)


@dataclass(frozen=True, eq=False)
class TorusPoint:
    tau: int
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).reshape(-1)
        if z.size != self.tau:
            raise ValueError(f"point has {z.size} coordinates, expected {self.tau}")
        if np.any((z < 0.0) | (z >= 1.0)):
            raise ValueError("torus coordinates must lie in [0, 1)")
        object.__setattr__(self, "z", z)

    @classmethod
    def wrap(cls, z) -> "TorusPoint":
        z = np.mod(np.asarray(z, dtype=float).reshape(-1), 1.0)
        z[z >= 1.0] = 0.0
        return cls(tau=z.size, z=z)


@dataclass(frozen=True, eq=False)
class LiftedPolynomial:
    """Terms ``coefficient * exp(2 pi i <frequency, z>)`` on ``T^tau``.

    ``freqs`` is a sparse ``(terms, tau)`` integer matrix; ``ns`` records the
    integer each term came from.
    """

    tau: int
    ns: np.ndarray
    freqs: sp.csr_matrix
    coeffs: np.ndarray

    def __len__(self) -> int:
        return int(self.coeffs.size)

    def frequency(self, i: int) -> np.ndarray:
        return self.freqs.getrow(i).toarray().ravel()

    @cached_property
    def freqs_T(self) -> sp.csr_matrix:
        return self.freqs.T.tocsr()

    @cached_property
    def abs_sum(self) -> float:
        return float(np.abs(self.coeffs).sum())


def triangle_bound(spec: PolynomialSpec) -> float:
    return float(np.abs(spec.base_coefficients).sum())


def _signed(spec: PolynomialSpec, signs: SignAssignment) -> np.ndarray:
    if signs.N < spec.N:
        raise ValueError(f"signs cover n <= {signs.N}, need {spec.N}")
    return signs.at(spec.indices) * spec.base_coefficients


def eval_line(spec: PolynomialSpec, signs: SignAssignment, t: float) -> complex:
    """``sum_n eps_n d(n) n^(-sigma) exp(-i t ln n)`` over the index set."""
    return complex(eval_line_many(spec, signs, [t])[0])


def eval_line_many(spec: PolynomialSpec, signs: SignAssignment, ts) -> np.ndarray:
    """Vectorised :func:`eval_line`; bit-compatible with the scalar version."""
    c = _signed(spec, signs)
    ts = np.asarray(ts, dtype=float).reshape(-1)
    out = np.empty(ts.size, dtype=complex)
    step = max(1, 2**20 // max(1, c.size))
    for a in range(0, ts.size, step):
        ph = np.exp(-1j * (ts[a : a + step, None] * spec.log_indices[None, :]))
        out[a : a + step] = np.sum(c[None, :] * ph, axis=1)
    return out


def eval_line_grid_abs2(spec: PolynomialSpec, signs: SignAssignment, h: float,
                        count: int, block: int = 512) -> np.ndarray:
    """``|D(sigma + i k h)|^2`` for ``k = 0..count-1``.

    The grid is split in blocks of ``block`` steps.  Within a block the phase
    of term ``n`` is the block-start phase rotated by ``exp(-i k h ln n)``, so
    the whole sweep is one complex matrix product per batch of blocks.
    Values agree with :func:`eval_line` to about ``1e-10`` relative; callers
    needing exact reproducibility re-evaluate the argmax with ``eval_line``.
    """
    c = _signed(spec, signs)
    logs = spec.log_indices
    block = max(1, min(block, count))
    rot = np.exp(-1j * h * np.outer(logs, np.arange(block)))  # (terms, block)
    nblocks = -(-count // block)
    out = np.empty(nblocks * block)
    batch = max(1, 2**22 // max(1, c.size))
    for b0 in range(0, nblocks, batch):
        starts = (np.arange(b0, min(nblocks, b0 + batch)) * block) * h
        head = c[None, :] * np.exp(-1j * np.outer(starts, logs))
        vals = head @ rot
        out[b0 * block : (b0 + starts.size) * block] = (vals.real**2 + vals.imag**2).ravel()
    return out[:count]


def bohr_lift(spec: PolynomialSpec, signs: SignAssignment) -> LiftedPolynomial:
    c = _signed(spec, signs)
    tau = spec.tau
    freqs = exponent_matrix(spec.indices, tau)
    c = c.copy()
    c.setflags(write=False)
    return LiftedPolynomial(tau=tau, ns=spec.indices, freqs=freqs, coeffs=c)


def _check_dim(lift: LiftedPolynomial, tau: int):
    if tau != lift.tau:
        raise ValueError(f"point dimension {tau} does not match lift dimension {lift.tau}")


def _phases(lift: LiftedPolynomial, Z: np.ndarray) -> np.ndarray:
    """``exp(2 pi i <a(n), z>)`` for each row of ``Z``, shape ``(points, terms)``."""
    inner = lift.freqs @ Z.T  # (terms, points)
    return np.exp(1j * TWO_PI * np.ascontiguousarray(np.asarray(inner).T))


def eval_torus(lift: LiftedPolynomial, z: TorusPoint) -> complex:
    _check_dim(lift, z.tau)
    return complex(eval_torus_many(lift, z.z[None, :])[0])


def eval_torus_many(lift: LiftedPolynomial, Z: np.ndarray) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if lift.tau == 0:
        return np.full(Z.shape[0], lift.coeffs.sum(), dtype=complex)
    _check_dim(lift, Z.shape[1])
    # each point is reduced over its own contiguous row, so its value does not
    # depend on which other points share the batch
    return (_phases(lift, Z) * lift.coeffs[None, :]).sum(axis=1)


def _value_and_grad(lift: LiftedPolynomial, Z: np.ndarray):
    """``|Q|^2`` and its gradient at each row of ``Z``."""
    if lift.tau == 0:
        q = np.full(Z.shape[0], lift.coeffs.sum(), dtype=complex)
        return np.abs(q) ** 2, np.zeros_like(Z)
    terms = _phases(lift, Z) * lift.coeffs[None, :]  # (points, terms)
    q = terms.sum(axis=1)
    dq = TWO_PI * 1j * np.asarray(lift.freqs_T @ terms.T).T  # (points, tau)
    grad = 2.0 * np.real(np.conj(q)[:, None] * dq)
    return q.real**2 + q.imag**2, grad


def torus_gradient(lift: LiftedPolynomial, z: TorusPoint) -> np.ndarray:
    """Analytic gradient of ``|Q(z)|^2``."""
    _check_dim(lift, z.tau)
    return _value_and_grad(lift, z.z[None, :])[1][0]


def line_to_torus(t: float, tau: int) -> TorusPoint:
    """Image of ``t`` under ``z_j = frac(-t ln p_j / 2 pi)``."""
    p = first_primes(tau)
    return TorusPoint.wrap(-t * np.log(p.astype(float)) / TWO_PI)
