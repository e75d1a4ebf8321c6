"""Lower-certified supremum estimators and Monte Carlo averages over signs.

Every estimate is witnessed: ``value`` is ``|D|`` (or ``|Q|``) re-evaluated
at the stored witness with the canonical evaluators, so it is a certified
lower bound for the true supremum.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dirichlet import (
    TWO_PI,
    LiftedPolynomial,
    PolynomialSpec,
    SignAssignment,
    _value_and_grad,
    bohr_lift,
    derive_seed,
    eval_line_grid_abs2,
    eval_line_many,
    eval_torus_many,
)

__all__ = [
    "BudgetError",
    "SupEstimate",
    "MCEstimate",
    "EstimatorConfig",
    "sup_t_grid",
    "sup_torus_multistart",
    "sup_torus_dense",
    "estimate_sup",
    "expected_sup",
]

METHODS = ("t_grid", "torus_multistart", "torus_dense")
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_DENSE_MAX_TAU = 4
_DENSE_MAX_POINTS = 1 << 24


class BudgetError(ValueError):
    """Requested computation exceeds a hard size guard."""


@dataclass(frozen=True, eq=False)
class SupEstimate:
    value: float
    method: str
    budget: int
    witness: object
    refined: bool = False
    lower_certificate: bool = True


@dataclass(frozen=True, eq=False)
class MCEstimate:
    mean: float
    stderr: float
    n_draws: int
    seed: int
    values: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class EstimatorConfig:
    """Budgets for :func:`estimate_sup`.  ``T=None`` means ``1e4 * N``."""

    method: str = "torus_multistart"
    T: float | None = None
    grid_count: int = 10**6
    refine_iters: int = 40
    starts: int = 64
    iters: int = 200
    per_axis: int = 64
    dense_refine: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown estimator {self.method!r}")


# ---------------------------------------------------------------- line grid

def _golden_refine(spec, signs, lo, hi, iters):
    """Vectorised golden-section maximisation of ``|D|^2`` on ``[lo, hi]``.

    Returns every probe point and its ``|D|`` value.
    """
    def f(t):
        return np.abs(eval_line_many(spec, signs, t))

    a, b = lo.copy(), hi.copy()
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    probes_t = [c, d]
    probes_v = [fc, fd]
    for _ in range(iters):
        left = fc > fd
        # keep [a, d] where f(c) wins, else [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _GOLDEN * (b - a)
        new_d = a + _GOLDEN * (b - a)
        probe = np.where(left, new_c, new_d)
        fp = f(probe)
        c, d = np.where(left, new_c, d), np.where(left, c, new_d)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        probes_t.append(probe)
        probes_v.append(fp)
    return np.concatenate(probes_t), np.concatenate(probes_v)


def sup_t_grid(spec: PolynomialSpec, signs: SignAssignment, T: float,
               grid_count: int, refine_iters: int = 40,
               max_candidates: int = 4096) -> SupEstimate:
    """Maximum of ``|D(sigma + it)|`` over a uniform grid on ``[0, T]``.

    Local grid maxima are refined by golden-section search inside their
    bracketing cells.  A local maximum whose grid value plus the Lipschitz
    allowance ``(h/2) sum |c_n| ln n`` cannot beat the best grid value is
    skipped, which leaves the result unchanged.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if grid_count < 2:
        raise ValueError("grid_count must be at least 2")
    h = T / (grid_count - 1)
    abs2 = eval_line_grid_abs2(spec, signs, h, grid_count)
    kbest = int(np.argmax(abs2))
    best_t = kbest * h
    best_v = _modulus(eval_line_many(spec, signs, [best_t])[0])
    budget = grid_count + 1
    refined = False
    if refine_iters > 0:
        amp = np.sqrt(abs2)
        left = np.concatenate([[-np.inf], amp[:-1]])
        right = np.concatenate([amp[1:], [-np.inf]])
        peaks = np.flatnonzero((amp >= left) & (amp >= right))
        lip = float(np.sum(np.abs(spec.base_coefficients) * spec.log_indices))
        slack = 0.5 * h * lip + 1e-9 * (1.0 + amp[kbest])
        peaks = peaks[amp[peaks] + slack >= amp[kbest]]
        if peaks.size > max_candidates:
            peaks = peaks[np.argsort(-amp[peaks], kind="stable")[:max_candidates]]
            peaks.sort()
        lo = np.maximum(peaks - 1, 0) * h
        hi = np.minimum(peaks + 1, grid_count - 1) * h
        pt, pv = _golden_refine(spec, signs, lo, hi, refine_iters)
        budget += pv.size
        refined = True
        i = int(np.argmax(pv))
        if pv[i] > best_v:
            cand = _modulus(eval_line_many(spec, signs, [pt[i]])[0])
            if cand > best_v:
                best_t, best_v = float(pt[i]), cand
    return SupEstimate(value=best_v, method="t_grid", budget=budget,
                       witness=float(best_t), refined=refined)


# -------------------------------------------------------------------- torus

def _step_scale(lift: LiftedPolynomial) -> float:
    """Inverse curvature bound for ``|Q|^2``; a safe first ascent step."""
    a = abs(lift.coeffs)
    norms1 = np.asarray(abs(lift.freqs).sum(axis=1)).ravel().astype(float)
    s0, s1, s2 = a.sum(), (a * norms1).sum(), (a * norms1**2).sum()
    L = 2.0 * (TWO_PI * s1) ** 2 + 2.0 * s0 * TWO_PI**2 * s2
    return 1.0 / L if L > 0 else 1.0


def _ascend(lift: LiftedPolynomial, Z: np.ndarray, iters: int):
    """Projected gradient ascent on ``|Q|^2`` from each row of ``Z``.

    Step sizes are per start: doubled after an accepted step, halved on
    rejection.  A step is accepted only if it strictly increases ``|Q|^2``,
    so each trajectory is monotone.
    """
    f, g = _value_and_grad(lift, Z)
    evals = Z.shape[0]
    step = np.full(Z.shape[0], _step_scale(lift))
    floor = step * 2.0**-60
    for _ in range(iters):
        live = step > floor
        if not live.any():
            break
        idx = np.flatnonzero(live)
        trial = np.mod(Z[idx] + step[idx, None] * g[idx], 1.0)
        ft, gt = _value_and_grad(lift, trial)
        evals += idx.size
        up = ft > f[idx]
        acc = idx[up]
        Z[acc], f[acc], g[acc] = trial[up], ft[up], gt[up]
        step[acc] *= 2.0
        step[idx[~up]] *= 0.5
    return Z, evals


def _modulus(q) -> float:
    # canonical |q|, identical to abs() of the complex returned by the point evaluators
    return float(abs(complex(q)))


def _best_on_torus(lift: LiftedPolynomial, Z: np.ndarray):
    q = eval_torus_many(lift, Z)
    mods = [_modulus(v) for v in q]
    i = int(np.argmax(mods))
    return mods[i], Z[i].copy()


def sup_torus_multistart(lift: LiftedPolynomial, starts: int = 64, iters: int = 200,
                         seed: int = 0) -> SupEstimate:
    """Best of ``starts`` gradient-ascent runs from uniform random points.

    The first ``k`` start points are the same for any ``starts >= k`` with a
    fixed seed, so the estimate is monotone in ``starts`` and ``iters``.
    """
    if starts < 1:
        raise ValueError("starts must be at least 1")
    if lift.tau == 0:
        return SupEstimate(value=_modulus(lift.coeffs.sum()), method="torus_multistart",
                           budget=1, witness=np.zeros(0), refined=True)
    rng = np.random.default_rng(seed)
    Z = rng.random((starts, lift.tau))
    Z, evals = _ascend(lift, Z, iters)
    value, z = _best_on_torus(lift, Z)
    return SupEstimate(value=value, method="torus_multistart", budget=evals + starts,
                       witness=z, refined=True)


def _dense_grid_values(lift: LiftedPolynomial, per_axis: int) -> np.ndarray:
    """``Q`` on the grid ``(k_1, .., k_tau) / per_axis`` via an inverse FFT."""
    tau = lift.tau
    X = np.zeros((per_axis,) * tau, dtype=complex)
    A = lift.freqs.toarray() % per_axis
    np.add.at(X, tuple(A.T), lift.coeffs)
    return np.fft.ifftn(X) * per_axis**tau


def sup_torus_dense(lift: LiftedPolynomial, per_axis: int = 64, refine: bool = True,
                    polish: int = 8, iters: int = 200) -> SupEstimate:
    """Maximum of ``|Q|`` on a uniform ``per_axis**tau`` grid.

    With ``refine`` the ``polish`` best grid points seed gradient ascent,
    removing the grid discretisation error.
    """
    tau = lift.tau
    if tau > _DENSE_MAX_TAU:
        raise BudgetError(f"dense torus grid limited to tau <= {_DENSE_MAX_TAU}, got {tau}")
    if per_axis**tau > _DENSE_MAX_POINTS:
        raise BudgetError(f"{per_axis}**{tau} grid points exceed {_DENSE_MAX_POINTS}")
    if per_axis < 1:
        raise ValueError("per_axis must be positive")
    if tau == 0:
        return SupEstimate(value=_modulus(lift.coeffs.sum()), method="torus_dense",
                           budget=1, witness=np.zeros(0))
    Qg = np.abs(_dense_grid_values(lift, per_axis)).ravel()
    budget = Qg.size
    k = min(polish, Qg.size) if refine else 1
    top = np.argsort(-Qg, kind="stable")[:k]
    Z = np.stack(np.unravel_index(top, (per_axis,) * tau), axis=1) / per_axis
    if refine:
        Z, evals = _ascend(lift, Z.astype(float), iters)
        budget += evals
    value, z = _best_on_torus(lift, Z)
    return SupEstimate(value=value, method="torus_dense", budget=budget,
                       witness=z, refined=refine)


# ------------------------------------------------------------- Monte Carlo

def estimate_sup(spec: PolynomialSpec, signs: SignAssignment, config: EstimatorConfig,
                 seed: int = 0) -> SupEstimate:
    if config.method == "t_grid":
        T = config.T if config.T is not None else 1e4 * spec.N
        return sup_t_grid(spec, signs, T, config.grid_count, config.refine_iters)
    lift = bohr_lift(spec, signs)
    if config.method == "torus_dense":
        return sup_torus_dense(lift, config.per_axis, refine=config.dense_refine,
                               iters=config.iters)
    return sup_torus_multistart(lift, config.starts, config.iters, seed)


def _draw_value(spec, config, master, i):
    signs = SignAssignment.draw(spec.N, derive_seed(master, i, 0))
    return estimate_sup(spec, signs, config, derive_seed(master, i, 1)).value


def _draw_chunk(args):
    spec, config, master, draws = args
    return [_draw_value(spec, config, master, i) for i in draws]


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("DIRSUP_THREADS", "1") or 1)
    return max(1, int(workers))


def expected_sup(spec: PolynomialSpec, config: EstimatorConfig | None = None,
                 n_draws: int = 100, seed: int = 0, workers: int | None = 1) -> MCEstimate:
    """Monte Carlo mean of the estimated supremum over Rademacher draws.

    Draw ``i`` uses signs seeded by ``derive_seed(seed, i, 0)`` and estimator
    randomness from ``derive_seed(seed, i, 1)``, and values are reduced in
    draw order, so the result does not depend on ``workers``.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be positive")
    config = config or EstimatorConfig()
    workers = resolve_workers(workers)
    draws = list(range(n_draws))
    if workers == 1 or n_draws == 1:
        values = _draw_chunk((spec, config, seed, draws))
    else:
        chunks = [draws[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_draw_chunk, [(spec, config, seed, c) for c in chunks]))
        values = [0.0] * n_draws
        for c, vals in zip(chunks, parts):
            for i, v in zip(c, vals):
                values[i] = v
    arr = np.asarray(values, dtype=float)
    mean = float(np.mean(arr))
    stderr = float(np.std(arr, ddof=1) / math.sqrt(n_draws)) if n_draws > 1 else math.nan
    return MCEstimate(mean=mean, stderr=stderr, n_draws=n_draws, seed=int(seed),
                      values=tuple(float(v) for v in arr))
