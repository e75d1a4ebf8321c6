"""Invariant suite behind ``dirsup verify``.

Each check is small, deterministic and independent; a check returns a short
detail string on success and raises ``AssertionError`` on violation.
"""
from __future__ import annotations

import csv
import math
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np

from . import bounds, cli, cube, dirichlet, numtheory, supremum, weights
from .dirichlet import PolynomialSpec, SignAssignment
from .weights import WeightSpec

__all__ = ["CHECKS", "run_suite", "run_checks"]

CHECKS: list[tuple[str, Callable[[dict], str]]] = []


def check(name: str):
    def deco(fn):
        CHECKS.append((name, fn))
        return fn
    return deco


def _rng(cfg, k):
    return np.random.default_rng([int(cfg.get("seed") or 0), k])


@check("numtheory.sieve_matches_trial_division")
def _sieve(cfg):
    ps = numtheory.sieve_primes(500).primes
    brute = [n for n in range(2, 501) if all(n % d for d in range(2, math.isqrt(n) + 1))]
    assert list(ps) == brute
    return f"pi(500)={len(ps)}"


@check("numtheory.e_partition_disjoint_cover")
def _epart(cfg):
    N = 300
    part = numtheory.e_partition(N)
    allv = sorted(n for s in part.sets.values() for n in s)
    assert allv == list(range(2, N + 1))
    for j, s in part.sets.items():
        assert all(numtheory.largest_prime_factor(n) == numtheory.nth_prime(j) for n in s)
    return f"{len(part.sets)} sets"


@check("numtheory.smooth_set_matches_filter")
def _smooth(cfg):
    N, tau = 400, 6
    cap = numtheory.nth_prime(tau)
    brute = [n for n in range(2, N + 1) if numtheory.largest_prime_factor(n) <= cap]
    assert numtheory.smooth_set(N, tau) == brute
    return f"{len(brute)} smooth"


@check("numtheory.l_sets_disjoint_inside_smooth")
def _lsets(cfg):
    N, tau = 2000, 10
    blocks = numtheory.l_sets(N, tau)
    u = blocks.union()
    assert len(u) == len(set(u))
    assert set(u) <= set(numtheory.smooth_set(N, tau))
    return f"{len(u)} elements in {len(blocks.sets)} blocks"


@check("numtheory.exponent_vector_reconstructs")
def _expvec(cfg):
    table = numtheory.sieve_primes(100)
    ns = np.arange(1, 301)
    for n in ns.tolist():
        if numtheory.largest_prime_factor(n) <= table.p(len(table)):
            v = numtheory.factor_exponents(n, len(table), table)
            assert v.value(table) == n
    small = ns[:100]
    A = numtheory.exponent_matrix(small, 25).toarray()
    logp = np.log(numtheory.first_primes(25).astype(float))
    assert np.allclose(A @ logp, np.log(small.astype(float)))
    return "n = prod p_j^a_j for n <= 300"


@check("weights.divisor_matches_count")
def _divisor(cfg):
    d = weights.weight_array(WeightSpec("divisor"), 400)
    brute = [sum(1 for k in range(1, n + 1) if n % k == 0) for n in range(1, 401)]
    assert d[1:].tolist() == brute
    return "d(n), n <= 400"


@check("weights.mangoldt_sums_to_psi")
def _mangoldt(cfg):
    N = 1000
    psi = sum(math.log(p) * int(math.log(N) / math.log(p) + 1e-12)
              for p in numtheory.sieve_primes(N).primes.tolist())
    D1 = weights.cumulative_profile(WeightSpec("mangoldt"), N).d1_at(N)
    assert abs(D1 - psi) < 1e-9
    return f"psi(1000)={psi:.4f}"


@check("weights.tilde_profiles_nondecreasing")
def _tilde(cfg):
    for kind in ("divisor", "mangoldt"):
        p = weights.cumulative_profile(WeightSpec(kind), 5000)
        assert np.all(np.diff(p.D1_tilde) >= 0) and np.all(np.diff(p.D2_tilde) >= 0)
    return "divisor, mangoldt"


@check("dirichlet.line_equals_torus_lift")
def _bohr(cfg):
    rng = _rng(cfg, 1)
    spec = PolynomialSpec(N=60, sigma=0.3, weight=WeightSpec("divisor"))
    signs = SignAssignment.draw(60, int(rng.integers(2**63)))
    lift = dirichlet.bohr_lift(spec, signs)
    worst = 0.0
    for t in rng.uniform(-50, 50, size=20):
        a = dirichlet.eval_line(spec, signs, t)
        b = dirichlet.eval_torus(lift, dirichlet.line_to_torus(t, spec.tau))
        worst = max(worst, abs(a - b))
    assert worst < 1e-9
    return f"max |D - Q| = {worst:.2e}"


@check("dirichlet.triangle_bound")
def _triangle(cfg):
    rng = _rng(cfg, 2)
    spec = PolynomialSpec(N=40, sigma=0.5)
    signs = SignAssignment.draw(40, int(rng.integers(2**63)))
    vals = np.abs(dirichlet.eval_line_many(spec, signs, rng.uniform(0, 1e3, 200)))
    assert vals.max() <= dirichlet.triangle_bound(spec) + 1e-12
    return "|D| <= sum |c_n|"


@check("dirichlet.gradient_matches_finite_differences")
def _grad(cfg):
    rng = _rng(cfg, 3)
    spec = PolynomialSpec(N=30, sigma=0.2)
    lift = dirichlet.bohr_lift(spec, SignAssignment.draw(30, 7))
    z = dirichlet.TorusPoint.wrap(rng.uniform(0, 1, spec.tau))
    g = dirichlet.torus_gradient(lift, z)
    h = 1e-6
    fd = np.empty_like(g)
    for k in range(spec.tau):
        e = np.zeros(spec.tau)
        e[k] = h
        up = abs(dirichlet.eval_torus_many(lift, (z.z + e)[None, :])[0]) ** 2
        dn = abs(dirichlet.eval_torus_many(lift, (z.z - e)[None, :])[0]) ** 2
        fd[k] = (up - dn) / (2 * h)
    err = float(np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g))))
    assert err < 1e-5
    return f"rel err {err:.1e}"


@check("supremum.witness_recheck")
def _witness(cfg):
    spec = PolynomialSpec(N=24, sigma=0.25)
    signs = SignAssignment.draw(24, 11)
    lift = dirichlet.bohr_lift(spec, signs)
    est = supremum.sup_torus_multistart(lift, starts=16, iters=100, seed=1)
    v = abs(dirichlet.eval_torus(lift, dirichlet.TorusPoint(lift.tau, est.witness)))
    assert v == est.value
    return f"value {est.value:.6f}"


@check("supremum.sign_flip_symmetry")
def _flip(cfg):
    spec = PolynomialSpec(N=10)
    s = SignAssignment.draw(10, 5)
    a = supremum.sup_torus_dense(dirichlet.bohr_lift(spec, s), per_axis=32).value
    b = supremum.sup_torus_dense(dirichlet.bohr_lift(spec, -s), per_axis=32).value
    assert abs(a - b) < 1e-12
    return f"sup = {a:.6f}"


@check("supremum.line_below_torus")
def _line_torus(cfg):
    spec = PolynomialSpec(N=10, sigma=0.5)
    s = SignAssignment.draw(10, 3)
    line = supremum.sup_t_grid(spec, s, T=1e4, grid_count=10**5).value
    torus = supremum.sup_torus_dense(dirichlet.bohr_lift(spec, s), per_axis=32).value
    assert line <= torus + 1e-9
    return f"line {line:.6f} <= torus {torus:.6f}"


@check("supremum.exact_expectation_N3")
def _n3(cfg):
    mc = supremum.expected_sup(PolynomialSpec(N=3), supremum.EstimatorConfig(
        method="torus_dense", per_axis=16), n_draws=8, seed=0)
    assert abs(mc.mean - 3.0) < 1e-6 and mc.stderr < 1e-9
    return f"E sup = {mc.mean:.9f}"


@check("supremum.expectation_independent_of_workers")
def _workers(cfg):
    spec = PolynomialSpec(N=16)
    conf = supremum.EstimatorConfig(starts=4, iters=30)
    a = supremum.expected_sup(spec, conf, n_draws=6, seed=9, workers=1)
    b = supremum.expected_sup(spec, conf, n_draws=6, seed=9, workers=2)
    assert a.values == b.values
    return f"mean {a.mean:.6f}"


@check("cube.block_identity_matches_bruteforce")
def _cube_id(cfg):
    rng = _rng(cfg, 4)
    worst = 0.0
    for _ in range(5):
        N = int(rng.integers(50, 800))
        tau = int(rng.integers(2, 9))
        decomp = cube.cube_decomposition(N, tau, 0.5 * rng.random())
        s = SignAssignment.draw(N, int(rng.integers(2**63)))
        worst = max(worst, abs(cube.cube_sup(decomp, s) - cube.cube_sup_bruteforce(decomp, s)))
    assert worst < 1e-12
    return f"max gap {worst:.1e}"


def _kc(cfg) -> float:
    c = cfg.get("khintchine_c")
    return cube.KHINTCHINE_L1 if c is None else float(c)


@check("cube.khintchine_block_sandwich")
def _khin(cfg):
    c = _kc(cfg)
    count = 0
    for N, tau in ((20, 4), (200, 8), (200, 12)):
        decomp = cube.cube_decomposition(N, tau)
        means, _ = cube.block_abs_expectations(decomp, "exact")
        for j in decomp.block_ids:
            r = math.sqrt(decomp.masses[j])
            assert c * r <= means[j] * (1 + 1e-12), \
                f"N={N}, tau={tau}, block {j}: E|S_j|={means[j]:.6f} < {c}*sqrt(m_j)"
            assert means[j] <= r * (1 + 1e-12), f"N={N}, tau={tau}, block {j} above sqrt(m_j)"
            count += 1
    return f"{count} blocks, c={c:.6f}"


@check("cube.band_brackets_expectation")
def _band(cfg):
    c = _kc(cfg)
    for N, tau in ((20, 4), (200, 8), (200, 12)):
        decomp = cube.cube_decomposition(N, tau, 0.5)
        e = cube.expected_cube_sup(decomp, "exact").mean
        lo, hi = cube.khintchine_band(decomp, c)
        assert lo <= e * (1 + 1e-12) and e <= hi * (1 + 1e-12), f"N={N}, tau={tau}"
    return "3 decompositions"


@check("cube.worked_example_N20_tau4")
def _ex20(cfg):
    decomp = cube.cube_decomposition(20, 4)
    assert abs(cube.expected_cube_sup(decomp, "exact").mean - 2.5) < 1e-12
    return "E = 2.5"


@check("cube.full_dominates_restricted")
def _dominance(cfg):
    q, qp = cube.full_vs_block_expectations(20, 4)
    assert q >= qp - 1e-12
    return f"{q:.4f} >= {qp:.4f}"


@check("cube.functional_equals_mass_sum")
def _cor(cfg):
    w = WeightSpec("divisor")
    a = cube.block_norm_functional(2000, 10, 0.25, w)
    b = cube.cube_decomposition(2000, 10, 0.25, w).sqrt_mass_sum()
    assert abs(a - b) <= 1e-10 * b
    return f"{a:.6f}"


@check("bounds.predictor_specialisations")
def _pred(cfg):
    for N in (16, 100, 10**4):
        for s in (0.0, 0.3, 0.5):
            assert bounds.weighted_predictor(N, s) == bounds.queffelec_predictor(N, s)
        assert bounds.queffelec_predictor(N, 0.0) == bounds.halasz_predictor(N)
    return "unit -> queffelec -> halasz"


@check("bounds.improved_rate_exponent_below_one_plus_b")
def _r1(cfg):
    bs = np.linspace(weights.B_STAR, 0.5, 202)[1:-1]
    assert all(bounds.improved_rate_exponent(b) < 1 + b for b in bs)
    return f"{bs.size} points"


@check("bounds.regime_jumps_bounded")
def _regimes(cfg):
    N = 10**4
    vals = [bounds.smooth_upper_functional(N, t) for t in range(1, int(numtheory._primes_upto(N).size) + 1)]
    for a, b in zip(vals, vals[1:]):
        if a.regime != b.regime:
            r = a.value / b.value
            assert 0.25 <= r <= 4, f"jump {r} at tau={b.params['tau']}"
    return "ratios in [1/4, 4]"


@check("bounds.km_enumeration")
def _km(cfg):
    k = bounds.km_profile(100, 0.0, 2, 25)
    assert abs(k.K[0] - math.sqrt(23)) < 1e-12
    return "K_1 = sqrt(23)"


@check("bounds.nu_balance_example")
def _nu(cfg):
    nu, _, comp = bounds.nu_balance(10**6, 0.25)
    assert nu == 251 and comp < 0
    return f"nu = {nu}"


@check("cli.csv_headers_match_schema")
def _schema(cfg):
    with tempfile.TemporaryDirectory() as tmp:
        base = {"seed": 0, "workers": 1, "out": tmp}
        runs = [
            ("simulate", {"N": [4], "sigma": [0.0], "weight": ["unit"], "n_draws": 2,
                          "method": "torus_dense", "starts": 4, "iters": 20, "per_axis": 8,
                          "grid_count": 1000, "T": None}),
            ("cube", {"N": [20], "tau": [4], "sigma": [0.0], "weight": ["unit"],
                      "mode": "exact", "n_draws": 10}),
            ("bounds", {"N": [100], "sigma": [0.5], "tau": [4], "b": [0.4],
                        "weight": ["unit"]}),
            ("profile", {"M": 10, "weight": ["divisor"]}),
        ]
        seen = 0
        for cmd, opts in runs:
            for p in cli.run_command(cmd, {**base, **opts}):
                if p.suffix != ".csv":
                    continue
                table = "profile" if p.stem.startswith("profile_") else p.stem
                with open(p, newline="") as fh:
                    header = next(csv.reader(fh))
                assert header == cli.SCHEMAS[table], f"{p.name}: {header}"
                seen += 1
    return f"{seen} tables, schema v{cli.SCHEMA_VERSION}"


def run_checks(cfg: dict) -> list[tuple[str, bool, str]]:
    results = []
    for name, fn in CHECKS:
        try:
            results.append((name, True, fn(cfg)))
        except AssertionError as exc:
            results.append((name, False, str(exc) or "assertion failed"))
        except Exception as exc:  # an unexpected error also counts as a violation
            results.append((name, False, f"{type(exc).__name__}: {exc}"))
    return results


def run_suite(cfg: dict) -> int:
    results = run_checks(cfg)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    failed = [r[0] for r in results if not r[1]]
    print(f"{len(results) - len(failed)}/{len(results)} invariants hold")
    if failed:
        print("violated: " + ", ".join(failed))
        return 1
    return 0
