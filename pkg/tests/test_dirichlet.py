import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirsup.dirichlet import (
    PolynomialSpec,
    SignAssignment,
    TorusPoint,
    bohr_lift,
    derive_seed,
    eval_line,
    eval_line_grid_abs2,
    eval_line_many,
    eval_torus,
    eval_torus_many,
    line_to_torus,
    torus_gradient,
    triangle_bound,
)
from dirsup.weights import WeightSpec, weight_value

specs = st.builds(
    PolynomialSpec,
    N=st.integers(1, 80),
    sigma=st.floats(0, 0.5),
    weight=st.sampled_from([WeightSpec(), WeightSpec("divisor"), WeightSpec("mangoldt")]),
)


def direct_sum(spec, signs, t):
    return sum(signs.signs[n - 1] * weight_value(spec.weight, n)
               * n ** (-spec.sigma) * cmath.exp(-1j * t * math.log(n))
               for n in spec.indices.tolist())


def test_eval_line_example():
    spec = PolynomialSpec(N=2, sigma=0.5)
    v = eval_line(spec, SignAssignment.ones(2), math.pi / math.log(2))
    assert abs(v) == pytest.approx(1 - 2**-0.5, abs=1e-12)


@given(specs, st.integers(0, 2**32), st.floats(-1e3, 1e3))
def test_eval_line_matches_direct_sum(spec, seed, t):
    signs = SignAssignment.draw(spec.N, seed)
    assert eval_line(spec, signs, t) == pytest.approx(direct_sum(spec, signs, t), abs=1e-9)


@given(specs, st.integers(0, 2**32), st.floats(-200, 200))
def test_line_equals_torus(spec, seed, t):
    signs = SignAssignment.draw(spec.N, seed)
    lift = bohr_lift(spec, signs)
    z = line_to_torus(t, spec.tau)
    assert eval_torus(lift, z) == pytest.approx(eval_line(spec, signs, t), abs=1e-9)


@given(specs, st.integers(0, 2**32), st.floats(0, 1e4))
def test_triangle_bound(spec, seed, t):
    signs = SignAssignment.draw(spec.N, seed)
    assert abs(eval_line(spec, signs, t)) <= triangle_bound(spec) + 1e-12


def test_grid_matches_pointwise():
    spec = PolynomialSpec(N=50, sigma=0.3, weight=WeightSpec("divisor"))
    signs = SignAssignment.draw(50, 3)
    h, count = 0.37, 2000
    grid = eval_line_grid_abs2(spec, signs, h, count, block=128)
    ref = np.abs(eval_line_many(spec, signs, np.arange(count) * h)) ** 2
    assert np.allclose(grid, ref, rtol=1e-10, atol=1e-10)


def test_eval_line_many_is_batch_independent():
    spec = PolynomialSpec(N=200, sigma=0.2)
    signs = SignAssignment.draw(200, 1)
    ts = np.linspace(0, 500, 97)
    many = eval_line_many(spec, signs, ts)
    assert all(many[i] == eval_line(spec, signs, t) for i, t in enumerate(ts))


def test_eval_torus_many_is_batch_independent():
    spec = PolynomialSpec(N=60, sigma=0.4, weight=WeightSpec("divisor"))
    lift = bohr_lift(spec, SignAssignment.draw(60, 2))
    Z = np.random.default_rng(0).random((41, spec.tau))
    many = eval_torus_many(lift, Z)
    assert all(many[i] == eval_torus_many(lift, Z[i : i + 1])[0] for i in range(41))


@given(specs.filter(lambda s: s.tau > 0), st.integers(0, 2**32))
def test_gradient_finite_differences(spec, seed):
    rng = np.random.default_rng(seed)
    lift = bohr_lift(spec, SignAssignment.draw(spec.N, seed))
    z = TorusPoint.wrap(rng.random(spec.tau) * 0.98 + 0.01)
    g = torus_gradient(lift, z)
    h = 1e-6
    for k in range(spec.tau):
        e = np.zeros(spec.tau)
        e[k] = h
        fp = abs(eval_torus_many(lift, (z.z + e)[None, :])[0]) ** 2
        fm = abs(eval_torus_many(lift, (z.z - e)[None, :])[0]) ** 2
        assert g[k] == pytest.approx((fp - fm) / (2 * h), rel=1e-4, abs=1e-4)


def test_lift_frequencies():
    spec = PolynomialSpec(N=12)
    lift = bohr_lift(spec, SignAssignment.ones(12))
    assert lift.tau == 5
    assert lift.frequency(11).tolist() == [2, 1, 0, 0, 0]  # n = 12
    assert len(lift) == 12


def test_smooth_cap_and_unit():
    spec = PolynomialSpec(N=20, smooth_cap=2, include_unit=False)
    assert spec.indices.tolist() == [2, 3, 4, 6, 8, 9, 12, 16, 18]
    assert spec.tau == 2


def test_spec_validation():
    with pytest.raises(ValueError):
        PolynomialSpec(N=10, sigma=0.6)
    with pytest.raises(ValueError):
        PolynomialSpec(N=10, smooth_cap=5)
    with pytest.raises(ValueError):
        PolynomialSpec(N=0)


def test_signs():
    a = SignAssignment.draw(100, 42)
    b = SignAssignment.draw(100, 42)
    assert np.array_equal(a.signs, b.signs)
    assert set(np.unique(a.signs)) <= {-1, 1}
    assert np.array_equal((-a).signs, -a.signs)
    assert a.flipped(3).signs[2] == -a.signs[2]
    with pytest.raises(ValueError):
        SignAssignment(N=2, signs=np.array([1, 0]))
    with pytest.raises(ValueError):
        bohr_lift(PolynomialSpec(N=5), SignAssignment.ones(4))


def test_torus_point():
    with pytest.raises(ValueError):
        TorusPoint(2, np.array([0.5, 1.0]))
    assert TorusPoint.wrap([-0.25, 1.5]).z.tolist() == [0.75, 0.5]


def test_derive_seed():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert len({derive_seed(1, i, k) for i in range(50) for k in range(2)}) == 100
