"""Comparison-function algebra: evaluation, inverses, algebraic
identities and serialization round-trips."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallgain import (
    ComparisonFunction,
    InvalidComparisonFunction,
    KLFunction,
    check_class_k,
    compose,
    fmax,
    fmin,
    fsum,
    id_minus,
    identity,
    inverse,
    linear,
    lipschitz_lower_envelope,
    piecewise,
    power,
    rho_from_eta,
    saturating,
    scale,
    split_id_minus_eta,
    zero,
)

GRID = [0.0, 1e-6, 0.01, 0.5, 1.0, 3.7, 100.0, 1e4]


class TestLeafEvaluation:
    def test_zero_and_identity(self):
        for r in GRID:
            assert zero()(r) == 0.0
            assert identity()(r) == r

    def test_linear(self):
        f = linear(0.4)
        for r in GRID:
            assert f(r) == pytest.approx(0.4 * r, abs=0.0)

    def test_power(self):
        f = power(2.0, 0.5)
        assert f(4.0) == pytest.approx(4.0)
        assert f(0.0) == 0.0

    def test_saturating_is_bounded(self):
        f = saturating(3.0, 2.0)
        assert f(0.0) == 0.0
        assert f(1e9) <= 3.0 + 1e-9
        assert f(1.0) < f(2.0) < f(10.0)

    def test_piecewise_interpolation(self):
        f = piecewise([(0.0, 0.0), (1.0, 2.0), (3.0, 4.0)])
        assert f(0.5) == pytest.approx(1.0)
        assert f(2.0) == pytest.approx(3.0)
        # last-segment slope extends beyond the final knot
        assert f(4.0) == pytest.approx(5.0)

    def test_negative_argument_rejected(self):
        with pytest.raises(ValueError):
            identity()(-1.0)

    def test_invalid_parameters_rejected(self):
        with pytest.raises(InvalidComparisonFunction):
            linear(-0.1)
        with pytest.raises(InvalidComparisonFunction):
            power(1.0, 0.0)


class TestCombinators:
    def test_compose_sum_max_min(self):
        f = compose(linear(2.0), linear(3.0))
        assert f(1.5) == pytest.approx(9.0)
        assert fsum([linear(1.0), linear(2.0)])(2.0) == pytest.approx(6.0)
        assert fmax([linear(1.0), linear(2.0)])(2.0) == pytest.approx(4.0)
        assert fmin([linear(1.0), linear(2.0)])(2.0) == pytest.approx(2.0)

    def test_scale(self):
        assert scale(3.0, power(1.0, 2.0))(2.0) == pytest.approx(12.0)

    def test_linear_coefficient_through_combinators(self):
        f = fmax([linear(0.2), fsum([linear(0.1), linear(0.3)])])
        assert f.linear_coefficient() == pytest.approx(0.4)
        assert power(1.0, 2.0).linear_coefficient() is None

    def test_id_minus(self):
        f = id_minus(linear(0.3))
        assert f(2.0) == pytest.approx(1.4)


class TestInverse:
    @pytest.mark.parametrize("f", [
        linear(0.7),
        power(2.0, 3.0),
        compose(linear(2.0), power(1.0, 0.5)),
        id_minus(linear(0.4)),
    ])
    def test_inverse_roundtrip(self, f):
        g = inverse(f)
        for y in [1e-3, 0.1, 1.0, 17.0, 1e3]:
            assert f(g(y)) == pytest.approx(y, rel=1e-9, abs=1e-9)

    def test_inverse_of_zero_is_zero(self):
        assert inverse(linear(2.0))(0.0) == 0.0


class TestAlgebraicIdentities:
    def test_rho_from_eta_identity(self):
        # (id + rho) o (id - eta) = id on a sample grid
        eta = fmin([linear(0.3), saturating(5.0, 1.0)])
        rho = rho_from_eta(eta)
        for r in [0.01, 0.5, 1.0, 10.0, 500.0]:
            y = r - eta(r)
            assert y + rho(y) == pytest.approx(r, rel=1e-8, abs=1e-8)

    def test_split_id_minus_eta(self):
        eta = linear(0.5)
        e1, e2 = split_id_minus_eta(eta)
        for r in [0.1, 1.0, 7.0, 200.0]:
            lhs = r - eta(r)
            mid = r - e2(r)
            assert mid - e1(mid) == pytest.approx(lhs, rel=1e-8, abs=1e-8)

    def test_lipschitz_lower_envelope(self):
        alpha = power(1.0, 2.0)
        L = 1.0
        env = lipschitz_lower_envelope(alpha, L)
        rs = np.linspace(0.0, 5.0, 41)
        vals = [env(float(r)) for r in rs]
        # below alpha everywhere
        for r, v in zip(rs, vals):
            assert v <= alpha(float(r)) + 1e-9
        # L-Lipschitz on the sampled grid
        for (r1, v1), (r2, v2) in zip(zip(rs, vals), zip(rs[1:], vals[1:])):
            assert abs(v2 - v1) <= L * abs(r2 - r1) + 1e-6
        assert env(0.0) == 0.0
        assert vals[-1] > 0.0

    def test_class_k_sampling(self, rng):
        assert check_class_k(linear(1.0), rng)
        assert check_class_k(compose(power(1.0, 0.5), linear(2.0)), rng)
        assert not check_class_k(zero(), rng)


class TestSerialization:
    @pytest.mark.parametrize("f", [
        linear(0.25),
        power(1.5, 0.5),
        saturating(2.0, 3.0),
        piecewise([(0.0, 0.0), (1.0, 0.5), (2.0, 3.0)]),
        fsum([linear(1.0), compose(linear(2.0), power(1.0, 2.0))]),
        fmax([identity(), linear(0.1)]),
        id_minus(linear(0.3)),
        inverse(linear(0.5)),
        zero(),
    ])
    def test_roundtrip(self, f):
        d = json.loads(json.dumps(f.to_json()))
        g = ComparisonFunction.from_json(d)
        for r in GRID:
            assert g(r) == pytest.approx(f(r), rel=1e-12, abs=1e-12)

    def test_kl_function(self):
        beta = KLFunction(2.0, 0.5)
        assert beta(3.0, 0.0) == pytest.approx(6.0)
        assert beta(3.0, 2.0) == pytest.approx(6.0 * math.exp(-1.0))
        d = beta.to_json()
        g = KLFunction.from_json(d)
        assert g(1.7, 0.3) == pytest.approx(beta(1.7, 0.3))


class TestProperties:
    @given(k=st.floats(0.0, 10.0), r1=st.floats(0.0, 1e6), r2=st.floats(0.0, 1e6))
    @settings(max_examples=200, deadline=None)
    def test_linear_monotone(self, k, r1, r2):
        f = linear(k)
        lo, hi = sorted((r1, r2))
        assert f(lo) <= f(hi)

    @given(st.floats(0.1, 5.0), st.floats(0.2, 3.0), st.floats(0.0, 100.0))
    @settings(max_examples=200, deadline=None)
    def test_power_inverse_roundtrip(self, c, p, y):
        # parameters chosen so the preimage stays inside the documented
        # bracketing range of the inverse
        f = power(c, p)
        assert f(inverse(f)(y)) == pytest.approx(y, rel=1e-7, abs=1e-7)

    @given(st.floats(0.0, 0.9), st.floats(0.0, 1e4))
    @settings(max_examples=200, deadline=None)
    def test_rho_identity_property(self, k, r):
        eta = linear(k)
        rho = rho_from_eta(eta)
        y = r - eta(r)
        assert y + rho(y) == pytest.approx(r, rel=1e-6, abs=1e-6)
