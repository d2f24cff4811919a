"""Cone distance, the uniform small-gain envelope, bounded-invertibility
probe, strong/robust conditions and the cross-probe battery."""

import numpy as np
import pytest

from smallgain import (
    Finite,
    GainFamily,
    GainOperator,
    check_class_k,
    check_robust_strong_sgc,
    check_strong_sgc,
    dist_to_cone,
    estimate_eta,
    finite_dim_battery,
    linear,
    probe_mbi,
)

from conftest import random_linear_operator


def two_by_two(g12=0.5, g21=0.25, mode="max"):
    return GainOperator(GainFamily(
        Finite.of([[None, linear(g12)], [linear(g21), None]]), mode))


def eta_oracle_2x2(g12, g21, r, grid=4001):
    """Dense-grid minimization of max_i (x - A(x))_i^+ over the max-norm
    sphere of radius r, for the 2x2 max family.

    By symmetry it is enough to pin one coordinate to r and sweep the
    other over [0, r] in both roles.
    """
    ts = np.linspace(0.0, r, grid)
    best = np.inf
    for x1, x2 in [(np.full_like(ts, r), ts), (ts, np.full_like(ts, r))]:
        a1 = g12 * x2
        a2 = g21 * x1
        d = np.maximum(np.maximum(x1 - a1, 0.0), np.maximum(x2 - a2, 0.0))
        best = min(best, float(d.min()))
    return best


class TestDistToCone:
    def test_nonnegative_vector_has_zero_distance(self):
        assert dist_to_cone(np.array([0.0, 1.0, 2.0])) == 0.0

    def test_distance_is_negative_part_norm(self):
        assert dist_to_cone(np.array([1.0, -0.3, -0.7])) == pytest.approx(0.7)


class TestEtaEnvelope:
    def test_worked_two_by_two_value(self):
        # dense-grid oracle at r = 1 gives 7/12, attained at x = (1, 5/6)
        oracle = eta_oracle_2x2(0.5, 0.25, 1.0)
        assert oracle == pytest.approx(7.0 / 12.0, abs=1e-4)
        env = estimate_eta(two_by_two(), (0.5, 1.0, 2.0), 4000, seed=0)
        assert env.eta_values[1] == pytest.approx(7.0 / 12.0, abs=0.01)
        assert not env.falsified

    def test_envelope_is_nondecreasing_and_above_samples(self):
        env = estimate_eta(two_by_two(), (0.25, 0.5, 1.0, 2.0, 4.0), 300, seed=3)
        assert all(a <= b + 1e-12 for a, b in zip(env.eta_values, env.eta_values[1:]))

    def test_supercritical_is_falsified(self, rng):
        op = random_linear_operator(rng, 3, "max", 1.4)
        env = estimate_eta(op, (0.5, 1.0, 2.0), 300, seed=0)
        assert env.falsified
        assert env.witness is not None

    def test_deterministic_in_seed(self):
        a = estimate_eta(two_by_two(), (1.0,), 100, seed=42)
        b = estimate_eta(two_by_two(), (1.0,), 100, seed=42)
        assert a.raw_values == b.raw_values

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            estimate_eta(two_by_two(), (1.0,), 2, seed=0)


class TestMbi:
    def test_subcritical_bounded_ratio(self):
        env = probe_mbi(two_by_two(), 300, seed=0)
        assert not env.falsified
        # Neumann-type bound: ||v|| <= ||w|| / (1 - 0.5)
        assert env.max_ratio <= 2.0 + 1e-6

    def test_xi_is_class_k_and_dominates(self, rng):
        env = probe_mbi(two_by_two(), 300, seed=1)
        assert check_class_k(env.xi, rng)
        for nw, nv in env.pairs:
            assert nv <= env.xi(nw) + 1e-9

    def test_supercritical_falsified(self, rng):
        op = random_linear_operator(rng, 3, "max", 1.4)
        env = probe_mbi(op, 300, seed=0)
        assert env.falsified
        assert env.witness_v is not None


class TestStrongConditions:
    def test_subcritical_supported(self):
        ev = check_strong_sgc(two_by_two(), linear(0.05), samples=200, seed=0)
        assert ev.passed

    def test_supercritical_falsified_with_witness(self, rng):
        op = random_linear_operator(rng, 3, "max", 1.3)
        ev = check_strong_sgc(op, linear(0.01), samples=200, seed=0)
        assert not ev.passed
        x = np.array(ev.witness_x)
        y = op.apply_array(x)
        assert np.all(y + 0.01 * y >= x - 1e-12)

    def test_rho_can_flip_marginal_case(self):
        # 2-cycle mean exactly 1: already not strongly small-gain
        ev = check_strong_sgc(two_by_two(1.0, 1.0), linear(0.01),
                              samples=200, seed=0)
        assert not ev.passed

    def test_robust_requires_omega_below_identity(self):
        with pytest.raises(ValueError):
            check_robust_strong_sgc(two_by_two(), linear(0.1), linear(1.5))

    def test_robust_narrow_band_falsified(self):
        # perturbing row i by 0.2 x_i pushes the 0.9/0.9 family over
        # criticality only on the narrow direction band
        # x2/x1 in [8/9, 0.9] (0.9 x2 >= 0.8 x1 and 0.9 x1 >= x2); the
        # iterate candidates have to land inside it
        op = two_by_two(0.9, 0.9)
        ev = check_robust_strong_sgc(op, linear(1e-6), linear(0.2),
                                     samples=200, seed=0)
        assert not ev.passed

    def test_robust_supported_when_margin_large(self):
        ev = check_robust_strong_sgc(two_by_two(0.5, 0.25), linear(0.01),
                                     linear(0.01), samples=100, seed=0)
        assert ev.passed


class TestBattery:
    def test_battery_consistent_subcritical(self):
        rep = finite_dim_battery(two_by_two(), samples=150, seed=5)
        assert rep.consistent
        assert rep.common_verdict is True

    def test_battery_consistent_supercritical(self, rng):
        op = random_linear_operator(rng, 3, "max", 1.35)
        rep = finite_dim_battery(op, samples=150, seed=5)
        assert rep.consistent
        assert rep.common_verdict is False

    def test_battery_rejects_banded(self):
        from smallgain import BandedInvariant
        fam = GainFamily(BandedInvariant.of({1: linear(0.5)}), "max")
        with pytest.raises(ValueError):
            finite_dim_battery(GainOperator(fam, 5))
