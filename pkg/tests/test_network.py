"""Gain families, state vectors, well-definedness and aggregated data."""

import json

import numpy as np
import pytest

from smallgain import (
    AggregatedISSData,
    BandedInvariant,
    BlockDiagonal,
    Finite,
    GainFamily,
    KLFunction,
    StateVector,
    check_well_defined,
    linear,
    power,
    saturating,
)


class TestStructures:
    def test_finite_rejects_nonzero_diagonal(self):
        with pytest.raises(ValueError):
            Finite.of([[linear(0.1), linear(0.2)], [None, None]])

    def test_finite_rejects_ragged_rows(self):
        with pytest.raises(ValueError):
            Finite.of([[None, linear(0.2)], [None]])

    def test_banded_rejects_offset_zero(self):
        with pytest.raises(ValueError):
            BandedInvariant.of({0: linear(0.5)})

    def test_block_diagonal_size(self):
        b = Finite.of([[None, linear(0.5)], [linear(0.25), None]])
        assert BlockDiagonal.of([b, b]).n == 4

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            GainFamily(Finite.of([[None]]), "median")


class TestLinearMatrix:
    def test_finite_matrix(self):
        fam = GainFamily(Finite.of([[None, linear(0.5)], [linear(0.25), None]]), "max")
        m = fam.linear_matrix()
        assert np.allclose(m, [[0.0, 0.5], [0.25, 0.0]])

    def test_banded_periodic_sum_rows(self):
        fam = GainFamily(BandedInvariant.of({-1: linear(0.4), 1: linear(0.5)}), "sum")
        m = fam.linear_matrix(6)
        assert np.allclose(m.sum(axis=1), 0.9)
        assert m[0, 5] == pytest.approx(0.4)  # periodic wrap of offset -1
        assert m[5, 0] == pytest.approx(0.5)

    def test_banded_zeropad_truncates(self):
        fam = GainFamily(BandedInvariant.of({-1: linear(0.4), 1: linear(0.5)}), "sum")
        m = fam.linear_matrix(6, boundary="zeropad")
        assert m[0, 5] == 0.0
        assert m[0, 1] == pytest.approx(0.5)

    def test_nonlinear_family_has_no_matrix(self):
        fam = GainFamily(Finite.of([[None, power(1.0, 2.0)], [linear(0.1), None]]), "max")
        assert fam.linear_matrix() is None

    def test_block_diagonal_matrix(self):
        b = Finite.of([[None, linear(0.5)], [linear(0.25), None]])
        fam = GainFamily(BlockDiagonal.of([b, b]), "max")
        m = fam.linear_matrix()
        assert m.shape == (4, 4)
        assert m[0, 2] == 0.0 and m[2, 3] == pytest.approx(0.5)


class TestStateVector:
    def test_validation(self):
        with pytest.raises(ValueError):
            StateVector(np.array([1.0, -0.5]))
        with pytest.raises(ValueError):
            StateVector(np.array([]))
        with pytest.raises(ValueError):
            StateVector(np.ones(3), boundary="reflect")

    def test_window_and_norm(self):
        v = StateVector(np.array([0.5, 2.0, 1.0]), lo=-1)
        assert v.window == (-1, 1)
        assert v.sup_norm() == 2.0

    def test_centered(self):
        v = StateVector.centered(2, fill=1.0)
        assert v.window == (-2, 2)
        assert v.n == 5

    def test_json_roundtrip(self):
        v = StateVector(np.array([0.0, 1.5, 3.0]), lo=4, boundary="zeropad")
        w = StateVector.from_json(json.loads(json.dumps(v.to_json())))
        assert w.window == v.window
        assert w.boundary == v.boundary
        assert np.allclose(w.values, v.values)

    def test_json_window_mismatch(self):
        with pytest.raises(ValueError):
            StateVector.from_json({"window": [0, 3], "values": [1.0, 2.0]})


class TestWellDefined:
    def test_max_mode_with_bounded_gains(self):
        fam = GainFamily(BandedInvariant.of({-1: saturating(2.0, 1.0), 1: linear(0.5)}),
                         "max")
        rep = check_well_defined(fam, (0.1, 1.0, 10.0, 1000.0))
        assert rep.ok
        assert all(np.isfinite(rep.sups))

    def test_sum_mode_worst_row_sum(self):
        fam = GainFamily(BandedInvariant.of({-1: linear(0.4), 1: linear(0.5)}), "sum")
        rep = check_well_defined(fam, (1.0, 2.0))
        assert rep.sups == (0.9, 1.8)

    def test_empty_radii_rejected(self):
        fam = GainFamily(Finite.of([[None]]), "max")
        with pytest.raises(ValueError):
            check_well_defined(fam, ())


class TestFamilySerialization:
    @pytest.mark.parametrize("fam", [
        GainFamily(Finite.of([[None, linear(0.5)], [power(1.0, 2.0), None]]), "max"),
        GainFamily(BandedInvariant.of({-1: linear(0.4), 2: linear(0.1)}), "sum"),
        GainFamily(BlockDiagonal.of([
            Finite.of([[None, linear(0.3)], [linear(0.2), None]])]), "max"),
    ])
    def test_roundtrip(self, fam):
        g = GainFamily.from_json(json.loads(json.dumps(fam.to_json())))
        assert g.mode == fam.mode
        ga, gb = g.generators(), fam.generators()
        assert len(ga) == len(gb)
        for f1, f2 in zip(ga, gb):
            for r in (0.1, 1.0, 10.0):
                assert f1(r) == pytest.approx(f2(r))


class TestAggregatedData:
    def test_envelope_domination(self):
        beta = KLFunction(1.0, 1.0)
        data = AggregatedISSData(betas=(beta,), external_gains=(linear(0.5),),
                                 beta_max=KLFunction(2.0, 0.5),
                                 gamma_max=linear(1.0))
        ok, witness = data.envelope_check()
        assert ok and witness is None

    def test_envelope_violation_reported(self):
        data = AggregatedISSData(sigmas=(linear(2.0),), sigma_max=linear(1.0))
        ok, witness = data.envelope_check()
        assert not ok
        assert witness[0] == "sigma"
