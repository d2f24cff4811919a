"""Small-gain verifier: hypothesis checks, verdict logic, gain synthesis
and the preset network families."""

import numpy as np
import pytest

from smallgain import (
    AggregatedISSData,
    Finite,
    GainFamily,
    KLFunction,
    NetworkSpec,
    OdeRun,
    StateVector,
    check_class_k,
    cubic_chain_network,
    identity,
    linear,
    linear_chain_network,
    power,
    simulate,
    synthesize_ugs_gains,
    verify,
    zero,
)
from smallgain.verifier import CRITERION_GRADE, EVIDENCE_GRADE

from conftest import coeffs_to_family, random_linear_coeffs


def finite_spec(m, mode="max"):
    beta = KLFunction(1.0, 1.0)
    data = AggregatedISSData(betas=(beta,), external_gains=(linear(1.0),),
                             beta_max=beta, sigma_max=linear(1.0),
                             gamma_max=linear(1.0))
    return NetworkSpec(coeffs_to_family(m, mode), data)


class TestSynthesis:
    def test_linear_neumann_example(self):
        sigma, gamma = synthesize_ugs_gains(linear(10.0), identity(), identity())
        assert sigma(1.0) == pytest.approx(20.0)
        assert gamma(3.0) == pytest.approx(60.0)

    def test_identity_composition(self):
        sigma, _ = synthesize_ugs_gains(identity(), identity(), identity())
        assert sigma(1.5) == pytest.approx(3.0)

    def test_zero_input_gain_stays_zero(self):
        _, gamma = synthesize_ugs_gains(linear(10.0), identity(), zero())
        assert gamma(100.0) == 0.0

    def test_class_closure(self, rng):
        sigma, gamma = synthesize_ugs_gains(linear(5.0), power(1.0, 2.0),
                                            power(2.0, 0.5))
        assert check_class_k(sigma, rng)
        assert check_class_k(gamma, rng)


class TestVerify:
    def test_linear_chain_iss_criterion_grade(self):
        v = verify(linear_chain_network(0.4, 0.5), seed=0)
        assert v.conclusion == "ISS"
        assert v.grade == CRITERION_GRADE
        assert v.sub_reports["spectral"].value == pytest.approx(0.9, abs=1e-9)

    def test_cubic_chain_iss(self):
        v = verify(cubic_chain_network(0.9, 0.9, eps=0.05), seed=0)
        assert v.conclusion == "ISS"
        assert v.grade == CRITERION_GRADE

    def test_supercritical_finite_falsified_with_cycle_witness(self):
        m = np.array([[0.0, 1.2], [1.0, 0.0]])
        v = verify(finite_spec(m), seed=0)
        assert v.conclusion == "inconclusive"
        assert v.falsified
        assert v.hypothesis_checks["mbi_evidence"]["witness"] is not None

    def test_nonlinear_gains_use_evidence_grade(self):
        fam = GainFamily(Finite.of([[None, power(0.5, 2.0)],
                                    [power(0.5, 0.5), None]]), "max")
        beta = KLFunction(1.0, 1.0)
        data = AggregatedISSData(betas=(beta,), beta_max=beta,
                                 sigma_max=linear(1.0), gamma_max=linear(1.0),
                                 external_gains=(linear(1.0),))
        v = verify(NetworkSpec(fam, data), samples=100, seed=0)
        assert v.grade == EVIDENCE_GRADE
        assert v.conclusion == "ISS"

    def test_envelope_violation_blocks_conclusion(self):
        m = np.array([[0.0, 0.5], [0.25, 0.0]])
        beta = KLFunction(1.0, 1.0)
        data = AggregatedISSData(sigmas=(linear(2.0),), sigma_max=linear(1.0),
                                 betas=(beta,), beta_max=beta,
                                 gamma_max=linear(1.0))
        v = verify(NetworkSpec(coeffs_to_family(m, "max"), data), seed=0)
        assert v.hypothesis_checks["envelopes"]["status"] == "falsified"
        assert v.conclusion == "inconclusive"

    def test_verdict_monotone_under_gain_scaling(self, rng):
        # shrinking all gains of an accepted network never flips it
        for _ in range(5):
            m = random_linear_coeffs(rng, 3)
            m *= 0.8 / max(np.abs(np.linalg.eigvals(m)).max(), 1e-9)
            base = verify(finite_spec(m, "sum"), seed=0)
            assert base.conclusion == "ISS"
            shrunk = verify(finite_spec(0.5 * m, "sum"), seed=0)
            assert shrunk.conclusion == "ISS"

    def test_synthesized_gains_are_class_k(self, rng):
        v = verify(linear_chain_network(0.4, 0.5), seed=0)
        assert v.sigma is not None and v.gamma is not None
        assert check_class_k(v.sigma, rng)
        assert check_class_k(v.gamma, rng)

    def test_ugs_bound_holds_on_simulated_trajectories(self):
        # sigma from the verifier must dominate the simulated transient of
        # the matching chain dynamics started from a constant profile
        spec = linear_chain_network(0.4, 0.5, window=16)
        v = verify(spec, seed=0)
        from smallgain import LinearInvariant
        for x0v in (0.5, 1.0, 2.0):
            tr = simulate(OdeRun(LinearInvariant(0.4, 0.5),
                                 StateVector(np.full(16, x0v)), None,
                                 T=5.0, dt=1e-2, store_every=10))
            bound = v.sigma(x0v)
            assert np.all(tr.sup_norms() <= bound + 1e-9)
