"""Small-gain theorem verifier: checks the hypotheses of the max-form and
sum-form small-gain theorems against a declared network specification and
synthesizes the resulting stability gain functions.

Verdicts carry an epistemic grade: "criterion" when the conclusion rests
on an exactly checkable condition (spectral radius of linear gains) and
"evidence" when it rests on sampled probes, which can falsify with
certainty but only ever support the positive direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .comparison import ComparisonFunction, KLFunction, compose, linear, power, zero
from .cones import estimate_eta, probe_mbi
from .discrete import mlim_probe
from .network import (
    PERIODIC,
    AggregatedISSData,
    BandedInvariant,
    Finite,
    GainFamily,
    MODE_MAX,
    MODE_SUM,
    StateVector,
    check_well_defined,
)
from .operators import (
    GainOperator,
    closure_norm_bound,
    cycle_analysis,
    spectral_radius,
)

__all__ = [
    "NetworkSpec",
    "SmallGainVerdict",
    "verify",
    "synthesize_ugs_gains",
    "linear_chain_network",
    "cubic_chain_network",
    "CRITERION_GRADE",
    "EVIDENCE_GRADE",
]

CRITERION_GRADE = "criterion"
EVIDENCE_GRADE = "evidence"

PASS = "pass"
SUPPORTED = "supported"
FALSIFIED = "falsified"


@dataclass(frozen=True)
class NetworkSpec:
    """A network of ISS subsystems: interconnection gains plus declared
    per-subsystem transient/gain data with uniform envelopes."""

    gains: GainFamily
    data: AggregatedISSData
    window: Optional[int] = None       # required for banded structures
    boundary: str = PERIODIC
    name: str = ""

    def operator(self) -> GainOperator:
        return GainOperator(self.gains, self.window, self.boundary)

    def to_json(self) -> dict:
        return {"name": self.name, "gains": self.gains.to_json(),
                "window": self.window, "boundary": self.boundary}


@dataclass(frozen=True)
class SmallGainVerdict:
    hypothesis_checks: dict    # name -> {"status": ..., extra fields}
    conclusion: str            # "ISS" | "UGS" | "inconclusive"
    grade: str                 # criterion | evidence
    sigma: Optional[ComparisonFunction]
    gamma: Optional[ComparisonFunction]
    sub_reports: dict = field(default_factory=dict)

    @property
    def falsified(self) -> bool:
        return any(c.get("status") == FALSIFIED
                   for c in self.hypothesis_checks.values())

    def to_json(self) -> dict:
        return {
            "hypothesis_checks": self.hypothesis_checks,
            "conclusion": self.conclusion,
            "grade": self.grade,
            "sigma": None if self.sigma is None else self.sigma.to_json(),
            "gamma": None if self.gamma is None else self.gamma.to_json(),
            "sub_reports": {k: (v.to_json() if hasattr(v, "to_json") else v)
                            for k, v in self.sub_reports.items()},
        }


def synthesize_ugs_gains(xi: ComparisonFunction, sigma_max: ComparisonFunction,
                         gamma_max: ComparisonFunction):
    """Stability gains sigma = xi o (2 sigma_max), gamma = xi o (2 gamma_max).

    The doubling splits the combined state/input contribution before it
    passes through the inverse-bound function xi; a zero input gain stays
    exactly zero.
    """
    def half(g):
        if g is None or g.kind == "zero":
            return zero()
        return compose(xi, compose(linear(2.0), g), cls="Kinf" if xi.cls == "Kinf" else None)
    return half(sigma_max), half(gamma_max)


def verify(spec: NetworkSpec, samples: int = 300, seed: int = 0,
           radii=(0.1, 1.0, 10.0, 100.0)) -> SmallGainVerdict:
    """Check the small-gain hypotheses and conclude UGS / ISS / inconclusive.

    Always checked: operator well-definedness for the aggregation mode and
    envelope domination of the declared subsystem data.  The small-gain
    core is the exact spectral-radius criterion when all gains are linear,
    and the sampled probe pair (uniform condition, bounded invertibility)
    plus the limit-property probe otherwise.
    """
    checks: dict = {}
    reports: dict = {}

    wd = check_well_defined(spec.gains, radii)
    checks["well_defined"] = {"status": PASS if wd.ok else FALSIFIED,
                              "witness_r": wd.witness_r}
    reports["well_defined"] = wd

    env_ok, env_witness = spec.data.envelope_check(radii=radii)
    checks["envelopes"] = {"status": PASS if env_ok else FALSIFIED,
                           "witness": None if env_witness is None else list(env_witness)}

    op = spec.operator()
    grade = EVIDENCE_GRADE
    xi: Optional[ComparisonFunction] = None

    if op.is_linear():
        grade = CRITERION_GRADE
        est = spectral_radius(op)
        reports["spectral"] = est
        if est.value < 1.0:
            checks["mbi_evidence"] = {"status": PASS, "criterion": "spectral_radius",
                                      "value": est.value}
            xi = linear(1.05 * closure_norm_bound(op))
        else:
            witness = None
            if isinstance(spec.gains.structure, Finite) and spec.gains.mode == MODE_MAX:
                cyc = cycle_analysis(op)
                reports["cycles"] = cyc
                witness = cyc.witness_cycle
            checks["mbi_evidence"] = {"status": FALSIFIED, "criterion": "spectral_radius",
                                      "value": est.value,
                                      "witness": None if witness is None else list(witness)}
    else:
        eta_env = estimate_eta(op, radii=(0.25, 1.0, 4.0),
                               samples_per_radius=max(samples, op.n + 2), seed=seed)
        mbi_env = probe_mbi(op, samples, seed=seed + 1)
        reports["eta"] = eta_env
        reports["mbi"] = mbi_env
        if eta_env.falsified or mbi_env.falsified:
            checks["mbi_evidence"] = {"status": FALSIFIED,
                                      "source": "eta" if eta_env.falsified else "mbi"}
        else:
            checks["mbi_evidence"] = {"status": SUPPORTED, "samples": samples,
                                      "max_ratio": mbi_env.max_ratio}
            xi = compose(linear(2.0), mbi_env.xi, cls=mbi_env.xi.cls)

    if checks["mbi_evidence"]["status"] == FALSIFIED:
        checks["mlim_evidence"] = {"status": FALSIFIED, "source": "small-gain core"}
    else:
        w = StateVector(np.full(op.n, 0.1), boundary=spec.boundary)
        mlim = mlim_probe(op, w, xi if xi is not None else linear(10.0))
        reports["mlim"] = mlim
        checks["mlim_evidence"] = {
            "status": (PASS if grade == CRITERION_GRADE else SUPPORTED)
                      if mlim.attained_all else FALSIFIED,
            "seed_ok": mlim.seed_ok,
        }

    ok = {name: checks[name]["status"] in (PASS, SUPPORTED) for name in checks}
    sigma = gamma = None
    if xi is not None and ok["well_defined"] and ok["envelopes"] and ok["mbi_evidence"]:
        sm = spec.data.sigma_max
        if sm is None and spec.data.beta_max is not None:
            b = spec.data.beta_max
            sm = b.g if b.g is not None else linear(b.C)
        sigma, gamma = synthesize_ugs_gains(xi, sm, spec.data.gamma_max)

    if all(ok.values()) and spec.data.beta_max is not None:
        conclusion = "ISS"
    elif ok["well_defined"] and ok["envelopes"] and ok["mbi_evidence"] \
            and (spec.data.sigma_max is not None or spec.data.beta_max is not None):
        conclusion = "UGS"
    else:
        conclusion = "inconclusive"

    return SmallGainVerdict(checks, conclusion, grade, sigma, gamma, reports)


# -- presets for the two worked network families ----------------------

def linear_chain_network(a: float, b: float, window: int = 21,
                         boundary: str = PERIODIC) -> NetworkSpec:
    """Nearest-neighbor linear chain as a sum-form network of scalar ISS
    subsystems dx_i/dt = -x_i + (a x_{i-1} + b x_{i+1} + u_i).

    Each subsystem decays like e^{-t} against its own initial value and
    passes neighbor and input contributions through with unit static gain,
    so the declared gains are the coupling coefficients themselves.
    """
    gains = GainFamily(BandedInvariant.of({-1: linear(a), 1: linear(b)}), MODE_SUM)
    beta = KLFunction(1.0, 1.0)
    data = AggregatedISSData(betas=(beta,), external_gains=(linear(1.0),),
                             beta_max=beta, sigma_max=linear(1.0),
                             gamma_max=linear(1.0))
    return NetworkSpec(gains, data, window=window, boundary=boundary,
                       name=f"linear-chain a={a:g} b={b:g}")


def cubic_chain_network(a: float, b: float, eps: float = 0.05, window: int = 21,
                        boundary: str = PERIODIC) -> NetworkSpec:
    """Cubic max-coupled chain as a max-form network.

    A Lyapunov argument on each scalar node dx_i/dt = -x_i^3 +
    max(a x_{i-1}^3, b x_{i+1}^3, u_i) yields linear internal gains
    ((1+eps) a)^{1/3}, ((1+eps) b)^{1/3} and the external gain
    ((1+eps) r)^{1/3}, at the price of an arbitrarily small margin eps.
    """
    if eps <= 0:
        raise ValueError("the gain margin eps must be positive")
    ga = linear(((1.0 + eps) * a) ** (1.0 / 3.0))
    gb = linear(((1.0 + eps) * b) ** (1.0 / 3.0))
    gains = GainFamily(BandedInvariant.of({-1: ga, 1: gb}), MODE_MAX)
    gamma_ext = power((1.0 + eps) ** (1.0 / 3.0), 1.0 / 3.0)
    beta = KLFunction(1.0, 1.0)
    data = AggregatedISSData(betas=(beta,), external_gains=(gamma_ext,),
                             beta_max=beta, sigma_max=linear(1.0),
                             gamma_max=gamma_ext)
    return NetworkSpec(gains, data, window=window, boundary=boundary,
                       name=f"cubic-chain a={a:g} b={b:g} eps={eps:g}")
