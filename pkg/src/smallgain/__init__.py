"""smallgain: numerical small-gain analysis of networked monotone systems.

The package covers comparison-function algebra, structured gain operators
in max and sum form, spectral and cycle criteria, cone-distance probes of
the small-gain condition family, discrete monotone simulation with
Lyapunov and exponential-stability certificates, RK4 simulation of
nearest-neighbor ODE networks, a small-gain theorem verifier and a JSON
command-line front end.
"""

__version__ = "0.1.0"

from .comparison import (
    ComparisonFunction,
    InvalidComparisonFunction,
    InverseRangeError,
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
from .network import (
    AggregatedISSData,
    BandedInvariant,
    BlockDiagonal,
    Finite,
    GainFamily,
    StateVector,
    check_well_defined,
)
from .operators import (
    CycleReport,
    GainOperator,
    KleeneResult,
    SpectralEstimate,
    StrictDecayCertificate,
    closure_norm_bound,
    cycle_analysis,
    kleene_star,
    power_apply_pathform,
    spectral_radius,
    strict_decay_point,
)
from .cones import (
    BatteryReport,
    EtaEnvelope,
    MbiEnvelope,
    check_robust_strong_sgc,
    check_strong_sgc,
    dist_to_cone,
    estimate_eta,
    finite_dim_battery,
    probe_mbi,
)
from .discrete import (
    DiscreteTrajectory,
    EissCertificate,
    LyapunovEvaluator,
    MlimReport,
    build_lyapunov,
    check_dissipation,
    check_eiss,
    fit_eiss_certificate,
    iterate,
    mlim_probe,
)
from .odenet import (
    CubicMax,
    GenericBandedLinear,
    IssEnvelopeFit,
    LinearInvariant,
    OdeRun,
    ThresholdScan,
    Trajectory,
    fit_iss_envelope,
    reference_profile,
    simulate,
    threshold_scan,
    write_trajectory_csv,
)
from .verifier import (
    NetworkSpec,
    SmallGainVerdict,
    cubic_chain_network,
    linear_chain_network,
    synthesize_ugs_gains,
    verify,
)
