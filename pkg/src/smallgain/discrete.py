"""Discrete monotone dynamics x(k+1) = A(x(k)) + u(k): trajectory
simulation, eISS certificates, the monotone-limit probe and the
exponential-decay Lyapunov construction.

The underlying model is an inequality system; the simulator runs the
extremal equality branch, which dominates every inequality solution with
the same start and input by monotonicity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .comparison import ComparisonFunction, linear
from .network import StateVector
from .operators import (
    EpsilonTooLargeError,
    GainOperator,
    MODE_MAX,
    RequiresLinearGainsError,
    spectral_radius,
    strict_decay_point,
)

__all__ = [
    "DiscreteTrajectory",
    "TrajectoryOverflowError",
    "iterate",
    "EissCertificate",
    "check_eiss",
    "fit_eiss_certificate",
    "MlimReport",
    "mlim_probe",
    "LyapunovEvaluator",
    "build_lyapunov",
    "check_dissipation",
    "EtaTooLargeError",
]

OVERFLOW_GUARD = 1e12

InputLike = Union[None, float, np.ndarray, Sequence]


class TrajectoryOverflowError(ArithmeticError):
    """State norm exceeded the overflow guard; carries the partial run."""

    def __init__(self, trajectory):
        super().__init__(f"trajectory overflow at step {len(trajectory.states) - 1}")
        self.trajectory = trajectory


class EtaTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteTrajectory:
    states: tuple              # StateVector x(0..K)
    inputs: tuple              # arrays u(0..K-1)
    operator: GainOperator

    @property
    def K(self) -> int:
        return len(self.states) - 1

    def norms(self) -> np.ndarray:
        return np.array([s.sup_norm() for s in self.states])

    def input_sup_norm(self) -> float:
        return max((float(u.max()) for u in self.inputs), default=0.0)

    def to_csv_rows(self):
        """Rows (k, i, x_i, u_i) with u blank on the terminal state."""
        lo = self.states[0].lo
        for k, s in enumerate(self.states):
            u = self.inputs[k] if k < len(self.inputs) else None
            for off, xi in enumerate(s.values):
                ui = "" if u is None else repr(float(u[off]))
                yield (k, lo + off, repr(float(xi)), ui)


def _resolve_inputs(u: InputLike, n: int, K: int):
    if u is None:
        return [np.zeros(n)] * K
    if np.isscalar(u):
        return [np.full(n, float(u))] * K
    if isinstance(u, StateVector):
        return [u.values.copy()] * K
    u = list(u)
    if len(u) and np.isscalar(u[0]):
        arr = np.asarray(u, dtype=float)
        if arr.size == n and K != n:
            return [arr.copy()] * K
        return [np.full(n, float(uk)) for uk in u]
    out = [np.asarray(uk, dtype=float) for uk in u]
    if len(out) < K:
        raise ValueError(f"need {K} input steps, got {len(out)}")
    return out[:K]


def iterate(op: GainOperator, x0: StateVector, u: InputLike, K: int) -> DiscreteTrajectory:
    """Run the equality recursion x(k+1) = A(x(k)) + u(k) for K steps.

    Raises TrajectoryOverflowError (with the partial trajectory attached)
    if the sup norm passes the guard.
    """
    op._check_window(x0)
    inputs = _resolve_inputs(u, op.n, K)
    for uk in inputs:
        if np.any(uk < 0):
            raise ValueError("inputs must be nonnegative")
    states = [x0]
    x = x0.values.copy()
    for k in range(K):
        x = op.apply_array(x) + inputs[k]
        states.append(x0.with_values(x))
        if float(x.max()) > OVERFLOW_GUARD:
            raise TrajectoryOverflowError(
                DiscreteTrajectory(tuple(states), tuple(inputs[:k + 1]), op))
    return DiscreteTrajectory(tuple(states), tuple(inputs), op)


# -- eISS certificates ------------------------------------------------

@dataclass(frozen=True)
class EissCertificate:
    M: float
    a: float
    gamma: ComparisonFunction

    def __post_init__(self):
        if self.M < 1.0 or not (0.0 < self.a < 1.0):
            raise ValueError(f"need M >= 1 and a in (0,1), got M={self.M}, a={self.a}")

    def bound(self, x0_norm: float, u_norm: float, k: int) -> float:
        return self.M * x0_norm * self.a ** k + self.gamma(u_norm)

    def to_json(self) -> dict:
        return {"M": self.M, "a": self.a, "gamma": self.gamma.to_json()}


def check_eiss(traj: DiscreteTrajectory, cert: EissCertificate,
               tol: float = 1e-9):
    """Pointwise certificate check; returns (ok, first violating k or None)."""
    x0n = traj.states[0].sup_norm()
    un = traj.input_sup_norm()
    for k, nk in enumerate(traj.norms()):
        if nk > cert.bound(x0n, un, k) + tol:
            return False, k
    return True, None


def _one_iterate_norms(op: GainOperator, scale: float = 1.0,
                       floor: float = 1e-14, cap: int = 100_000):
    """Norms ||(scale * A)^k(1)|| until they drop below the floor."""
    v = np.ones(op.n)
    norms = [1.0]
    for _ in range(cap):
        v = scale * op.apply_array(v)
        nv = float(v.max())
        norms.append(nv)
        if nv < floor:
            break
        if nv > OVERFLOW_GUARD:
            break
    return norms


def fit_eiss_certificate(op: GainOperator, margin: float = 1e-3) -> EissCertificate:
    """Certificate for a subcritical homogeneous operator.

    The transient constant comes from the iterate norms of the all-ones
    vector (which bound every start by homogeneity and monotonicity) and
    the input gain from the summed iterate norms, a Neumann-style bound.
    """
    r = spectral_radius(op).value
    if r >= 1.0:
        raise ValueError(f"operator is not subcritical: r = {r:.6g}")
    a = min(r + margin, 0.5 * (1.0 + r), 1.0 - 1e-9)
    if a <= 0.0:
        a = 0.5
    norms = _one_iterate_norms(op)
    M = max(1.0, max(nk / a ** k for k, nk in enumerate(norms)) * (1.0 + 1e-6))
    S = sum(norms) * (1.0 + 1e-6)
    return EissCertificate(M, a, linear(S))


# -- monotone limit probe ---------------------------------------------

@dataclass(frozen=True)
class MlimReport:
    eps_grid: tuple
    attainments: tuple         # (eps, N or None)
    attained_all: bool
    bound: float               # xi(||w||)
    seed_ok: bool
    seed_note: str
    x0: Optional[StateVector] = None

    def to_json(self) -> dict:
        return {
            "eps_grid": list(self.eps_grid),
            "attainments": [[e, n] for e, n in self.attainments],
            "attained_all": self.attained_all,
            "bound": self.bound,
            "seed_ok": self.seed_ok,
            "seed_note": self.seed_note,
            "x0": None if self.x0 is None else self.x0.to_json(),
        }


def _decreasing_seed(op: GainOperator, w: np.ndarray):
    """Construct x0 >= A(x0) + w, so the equality run decreases.

    Linear max operators use a strict-decay certificate; linear sum
    operators a Neumann-series majorant; anything else a geometric ladder
    of constant profiles.  Returns (x0 or None, note).
    """
    wn = float(w.max())
    if op.is_linear():
        r = spectral_radius(op).value
        if r >= 1.0:
            return None, f"no decreasing seed: spectral radius {r:.4g} >= 1"
        if op.mode == MODE_MAX:
            eps = min(0.5, 0.5 * (1.0 / max(r, 1e-12) - 1.0))
            try:
                cert = strict_decay_point(op, eps)
            except (EpsilonTooLargeError, RequiresLinearGainsError) as e:
                return None, f"strict decay construction failed: {e}"
            s0 = cert.s0.values
            t = max(1.0, max(w / ((1.0 - cert.lam) * s0)))
            return t * s0, f"strict decay seed, lam={cert.lam:.4g}, t={t:.4g}"
        m = op.linear_matrix()
        eye = np.eye(op.n)
        x_inf = np.linalg.solve(eye - m, w)
        z = np.linalg.solve(eye - m, np.ones(op.n))
        return x_inf + z, "Neumann-series seed (sum mode)"
    # nonlinear: constant-profile ladder
    for c in [max(wn, 1e-6) * 2.0 ** k for k in range(60)]:
        x0 = np.full(op.n, c)
        if np.all(op.apply_array(x0) + w <= x0):
            return x0, f"constant-profile seed c={c:.4g}"
    return None, "no decreasing constant profile up to the ladder cap"


def mlim_probe(op: GainOperator, w: StateVector, xi_candidate: ComparisonFunction,
               eps_grid=(1.0, 0.1, 0.01), k_max: int = 5000) -> MlimReport:
    """Run the recursion under a constant input and record, per epsilon,
    the first step whose norm drops below eps + xi(||w||).

    The run starts from a decreasing seed when one is constructible (the
    recursion then decreases by induction); otherwise from a large
    constant fallback, in which case non-attainment is still recorded as
    negative evidence but the seed failure is reported separately.
    """
    op._check_window(w)
    bound = float(xi_candidate(w.sup_norm()))
    x0_arr, note = _decreasing_seed(op, w.values)
    seed_ok = x0_arr is not None
    if not seed_ok:
        x0_arr = np.full(op.n, 1e3 * max(w.sup_norm(), 1.0))
    x0 = StateVector(x0_arr, w.lo, w.boundary)
    eps_grid = tuple(float(e) for e in eps_grid)
    remaining = {e: None for e in eps_grid}
    x = x0_arr.copy()
    nk = float(x.max())
    for e in eps_grid:
        if nk <= e + bound and remaining[e] is None:
            remaining[e] = 0
    for k in range(1, k_max + 1):
        x = op.apply_array(x) + w.values
        nk = float(x.max())
        for e in eps_grid:
            if remaining[e] is None and nk <= e + bound:
                remaining[e] = k
        if all(v is not None for v in remaining.values()):
            break
        if nk > OVERFLOW_GUARD:
            break
    attainments = tuple((e, remaining[e]) for e in eps_grid)
    attained_all = all(v is not None for v in remaining.values())
    return MlimReport(eps_grid, attainments, attained_all, bound, seed_ok, note, x0)


# -- Lyapunov construction (exponential decay) ------------------------

class LyapunovEvaluator:
    """V(x) = sup_n eta^n ||A^n(x)||, evaluated as a finite sup.

    The tail is controlled through the iterate norms of the all-ones
    vector: once the weighted norm falls far enough below the running
    maximum, no later term can matter.  Satisfies the sandwich
    ||x|| <= V(x) <= psi ||x|| and the dissipation inequality
    V(x(k+1)) <= V(x(k)) / eta + psi ||u||_inf along trajectories.
    """

    def __init__(self, op: GainOperator, eta: float):
        if eta <= 1.0:
            raise ValueError(f"eta must exceed 1, got {eta}")
        if not op.is_linear():
            raise RequiresLinearGainsError("the Lyapunov construction needs linear gains")
        r = spectral_radius(op).value
        if eta * r >= 1.0:
            raise EtaTooLargeError(f"eta * r = {eta * r:.6g} >= 1; choose a smaller eta")
        self.op = op
        self.eta = float(eta)
        self.r = r
        # weighted iterate norms m_k = eta^k ||A^k(1)||; submultiplicative,
        # so the global sup is attained before the first drop below 1.
        self.m = _one_iterate_norms(op, scale=eta, floor=1e-16)
        self.N = next((k for k, mk in enumerate(self.m) if k > 0 and mk < 1e-3),
                      len(self.m) - 1)
        self.m_sup = max(self.m[:self.N + 1])
        self.C = float(op.apply_array(np.ones(op.n)).max())
        self.psi = max((eta * self.C) ** n for n in range(max(self.N, 1)))

    def __call__(self, x) -> float:
        if isinstance(x, StateVector):
            x = x.values
        v = np.asarray(x, dtype=float)
        best = float(v.max())
        scale = max(best, 1e-300)
        weight = 1.0
        for _ in range(len(self.m) + 8):
            v = self.op.apply_array(v)
            weight *= self.eta
            term = weight * float(v.max())
            if term > best:
                best = term
            if term * self.m_sup < 1e-12 * scale:
                break
        return best

    def to_json(self) -> dict:
        return {"eta": self.eta, "truncation": self.N, "psi": self.psi,
                "operator_bound": self.C, "spectral_radius": self.r}


def build_lyapunov(op: GainOperator, eta: float) -> LyapunovEvaluator:
    return LyapunovEvaluator(op, eta)


def check_dissipation(V: LyapunovEvaluator, traj: DiscreteTrajectory,
                      tol: float = 1e-9):
    """Stepwise V(x(k+1)) <= V(x(k))/eta + psi ||u||_inf; (ok, first bad k)."""
    u_norm = traj.input_sup_norm()
    vals = [V(s) for s in traj.states]
    for k in range(len(vals) - 1):
        if vals[k + 1] > vals[k] / V.eta + V.psi * u_norm + tol:
            return False, k
    return True, None
