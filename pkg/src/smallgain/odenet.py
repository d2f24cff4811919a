"""Fixed-step RK4 simulation of truncated nearest-neighbor ODE networks,
closed-form constant-profile references, empirical ISS envelope fitting
and stability threshold scans.

Two concrete network kinds are first-class: a linear chain
dx_i/dt = a x_{i-1} - x_i + b x_{i+1} + u_i and a cubic max-coupled chain
dx_i/dt = -x_i^3 + max(a x_{i-1}^3, b x_{i+1}^3, u_i), plus a generic
banded linear form.  Constant initial profiles with periodic boundaries
evolve as scalar ODEs with known solutions, which anchors the accuracy
contract of the integrator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .comparison import ComparisonFunction, KLFunction, fsum, linear, piecewise
from .isotonic import upper_envelope_knots
from .network import PERIODIC, ZEROPAD, StateVector

__all__ = [
    "LinearInvariant",
    "CubicMax",
    "GenericBandedLinear",
    "OdeRun",
    "Trajectory",
    "simulate",
    "reference_profile",
    "UnsupportedReferenceError",
    "IssEnvelopeFit",
    "fit_iss_envelope",
    "ThresholdScan",
    "threshold_scan",
    "write_trajectory_csv",
]

BLOWUP_GUARD = 1e9


class UnsupportedReferenceError(ValueError):
    """No closed-form comparison profile exists for these parameters."""


# -- network kinds ----------------------------------------------------

@dataclass(frozen=True)
class LinearInvariant:
    """dx_i/dt = a x_{i-1} - x_i + b x_{i+1} + u_i with a, b > 0."""

    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"coefficients must be positive, got a={self.a}, b={self.b}")

    def to_json(self) -> dict:
        return {"kind": "linear", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class CubicMax:
    """dx_i/dt = -x_i^3 + max(a x_{i-1}^3, b x_{i+1}^3, u_i) with a, b > 0."""

    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"coefficients must be positive, got a={self.a}, b={self.b}")

    def to_json(self) -> dict:
        return {"kind": "cubic", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class GenericBandedLinear:
    """dx_i/dt = -decay x_i + sum_d c_d x_{i+d} + u_i."""

    decay: float
    offsets: tuple  # sorted tuple of (offset, coefficient)

    def __post_init__(self):
        if self.decay <= 0:
            raise ValueError("self-decay rate must be positive")
        for d, c in self.offsets:
            if d == 0:
                raise ValueError("offset 0 belongs to the self-decay term")
            if c <= 0:
                raise ValueError(f"coefficient at offset {d} must be positive")

    @staticmethod
    def of(decay: float, offset_map) -> "GenericBandedLinear":
        items = tuple(sorted((int(d), float(c)) for d, c in dict(offset_map).items()))
        return GenericBandedLinear(float(decay), items)

    def to_json(self) -> dict:
        return {"kind": "banded", "decay": self.decay,
                "offsets": {str(d): c for d, c in self.offsets}}


NetworkKind = Union[LinearInvariant, CubicMax, GenericBandedLinear]


def kind_from_json(d: dict) -> NetworkKind:
    k = d.get("kind")
    if k == "linear":
        return LinearInvariant(float(d["a"]), float(d["b"]))
    if k == "cubic":
        return CubicMax(float(d["a"]), float(d["b"]))
    if k == "banded":
        return GenericBandedLinear.of(d["decay"],
                                      {int(o): c for o, c in d["offsets"].items()})
    raise ValueError(f"unknown network kind {k!r}")


def _shift(x: np.ndarray, d: int, boundary: str) -> np.ndarray:
    """Array y with y[i] = x[i+d] under the boundary policy."""
    if boundary == PERIODIC:
        return np.roll(x, -d)
    y = np.zeros_like(x)
    if d > 0:
        if d < x.size:
            y[:-d] = x[d:]
    elif d < 0:
        if -d < x.size:
            y[-d:] = x[:d]
    else:
        y[:] = x
    return y


def _vector_field(kind: NetworkKind, boundary: str) -> Callable:
    if isinstance(kind, LinearInvariant):
        a, b = kind.a, kind.b

        def f(x, u):
            return a * _shift(x, -1, boundary) - x + b * _shift(x, 1, boundary) + u
        return f
    if isinstance(kind, CubicMax):
        a, b = kind.a, kind.b

        def f(x, u):
            c = x ** 3
            drive = np.maximum(np.maximum(a * _shift(c, -1, boundary),
                                          b * _shift(c, 1, boundary)), u)
            return drive - c
        return f
    if isinstance(kind, GenericBandedLinear):
        decay, offsets = kind.decay, kind.offsets

        def f(x, u):
            out = -decay * x + u
            for d, c in offsets:
                out = out + c * _shift(x, d, boundary)
            return out
        return f
    raise TypeError(f"unknown network kind {type(kind).__name__}")


# -- runs and trajectories --------------------------------------------

InputSignal = Union[None, float, np.ndarray, Sequence]


def _input_function(u: InputSignal, n: int) -> Callable:
    """Piecewise-constant input as a function of time.

    Accepted forms: None (zero), a scalar, a length-n vector, or a table
    of (t_start, value) pairs with values scalar or length-n.
    """
    if u is None:
        z = np.zeros(n)
        return lambda t: z
    if np.isscalar(u):
        c = np.full(n, float(u))
        return lambda t: c
    if isinstance(u, StateVector):
        c = u.values.copy()
        return lambda t: c
    arr = np.asarray(u, dtype=object)
    if arr.ndim == 1 and all(np.isscalar(v) for v in arr) and len(arr) == n:
        c = np.asarray(u, dtype=float)
        return lambda t: c
    table = []
    for t0, val in u:
        vec = np.full(n, float(val)) if np.isscalar(val) else np.asarray(val, dtype=float)
        table.append((float(t0), vec))
    table.sort(key=lambda p: p[0])
    starts = np.array([t0 for t0, _ in table])

    def at(t):
        k = int(np.searchsorted(starts, t, side="right")) - 1
        return table[max(k, 0)][1]
    return at


@dataclass(frozen=True)
class OdeRun:
    kind: NetworkKind
    x0: StateVector
    u: InputSignal = None
    T: float = 10.0
    dt: float = 1e-3
    store_every: int = 1

    def __post_init__(self):
        if self.dt <= 0 or self.T <= 0:
            raise ValueError("dt and T must be positive")
        if self.x0.n < 3:
            raise ValueError("window size must be at least 3")
        if self.store_every < 1:
            raise ValueError("store_every must be at least 1")

    def to_json(self) -> dict:
        u = self.u
        if isinstance(u, np.ndarray):
            u = [float(v) for v in u]
        elif isinstance(u, StateVector):
            u = u.to_json()
        return {"kind": self.kind.to_json(), "x0": self.x0.to_json(), "u": u,
                "T": self.T, "dt": self.dt, "store_every": self.store_every}


@dataclass(frozen=True)
class Trajectory:
    run: OdeRun
    ts: np.ndarray             # stored sample times
    states: np.ndarray         # (len(ts), n)
    escaped: bool = False
    escape_time: Optional[float] = None

    def sup_norms(self) -> np.ndarray:
        return np.abs(self.states).max(axis=1)

    def final_sup_norm(self) -> float:
        return float(np.abs(self.states[-1]).max())

    def input_sup_norm(self) -> float:
        uf = _input_function(self.run.u, self.run.x0.n)
        return max(float(np.abs(uf(t)).max()) for t in self.ts)

    def to_json(self) -> dict:
        return {"run": self.run.to_json(), "samples": len(self.ts),
                "final_sup_norm": self.final_sup_norm(),
                "escaped": self.escaped, "escape_time": self.escape_time}


def simulate(run: OdeRun) -> Trajectory:
    """Classic fixed-step RK4 integration of the truncated network.

    Aborts with the partial trajectory and the escape time once the sup
    norm passes the blow-up guard.
    """
    n = run.x0.n
    f = _vector_field(run.kind, run.x0.boundary)
    uf = _input_function(run.u, n)
    steps = int(round(run.T / run.dt))
    dt = run.dt
    x = run.x0.values.astype(float).copy()
    ts, states = [0.0], [x.copy()]
    escaped, escape_time = False, None
    for k in range(steps):
        t = k * dt
        u0 = uf(t)
        uh = uf(t + 0.5 * dt)
        u1 = uf(t + dt)
        k1 = f(x, u0)
        k2 = f(x + 0.5 * dt * k1, uh)
        k3 = f(x + 0.5 * dt * k2, uh)
        k4 = f(x + dt * k3, u1)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        tk = (k + 1) * dt
        if not np.all(np.isfinite(x)) or float(np.abs(x).max()) > BLOWUP_GUARD:
            escaped, escape_time = True, tk
            ts.append(tk)
            states.append(x.copy())
            break
        if (k + 1) % run.store_every == 0 or k + 1 == steps:
            ts.append(tk)
            states.append(x.copy())
    return Trajectory(run, np.array(ts), np.array(states), escaped, escape_time)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Long-format CSV (t, i, x_i) with a header row."""
    lo = traj.run.x0.lo
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "i", "x_i"])
        for t, row in zip(traj.ts, traj.states):
            for off, xi in enumerate(row):
                w.writerow([repr(float(t)), lo + off, repr(float(xi))])


# -- constant-profile references --------------------------------------

def reference_profile(kind: NetworkKind, x_star: float, t: float) -> float:
    """Exact value at time t of a constant initial profile x_star with
    zero input and periodic boundary.

    The linear chain reduces to dz/dt = (a+b-1) z and the cubic chain to
    dz/dt = -(1 - max(a,b)) z^3, both scalar with closed forms.
    """
    if x_star < 0 or t < 0:
        raise ValueError("need x_star >= 0 and t >= 0")
    if isinstance(kind, LinearInvariant):
        return x_star * math.exp((kind.a + kind.b - 1.0) * t)
    if isinstance(kind, CubicMax):
        m = max(kind.a, kind.b)
        if m > 1.0:
            raise UnsupportedReferenceError(
                f"max coupling {m:g} > 1: the scalar comparison form is invalid")
        if m == 1.0:
            return x_star
        return x_star / math.sqrt(1.0 + 2.0 * (1.0 - m) * x_star ** 2 * t)
    if isinstance(kind, GenericBandedLinear):
        rate = sum(c for _, c in kind.offsets) - kind.decay
        return x_star * math.exp(rate * t)
    raise TypeError(f"unknown network kind {type(kind).__name__}")


# -- empirical ISS envelope -------------------------------------------

@dataclass(frozen=True)
class IssEnvelopeFit:
    beta: KLFunction
    gamma: ComparisonFunction
    validated: bool
    rounds: int
    witness: Optional[dict] = None

    def to_json(self) -> dict:
        return {"beta": self.beta.to_json(), "gamma": self.gamma.to_json(),
                "validated": self.validated, "rounds": self.rounds,
                "witness": self.witness}


def _is_zero_input(run: OdeRun) -> bool:
    uf = _input_function(run.u, run.x0.n)
    return all(float(np.abs(uf(t)).max()) == 0.0
               for t in np.linspace(0.0, run.T, 7))


def fit_iss_envelope(runs: Sequence[Trajectory], tol: float = 1e-6,
                     inflation: float = 1.05, max_rounds: int = 20) -> IssEnvelopeFit:
    """Fit an exponential transient envelope and a static input gain.

    The transient C * r * exp(-lam t) comes from a joint log-linear
    regression over the unforced decay runs; the gain is the monotone
    upper envelope of steady sup norm against input sup norm over the
    forced runs.  Both are inflated geometrically until every supplied
    run satisfies the combined bound, up to the round cap.
    """
    decay_pts = []      # (t, log relative norm)
    gain_pts = [(0.0, 0.0)]
    for tr in runs:
        norms = tr.sup_norms()
        n0 = norms[0]
        if _is_zero_input(tr.run):
            if n0 > 0:
                mask = norms > 1e-12 * n0
                for t, nk in zip(tr.ts[mask], norms[mask]):
                    decay_pts.append((float(t), math.log(nk / n0)))
        else:
            tail = norms[int(0.9 * len(norms)):]
            gain_pts.append((tr.input_sup_norm(), float(tail.max())))

    if decay_pts:
        ts = np.array([p[0] for p in decay_pts])
        ys = np.array([p[1] for p in decay_pts])
        design = np.column_stack([np.ones_like(ts), ts])
        coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
        C = max(1.0, math.exp(coef[0]))
        lam = max(-float(coef[1]), 1e-12)
    else:
        C, lam = 1.0, 1e-12

    knots = upper_envelope_knots([p[0] for p in gain_pts], [p[1] for p in gain_pts])
    gamma_scale = 1.0

    def make_gamma():
        scaled = [(r, gamma_scale * v) for r, v in knots]
        return fsum([piecewise(scaled), linear(1e-9)], cls="Kinf")

    witness = None
    for rounds in range(max_rounds + 1):
        beta = KLFunction(C, lam)
        gamma = make_gamma()
        witness = _validate_envelope(runs, beta, gamma, tol)
        if witness is None:
            return IssEnvelopeFit(beta, gamma, True, rounds)
        C *= inflation
        gamma_scale *= inflation
    return IssEnvelopeFit(KLFunction(C, lam), make_gamma(), False, max_rounds, witness)


def _validate_envelope(runs, beta, gamma, tol):
    for idx, tr in enumerate(runs):
        n0 = tr.sup_norms()[0]
        un = tr.input_sup_norm()
        gu = gamma(un)
        for t, nk in zip(tr.ts, tr.sup_norms()):
            if nk > beta(n0, float(t)) + gu + tol:
                return {"run": idx, "t": float(t), "norm": float(nk),
                        "bound": beta(n0, float(t)) + gu}
    return None


# -- threshold scan ---------------------------------------------------

@dataclass(frozen=True)
class ThresholdScan:
    kind_name: str
    pairs: tuple               # (a, b) grid points
    decays: tuple              # bool per pair
    final_norms: tuple
    T: float

    def classification(self):
        return [{"a": a, "b": b, "decay": d, "final_sup_norm": f}
                for (a, b), d, f in zip(self.pairs, self.decays, self.final_norms)]

    def to_json(self) -> dict:
        return {"kind": self.kind_name, "T": self.T,
                "table": self.classification()}


def threshold_scan(kind_name: str, param_grid, x0: StateVector,
                   T: float = 10.0, dt: float = 1e-3) -> ThresholdScan:
    """Classify each (a, b) pair as decay or non-decay from the unforced
    constant-profile run: decay means the final sup norm drops below
    0.99 of the initial one.  Blow-up counts as non-decay.
    """
    ctor = {"linear": LinearInvariant, "cubic": CubicMax}.get(kind_name)
    if ctor is None:
        raise ValueError(f"threshold scans support kinds 'linear' and 'cubic', got {kind_name!r}")
    pairs, decays, finals = [], [], []
    n0 = x0.sup_norm()
    for a, b in param_grid:
        tr = simulate(OdeRun(ctor(float(a), float(b)), x0, None, T, dt,
                             store_every=max(1, int(round(T / dt)) // 50)))
        fin = math.inf if tr.escaped else tr.final_sup_norm()
        pairs.append((float(a), float(b)))
        decays.append(bool(fin < 0.99 * n0))
        finals.append(float(fin) if np.isfinite(fin) else None)
    return ThresholdScan(kind_name, tuple(pairs), tuple(decays), tuple(finals), T)
