"""Gain operators in max and sum form: application, powers, spectral radius,
cycle structure, Kleene-star closure and points of strict decay.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import networkx as nx
import numpy as np

from .network import (
    BandedInvariant,
    BlockDiagonal,
    Finite,
    GainFamily,
    MODE_MAX,
    MODE_SUM,
    PERIODIC,
    StateVector,
)

__all__ = [
    "GainOperator",
    "SpectralEstimate",
    "CycleReport",
    "KleeneResult",
    "StrictDecayCertificate",
    "spectral_radius",
    "power_apply_pathform",
    "cycle_analysis",
    "kleene_star",
    "strict_decay_point",
    "UnsupportedModeError",
    "UnsupportedStructureError",
    "RequiresLinearGainsError",
    "EpsilonTooLargeError",
]

DEFAULT_TOL = 1e-12
DEFAULT_KMAX = 10_000
BLOWUP_GUARD = 1e9

_CYCLE_GRID = tuple(10.0 ** e for e in range(-6, 7))


class UnsupportedModeError(ValueError):
    pass


class UnsupportedStructureError(ValueError):
    pass


class RequiresLinearGainsError(ValueError):
    pass


class EpsilonTooLargeError(ValueError):
    pass


_UNSET = object()


class GainOperator:
    """Monotone operator on the nonnegative cone built from a gain family.

    Max mode aggregates gains by supremum, sum mode by summation.  Banded
    families act on a finite window through the boundary policy declared
    on the operator (inherited by vectors it produces).
    """

    def __init__(self, family: GainFamily, window: Optional[int] = None,
                 boundary: str = PERIODIC):
        self.family = family
        self.boundary = boundary
        s = family.structure
        if isinstance(s, (Finite, BlockDiagonal)):
            self.n = s.n
        elif isinstance(s, BandedInvariant):
            if window is None:
                raise ValueError("banded families need an evaluation window size")
            self.n = int(window)
        else:
            raise TypeError(f"unknown structure {type(s).__name__}")
        self._rows = None
        self._matrix = _UNSET

    @property
    def mode(self) -> str:
        return self.family.mode

    def is_linear(self) -> bool:
        return self.linear_matrix() is not None

    def linear_matrix(self):
        if self._matrix is _UNSET:
            self._matrix = self.family.linear_matrix(self.n, self.boundary)
        return self._matrix

    def rows(self):
        """Per-row list of (source index, gain) pairs on the window."""
        if self._rows is not None:
            return self._rows
        s = self.family.structure
        rows = [[] for _ in range(self.n)]
        if isinstance(s, Finite):
            for i, row in enumerate(s.entries):
                for j, g in enumerate(row):
                    if g is not None:
                        rows[i].append((j, g))
        elif isinstance(s, BlockDiagonal):
            at = 0
            for b in s.blocks:
                for i, row in enumerate(b.entries):
                    for j, g in enumerate(row):
                        if g is not None:
                            rows[at + i].append((at + j, g))
                at += b.n
        else:
            for i in range(self.n):
                for d, g in s.offsets:
                    j = i + d
                    if self.boundary == PERIODIC:
                        rows[i].append((j % self.n, g))
                    elif 0 <= j < self.n:
                        rows[i].append((j, g))
        self._rows = rows
        return rows

    def _check_window(self, s: StateVector):
        if s.n != self.n:
            raise ValueError(f"state window size {s.n} does not match operator size {self.n}")

    # -- application --------------------------------------------------

    def apply(self, s: StateVector) -> StateVector:
        self._check_window(s)
        m = self.linear_matrix()
        if m is not None:
            if self.mode == MODE_SUM:
                out = m @ s.values
            else:
                out = (m * s.values[None, :]).max(axis=1)
            return s.with_values(out)
        out = np.zeros(self.n)
        for i, row in enumerate(self.rows()):
            if not row:
                continue
            vals = [g(float(s.values[j])) for j, g in row]
            out[i] = sum(vals) if self.mode == MODE_SUM else max(vals)
        return s.with_values(out)

    def apply_array(self, values: np.ndarray) -> np.ndarray:
        """Raw-array application; used by iteration loops."""
        m = self.linear_matrix()
        if m is not None:
            if self.mode == MODE_SUM:
                return m @ values
            return (m * values[None, :]).max(axis=1)
        out = np.zeros(self.n)
        for i, row in enumerate(self.rows()):
            if not row:
                continue
            vals = [g(float(values[j])) for j, g in row]
            out[i] = sum(vals) if self.mode == MODE_SUM else max(vals)
        return out

    def apply_with_witness(self, s: StateVector):
        """Max-mode application recording, per row, the lowest source index
        attaining the supremum."""
        if self.mode != MODE_MAX:
            raise UnsupportedModeError("witness indices are defined for max mode only")
        self._check_window(s)
        out = np.zeros(self.n)
        wit = np.full(self.n, -1, dtype=int)
        for i, row in enumerate(self.rows()):
            best, best_j = 0.0, -1
            for j, g in sorted(row):
                v = g(float(s.values[j]))
                if v > best:
                    best, best_j = v, j
            out[i] = best
            wit[i] = best_j
        return s.with_values(out), wit


# -- powers via explicit path composition -----------------------------

def power_apply_pathform(op: GainOperator, s: StateVector, n: int) -> StateVector:
    """n-th power through explicit enumeration of gain compositions along
    paths, rather than repeated application.

    Exponential in n; intended as an independent cross-check at desk
    scale (the two routes must agree to 1e-12).
    """
    if op.mode != MODE_MAX:
        raise UnsupportedModeError("path-form powers are defined for max mode")
    if n < 1:
        raise ValueError("power must be >= 1")
    op._check_window(s)
    rows = op.rows()
    if sum(len(r) for r in rows) * (max(1, sum(len(r) for r in rows)) ** (n - 1)) > 10**7:
        raise ValueError("path enumeration budget exceeded")
    vals = s.values

    def best_from(i: int, depth: int) -> float:
        # max over paths i -> j2 -> ... of gamma_{i j2}(...gamma(s_end))
        best = 0.0
        for j, g in rows[i]:
            inner = float(vals[j]) if depth == 1 else best_from(j, depth - 1)
            v = g(inner)
            if v > best:
                best = v
        return best

    out = np.array([best_from(i, n) for i in range(op.n)])
    return s.with_values(out)


# -- spectral radius via the Gelfand sequence on the all-ones vector --

@dataclass(frozen=True)
class SpectralEstimate:
    value: float
    iterations: int
    history: tuple

    def to_json(self) -> dict:
        return {"value": self.value, "iterations": self.iterations,
                "history": list(self.history)}


def spectral_radius(op: GainOperator, tol: float = 1e-9,
                    n_max: int = DEFAULT_KMAX) -> SpectralEstimate:
    """Gelfand limit ||G^N||^(1/N) via renormalized power squaring.

    Requires linear gains: the coefficient matrix is squared repeatedly in
    the aggregation semiring (classical product for sum mode, max-times
    product for max mode), renormalizing by the induced sup-norm each step
    and accumulating the exponent in log space.  Squaring reaches power
    N = 2^k after k steps, so the O(1/N) Gelfand error shrinks below any
    practical tolerance within ~60 steps for sub- and supercritical
    families alike.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not op.is_linear():
        raise RequiresLinearGainsError("spectral radius requires linear gains")
    a = op.linear_matrix().astype(float).copy()
    if op.mode == MODE_SUM:
        def square(b):
            return b @ b

        def opnorm(b):
            return float(b.sum(axis=1).max())
    else:
        def square(b):
            return (b[:, :, None] * b[None, :, :]).max(axis=1)

        def opnorm(b):
            return float(b.max())

    acc = 0.0
    history = []
    weight = 1.0  # 1 / 2^k
    for k in range(min(64, n_max)):
        s = opnorm(a)
        if s == 0.0:
            return SpectralEstimate(0.0, k + 1, tuple(history + [0.0]))
        acc += weight * np.log(s)
        history.append(float(np.exp(acc)))
        # remaining corrections are bounded by the shrinking weight times
        # a bounded log-norm, so the increment is a faithful stop signal
        if k > 2 and abs(history[-1] - history[-2]) < tol * 1e-3:
            break
        a = square(a / s)
        weight *= 0.5
    return SpectralEstimate(history[-1], len(history), tuple(history))


# -- cycle structure --------------------------------------------------

@dataclass(frozen=True)
class CycleReport:
    cycles: tuple          # tuples of node indices
    products: tuple        # linear cycle products, None per-entry if nonlinear
    max_product: Optional[float]
    max_cycle_mean: Optional[float]   # max geometric mean product^(1/length)
    all_contractions: bool
    witness_cycle: Optional[tuple] = None
    witness_r: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "cycles": [list(c) for c in self.cycles],
            "products": list(self.products),
            "max_product": self.max_product,
            "max_cycle_mean": self.max_cycle_mean,
            "all_contractions": self.all_contractions,
            "witness_cycle": list(self.witness_cycle) if self.witness_cycle else None,
            "witness_r": self.witness_r,
        }


def cycle_analysis(op: GainOperator) -> CycleReport:
    """Enumerate simple cycles of the gain digraph (Johnson's algorithm)
    and test each composition for contraction.

    Linear gains give exact products; nonlinear compositions are sampled
    on a logarithmic grid, so a pass is evidence, not proof.
    """
    if isinstance(op.family.structure, BandedInvariant):
        raise UnsupportedStructureError(
            "banded families have infinitely many cycles; analyze a finite block instead")
    rows = op.rows()
    g = nx.DiGraph()
    g.add_nodes_from(range(op.n))
    gains = {}
    for i, row in enumerate(rows):
        for j, fn in row:
            g.add_edge(j, i)  # influence j -> i
            gains[(i, j)] = fn
    cycles, products = [], []
    all_ok = True
    witness_cycle = witness_r = None
    max_product = max_mean = None
    for cyc in nx.simple_cycles(g):
        cyc = tuple(cyc)
        cycles.append(cyc)
        fns = [gains[(cyc[(k + 1) % len(cyc)], cyc[k])] for k in range(len(cyc))]
        ks = [f.linear_coefficient() for f in fns]
        if all(k is not None for k in ks):
            prod = float(np.prod(ks))
            mean = prod ** (1.0 / len(cyc))
            products.append(prod)
            max_product = prod if max_product is None else max(max_product, prod)
            max_mean = mean if max_mean is None else max(max_mean, mean)
            if prod >= 1.0 and all_ok:
                all_ok, witness_cycle = False, cyc
        else:
            products.append(None)
            for r in _CYCLE_GRID:
                v = r
                for f in fns:
                    v = f(v)
                if v >= r and all_ok:
                    all_ok, witness_cycle, witness_r = False, cyc, r
                    break
    return CycleReport(tuple(cycles), tuple(products), max_product, max_mean,
                       all_ok, witness_cycle, witness_r)


# -- Kleene star (strong transitive closure) --------------------------

@dataclass(frozen=True)
class KleeneResult:
    vector: StateVector
    iterations: int
    diverged: bool

    def to_json(self) -> dict:
        return {"vector": self.vector.to_json(), "iterations": self.iterations,
                "diverged": self.diverged}


def kleene_star(op: GainOperator, s: StateVector, tol: float = DEFAULT_TOL,
                k_max: int = DEFAULT_KMAX) -> KleeneResult:
    """Componentwise running supremum of operator iterates.

    For max-form operators the closure absorbs new iterates permanently:
    once an iterate adds no component above tol, no later one can (the
    operator distributes over componentwise suprema), so the loop stops.
    A blow-up guard flags divergence, which signals a violated small-gain
    condition.
    """
    if op.mode != MODE_MAX:
        raise UnsupportedModeError("Kleene star is defined for max-mode operators")
    op._check_window(s)
    q = s.values.copy()
    v = s.values.copy()
    guard = BLOWUP_GUARD * max(s.sup_norm(), 1e-300)
    for k in range(1, k_max + 1):
        v = op.apply_array(v)
        if float(v.max()) > guard:
            return KleeneResult(s.with_values(q), k, True)
        if np.all(v <= q + tol):
            return KleeneResult(s.with_values(np.maximum(q, v)), k, False)
        q = np.maximum(q, v)
    return KleeneResult(s.with_values(q), k_max, False)


def closure_norm_bound(op: GainOperator, k_max: int = DEFAULT_KMAX) -> float:
    """|| sum_k A^k(1) ||, a Neumann-series inverse bound.

    For a subcritical linear operator, v <= A(v) + w implies (iterating
    the inequality; max-form linear operators are subadditive) that
    v <= sum_k A^k(w), so ||v|| <= ||sum_k A^k(1)|| * ||w||.  This is the
    slope of a valid linear bounded-invertibility function xi.
    """
    if not op.is_linear():
        raise RequiresLinearGainsError("the closure norm bound requires linear gains")
    if spectral_radius(op).value >= 1.0:
        raise ValueError("the closure norm is finite only for subcritical operators")
    ones = np.ones(op.n)
    if op.mode == MODE_SUM:
        z = np.linalg.solve(np.eye(op.n) - op.linear_matrix(), ones)
        return float(z.max())
    acc = ones.copy()
    v = ones.copy()
    for _ in range(k_max):
        v = op.apply_array(v)
        acc += v
        if float(v.max()) < 1e-14:
            break
    return float(acc.max())


# -- points of strict decay -------------------------------------------

@dataclass(frozen=True)
class StrictDecayCertificate:
    s0: StateVector
    lam: float
    residual: float    # max_i (G(s0) - lam*s0)_i, <= 0 up to tolerance

    def to_json(self) -> dict:
        return {"s0": self.s0.to_json(), "lam": self.lam, "residual": self.residual}


def strict_decay_point(op: GainOperator, eps: float, tol: float = DEFAULT_TOL,
                       k_max: int = DEFAULT_KMAX) -> StrictDecayCertificate:
    """Interior point s0 with G(s0) <= s0 / (1 + eps), built as the
    componentwise supremum of the (1+eps)-scaled iterates of the all-ones
    vector.

    Requires max mode with linear gains and (1 + eps) * r(G) < 1; the
    scaled iterates then vanish geometrically and the supremum freezes.
    """
    if op.mode != MODE_MAX:
        raise UnsupportedModeError("strict decay points are built for max mode")
    if not op.is_linear():
        raise RequiresLinearGainsError("strict decay construction requires linear gains")
    if eps <= 0:
        raise ValueError("eps must be positive")
    r = spectral_radius(op).value
    if (1.0 + eps) * r >= 1.0:
        raise EpsilonTooLargeError(
            f"(1+eps)*r = {(1 + eps) * r:.6g} >= 1; choose a smaller eps")
    ones = np.ones(op.n)
    q = ones.copy()
    v = ones.copy()
    for _ in range(k_max):
        v = (1.0 + eps) * op.apply_array(v)
        if np.all(v <= q):
            break
        q = np.maximum(q, v)
    s0 = StateVector(q, boundary=op.boundary)
    lam = 1.0 / (1.0 + eps)
    gs0 = op.apply_array(q)
    residual = float((gs0 - lam * q).max())
    if residual > tol:
        raise ArithmeticError(f"strict decay residual {residual:g} exceeds tolerance {tol:g}")
    return StrictDecayCertificate(s0, lam, residual)
