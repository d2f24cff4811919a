"""Gain families over finite, banded spatially-invariant and block-diagonal
index structures, plus finite truncations of nonnegative sup-norm vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .comparison import ComparisonFunction, KLFunction, InvalidComparisonFunction

__all__ = [
    "Finite",
    "BandedInvariant",
    "BlockDiagonal",
    "GainFamily",
    "StateVector",
    "AggregatedISSData",
    "WellDefinednessReport",
    "check_well_defined",
    "sup_norm",
]

MODE_MAX = "max"
MODE_SUM = "sum"

PERIODIC = "periodic"
ZEROPAD = "zeropad"


@dataclass(frozen=True)
class Finite:
    """n x n grid of gains with a structurally zero diagonal.

    ``entries[i][j]`` is the gain from node j into node i; None stands
    for the zero gain.
    """

    entries: tuple

    def __post_init__(self):
        n = len(self.entries)
        for i, row in enumerate(self.entries):
            if len(row) != n:
                raise ValueError(f"row {i} has length {len(row)}, expected {n}")
            if row[i] is not None and not row[i].is_zero():
                raise ValueError(f"diagonal gain ({i},{i}) must be zero")

    @property
    def n(self) -> int:
        return len(self.entries)

    @staticmethod
    def of(entries) -> "Finite":
        return Finite(tuple(tuple(row) for row in entries))


@dataclass(frozen=True)
class BandedInvariant:
    """Spatially invariant gains on the integers: one gain per nonzero offset."""

    offsets: tuple  # sorted tuple of (offset, gain)

    def __post_init__(self):
        for d, _ in self.offsets:
            if d == 0:
                raise ValueError("offset 0 (diagonal) is forbidden")

    @staticmethod
    def of(offset_map) -> "BandedInvariant":
        items = tuple(sorted((int(d), g) for d, g in dict(offset_map).items()))
        return BandedInvariant(items)


@dataclass(frozen=True)
class BlockDiagonal:
    blocks: tuple  # tuple of Finite

    @property
    def n(self) -> int:
        return sum(b.n for b in self.blocks)

    @staticmethod
    def of(blocks) -> "BlockDiagonal":
        return BlockDiagonal(tuple(blocks))


@dataclass(frozen=True)
class GainFamily:
    """A structured family of interconnection gains plus aggregation mode."""

    structure: object  # Finite | BandedInvariant | BlockDiagonal
    mode: str = MODE_MAX

    def __post_init__(self):
        if self.mode not in (MODE_MAX, MODE_SUM):
            raise ValueError(f"mode must be 'max' or 'sum', got {self.mode!r}")

    def generators(self):
        """The finitely many distinct gain functions in the family."""
        s = self.structure
        if isinstance(s, Finite):
            return [g for row in s.entries for g in row if g is not None]
        if isinstance(s, BandedInvariant):
            return [g for _, g in s.offsets]
        if isinstance(s, BlockDiagonal):
            return [g for b in s.blocks for row in b.entries for g in row if g is not None]
        raise TypeError(f"unknown structure {type(s).__name__}")

    def linear_matrix(self, n: Optional[int] = None, boundary: str = PERIODIC):
        """Coefficient matrix when every gain is linear, else None.

        For banded structures a window size ``n`` must be given; the
        matrix realizes the boundary policy on that window.
        """
        coeffs = [g.linear_coefficient() for g in self.generators()]
        if any(c is None for c in coeffs):
            return None
        s = self.structure
        if isinstance(s, Finite):
            m = np.zeros((s.n, s.n))
            for i, row in enumerate(s.entries):
                for j, g in enumerate(row):
                    if g is not None:
                        m[i, j] = g.linear_coefficient()
            return m
        if isinstance(s, BlockDiagonal):
            mats = []
            for b in s.blocks:
                mats.append(GainFamily(b, self.mode).linear_matrix())
            total = sum(mb.shape[0] for mb in mats)
            m = np.zeros((total, total))
            at = 0
            for mb in mats:
                k = mb.shape[0]
                m[at:at + k, at:at + k] = mb
                at += k
            return m
        if isinstance(s, BandedInvariant):
            if n is None:
                raise ValueError("banded structure needs a window size")
            m = np.zeros((n, n))
            for d, g in s.offsets:
                k = g.linear_coefficient()
                for i in range(n):
                    j = i + d
                    if boundary == PERIODIC:
                        if self.mode == MODE_SUM:
                            m[i, j % n] += k
                        else:
                            m[i, j % n] = max(m[i, j % n], k)
                    elif 0 <= j < n:
                        if self.mode == MODE_SUM:
                            m[i, j] += k
                        else:
                            m[i, j] = max(m[i, j], k)
            return m
        raise TypeError(f"unknown structure {type(s).__name__}")

    # -- serialization ------------------------------------------------

    def to_json(self) -> dict:
        return {"structure": _structure_to_json(self.structure), "mode": self.mode}

    @staticmethod
    def from_json(d: dict) -> "GainFamily":
        return GainFamily(_structure_from_json(d["structure"]), d.get("mode", MODE_MAX))


def _gain_to_json(g):
    return None if g is None else g.to_json()


def _gain_from_json(d):
    if d is None:
        return None
    g = ComparisonFunction.from_json(d)
    return None if g.kind == "zero" else g


def _structure_to_json(s) -> dict:
    if isinstance(s, Finite):
        return {"kind": "finite",
                "entries": [[_gain_to_json(g) for g in row] for row in s.entries]}
    if isinstance(s, BandedInvariant):
        return {"kind": "banded",
                "offsets": {str(d): g.to_json() for d, g in s.offsets}}
    if isinstance(s, BlockDiagonal):
        return {"kind": "block",
                "blocks": [_structure_to_json(b) for b in s.blocks]}
    raise TypeError(f"unknown structure {type(s).__name__}")


def _structure_from_json(d: dict):
    kind = d.get("kind")
    if kind == "finite":
        return Finite.of([[_gain_from_json(g) for g in row] for row in d["entries"]])
    if kind == "banded":
        return BandedInvariant.of(
            {int(k): ComparisonFunction.from_json(v) for k, v in d["offsets"].items()})
    if kind == "block":
        return BlockDiagonal.of([_structure_from_json(b) for b in d["blocks"]])
    raise InvalidComparisonFunction(f"unknown structure kind {kind!r}")


# -- state vectors ----------------------------------------------------

@dataclass(frozen=True)
class StateVector:
    """Finite truncation of a nonnegative bounded sequence.

    The window is the inclusive index range [lo, hi]; values are stored
    densely.  Out-of-window neighbors are resolved by the boundary
    policy (periodic wrap or zero padding).
    """

    values: np.ndarray
    lo: int = 0
    boundary: str = PERIODIC

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("state vector must be a nonempty 1-d array")
        if np.any(v < 0):
            raise ValueError("state vector components must be nonnegative")
        object.__setattr__(self, "values", v)
        if self.boundary not in (PERIODIC, ZEROPAD):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def window(self):
        return (self.lo, self.lo + self.n - 1)

    def sup_norm(self) -> float:
        return float(self.values.max())

    def with_values(self, values) -> "StateVector":
        return StateVector(np.asarray(values, dtype=float), self.lo, self.boundary)

    @staticmethod
    def ones(n: int, lo: int = 0, boundary: str = PERIODIC) -> "StateVector":
        return StateVector(np.ones(n), lo, boundary)

    @staticmethod
    def zeros(n: int, lo: int = 0, boundary: str = PERIODIC) -> "StateVector":
        return StateVector(np.zeros(n), lo, boundary)

    @staticmethod
    def centered(n_half: int, boundary: str = PERIODIC, fill: float = 0.0) -> "StateVector":
        return StateVector(np.full(2 * n_half + 1, fill), -n_half, boundary)

    def to_json(self) -> dict:
        lo, hi = self.window
        return {"window": [lo, hi], "boundary": self.boundary,
                "values": [float(v) for v in self.values]}

    @staticmethod
    def from_json(d: dict) -> "StateVector":
        lo, hi = d["window"]
        vals = np.asarray(d["values"], dtype=float)
        if vals.size != hi - lo + 1:
            raise ValueError(f"window [{lo},{hi}] does not match {vals.size} values")
        return StateVector(vals, lo, d.get("boundary", PERIODIC))


def sup_norm(v: StateVector) -> float:
    return v.sup_norm()


# -- well-definedness (finite sups over the generator set) ------------

@dataclass(frozen=True)
class WellDefinednessReport:
    radii: tuple
    sups: tuple          # sup_{i,j} gamma_ij(r) (max) or sup_i row sum (sum)
    ok: bool
    witness_r: Optional[float] = None

    def to_json(self) -> dict:
        return {"radii": list(self.radii), "sups": list(self.sups),
                "ok": self.ok, "witness_r": self.witness_r}


def check_well_defined(g: GainFamily, radii) -> WellDefinednessReport:
    """Evaluate the uniform-in-index sups that make the gain operator total.

    Max mode checks sup over the distinct gain generators; sum mode checks
    the worst row sum (over offsets for banded structures).
    """
    radii = tuple(float(r) for r in radii)
    if not radii:
        raise ValueError("radii grid must be nonempty")
    sups = []
    ok, witness = True, None
    for r in radii:
        if g.mode == MODE_MAX:
            vals = [gen(r) for gen in g.generators()]
            s = max(vals) if vals else 0.0
        else:
            s = _worst_row_sum(g, r)
        sups.append(float(s))
        if not np.isfinite(s):
            ok, witness = False, (witness if witness is not None else r)
    return WellDefinednessReport(radii, tuple(sups), ok, witness)


def _worst_row_sum(g: GainFamily, r: float) -> float:
    s = g.structure
    if isinstance(s, Finite):
        return max((sum(gij(r) for gij in row if gij is not None) for row in s.entries),
                   default=0.0)
    if isinstance(s, BandedInvariant):
        return sum(gd(r) for _, gd in s.offsets)
    if isinstance(s, BlockDiagonal):
        return max((_worst_row_sum(GainFamily(b, MODE_SUM), r) for b in s.blocks),
                   default=0.0)
    raise TypeError(f"unknown structure {type(s).__name__}")


# -- aggregated subsystem data ----------------------------------------

@dataclass(frozen=True)
class AggregatedISSData:
    """Per-subsystem transient/gain data plus uniform envelopes.

    ``betas`` carries KL transients (ISS form) or ``sigmas`` static
    class-K transients (UGS form); one of the two envelope fields must
    dominate every member on the sample grid.
    """

    betas: tuple = ()
    sigmas: tuple = ()
    external_gains: tuple = ()
    beta_max: Optional[KLFunction] = None
    sigma_max: Optional[ComparisonFunction] = None
    gamma_max: Optional[ComparisonFunction] = None

    def envelope_check(self, radii=(0.1, 1.0, 10.0, 100.0), times=(0.0, 0.5, 1.0, 5.0)):
        """Verify envelope domination on a sample grid; returns (ok, witness)."""
        for b in self.betas:
            if self.beta_max is None:
                return False, ("beta_max missing", None)
            for r in radii:
                for t in times:
                    if b(r, t) > self.beta_max(r, t) * (1 + 1e-12):
                        return False, ("beta", (r, t))
        for s in self.sigmas:
            if self.sigma_max is None:
                return False, ("sigma_max missing", None)
            for r in radii:
                if s(r) > self.sigma_max(r) * (1 + 1e-12):
                    return False, ("sigma", r)
        for gext in self.external_gains:
            if self.gamma_max is None:
                return False, ("gamma_max missing", None)
            for r in radii:
                if gext(r) > self.gamma_max(r) * (1 + 1e-12):
                    return False, ("gamma", r)
        return True, None
