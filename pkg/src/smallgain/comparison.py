"""Comparison functions (classes K, K-infinity, PD, KL) as expression trees.

Gains, decay envelopes and certified estimates are all built from a small
closed algebra of scalar functions on [0, inf).  Trees are immutable and
evaluation is pure, so values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

__all__ = [
    "ComparisonFunction",
    "KLFunction",
    "zero",
    "identity",
    "linear",
    "power",
    "saturating",
    "piecewise",
    "compose",
    "fsum",
    "fmax",
    "fmin",
    "scale",
    "id_minus",
    "inverse",
    "rho_from_eta",
    "split_id_minus_eta",
    "lipschitz_lower_envelope",
    "check_class_k",
    "InvalidComparisonFunction",
    "InverseRangeError",
]

_LEAF_KINDS = {"zero", "identity", "linear", "power", "saturating", "piecewise"}
_NODE_KINDS = {"compose", "sum", "max", "min", "id_minus", "inverse"}

# Bisection tolerance for Inverse nodes; monotonicity makes the search total.
_INV_TOL = 1e-12
_INV_RMAX_CAP = 1e30


class InvalidComparisonFunction(ValueError):
    """Malformed tree or a sampled monotonicity violation."""


class InverseRangeError(ValueError):
    """Bisection failed to bracket the preimage within the search cap."""


@dataclass(frozen=True)
class ComparisonFunction:
    """A tagged expression tree over nonneg reals.

    ``kind`` is one of the leaf kinds (zero, identity, linear, power,
    saturating, piecewise) or node kinds (compose, sum, max, min,
    id_minus, inverse).  ``cls`` is a declared class tag ("K", "Kinf",
    "PD" or None); membership is validated by sampling, not proven.
    """

    kind: str
    params: tuple = ()
    children: tuple = ()
    cls: Optional[str] = None

    def __post_init__(self):
        if self.kind not in _LEAF_KINDS and self.kind not in _NODE_KINDS:
            raise InvalidComparisonFunction(f"unknown kind {self.kind!r}")

    # -- evaluation ---------------------------------------------------

    def __call__(self, r: float) -> float:
        if r < 0:
            raise ValueError(f"comparison functions are defined on r >= 0, got {r}")
        return _eval(self, r)

    def linear_coefficient(self) -> Optional[float]:
        """Slope k if this tree is exactly r -> k*r on [0, inf), else None.

        Sum/max/min of linear pieces stay linear because all arguments are
        nonnegative; this is what makes max-form gain operators homogeneous.
        """
        k = self.kind
        if k == "zero":
            return 0.0
        if k == "identity":
            return 1.0
        if k == "linear":
            return self.params[0]
        if k == "power":
            c, p = self.params
            return c if p == 1.0 else (0.0 if c == 0.0 else None)
        if k == "compose":
            a = self.children[0].linear_coefficient()
            b = self.children[1].linear_coefficient()
            if a is None or b is None:
                return None
            return a * b
        if k == "sum":
            ks = [c.linear_coefficient() for c in self.children]
            return None if any(v is None for v in ks) else sum(ks)
        if k == "max":
            ks = [c.linear_coefficient() for c in self.children]
            return None if any(v is None for v in ks) else max(ks)
        if k == "min":
            ks = [c.linear_coefficient() for c in self.children]
            return None if any(v is None for v in ks) else min(ks)
        if k == "id_minus":
            ke = self.children[0].linear_coefficient()
            return None if ke is None else 1.0 - ke
        if k == "inverse":
            ki = self.children[0].linear_coefficient()
            if ki is None or ki == 0.0:
                return None
            return 1.0 / ki
        return None

    def is_zero(self) -> bool:
        k = self.linear_coefficient()
        return k == 0.0

    # -- serialization ------------------------------------------------

    def to_json(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "linear":
            d["k"] = self.params[0]
        elif self.kind == "power":
            d["c"], d["p"] = self.params
        elif self.kind == "saturating":
            d["c"], d["theta"] = self.params
        elif self.kind == "piecewise":
            d["knots"] = [[r, v] for r, v in self.params[0]]
        elif self.kind == "compose":
            d["outer"] = self.children[0].to_json()
            d["inner"] = self.children[1].to_json()
        elif self.kind in ("sum", "max", "min"):
            d["terms"] = [c.to_json() for c in self.children]
        elif self.kind == "id_minus":
            d["eta"] = self.children[0].to_json()
        elif self.kind == "inverse":
            d["of"] = self.children[0].to_json()
        if self.cls is not None:
            d["cls"] = self.cls
        return d

    @staticmethod
    def from_json(d: dict) -> "ComparisonFunction":
        if not isinstance(d, dict) or "kind" not in d:
            raise InvalidComparisonFunction(f"not a comparison-function object: {d!r}")
        kind = d["kind"]
        cls = d.get("cls")
        if kind == "zero":
            return zero()
        if kind == "identity":
            return identity()
        if kind == "linear":
            return linear(d["k"], cls=cls)
        if kind == "power":
            return power(d["c"], d["p"], cls=cls)
        if kind == "saturating":
            return saturating(d["c"], d["theta"], cls=cls)
        if kind == "piecewise":
            return piecewise([(r, v) for r, v in d["knots"]], cls=cls)
        if kind == "compose":
            return compose(ComparisonFunction.from_json(d["outer"]),
                           ComparisonFunction.from_json(d["inner"]), cls=cls)
        if kind in ("sum", "max", "min"):
            terms = [ComparisonFunction.from_json(t) for t in d["terms"]]
            ctor = {"sum": fsum, "max": fmax, "min": fmin}[kind]
            return ctor(terms, cls=cls)
        if kind == "id_minus":
            return id_minus(ComparisonFunction.from_json(d["eta"]), cls=cls)
        if kind == "inverse":
            return inverse(ComparisonFunction.from_json(d["of"]), cls=cls)
        raise InvalidComparisonFunction(f"unknown kind {kind!r}")


def _eval(f: ComparisonFunction, r: float) -> float:
    k = f.kind
    if k == "zero":
        return 0.0
    if k == "identity":
        return r
    if k == "linear":
        return f.params[0] * r
    if k == "power":
        c, p = f.params
        return c * r ** p
    if k == "saturating":
        c, theta = f.params
        return 0.0 if r == 0.0 else c * r / (r + theta)
    if k == "piecewise":
        return _eval_piecewise(f.params[0], r)
    if k == "compose":
        return _eval(f.children[0], _eval(f.children[1], r))
    if k == "sum":
        return sum(_eval(c, r) for c in f.children)
    if k == "max":
        return max(_eval(c, r) for c in f.children)
    if k == "min":
        return min(_eval(c, r) for c in f.children)
    if k == "id_minus":
        return r - _eval(f.children[0], r)
    if k == "inverse":
        return _eval_inverse(f.children[0], r)
    raise InvalidComparisonFunction(f"unknown kind {k!r}")


def _eval_piecewise(knots, r: float) -> float:
    # knots are sorted (r, v) pairs starting at (0, 0); linear between
    # knots, last-segment slope beyond the final knot.
    if r <= knots[0][0] or len(knots) == 1:
        return knots[0][1]
    for (r0, v0), (r1, v1) in zip(knots, knots[1:]):
        if r <= r1:
            t = (r - r0) / (r1 - r0)
            return v0 + t * (v1 - v0)
    (r0, v0), (r1, v1) = knots[-2], knots[-1]
    slope = (v1 - v0) / (r1 - r0) if r1 > r0 else 0.0
    return v1 + slope * (r - r1)


def _eval_inverse(f: ComparisonFunction, y: float) -> float:
    """Preimage of y under a strictly increasing f, by bisection.

    The bracket [0, R] is doubled adaptively until f(R) >= y.
    """
    if y == 0.0:
        return 0.0
    hi = 1.0
    while _eval(f, hi) < y:
        hi *= 2.0
        if hi > _INV_RMAX_CAP:
            raise InverseRangeError(
                f"could not bracket preimage of {y} within [0, {_INV_RMAX_CAP}]")
    lo = 0.0
    # relative bracket width: the preimage can sit many orders of
    # magnitude below 1 when f is flat near the origin
    while hi - lo > _INV_TOL * hi and hi > 1e-280:
        mid = 0.5 * (lo + hi)
        if _eval(f, mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- constructors -----------------------------------------------------

def zero() -> ComparisonFunction:
    return ComparisonFunction("zero", cls=None)


def identity() -> ComparisonFunction:
    return ComparisonFunction("identity", cls="Kinf")


def linear(k: float, cls: Optional[str] = None) -> ComparisonFunction:
    if k < 0:
        raise InvalidComparisonFunction(f"linear gain must be nonnegative, got {k}")
    if cls is None:
        cls = "Kinf" if k > 0 else None
    return ComparisonFunction("linear", (float(k),), cls=cls)


def power(c: float, p: float, cls: Optional[str] = None) -> ComparisonFunction:
    if c < 0 or p <= 0:
        raise InvalidComparisonFunction(f"power leaf needs c >= 0, p > 0, got c={c}, p={p}")
    if cls is None:
        cls = "Kinf" if c > 0 else None
    return ComparisonFunction("power", (float(c), float(p)), cls=cls)


def saturating(c: float, theta: float, cls: Optional[str] = None) -> ComparisonFunction:
    if c < 0 or theta <= 0:
        raise InvalidComparisonFunction(
            f"saturating leaf needs c >= 0, theta > 0, got c={c}, theta={theta}")
    if cls is None:
        cls = "K" if c > 0 else None  # bounded above by c, never Kinf
    return ComparisonFunction("saturating", (float(c), float(theta)), cls=cls)


def piecewise(knots, cls: Optional[str] = None) -> ComparisonFunction:
    pts = sorted((float(r), float(v)) for r, v in knots)
    if not pts or pts[0][0] > 0.0:
        pts.insert(0, (0.0, 0.0))
    if pts[0] != (0.0, 0.0):
        raise InvalidComparisonFunction("piecewise knots must start at (0, 0)")
    return ComparisonFunction("piecewise", (tuple(pts),), cls=cls)


def compose(outer: ComparisonFunction, inner: ComparisonFunction,
            cls: Optional[str] = None) -> ComparisonFunction:
    if cls is None and outer.cls == inner.cls:
        cls = outer.cls
    return ComparisonFunction("compose", (), (outer, inner), cls=cls)


def fsum(terms, cls: Optional[str] = None) -> ComparisonFunction:
    return ComparisonFunction("sum", (), tuple(terms), cls=cls)


def fmax(terms, cls: Optional[str] = None) -> ComparisonFunction:
    return ComparisonFunction("max", (), tuple(terms), cls=cls)


def fmin(terms, cls: Optional[str] = None) -> ComparisonFunction:
    return ComparisonFunction("min", (), tuple(terms), cls=cls)


def scale(c: float, f: ComparisonFunction) -> ComparisonFunction:
    """r -> c * f(r), as a compose node."""
    return compose(linear(c), f, cls=f.cls if c > 0 else None)


def id_minus(eta: ComparisonFunction, cls: Optional[str] = None) -> ComparisonFunction:
    """r -> r - eta(r).  Only meaningful when id - eta is increasing."""
    return ComparisonFunction("id_minus", (), (eta,), cls=cls)


def inverse(f: ComparisonFunction, cls: Optional[str] = None) -> ComparisonFunction:
    if f.cls not in ("K", "Kinf") and f.kind not in ("identity", "linear", "id_minus"):
        raise InvalidComparisonFunction(
            "inverse requires a tree whose tag implies strict monotonicity")
    return ComparisonFunction("inverse", (), (f,), cls=cls or f.cls)


# -- sampled class checks ---------------------------------------------

_DEFAULT_GRID = tuple(10.0 ** e for e in range(-6, 7))


def check_class_k(f: ComparisonFunction, rng=None, pairs: int = 1000,
                  r_max: float = 1e6) -> bool:
    """Sampled validation of a class-K tag: f(0) = 0 and strict growth.

    Returns False on the first violated pair.  This is evidence, not a
    proof; exact symbolic classification is out of scope.
    """
    import random
    if f(0.0) != 0.0:
        return False
    rnd = rng if rng is not None else random.Random(0)
    for _ in range(pairs):
        a = rnd.uniform(0.0, r_max)
        b = rnd.uniform(0.0, r_max)
        if a == b:
            continue
        lo, hi = (a, b) if a < b else (b, a)
        if not f(lo) < f(hi):
            return False
    return True


def _check_id_minus_increasing(eta: ComparisonFunction, grid=_DEFAULT_GRID):
    vals = [r - eta(r) for r in grid]
    for (r0, v0), (r1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if not v0 < v1:
            raise InvalidComparisonFunction(
                f"id - eta not increasing between r={r0} and r={r1}")


# -- derived constructions --------------------------------------------

def rho_from_eta(eta: ComparisonFunction) -> ComparisonFunction:
    """Return rho with (id + rho) = (id - eta)^{-1}.

    Requires eta and id - eta of class K-infinity (checked by sampling).
    The defining identity (id + rho) o (id - eta) = id then holds by
    construction; callers verify it on their own grids.
    """
    if eta.is_zero():
        return zero()
    _check_id_minus_increasing(eta)
    inv = inverse(id_minus(eta, cls="Kinf"))
    return compose(eta, inv, cls="Kinf")


def split_id_minus_eta(eta: ComparisonFunction):
    """Factor id - eta = (id - eta1) o (id - eta2) with eta2 = eta / 2."""
    if eta.is_zero():
        return zero(), zero()
    _check_id_minus_increasing(eta)
    eta2 = scale(0.5, eta)
    inv2 = inverse(id_minus(eta2, cls="Kinf"))
    eta1 = compose(eta2, inv2, cls="Kinf")
    return eta1, eta2


def lipschitz_lower_envelope(alpha: ComparisonFunction, L: float) -> ComparisonFunction:
    """Largest L-Lipschitz minorant construction rho(r) = inf_y alpha(y) + L|y - r|.

    Evaluated lazily per call on a geometric grid over [0, r + alpha(r)/L]
    followed by golden-section refinement; the minimizer is confined there
    because beyond it the penalty term alone exceeds the savings.
    """
    if L <= 0:
        raise InvalidComparisonFunction(f"Lipschitz bound must be positive, got {L}")

    return _LipschitzEnvelope(alpha, float(L))


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class _LipschitzEnvelope(ComparisonFunction):
    """Envelope wrapper; evaluates the infimum numerically.

    Subclasses ComparisonFunction so it can sit inside other trees; it
    serializes to a piecewise sample if needed.
    """

    def __init__(self, alpha: ComparisonFunction, L: float):
        object.__setattr__(self, "kind", "piecewise")
        object.__setattr__(self, "params", ((tuple([(0.0, 0.0)])),))
        object.__setattr__(self, "children", ())
        object.__setattr__(self, "cls", alpha.cls)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "L", L)

    def __call__(self, r: float) -> float:
        if r < 0:
            raise ValueError("domain is r >= 0")
        if r == 0.0:
            return 0.0
        alpha, L = self.alpha, self.L
        y_max = r + alpha(r) / L

        def obj(y):
            return alpha(y) + L * abs(y - r)

        # geometric grid plus y = 0 and y = r anchors
        n = 10_000
        best_y, best = r, obj(r)
        if obj(0.0) < best:
            best_y, best = 0.0, obj(0.0)
        lo_exp, hi_exp = math.log(max(y_max * 1e-8, 1e-300)), math.log(y_max)
        step = (hi_exp - lo_exp) / (n - 1)
        for i in range(n):
            y = math.exp(lo_exp + i * step)
            v = obj(y)
            if v < best:
                best_y, best = y, v
        # golden-section refinement around the grid minimizer
        h = max(y_max / n, best_y * 1e-3, 1e-12)
        a, b = max(0.0, best_y - h), min(y_max, best_y + h)
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc, fd = obj(c), obj(d)
        for _ in range(40):
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - _GOLDEN * (b - a)
                fc = obj(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GOLDEN * (b - a)
                fd = obj(d)
        best = min(best, fc, fd)
        return min(best, alpha(r))

    def to_json(self) -> dict:
        grid = [10.0 ** (e / 4.0) for e in range(-24, 25)]
        return piecewise([(0.0, 0.0)] + [(r, self(r)) for r in grid], cls=self.cls).to_json()


# -- KL functions -----------------------------------------------------

@dataclass(frozen=True)
class KLFunction:
    """beta(r, t) = g(r) * exp(-lam * t); exponential-in-t KL family.

    The default g is C * r (the exponential sub-family); a general
    class-K g is supported for fitted envelopes.
    """

    C: float = 1.0
    lam: float = 1.0
    g: Optional[ComparisonFunction] = field(default=None)

    def __post_init__(self):
        if self.C < 0 or self.lam <= 0:
            raise InvalidComparisonFunction(
                f"KL family needs C >= 0, lam > 0, got C={self.C}, lam={self.lam}")

    def __call__(self, r: float, t: float) -> float:
        if r < 0 or t < 0:
            raise ValueError("KL functions are defined on r, t >= 0")
        gr = self.g(r) if self.g is not None else self.C * r
        return gr * math.exp(-self.lam * t)

    def to_json(self) -> dict:
        d = {"kind": "kl_exp", "C": self.C, "lam": self.lam}
        if self.g is not None:
            d["g"] = self.g.to_json()
        return d

    @staticmethod
    def from_json(d: dict) -> "KLFunction":
        g = ComparisonFunction.from_json(d["g"]) if "g" in d else None
        return KLFunction(C=d.get("C", 1.0), lam=d["lam"], g=g)
