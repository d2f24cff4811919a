"""Pool-adjacent-violators isotonic regression and monotone envelopes."""

from __future__ import annotations

import numpy as np

__all__ = ["pav_nondecreasing", "upper_envelope_knots"]


def pav_nondecreasing(values, weights=None) -> np.ndarray:
    """L2 isotonic (nondecreasing) fit via pool-adjacent-violators."""
    y = np.asarray(values, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    # blocks of (mean, weight, count)
    means, wts, cnts = [], [], []
    for yi, wi in zip(y, w):
        means.append(yi)
        wts.append(wi)
        cnts.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, c2 = means.pop(), wts.pop(), cnts.pop()
            m1, w1, c1 = means.pop(), wts.pop(), cnts.pop()
            wt = w1 + w2
            means.append((m1 * w1 + m2 * w2) / wt)
            wts.append(wt)
            cnts.append(c1 + c2)
    out = np.empty_like(y)
    i = 0
    for m, c in zip(means, cnts):
        out[i:i + c] = m
        i += c
    return out


def upper_envelope_knots(xs, ys):
    """Knots of the minimal nondecreasing upper envelope of (x, y) points.

    Points are sorted by x; the envelope at x is the running maximum of y,
    so every observation lies on or below it.
    """
    order = np.argsort(xs, kind="stable")
    xs = np.asarray(xs, dtype=float)[order]
    ys = np.asarray(ys, dtype=float)[order]
    env = np.maximum.accumulate(ys)
    knots = []
    for x, v in zip(xs, env):
        if knots and knots[-1][0] == x:
            knots[-1] = (x, max(knots[-1][1], v))
        else:
            knots.append((float(x), float(v)))
    return knots
