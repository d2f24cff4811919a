"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's own iteration code:
cycle means come from a brute-force DFS over simple cycles, Perron roots
from dense eigenvalue computation, and max-algebra powers from explicit
semiring matrix products.
"""

from __future__ import annotations

import numpy as np
import pytest

from smallgain import Finite, GainFamily, GainOperator, linear


# -- independent oracles ----------------------------------------------

def dfs_simple_cycles(adj: np.ndarray):
    """All simple cycles of the digraph with edge j -> i when adj[i, j] > 0,
    as index tuples, via depth-first search anchored at the smallest node."""
    n = adj.shape[0]
    # successors of node i are the nodes fed by i, i.e. {j : adj[j, i] > 0}
    edges = [[j for j in range(n) if adj[j, i] > 0] for i in range(n)]
    cycles = []

    def walk(start, node, path, on_path):
        for nxt in edges[node]:
            if nxt == start:
                cycles.append(tuple(path))
            elif nxt > start and not on_path[nxt]:
                on_path[nxt] = True
                walk(start, nxt, path + [nxt], on_path)
                on_path[nxt] = False

    for s in range(n):
        on = np.zeros(n, dtype=bool)
        on[s] = True
        walk(s, s, [s], on)
    return cycles


def max_cycle_mean_oracle(coeffs: np.ndarray) -> float:
    """Largest geometric cycle mean max_c (prod_{e in c} k_e)^(1/|c|)."""
    best = 0.0
    for cyc in dfs_simple_cycles(coeffs):
        prod = 1.0
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            prod *= coeffs[b, a]  # edge a -> b carries coeffs[b, a]
        best = max(best, prod ** (1.0 / len(cyc)))
    return best


def perron_root_oracle(coeffs: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvals(coeffs)).max())


def maxtimes_power_sup(coeffs: np.ndarray, k_max: int = 200) -> float:
    """sup_k ||M^k(1)||_inf in the (max, *) semiring, including k = 0."""
    def mt(a, b):
        return (a[:, :, None] * b[None, :, :]).max(axis=1)

    p = coeffs.copy()
    best = 1.0
    for _ in range(k_max):
        best = max(best, float(p.max()))
        if p.max() < 1e-16:
            break
        p = mt(p, coeffs)
    return best


# -- random family generation -----------------------------------------

def random_linear_coeffs(rng, n: int, density: float = 0.7) -> np.ndarray:
    """Random nonnegative coefficients, zero diagonal, guaranteed 2-cycle."""
    m = rng.uniform(0.2, 1.5, size=(n, n))
    m[rng.uniform(size=(n, n)) > density] = 0.0
    np.fill_diagonal(m, 0.0)
    m[0, 1] = max(m[0, 1], 0.3)
    m[1, 0] = max(m[1, 0], 0.3)
    return m


def coeffs_to_family(m: np.ndarray, mode: str) -> GainFamily:
    n = m.shape[0]
    entries = [[linear(m[i, j]) if m[i, j] > 0 else None for j in range(n)]
               for i in range(n)]
    return GainFamily(Finite.of(entries), mode)


def random_linear_operator(rng, n: int, mode: str, target_radius: float) -> GainOperator:
    """Random finite linear family rescaled to an exact oracle radius.

    Scaling every coefficient by t scales all cycle means (and the Perron
    root) by t, so the target is hit exactly per the respective oracle.
    """
    m = random_linear_coeffs(rng, n)
    r = max_cycle_mean_oracle(m) if mode == "max" else perron_root_oracle(m)
    m = m * (target_radius / r)
    return GainOperator(coeffs_to_family(m, mode))


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
