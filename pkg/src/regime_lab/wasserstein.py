"""p-Wasserstein distances and barycenters of 1-D empirical measures.

For measures with the same number of atoms the optimal coupling matches order
statistics, so the distance is an l_p mean of sorted-atom differences. Unequal
counts are handled by integrating the difference of the two step quantile
functions exactly over their merged breakpoints.

Internally distances are kept in p-th power form; the root is taken once on
the way out.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyMeasure, InstanceTooLarge, UnequalAtomCounts, UnsupportedOrder
from .measures import EmpiricalMeasure

ORACLE_MAX_ATOMS = 8


def _atoms(mu) -> np.ndarray:
    a = mu.atoms if isinstance(mu, EmpiricalMeasure) else np.sort(np.asarray(mu, dtype=float).ravel())
    if a.size == 0:
        raise EmptyMeasure("measure has no atoms")
    return a


def _check_order(p):
    if not p >= 1:
        raise UnsupportedOrder(f"Wasserstein order must be >= 1, got {p}")


def _abs_pow(d, p):
    d = np.abs(d)
    if p == 1:
        return d
    if p == 2:
        return d * d
    return d**p


def wasserstein_pow(mu, nu, p: float = 1) -> float:
    """``W_p(mu, nu) ** p``."""
    _check_order(p)
    a, b = _atoms(mu), _atoms(nu)
    if a.size == b.size:
        return float(np.mean(_abs_pow(a - b, p)))
    n, m = a.size, b.size
    # breakpoints i/n and j/m; on each piece both quantile functions are constant
    grid = np.union1d(np.arange(n + 1) / n, np.arange(m + 1) / m)
    widths = np.diff(grid)
    mids = 0.5 * (grid[:-1] + grid[1:])
    ia = np.minimum((mids * n).astype(np.int64), n - 1)
    ib = np.minimum((mids * m).astype(np.int64), m - 1)
    return float(np.sum(widths * _abs_pow(a[ia] - b[ib], p)))


def wasserstein_distance(mu, nu, p: float = 1) -> float:
    """p-Wasserstein distance between two empirical measures.

    ``mu`` and ``nu`` are :class:`EmpiricalMeasure` objects or raw atom
    sequences (sorted on entry).
    """
    return wasserstein_pow(mu, nu, p) ** (1.0 / p)


def ot_oracle(mu, nu, p: float = 1) -> float:
    """Exact discrete optimal transport by brute force, for testing.

    Equal atom counts: minimum over all permutation couplings (the extreme
    points of the uniform transport polytope). Unequal counts: each atom is
    replicated to a common count ``lcm(n, m)`` and the resulting assignment
    problem is solved exactly.
    """
    _check_order(p)
    a = np.asarray(mu.atoms if isinstance(mu, EmpiricalMeasure) else mu, dtype=float).ravel()
    b = np.asarray(nu.atoms if isinstance(nu, EmpiricalMeasure) else nu, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise EmptyMeasure("measure has no atoms")
    if a.size > ORACLE_MAX_ATOMS or b.size > ORACLE_MAX_ATOMS:
        raise InstanceTooLarge(f"oracle is limited to {ORACLE_MAX_ATOMS} atoms per measure")
    cost = np.abs(a[:, None] - b[None, :]) ** p
    n, m = a.size, b.size
    if n == m:
        rows = np.arange(n)
        best = min(cost[rows, perm].sum() for perm in itertools.permutations(range(n)))
        return float(best / n) ** (1.0 / p)
    lcm = n * m // math.gcd(n, m)
    big = np.repeat(np.repeat(cost, lcm // n, axis=0), lcm // m, axis=1)
    r, c = linear_sum_assignment(big)
    return float(big[r, c].sum() / lcm) ** (1.0 / p)


def barycenter_atoms(atom_matrix: np.ndarray, p: float = 1) -> np.ndarray:
    """Barycenter of the rows of an ``(M, N)`` sorted-atom matrix.

    Column medians for ``p=1`` (midpoint of the two central values when M is
    even), column means for ``p=2``.
    """
    if p == 1:
        out = np.median(atom_matrix, axis=0)
    elif p == 2:
        out = np.mean(atom_matrix, axis=0)
    else:
        raise UnsupportedOrder(f"barycenter supports p in {{1, 2}}, got {p}")
    return np.sort(out)


def wasserstein_barycenter(measures, p: float = 1) -> EmpiricalMeasure:
    if len(measures) == 0:
        raise EmptyMeasure("no measures to average")
    if isinstance(measures, np.ndarray):
        mat = measures
    else:
        sizes = {len(_atoms(m)) for m in measures}
        if len(sizes) != 1:
            raise UnequalAtomCounts(f"barycenter needs equal atom counts, got {sorted(sizes)}")
        mat = np.vstack([_atoms(m) for m in measures])
    return EmpiricalMeasure(barycenter_atoms(mat, p))
