"""Extended envelope of a normalized submodular function.

The envelope is the support function of the extended polymatroid of f,
evaluated by sorting: order the coordinates of x nonincreasingly, walk
the induced 0-1 prefix chain, and read off marginal gains.  That greedy
vertex maximizes s . x over all n! candidates, so the envelope extends f
from the cube to all of R^n with n + 1 oracle calls per point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .oracles import SubmodularOracle

ENUMERATION_LIMIT = 8


def sort_permutation(x) -> np.ndarray:
    """Coordinate order with values nonincreasing; ties broken by smaller index."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point contains NaN or infinite coordinates")
    return np.argsort(-x, kind="stable")


def greedy_vertex(oracle: SubmodularOracle, order) -> np.ndarray:
    """Marginal-gain vector along the prefix chain of ``order``.

    Component order[i] holds f(chain_{i+1}) - f(chain_i); for submodular f
    this is a vertex of the extended polymatroid.
    """
    order = _check_order(oracle.n, order)
    chain = oracle.chain_values(order)
    sigma = np.empty(oracle.n)
    sigma[order] = np.diff(chain)
    return sigma


def chain_points(order) -> list:
    """Monotone 0-1 chain induced by ``order``: all-zeros up to all-ones."""
    order = np.asarray(order, dtype=int)
    n = order.size
    points = [np.zeros(n)]
    x = np.zeros(n)
    for j in order:
        x = x.copy()
        x[j] = 1.0
        points.append(x)
    return points


def chain_to_permutation(points) -> np.ndarray:
    """Inverse of :func:`chain_points`; rejects anything that is not a full chain."""
    pts = [np.asarray(p, dtype=float) for p in points]
    if not pts:
        raise ValueError("empty chain")
    n = pts[0].size
    if len(pts) != n + 1:
        raise ValueError(f"a full chain on n = {n} has {n + 1} points, got {len(pts)}")
    if np.any(pts[0] != 0.0):
        raise ValueError("chain must start at the all-zero point")
    order = np.empty(n, dtype=int)
    for i in range(n):
        diff = pts[i + 1] - pts[i]
        added = np.nonzero(diff)[0]
        if added.size != 1 or diff[added[0]] != 1.0:
            raise ValueError(f"chain step {i} does not add exactly one coordinate")
        order[i] = added[0]
    return order


def support_points(oracle: SubmodularOracle, order) -> list:
    """The n + 1 chain points of ``order`` paired with their oracle values."""
    order = _check_order(oracle.n, order)
    values = oracle.chain_values(order)
    return [(p, float(v)) for p, v in zip(chain_points(order), values)]


@dataclass
class EnvelopeEvaluation:
    """Envelope value at a point, the maximizing vertex, and its generating order."""

    value: float
    subgradient: np.ndarray
    order: np.ndarray


def envelope_eval(oracle: SubmodularOracle, x) -> EnvelopeEvaluation:
    """Envelope value and a subgradient at an arbitrary point of R^n."""
    x = np.asarray(x, dtype=float)
    if x.shape != (oracle.n,):
        raise ValueError(f"expected point of dimension {oracle.n}, got shape {x.shape}")
    order = sort_permutation(x)
    sigma = greedy_vertex(oracle, order)
    return EnvelopeEvaluation(float(sigma @ x), sigma, order)


def enumerate_vertices(oracle: SubmodularOracle, limit: int = ENUMERATION_LIMIT) -> list:
    """Greedy vertices of all n! orders (testing utility, guarded)."""
    if oracle.n > limit:
        raise CapacityError(f"vertex enumeration limited to n <= {limit}, got n = {oracle.n}")
    return [greedy_vertex(oracle, order) for order in itertools.permutations(range(oracle.n))]


def envelope_max_bruteforce(oracle: SubmodularOracle, x, limit: int = ENUMERATION_LIMIT) -> float:
    """max_s s . x over all greedy vertices, by enumeration (guarded)."""
    x = np.asarray(x, dtype=float)
    return max(float(s @ x) for s in enumerate_vertices(oracle, limit=limit))


def _check_order(n: int, order) -> np.ndarray:
    order = np.asarray(order, dtype=int)
    if order.shape != (n,) or sorted(order.tolist()) != list(range(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {order}")
    return order
