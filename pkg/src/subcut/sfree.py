"""Convex sets whose interior avoids the target geometry.

For a hypograph target {(x, t): f(x) >= t} (level 1) or a superlevel
target {x: f(x) >= 0} (level 0), each set here is described by a convex
piecewise-linear function G through "G(x) <= level * t".  Points of the
target never lie strictly inside, which is exactly what intersection
cuts need.

Variants: the epigraph of an extended envelope, a lifted 0/1 split on a
single variable, the reverse-linearized set of a submodular-supermodular
difference, and relaxations keeping only the envelope facets of a subset
of coordinate orders (covers).
"""

from __future__ import annotations

import numpy as np

from .envelope import chain_to_permutation, enumerate_vertices, envelope_eval, greedy_vertex
from .errors import CapacityError
from .oracles import SSFunction, SubmodularOracle, _cube_bits

INTERIOR_TOL = 1e-7
COVER_LIMIT = 8

STRICT_INTERIOR = "strict_interior"
BOUNDARY = "boundary"
EXTERIOR = "exterior"


class SFreeSet:
    """Base: the set {(x, t): value(x) <= level * t}. level 0 makes t inert."""

    level = 1
    kind = "sfree"

    def value_and_subgradient(self, x):
        raise NotImplementedError

    def margin(self, x, t) -> float:
        """Positive inside, zero on the boundary, negative outside."""
        value, _ = self.value_and_subgradient(x)
        return self.level * float(t) - value


class EnvelopeEpigraph(SFreeSet):
    """Epigraph of the extended envelope of a submodular function."""

    kind = "env"

    def __init__(self, oracle: SubmodularOracle, level: int = 1):
        self.oracle = oracle
        self.level = int(level)
        self.n = oracle.n

    def value_and_subgradient(self, x):
        ev = envelope_eval(self.oracle, x)
        return ev.value, ev.subgradient


class LiftedSplit(SFreeSet):
    """The slab 0 <= x_j <= 1 lifted over all remaining coordinates."""

    kind = "split"
    level = 0

    def __init__(self, j: int, n: int):
        if not (0 <= j < n):
            raise ValueError(f"split index {j} outside 0..{n - 1}")
        self.j = int(j)
        self.n = int(n)

    def value_and_subgradient(self, x):
        x = np.asarray(x, dtype=float)
        xj = float(x[self.j])
        grad = np.zeros(self.n)
        # ties resolve to the lower face for determinism
        if -xj >= xj - 1.0:
            grad[self.j] = -1.0
            return -xj, grad
        grad[self.j] = 1.0
        return xj - 1.0, grad


class ReverseLinearized(SFreeSet):
    """Envelope of the submodular part minus a linearization of the removed part.

    With gamma a subgradient of the second part's envelope at the reference
    point, {(x, t): F1(x) - gamma . x <= level * t} avoids the target of
    f1 - f2.  gamma == 0 recovers the plain envelope epigraph.
    """

    kind = "ss"

    def __init__(self, f1: SubmodularOracle, gamma, level: int = 1):
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape != (f1.n,):
            raise ValueError(f"gamma has shape {gamma.shape}, expected ({f1.n},)")
        self.f1 = f1
        self.gamma = gamma
        self.level = int(level)
        self.n = f1.n

    def value_and_subgradient(self, x):
        x = np.asarray(x, dtype=float)
        ev = envelope_eval(self.f1, x)
        return ev.value - float(self.gamma @ x), ev.subgradient - self.gamma


class CoverRelaxation(SFreeSet):
    """Keep only the envelope facets generated by the given coordinate orders.

    Hypograph-free exactly when the orders' prefix chains cover the cube;
    maximal exactly when no order can be dropped (minimal cover).
    """

    kind = "cover"
    level = 1

    def __init__(self, oracle: SubmodularOracle, orders):
        orders = [np.asarray(o, dtype=int) for o in orders]
        if not orders:
            raise ValueError("a cover relaxation needs at least one order")
        self.oracle = oracle
        self.orders = orders
        self.n = oracle.n
        self.vertices = np.array([greedy_vertex(oracle, o) for o in orders])

    def value_and_subgradient(self, x):
        x = np.asarray(x, dtype=float)
        scores = self.vertices @ x
        k = int(np.argmax(scores))
        return float(scores[k]), self.vertices[k].copy()


def build_reverse_linearized(ss: SSFunction, x_ref) -> SFreeSet:
    """S-free set for f1 - f2 anchored at x_ref.

    The removed part is replaced by the linearization at x_ref given by an
    envelope subgradient.  When f2 is identically zero this degenerates to
    the plain envelope epigraph of f1.
    """
    x_ref = np.asarray(x_ref, dtype=float)
    if ss.f2.trivially_zero:
        return EnvelopeEpigraph(ss.f1, level=ss.level)
    gamma = envelope_eval(ss.f2, x_ref).subgradient
    return ReverseLinearized(ss.f1, gamma, level=ss.level)


def interiority(sfree: SFreeSet, x, t, tol: float = INTERIOR_TOL):
    """Classify (x, t) against the set; returns (label, margin)."""
    margin = sfree.margin(x, t)
    if margin > tol:
        return STRICT_INTERIOR, margin
    if margin < -tol:
        return EXTERIOR, margin
    return BOUNDARY, margin


# ---------------------------------------------------------------------------
# covers of the cube by prefix chains


def _chain_masks(order) -> set:
    masks = {0}
    m = 0
    for j in order:
        m |= 1 << int(j)
        masks.add(m)
    return masks


def is_cover(n: int, orders) -> bool:
    """Do the prefix chains of ``orders`` visit every binary point? Guarded."""
    if n > COVER_LIMIT:
        raise CapacityError(f"cover check limited to n <= {COVER_LIMIT}, got n = {n}")
    visited = set()
    for order in orders:
        visited |= _chain_masks(order)
    return len(visited) == (1 << n)


def is_minimal_cover(n: int, orders) -> bool:
    """A cover where dropping any single order breaks coverage."""
    orders = list(orders)
    if not is_cover(n, orders):
        return False
    for k in range(len(orders)):
        if is_cover(n, orders[:k] + orders[k + 1 :]):
            return False
    return True


# ---------------------------------------------------------------------------
# brute-force freeness


def verify_free_bruteforce(sfree: SFreeSet, target, tol: float = INTERIOR_TOL) -> bool:
    """No point of the target's geometry lies strictly inside the set.

    Hypograph targets (level 1) are checked at (x, f(x)) for every binary
    x; superlevel targets (level 0) at every sign-feasible binary x.
    """
    if isinstance(target, SSFunction):
        n, level, value = target.n, target.level, target.value
    else:
        n, level, value = target.n, 1, target.value
    if n > 14:
        raise CapacityError(f"freeness check limited to n <= 14, got n = {n}")
    for x in _cube_bits(n):
        fx = value(x)
        if level == 0 and fx < -1e-12:
            continue
        if sfree.margin(x, fx) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# the three-chain relaxation on n = 3


THREE_CHAINS = (
    ((0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)),
    ((0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 1, 1)),
    ((0, 0, 0), (1, 0, 0), (1, 0, 1), (1, 1, 1)),
)


def three_chain_relaxation(oracle: SubmodularOracle) -> CoverRelaxation:
    """Relaxation keeping three of the six facets on n = 3.

    The three chains form a minimal cover, so the result is hypograph-free
    and maximal while using half the facets of the full envelope epigraph.
    """
    if oracle.n != 3:
        raise ValueError(f"three-chain relaxation needs n = 3, got n = {oracle.n}")
    orders = [chain_to_permutation([np.array(p, dtype=float) for p in c]) for c in THREE_CHAINS]
    return CoverRelaxation(oracle, orders)


def containment_witness(relaxation: CoverRelaxation, tol: float = 1e-9):
    """Point inside the relaxation but outside the full envelope epigraph.

    Searches by maximizing the violation of each dropped facet over a box;
    returns (x, t) or None when the kept facets already imply the rest
    (degenerate oracles).
    """
    from . import simplex

    oracle = relaxation.oracle
    n = oracle.n
    kept = relaxation.vertices
    dropped = []
    for s in enumerate_vertices(oracle):
        if not np.any(np.all(np.abs(kept - s) <= 1e-12, axis=1)):
            dropped.append(s)
    if not dropped:
        return None

    box_lo, box_hi = -1.0, 2.0
    t_r = float(np.abs(kept).sum(axis=1).max(initial=0.0)) * max(abs(box_lo), abs(box_hi)) + 1.0
    rows = np.hstack([kept, -np.ones((kept.shape[0], 1))])
    for s_d in dropped:
        model = simplex.LpModel(
            sense="max",
            objective=np.append(s_d, -1.0),
            rows=rows,
            row_senses=["<="] * kept.shape[0],
            rhs=np.zeros(kept.shape[0]),
            lower=np.append(np.full(n, box_lo), -t_r),
            upper=np.append(np.full(n, box_hi), t_r),
        )
        sol = simplex.solve(model)
        if sol.status == simplex.OPTIMAL and sol.objective > tol:
            return sol.x[:n].copy(), float(sol.x[n])
    return None


def maximality_diagnostic(relaxation: CoverRelaxation, tol: float = 1e-9) -> bool:
    """Each kept facet carries a binary graph point lying on no other kept facet.

    Exact facet/point incidence on n <= 5; a diagnostic for non-degenerate
    oracles, not a production path (coinciding facets fail it by design).
    """
    oracle = relaxation.oracle
    n = oracle.n
    if n > 5:
        raise CapacityError(f"maximality diagnostic limited to n <= 5, got n = {n}")
    kept = relaxation.vertices
    points = _cube_bits(n)
    values = np.array([oracle.value(x) for x in points])
    scores = kept @ points.T  # (orders, 2^n)
    on_facet = np.abs(scores - values[None, :]) <= tol
    for p in range(kept.shape[0]):
        others = np.delete(np.arange(kept.shape[0]), p)
        exclusive = on_facet[p] & ~np.any(on_facet[others], axis=0)
        if not np.any(exclusive):
            return False
    return True
