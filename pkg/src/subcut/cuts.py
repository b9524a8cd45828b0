"""Intersection cuts from corner relaxations and level-free sets.

Along each corner ray the distance-to-boundary profile
zeta(eta) = level * (t + eta r_t) - G(x + eta r_x) is concave piecewise
linear and positive at the apex.  A hybrid discrete Newton search finds
its root (the step length); the reciprocal step lengths then define a
valid inequality in the ray multipliers that is mapped back to the
original variables through the affine forms carried by the rays.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .envelope import envelope_eval
from .errors import CapacityError, SeparationBudget
from .oracles import SSFunction, _cube_bits
from .sfree import STRICT_INTERIOR, SFreeSet, interiority

NEWTON_START = 0.2
NEWTON_MAX_STEPS = 500
ETA_INF = 1e9
ROOT_TOL = 1e-9
MIN_STEP = 1e-6
EFFICACY_MIN = 1e-4
DYNAMIC_RANGE_MAX = 1e8
CUT_TOL = 1e-7

logger = logging.getLogger(__name__)


def _log_cut(cut: "IntersectionCut") -> "IntersectionCut":
    logger.info(
        "CUT kind=%s rays=%d inf_steps=%d efficacy=%.6g newton_iters=%d",
        cut.kind, cut.nrays, cut.infinite_steps, cut.efficacy, cut.newton_iters,
    )
    return cut


@dataclass
class ZetaFunction:
    """Boundary-distance profile of one ray against one set."""

    sfree: SFreeSet
    apex_x: np.ndarray
    apex_t: float
    ray_x: np.ndarray
    ray_t: float

    def eval(self, eta: float):
        """Value and a subgradient-based slope estimate at eta."""
        x = self.apex_x + eta * self.ray_x
        value, grad = self.sfree.value_and_subgradient(x)
        lvl = self.sfree.level
        zeta = lvl * (self.apex_t + eta * self.ray_t) - value
        slope = lvl * self.ray_t - float(grad @ self.ray_x)
        return zeta, slope


def zeta_eval(zf: ZetaFunction, eta: float):
    return zf.eval(eta)


class StepResult(NamedTuple):
    eta: float
    iterations: int


def step_length(
    zf: ZetaFunction,
    start: float = NEWTON_START,
    max_steps: int = NEWTON_MAX_STEPS,
    eta_inf: float = ETA_INF,
    tol: float = ROOT_TOL,
) -> StepResult:
    """Root of zeta on (0, +inf], by safeguarded discrete Newton.

    If the ray still sees positive margin at eta_inf the step is +inf.
    Negative slope estimates give Newton steps; flat or rising stretches
    double eta.  Raises SeparationBudget after max_steps evaluations.
    """
    value0, _ = zf.eval(0.0)
    if value0 <= 0.0:
        raise ValueError(f"apex margin {value0} not positive; apex must be strictly interior")
    far, _ = zf.eval(eta_inf)
    if far > 0.0:
        return StepResult(math.inf, 0)
    eta = start
    for it in range(1, max_steps + 1):
        value, slope = zf.eval(eta)
        if abs(value) <= tol:
            return StepResult(eta, it)
        if slope < 0.0:
            eta = eta - value / slope
        else:
            eta = 2.0 * eta
    raise SeparationBudget(f"no root within {max_steps} steps (eta = {eta:.6g})")


@dataclass
class IntersectionCut:
    """Inequality coef . z >= rhs over the model columns."""

    coef: np.ndarray
    rhs: float
    kind: str
    efficacy: float
    steps: list = field(default_factory=list)
    newton_iters: int = 0
    infinite_steps: int = 0

    @property
    def nrays(self) -> int:
        return len(self.steps)

    def violation(self, z) -> float:
        return self.rhs - float(self.coef @ np.asarray(z, dtype=float))

    def satisfied(self, z, tol: float = CUT_TOL) -> bool:
        return self.violation(z) <= tol


def intersection_cut(
    corner,
    sfree: SFreeSet,
    kind: str = None,
    start: float = NEWTON_START,
    max_steps: int = NEWTON_MAX_STEPS,
    eta_inf: float = ETA_INF,
    root_tol: float = ROOT_TOL,
    interior_tol: float = None,
    min_step: float = MIN_STEP,
    efficacy_min: float = EFFICACY_MIN,
    range_max: float = DYNAMIC_RANGE_MAX,
):
    """Build the intersection cut of a projected corner with an S-free set.

    Returns None when no usable cut exists: apex not strictly interior,
    all steps infinite, a step below the near-boundary floor, the step
    search out of budget, or the assembled cut failing the efficacy or
    dynamic-range filters.
    """
    if corner.apex_x is None:
        raise ValueError("corner has no (x, t) projection; project it first")
    kwargs = {} if interior_tol is None else {"tol": interior_tol}
    label, _ = interiority(sfree, corner.apex_x, corner.apex_t, **kwargs)
    if label != STRICT_INTERIOR:
        return None

    steps = []
    newton_total = 0
    for ray in corner.rays:
        zf = ZetaFunction(sfree, corner.apex_x, corner.apex_t, ray.x_dir, ray.t_dir)
        try:
            res = step_length(zf, start=start, max_steps=max_steps, eta_inf=eta_inf, tol=root_tol)
        except SeparationBudget:
            return None
        if math.isfinite(res.eta) and res.eta < min_step:
            return None  # apex numerically on the boundary; skip the cut
        steps.append(res.eta)
        newton_total += res.iterations

    finite = [k for k, e in enumerate(steps) if math.isfinite(e)]
    if not finite:
        return None
    ncols = corner.rays[0].eta_coef.size
    coef = np.zeros(ncols)
    rhs = 1.0
    for k in finite:
        ray = corner.rays[k]
        coef += ray.eta_coef / steps[k]
        rhs -= ray.eta_off / steps[k]

    norm = float(np.linalg.norm(coef))
    if norm <= 1e-12:
        return None
    mags = np.abs(coef[np.abs(coef) > 1e-12])
    if mags.size and mags.max() / mags.min() > range_max:
        return None
    efficacy = (rhs - float(coef @ corner.apex)) / norm
    if efficacy < efficacy_min:
        return None
    return _log_cut(IntersectionCut(
        coef=coef,
        rhs=rhs,
        kind=kind or sfree.kind,
        efficacy=efficacy,
        steps=steps,
        newton_iters=newton_total,
        infinite_steps=len(steps) - len(finite),
    ))


def gradient_cut(ss: SSFunction, x_ref, t_ref: float = 0.0, lift=None, tol: float = 1e-9):
    """Outer-approximation cut for a purely supermodular target (f1 == 0).

    With gamma an envelope subgradient of f2 at the reference point, every
    target point satisfies gamma . x + level * t <= 0.  Returns None when
    the reference point does not violate that inequality (nothing to cut)
    or the subgradient vanishes.
    """
    if not ss.f1.trivially_zero:
        raise ValueError("gradient cut requires the submodular part to be identically zero")
    x_ref = np.asarray(x_ref, dtype=float)
    gamma = envelope_eval(ss.f2, x_ref).subgradient
    violation = float(gamma @ x_ref) + ss.level * float(t_ref)
    if violation <= tol:
        return None
    if lift is None:
        coef = np.append(-gamma, -float(ss.level))
    else:
        coef = np.zeros(lift.ncols)
        coef[lift.x_cols] = -gamma
        coef[lift.t_col] = -float(ss.level)
    norm = float(np.linalg.norm(coef))
    if norm <= 1e-12:
        return None
    return _log_cut(IntersectionCut(coef=coef, rhs=0.0, kind="grad", efficacy=violation / norm))


# ---------------------------------------------------------------------------
# brute-force validity


def _eta_bounds_in_t(corner, z, t_col, tol):
    """Range of t keeping z (all else fixed) inside the corner; (lo, hi)."""
    lo, hi = -math.inf, math.inf
    for ray in corner.rays:
        a = float(ray.eta_coef[t_col])
        rest = float(ray.eta_coef @ z) - a * float(z[t_col]) + ray.eta_off
        if abs(a) <= 1e-14:
            if rest < -tol:
                return math.inf, -math.inf  # empty
            continue
        bound = -rest / a
        if a > 0:
            lo = max(lo, bound)
        else:
            hi = min(hi, bound)
    return lo, hi


def validate_cut_bruteforce(cut: IntersectionCut, target, lift, corner=None, tol: float = CUT_TOL) -> bool:
    """Check the cut against every binary point on the target's side.

    For each binary x the relevant t values form an interval: bounded above
    by f(x) for hypograph targets, unconstrained for superlevel targets
    (where only sign-feasible x count), and clipped to the corner when one
    is given.  The cut is affine in t, so only the worse endpoint needs
    evaluating; an empty interval exempts the point, and a cut leaning on
    an unbounded t direction fails.  Guarded at n <= 12.
    """
    if isinstance(target, SSFunction):
        n, level = target.n, target.level
        vals = target.f1.values_on_cube() - target.f2.values_on_cube()
    else:
        n, level = target.n, 1
        vals = target.values_on_cube()
    if n > 12:
        raise CapacityError(f"cut validation limited to n <= 12, got n = {n}")

    bits = _cube_bits(n)
    z_pts = np.zeros((bits.shape[0], lift.ncols))
    z_pts[:, lift.x_cols] = bits
    for support, col in lift.y_cols.items():
        z_pts[:, col] = bits[:, sorted(support)].prod(axis=1)

    if level == 1:
        cap = vals
    else:
        keep = vals >= -1e-12
        z_pts = z_pts[keep]
        cap = np.full(z_pts.shape[0], math.inf)
    if z_pts.shape[0] == 0:
        return True

    # t-interval each point may occupy inside the corner (whole line if none)
    t_lo = np.full(z_pts.shape[0], -math.inf)
    t_hi = np.full(z_pts.shape[0], math.inf)
    if corner is not None:
        for ray in corner.rays:
            a = float(ray.eta_coef[lift.t_col])
            rest = z_pts @ ray.eta_coef + ray.eta_off  # t entries are zero here
            if abs(a) <= 1e-14:
                t_lo[rest < -tol] = math.inf  # line misses the corner entirely
            elif a > 0:
                np.maximum(t_lo, -rest / a, out=t_lo)
            else:
                np.minimum(t_hi, -rest / a, out=t_hi)
    t_hi = np.minimum(t_hi, cap)
    alive = t_lo <= t_hi + tol
    if not alive.any():
        return True

    a_t = float(cut.coef[lift.t_col])
    base = z_pts @ cut.coef
    if abs(a_t) <= 1e-12:
        flagged = alive & (base < cut.rhs - tol)
        probe = np.minimum(np.maximum(t_lo, 0.0), t_hi)
    else:
        worst = t_lo if a_t > 0 else t_hi
        if np.any(alive & np.isinf(worst)):
            return False  # cut leans on an unbounded t direction
        flagged = alive & (base + a_t * worst < cut.rhs - tol)
        probe = worst
    for k in np.flatnonzero(flagged):
        if _reachable(corner, z_pts[k], lift.t_col, float(probe[k])):
            return False
    return True


def _reachable(corner, z, t_col, t_val) -> bool:
    """Whether z with its t entry set to t_val really lies in the corner.

    The eta forms are necessary conditions; when the corner has fewer rays
    than dimensions (equality rows ate some logicals) the point must also
    reconstruct from the apex, or it sits off the corner's affine hull.
    """
    if corner is None or math.isinf(t_val):
        return True
    if corner.nrays == corner.apex.size:
        return True
    probe = np.array(z, dtype=float)
    probe[t_col] = t_val
    recon = corner.apex.copy()
    for ray in corner.rays:
        recon = recon + (float(ray.eta_coef @ probe) + ray.eta_off) * ray.direction
    return bool(np.max(np.abs(recon - probe)) <= 1e-6 * (1.0 + np.max(np.abs(probe))))
