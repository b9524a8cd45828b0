"""Dense bounded-variable primal simplex.

Two phases with artificial columns, Dantzig pricing with a switch to
Bland's rule after a budget of degenerate pivots, and an explicitly
maintained basis inverse.  The optimal basis is kept on the solution so
a corner polyhedron (apex plus one ray per nonbasic variable) can be
extracted and handed to the cut machinery.

Row conventions: equality rows get no slack; <= rows get a slack with
coefficient +1; >= rows get a surplus with coefficient -1.  Slack and
surplus variables live in [0, +inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-7
COST_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGEN_TOL = 1e-10
REFACTOR_EVERY = 100

ROW_SENSES = ("<=", ">=", "=")


@dataclass
class LpModel:
    """Dense LP: optimize objective . z subject to rows and variable bounds."""

    sense: str
    objective: np.ndarray
    rows: np.ndarray
    row_senses: list
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    names: list = None

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        self.objective = np.asarray(self.objective, dtype=float)
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.size == 0:
            self.rows = self.rows.reshape(0, self.objective.size)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        n = self.objective.size
        if self.rows.shape[1] != n:
            raise ValueError(f"rows have {self.rows.shape[1]} columns, objective has {n}")
        if len(self.row_senses) != self.rows.shape[0] or self.rhs.size != self.rows.shape[0]:
            raise ValueError("row count mismatch between rows, senses and rhs")
        for s in self.row_senses:
            if s not in ROW_SENSES:
                raise ValueError(f"unknown row sense {s!r}")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bound arrays must match the column count")
        if np.any(self.lower > self.upper):
            raise ValueError("some lower bound exceeds its upper bound")
        if not np.all(np.isfinite(self.rows)) or not np.all(np.isfinite(self.rhs)):
            raise ValueError("row data must be finite")
        if self.names is None:
            self.names = [f"z{j}" for j in range(n)]

    @property
    def ncols(self) -> int:
        return self.objective.size

    @property
    def nrows(self) -> int:
        return self.rows.shape[0]

    def with_extra_rows(self, rows, senses, rhs) -> "LpModel":
        """Copy of the model with rows appended (used by the cut loop)."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        return LpModel(
            self.sense,
            self.objective.copy(),
            np.vstack([self.rows, rows]),
            list(self.row_senses) + list(senses),
            np.concatenate([self.rhs, np.atleast_1d(rhs)]),
            self.lower.copy(),
            self.upper.copy(),
            list(self.names),
        )


@dataclass
class LpSolution:
    status: str
    x: np.ndarray = None
    objective: float = None
    iterations: int = 0
    basis: np.ndarray = None
    _state: object = None


@dataclass
class CornerRay:
    """One feasible edge direction of the corner relaxation.

    ``direction`` is the movement of the structural variables per unit of
    the nonbasic displacement eta; eta itself is the affine function
    eta(z) = eta_coef . z + eta_off of the structural variables, which is
    what lets a cut stated in ray multipliers be mapped back.  The x/t
    split is filled in by the model layer's projection.
    """

    column: int
    kind: str
    direction: np.ndarray
    eta_coef: np.ndarray
    eta_off: float
    x_dir: np.ndarray = None
    t_dir: float = None


@dataclass
class CornerPolyhedron:
    """Apex and rays of the LP basis relaxation, in structural coordinates."""

    apex: np.ndarray
    rays: list
    apex_x: np.ndarray = None
    apex_t: float = None

    @property
    def nrays(self) -> int:
        return len(self.rays)


# column kind codes
_KIND_STRUCT = 0
_KIND_SLACK = 1
_KIND_SURPLUS = 2
_KIND_ARTIFICIAL = 3

# placement codes
_BASIC = 0
_AT_LOWER = 1
_AT_UPPER = 2
_FREE = 3


class _BoundedSimplex:
    def __init__(self, model: LpModel, max_iters=None):
        self.model = model
        m, n = model.nrows, model.ncols
        self.m = m
        self.nstruct = n

        kinds = [np.full(n, _KIND_STRUCT)]
        lo = [model.lower.astype(float)]
        hi = [model.upper.astype(float)]
        slack_row = [np.full(n, -1)]

        ext_cols = []
        for i, s in enumerate(model.row_senses):
            if s == "=":
                continue
            col = np.zeros(m)
            col[i] = 1.0 if s == "<=" else -1.0
            ext_cols.append(col)
            kinds.append(np.array([_KIND_SLACK if s == "<=" else _KIND_SURPLUS]))
            lo.append(np.array([0.0]))
            hi.append(np.array([math.inf]))
            slack_row.append(np.array([i]))
        blocks = [model.rows] + ([np.column_stack(ext_cols)] if ext_cols else [])
        self.A = np.hstack(blocks) if m else np.zeros((0, n))
        self.kinds = np.concatenate(kinds)
        self.lo = np.concatenate(lo)
        self.hi = np.concatenate(hi)
        self.slack_row = np.concatenate(slack_row).astype(int)
        self.N = self.kinds.size
        if max_iters is None:
            max_iters = max(5000, 50 * (m + self.N))
        self.max_iters = max_iters
        self.iterations = 0

        # internal objective is always minimized
        sign = -1.0 if model.sense == "max" else 1.0
        self.cost = np.concatenate([sign * model.objective, np.zeros(self.N - n)])

    # -- setup ------------------------------------------------------------

    def _initial_point(self):
        val = np.zeros(self.N)
        where = np.full(self.N, _AT_LOWER)
        for j in range(self.N):
            if np.isfinite(self.lo[j]):
                val[j] = self.lo[j]
                where[j] = _AT_LOWER
            elif np.isfinite(self.hi[j]):
                val[j] = self.hi[j]
                where[j] = _AT_UPPER
            else:
                val[j] = 0.0
                where[j] = _FREE
        return val, where

    def _install_basis(self, val, where):
        """One basic column per row: reuse slack/surplus when its sign fits,
        otherwise append an artificial column."""
        m = self.m
        resid = self.model.rhs - self.A @ val
        basis = np.full(m, -1)
        art_cols = []
        slack_of_row = {int(self.slack_row[j]): j for j in range(self.N) if self.slack_row[j] >= 0}
        for i in range(m):
            j = slack_of_row.get(i)
            if j is not None:
                coef = self.A[i, j]
                v = resid[i] / coef
                if v >= 0.0:
                    basis[i] = j
                    val[j] = v
                    where[j] = _BASIC
                    continue
            art_cols.append((i, 1.0 if resid[i] >= 0 else -1.0, abs(resid[i])))

        for i, coef, v in art_cols:
            col = np.zeros(m)
            col[i] = coef
            self.A = np.hstack([self.A, col[:, None]])
            self.kinds = np.append(self.kinds, _KIND_ARTIFICIAL)
            self.lo = np.append(self.lo, 0.0)
            self.hi = np.append(self.hi, math.inf)
            self.slack_row = np.append(self.slack_row, i)
            self.cost = np.append(self.cost, 0.0)
            val = np.append(val, v)
            where = np.append(where, _BASIC)
            basis[i] = self.N
            self.N += 1

        self.val = val
        self.where = where
        self.basis = basis
        self._refactor()
        return len(art_cols)

    def _refactor(self):
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
            return
        try:
            self.Binv = np.linalg.inv(self.A[:, self.basis])
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"singular basis during refactorization: {exc}") from exc
        nb = self.val.copy()
        nb[self.basis] = 0.0
        self.val[self.basis] = self.Binv @ (self.model.rhs - self.A @ nb)

    # -- core loop ---------------------------------------------------------

    def _entering(self, d, allow, bland):
        eligible = np.zeros(self.N, dtype=bool)
        fixed = self.lo == self.hi
        eligible |= (self.where == _AT_LOWER) & ~fixed & (d < -COST_TOL)
        eligible |= (self.where == _AT_UPPER) & ~fixed & (d > COST_TOL)
        eligible |= (self.where == _FREE) & (np.abs(d) > COST_TOL)
        eligible &= allow
        idx = np.nonzero(eligible)[0]
        if idx.size == 0:
            return -1
        if bland:
            return int(idx[0])
        return int(idx[np.argmax(np.abs(d[idx]))])

    def _iterate(self, cost, allow):
        m = self.m
        degen_budget = 3 * (m + self.N)
        degen = 0
        bland = False
        since_refactor = 0
        while True:
            if self.iterations >= self.max_iters:
                raise NumericError(
                    f"simplex iteration cap {self.max_iters} reached "
                    f"(m={m}, n={self.N}, degenerate={degen})"
                )
            y = cost[self.basis] @ self.Binv if m else np.zeros(0)
            d = cost - (y @ self.A if m else 0.0)
            j = self._entering(d, allow, bland)
            if j < 0:
                return OPTIMAL
            delta = 1.0
            if self.where[j] == _AT_UPPER or (self.where[j] == _FREE and d[j] > 0):
                delta = -1.0
            w = self.Binv @ self.A[:, j] if m else np.zeros(0)

            # ratio test: own bound flip vs. first basic variable to hit a bound
            flip_step = math.inf
            if self.where[j] != _FREE and np.isfinite(self.lo[j]) and np.isfinite(self.hi[j]):
                flip_step = self.hi[j] - self.lo[j]
            row_step = math.inf
            block = -1
            block_side = 0
            rate = -delta * w  # movement of basic values per unit step
            bvals = self.val[self.basis]
            bhi = self.hi[self.basis]
            blo = self.lo[self.basis]
            for i in np.nonzero(rate > PIVOT_TOL)[0]:
                if not np.isfinite(bhi[i]):
                    continue
                s = max((bhi[i] - bvals[i]) / rate[i], 0.0)
                if s < row_step - DEGEN_TOL or (
                    s <= row_step + DEGEN_TOL and block >= 0 and self.basis[i] < self.basis[block]
                ):
                    row_step = min(s, row_step)
                    block, block_side = i, _AT_UPPER
            for i in np.nonzero(rate < -PIVOT_TOL)[0]:
                if not np.isfinite(blo[i]):
                    continue
                s = max((bvals[i] - blo[i]) / (-rate[i]), 0.0)
                if s < row_step - DEGEN_TOL or (
                    s <= row_step + DEGEN_TOL and block >= 0 and self.basis[i] < self.basis[block]
                ):
                    row_step = min(s, row_step)
                    block, block_side = i, _AT_LOWER

            if math.isinf(flip_step) and math.isinf(row_step):
                return UNBOUNDED
            # the entering variable must never overrun its own opposite bound
            if flip_step <= row_step:
                step, block = flip_step, -1
            else:
                step = row_step

            self.iterations += 1
            since_refactor += 1
            if step <= DEGEN_TOL:
                degen += 1
                if degen > degen_budget:
                    bland = True

            self.val[self.basis] = bvals + rate * step
            self.val[j] += delta * step
            if block < 0:
                # bound flip: nonbasic variable runs to its other bound
                self.where[j] = _AT_UPPER if delta > 0 else _AT_LOWER
                self.val[j] = self.hi[j] if delta > 0 else self.lo[j]
            else:
                leaving = self.basis[block]
                self.where[leaving] = block_side
                self.val[leaving] = self.hi[leaving] if block_side == _AT_UPPER else self.lo[leaving]
                self.basis[block] = j
                self.where[j] = _BASIC
                piv = w[block]
                if abs(piv) < PIVOT_TOL:
                    raise NumericError(f"vanishing pivot {piv} in column {j}")
                self.Binv[block, :] /= piv
                others = np.arange(m) != block
                self.Binv[others, :] -= np.outer(w[others], self.Binv[block, :])
                if since_refactor >= REFACTOR_EVERY:
                    self._refactor()
                    since_refactor = 0

    # -- phases ------------------------------------------------------------

    def solve(self) -> LpSolution:
        val, where = self._initial_point()
        n_art = self._install_basis(val, where)
        real = self.kinds != _KIND_ARTIFICIAL

        if n_art:
            phase1 = np.where(self.kinds == _KIND_ARTIFICIAL, 1.0, 0.0)
            status = self._iterate(phase1, allow=real)
            if status != OPTIMAL:
                raise NumericError("phase 1 terminated without an optimum")
            art_level = float(phase1 @ self.val)
            if art_level > FEAS_TOL:
                return LpSolution(status=INFEASIBLE, iterations=self.iterations)
            self._evict_artificials()

        # artificials stay fixed at zero from here on
        art = self.kinds == _KIND_ARTIFICIAL
        self.lo[art] = 0.0
        self.hi[art] = 0.0
        self.val[art & (self.where != _BASIC)] = 0.0

        status = self._iterate(self.cost, allow=real)
        if status == UNBOUNDED:
            return LpSolution(status=UNBOUNDED, iterations=self.iterations)
        self._refactor()
        self._verify()
        x = self.val[: self.nstruct].copy()
        obj = float(self.model.objective @ x)
        return LpSolution(
            status=OPTIMAL,
            x=x,
            objective=obj,
            iterations=self.iterations,
            basis=self.basis.copy(),
            _state=self,
        )

    def _evict_artificials(self):
        """Pivot basic artificials out where possible; redundant rows keep theirs."""
        for pos in range(self.m):
            col = self.basis[pos]
            if self.kinds[col] != _KIND_ARTIFICIAL:
                continue
            row = self.Binv[pos, :] @ self.A
            candidates = np.nonzero(
                (np.abs(row) > 1e-7)
                & (self.kinds != _KIND_ARTIFICIAL)
                & (self.where != _BASIC)
            )[0]
            if candidates.size == 0:
                continue
            j = int(candidates[0])
            w = self.Binv @ self.A[:, j]
            piv = w[pos]
            self.where[col] = _AT_LOWER
            self.val[col] = 0.0
            self.basis[pos] = j
            self.where[j] = _BASIC
            self.Binv[pos, :] /= piv
            others = np.arange(self.m) != pos
            self.Binv[others, :] -= np.outer(w[others], self.Binv[pos, :])
        self._refactor()

    def _verify(self):
        resid = self.A @ self.val - self.model.rhs if self.m else np.zeros(0)
        if self.m and np.max(np.abs(resid)) > 100 * FEAS_TOL:
            raise NumericError(f"row residual {np.max(np.abs(resid)):.3e} after optimization")
        below = np.maximum(self.lo - self.val, 0.0)
        above = np.maximum(self.val - self.hi, 0.0)
        worst = max(below.max(initial=0.0), above.max(initial=0.0))
        if worst > 100 * FEAS_TOL:
            raise NumericError(f"bound violation {worst:.3e} after optimization")


def solve(model: LpModel, max_iters=None) -> LpSolution:
    """Solve the LP; status is one of optimal / infeasible / unbounded."""
    return _BoundedSimplex(model, max_iters=max_iters).solve()


def corner(solution: LpSolution, model: LpModel) -> CornerPolyhedron:
    """Corner relaxation at the optimal basis: apex plus one ray per nonbasic.

    Columns fixed by their bounds contribute no ray.  A free nonbasic
    variable has no bound to anchor its ray and is rejected.
    """
    if solution.status != OPTIMAL:
        raise ValueError(f"corner extraction needs an optimal solution, got {solution.status}")
    st = solution._state
    n = st.nstruct
    nb = [
        j
        for j in range(st.N)
        if st.where[j] != _BASIC
        and st.kinds[j] != _KIND_ARTIFICIAL
        and st.lo[j] != st.hi[j]
    ]
    for j in nb:
        if st.where[j] == _FREE:
            raise ValueError(f"free nonbasic column {j}; corner undefined without a bound")
    rays = []
    if nb:
        W = st.Binv @ st.A[:, nb]
        for k, j in enumerate(nb):
            delta = 1.0 if st.where[j] == _AT_LOWER else -1.0
            full = np.zeros(st.N)
            full[j] = delta
            full[st.basis] = -delta * W[:, k]
            g = np.zeros(n)
            if st.kinds[j] == _KIND_STRUCT:
                g[j] = delta
                bound = st.lo[j] if st.where[j] == _AT_LOWER else st.hi[j]
                h = -delta * bound
                kind = "bound"
            else:
                i = int(st.slack_row[j])
                if st.kinds[j] == _KIND_SLACK:
                    g = -model.rows[i].copy()
                    h = float(model.rhs[i])
                    kind = "slack"
                else:
                    g = model.rows[i].copy()
                    h = -float(model.rhs[i])
                    kind = "surplus"
            rays.append(
                CornerRay(column=j, kind=kind, direction=full[:n].copy(), eta_coef=g, eta_off=h)
            )
    return CornerPolyhedron(apex=solution.x.copy(), rays=rays)


def lp_format(model: LpModel, digits: int = 12) -> str:
    """Readable dump of a model, 12 significant digits by default."""
    fmt = f"%.{digits}g"
    names = model.names

    def term(c, j):
        return f"{fmt % c} {names[j]}"

    lines = [f"{model.sense} " + " + ".join(term(c, j) for j, c in enumerate(model.objective) if c)]
    lines.append("subject to")
    for i in range(model.nrows):
        body = " + ".join(term(c, j) for j, c in enumerate(model.rows[i]) if c) or "0"
        lines.append(f"  r{i}: {body} {model.row_senses[i]} {fmt % model.rhs[i]}")
    lines.append("bounds")
    for j in range(model.ncols):
        lines.append(f"  {fmt % model.lower[j]} <= {names[j]} <= {fmt % model.upper[j]}")
    return "\n".join(lines)
