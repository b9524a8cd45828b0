"""Root-node cutting-plane experiments.

Drives the loop solve -> corner -> separate -> add cuts -> resolve for a
configured cut mode, measures how much of the gap between the first LP
bound and a reference optimum the cuts close, and aggregates runs with
shifted geometric means.  Also houses the instance generators and the
reference-optimum lookup (brute force for small n, sidecar file beyond).
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import simplex
from .cuts import gradient_cut, intersection_cut, validate_cut_bruteforce
from .errors import CapacityError, ModelError, NumericError
from .models import (
    BmpInstance,
    build_maxcut_model,
    build_mubo_model,
    project_corner,
)
from .oracles import (
    Graph,
    MultilinearFunction,
    read_graph,
    read_polynomial,
    write_graph,
    write_polynomial,
)
from .sfree import LiftedSplit, build_reverse_linearized

logger = logging.getLogger(__name__)

MODES = ("none", "split", "submodular", "ss", "both")
CSV_HEADER = "instance,mode,d1,d2,p,closed,cuts,sep_time_ms,total_time_ms"
BRUTE_FORCE_PRIMAL_LIMIT = 20


@dataclass
class RunConfig:
    """Knobs for one root-node run; mirrors the JSON config files."""

    mode: str = "submodular"
    rounds: int = 10
    max_cuts_per_round: int = 50
    newton_start: float = 0.2
    newton_max_steps: int = 500
    eta_inf: float = 1e9
    root_tol: float = 1e-9
    interior_tol: float = 1e-7
    min_step: float = 1e-6
    efficacy_min: float = 1e-4
    range_max: float = 1e8
    binary_tol: float = 1e-6
    seed: int = 0
    primal: float = None  # reference optimum; None = sidecar file or brute force
    validate_cuts: str = "auto"  # "auto" (n <= 12), "on", "off"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.max_cuts_per_round < 1:
            raise ValueError("max_cuts_per_round must be >= 1")
        if self.validate_cuts not in ("auto", "on", "off"):
            raise ValueError(f"validate_cuts must be auto/on/off, got {self.validate_cuts!r}")
        for name in ("newton_start", "eta_inf", "root_tol", "interior_tol",
                     "min_step", "efficacy_min", "range_max", "binary_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known - {"modes"}  # "modes" is a benchmark-level key
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class RootNodeReport:
    """Outcome of one root-node run (one instance, one mode)."""

    instance: str
    mode: str
    d1: float
    d2: float
    p: float
    closed: float
    cuts: int
    sep_time_ms: float
    total_time_ms: float
    rounds: int = 0
    skipped: int = 0
    failed: bool = False

    def csv_row(self) -> str:
        cells = [self.instance, self.mode]
        cells += [_fmt(v) for v in (self.d1, self.d2, self.p, self.closed)]
        cells.append(str(self.cuts))
        cells += [_fmt(v) for v in (self.sep_time_ms, self.total_time_ms)]
        return ",".join(cells)


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def closed_gap(d1: float, d2: float, p: float, tol: float = 1e-9) -> float:
    """Fraction of the bound-to-optimum distance recovered, for maximization.

    d1 is the first LP bound, d2 the bound after cuts, p the reference
    optimum, so the fraction is (d1 - d2) / (d1 - p).  Degenerate gaps
    (bound already at the optimum) count as 0.
    """
    if any(math.isnan(v) for v in (d1, d2, p)):
        return math.nan
    denom = d1 - p
    if denom <= tol:
        return 0.0
    return (d1 - d2) / denom


def split_selector(x, tol: float = 1e-6):
    """Index of the most fractional entry (largest min(x_j, 1-x_j)).

    Ties break to the smallest index; returns None when every entry is
    integral within tol.
    """
    x = np.asarray(x, dtype=float)
    frac = np.minimum(x, 1.0 - x)
    if np.all(frac <= tol):
        return None
    return int(np.argmax(frac))


def _target_route(ss, x_bar, use_gradient: bool):
    if ss.f1.trivially_zero and ss.f2.trivially_zero:
        return None
    if use_gradient and ss.f1.trivially_zero:
        return ("grad", ss, ss)
    return ("set", build_reverse_linearized(ss, x_bar), ss)


def _candidates(mode: str, targets, lift, x_bar, binary_tol: float):
    """Separation worklist for one round: (route, payload, target) triples."""
    out = []
    if mode in ("split", "both"):
        j = split_selector(x_bar, binary_tol)
        if j is not None:
            out.append(("set", LiftedSplit(j, lift.n), targets[0]))
    if mode == "submodular":
        route = _target_route(targets[0], x_bar, use_gradient=False)
        if route is not None:
            out.append(route)
    if mode in ("ss", "both"):
        for ss in targets:
            route = _target_route(ss, x_bar, use_gradient=True)
            if route is not None:
                out.append(route)
    return out


def _want_validation(config: RunConfig, n: int) -> bool:
    if config.validate_cuts == "on":
        return True
    if config.validate_cuts == "off":
        return False
    return n <= 12


def root_loop(model, targets, lift, config: RunConfig, instance: str = "", primal=None) -> RootNodeReport:
    """Run up to config.rounds rounds of separation at the root node.

    Stops early when the LP optimum is binary in x or a round produces no
    cut.  An LP failure mid-loop sets the failure flag on the report; a
    cut failing point validation raises, since that can only be a bug.
    """
    if not targets:
        raise ModelError("at least one separation target is required")
    t0 = time.perf_counter()
    p = config.primal if config.primal is not None else primal
    p = math.nan if p is None else float(p)
    d1 = d2 = math.nan
    cuts_added = 0
    skipped = 0
    rounds_run = 0
    sep_s = 0.0
    failed = False

    def finish() -> RootNodeReport:
        return RootNodeReport(
            instance=instance,
            mode=config.mode,
            d1=d1,
            d2=d2,
            p=p,
            closed=closed_gap(d1, d2, p),
            cuts=cuts_added,
            sep_time_ms=sep_s * 1000.0,
            total_time_ms=(time.perf_counter() - t0) * 1000.0,
            rounds=rounds_run,
            skipped=skipped,
            failed=failed,
        )

    try:
        sol = simplex.solve(model)
    except NumericError:
        failed = True
        return finish()
    if sol.status != simplex.OPTIMAL:
        failed = True
        return finish()
    d1 = d2 = float(sol.objective)

    for _ in range(config.rounds):
        x_bar = sol.x[lift.x_cols]
        if np.all(np.abs(x_bar - np.round(x_bar)) <= config.binary_tol):
            break  # vertex already binary in x; nothing to separate
        rounds_run += 1
        s0 = time.perf_counter()
        corner = project_corner(simplex.corner(sol, model), lift)
        batch = []
        for route, payload, target in _candidates(config.mode, targets, lift, x_bar, config.binary_tol):
            if len(batch) >= config.max_cuts_per_round:
                break
            if route == "grad":
                cut = gradient_cut(payload, x_bar, corner.apex_t, lift)
                if cut is not None and cut.efficacy < config.efficacy_min:
                    cut = None
            else:
                cut = intersection_cut(
                    corner,
                    payload,
                    start=config.newton_start,
                    max_steps=config.newton_max_steps,
                    eta_inf=config.eta_inf,
                    root_tol=config.root_tol,
                    interior_tol=config.interior_tol,
                    min_step=config.min_step,
                    efficacy_min=config.efficacy_min,
                    range_max=config.range_max,
                )
            if cut is None:
                skipped += 1
                continue
            batch.append((cut, target))
        sep_s += time.perf_counter() - s0
        if not batch:
            break

        check = _want_validation(config, lift.n)
        rows, senses, rhs = [], [], []
        for cut, target in batch:
            if check:
                cut_corner = None if cut.kind == "grad" else corner
                if not validate_cut_bruteforce(cut, target, lift, corner=cut_corner):
                    raise NumericError(
                        f"{cut.kind} cut failed brute-force validation on {instance!r}"
                    )
            rows.append(cut.coef)
            senses.append(">=")
            rhs.append(cut.rhs)
            cuts_added += 1
        model = model.with_extra_rows(rows, senses, rhs)
        try:
            sol = simplex.solve(model)
        except NumericError:
            failed = True
            break
        if sol.status != simplex.OPTIMAL:
            failed = True
            break
        d2 = float(sol.objective)
    return finish()


# ---------------------------------------------------------------------------
# aggregation


def shifted_geomean(values, shift: float = 1.0) -> float:
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise ValueError("empty value list")
    if np.any(vals + shift <= 0.0):
        raise ValueError(f"values must exceed -shift = {-shift}")
    return float(np.exp(np.mean(np.log(vals + shift))) - shift)


def aggregate(reports, shift: float = 1.0) -> dict:
    """Per-mode shifted geometric means: closed gap, time (s), cut count.

    `relative` is the ratio of a mode's mean closed gap to the `none`
    mode's; with no cuts that baseline is 0, in which case the ratio is
    reported as nan.  Failed runs are left out.
    """
    live = [r for r in reports if not r.failed]
    if not live:
        raise ValueError("no successful reports to aggregate")
    by_mode: dict = {}
    for r in live:
        by_mode.setdefault(r.mode, []).append(r)
    baseline = None
    if "none" in by_mode:
        baseline = shifted_geomean([r.closed for r in by_mode["none"]], shift)
    out = {}
    for mode in MODES:
        if mode not in by_mode:
            continue
        rs = by_mode[mode]
        closed = shifted_geomean([r.closed for r in rs], shift)
        if baseline is None or baseline <= 0.0:
            relative = math.nan
        else:
            relative = closed / baseline
        out[mode] = {
            "closed": closed,
            "relative": relative,
            "time": shifted_geomean([r.total_time_ms / 1000.0 for r in rs], shift),
            "cuts": shifted_geomean([float(r.cuts) for r in rs], shift),
            "runs": len(rs),
        }
    return out


def write_report_csv(reports, path) -> None:
    lines = [CSV_HEADER] + [r.csv_row() for r in reports]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# reference optima


def _binary_chunks(n: int, chunk: int = 1 << 14):
    total = 1 << n
    cols = np.arange(n, dtype=np.uint32)
    for lo in range(0, total, chunk):
        masks = np.arange(lo, min(lo + chunk, total), dtype=np.uint32)
        yield (masks[:, None] >> cols) & 1


def brute_force_primal(problem, limit: int = BRUTE_FORCE_PRIMAL_LIMIT) -> float:
    """Exact optimum by enumeration of {0,1}^n, chunked to bound memory."""
    n = problem.n
    if n > limit:
        raise CapacityError(f"brute force limited to n <= {limit}, got n = {n}")
    best = -math.inf
    if isinstance(problem, Graph):
        if problem.m == 0:
            return 0.0
        ei = np.array([e[0] for e in problem.edges])
        ej = np.array([e[1] for e in problem.edges])
        w = np.array([e[2] for e in problem.edges])
        for bits in _binary_chunks(n):
            vals = (bits[:, ei] != bits[:, ej]) @ w
            best = max(best, float(vals.max()))
        return best
    if not isinstance(problem, BmpInstance):
        raise ModelError(f"no brute force for {type(problem).__name__}")

    def poly_values(func: MultilinearFunction, bits) -> np.ndarray:
        vals = np.zeros(bits.shape[0])
        for a, s in func.terms:
            vals += a * bits[:, sorted(s)].prod(axis=1)
        return vals

    for bits in _binary_chunks(n):
        ok = np.ones(bits.shape[0], dtype=bool)
        for c in problem.constraints:
            ok &= poly_values(c, bits) >= 0.0
        if problem.cardinality is not None:
            ok &= bits.sum(axis=1) == problem.cardinality
        if not ok.any():
            continue
        vals = poly_values(problem.objective, bits[ok])
        best = max(best, float(vals.max()))
    if best == -math.inf:
        raise ModelError("no feasible binary point")
    return best


def sidecar_primal(instance_path):
    """Reference optimum from '<instance stem>.sol': first token is the value."""
    side = Path(instance_path).with_suffix(".sol")
    if not side.exists():
        return None
    tokens = side.read_text().split()
    if not tokens:
        raise ModelError(f"empty solution file {side}")
    return float(tokens[0])


def reference_primal(problem, instance_path=None, limit: int = BRUTE_FORCE_PRIMAL_LIMIT) -> float:
    if instance_path is not None:
        value = sidecar_primal(instance_path)
        if value is not None:
            return value
    if problem.n <= limit:
        return brute_force_primal(problem, limit)
    raise CapacityError(
        f"n = {problem.n} is beyond brute force and no .sol sidecar was found"
    )


# ---------------------------------------------------------------------------
# instance generators


def g05_graph(n: int, density: float = 0.5, seed: int = 0) -> Graph:
    """Unweighted random graph, each pair an edge with the given probability."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    ii, jj = np.triu_indices(n, 1)
    keep = rng.random(ii.size) < density
    edges = [(int(i), int(j), 1.0) for i, j in zip(ii[keep], jj[keep])]
    return Graph(n, edges)


def pw_graph(n: int, density: float = 0.5, seed: int = 0, max_weight: int = 100) -> Graph:
    """Random graph with integer weights uniform in [1, max_weight]."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    ii, jj = np.triu_indices(n, 1)
    keep = rng.random(ii.size) < density
    weights = rng.integers(1, max_weight + 1, size=int(keep.sum()))
    edges = [
        (int(i), int(j), float(w))
        for i, j, w in zip(ii[keep], jj[keep], weights)
    ]
    return Graph(n, edges)


def autocorr_polynomial(n: int, max_lag: int = 3, density: float = 1.0, seed: int = 0) -> MultilinearFunction:
    """Degree-<=4 polynomial with autocorrelation-style structure.

    Supports are the lag pairs {i, i+k} plus the shifted quadruples
    {i, i+k, j, j+k} for lags k up to max_lag, with coefficients drawn
    uniformly from {-1, +1}.  `density` subsamples the quadruples, which
    otherwise dominate the term count.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    lags = range(1, min(max_lag, n - 1) + 1)
    supports = []
    seen = set()
    for k in lags:
        for i in range(n - k):
            s = frozenset((i, i + k))
            if s not in seen:
                seen.add(s)
                supports.append(s)
    for k in lags:
        for i in range(n - k):
            for j in range(i + 1, n - k):
                s = frozenset((i, i + k, j, j + k))
                if len(s) == 4 and s not in seen and rng.random() < density:
                    seen.add(s)
                    supports.append(s)
    coefs = rng.choice([-1.0, 1.0], size=len(supports))
    return MultilinearFunction(n, list(zip(coefs, supports)))


GENERATORS = ("g05", "pw", "autocorr")


def generate_instances(
    kind: str,
    n: int,
    count: int = 1,
    seed: int = 0,
    out_dir=".",
    density: float = None,
    max_lag: int = 3,
):
    """Write `count` seeded instances (plus .sol sidecars when brute-forceable)."""
    if kind not in GENERATORS:
        raise ValueError(f"unknown generator {kind!r}; expected one of {GENERATORS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        s = seed + i
        if kind == "g05":
            problem = g05_graph(n, 0.5 if density is None else density, s)
            path = out / f"g05_n{n}_s{s}.mc"
            write_graph(problem, path)
        elif kind == "pw":
            problem = pw_graph(n, 0.5 if density is None else density, s)
            path = out / f"pw_n{n}_s{s}.mc"
            write_graph(problem, path)
        else:
            poly = autocorr_polynomial(n, max_lag, 1.0 if density is None else density, s)
            problem = BmpInstance(poly)
            path = out / f"autocorr_n{n}_s{s}.pol"
            write_polynomial(poly, path)
        if n <= BRUTE_FORCE_PRIMAL_LIMIT:
            value = brute_force_primal(problem)
            path.with_suffix(".sol").write_text(f"{value:.12g}\n")
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# runners


def load_instance(path):
    """Read an instance file: .mc edge lists, .pol multilinear polynomials."""
    path = Path(path)
    if path.suffix == ".mc":
        return read_graph(path)
    if path.suffix == ".pol":
        return BmpInstance(read_polynomial(path))
    raise ModelError(f"unrecognized instance extension {path.suffix!r} (want .mc or .pol)")


def build_model(problem):
    """(LpModel, targets, LiftMap) for either instance flavor."""
    if isinstance(problem, Graph):
        model, target, lift = build_maxcut_model(problem)
        return model, [target], lift
    if isinstance(problem, BmpInstance):
        return build_mubo_model(problem)
    raise ModelError(f"cannot build a model from {type(problem).__name__}")


def run_instance(path, config: RunConfig, name: str = None) -> RootNodeReport:
    path = Path(path)
    problem = load_instance(path)
    if config.primal is not None:
        primal = config.primal
    else:
        primal = reference_primal(problem, path)
    model, targets, lift = build_model(problem)
    return root_loop(model, targets, lift, config,
                     instance=name or path.stem, primal=primal)


def run_benchmark(paths, config: RunConfig, modes=None) -> list:
    """Every instance under every mode; returns the flat report list."""
    modes = list(modes) if modes is not None else [config.mode]
    reports = []
    for path in paths:
        for mode in modes:
            cfg = dataclasses.replace(config, mode=mode)
            report = run_instance(path, cfg)
            logger.info("REPORT %s", report.csv_row())
            reports.append(report)
    return reports
