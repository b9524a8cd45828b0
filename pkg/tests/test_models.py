import itertools
import logging

import numpy as np
import pytest

import _reference as ref
from subcut.cuts import intersection_cut
from subcut.errors import ModelError
from subcut.models import (
    BmpInstance,
    LiftMap,
    build_maxcut_model,
    build_mubo_model,
    linearize_term,
    project_corner,
)
from subcut.oracles import Graph, MultilinearFunction, cut_oracle
from subcut.sfree import EnvelopeEpigraph
from subcut.simplex import CornerPolyhedron, CornerRay, corner, solve


def k3_model():
    return build_maxcut_model(Graph(3, ref.K3_EDGES))


def toy_poly():
    # 3 x1 x2 - 2 x1 x2 x3 in 0-based supports
    return MultilinearFunction(3, [(3.0, {0, 1}), (-2.0, {0, 1, 2})])


def solve_with_fixed_x(model, lift, x):
    fixed = np.asarray(x, dtype=float)
    lower = model.lower.copy()
    upper = model.upper.copy()
    lower[lift.x_cols] = fixed
    upper[lift.x_cols] = fixed
    pinned = type(model)(
        model.sense, model.objective, model.rows, model.row_senses,
        model.rhs, lower, upper, model.names,
    )
    return solve(pinned)


class TestBuildMaxcut:
    def test_k3_shape(self):
        model, target, lift = k3_model()
        assert model.ncols == 7
        assert model.nrows == 10  # 3 edges x 3 linearization rows + the link row
        assert lift.x_cols.tolist() == [0, 1, 2]
        assert lift.t_col == 6
        assert len(lift.y_cols) == 3
        assert model.names[0] == "x1" and model.names[-1] == "t"

    def test_k3_bound(self):
        model, _, lift = k3_model()
        sol = solve(model)
        assert sol.objective == pytest.approx(3.0, abs=1e-9)
        assert sol.x[lift.x_cols] == pytest.approx([0.5, 0.5, 0.5], abs=1e-9)
        y_cols = sorted(lift.y_cols.values())
        assert sol.x[y_cols] == pytest.approx([0.0, 0.0, 0.0], abs=1e-9)

    def test_k3_t_bounds(self):
        model, _, lift = k3_model()
        assert model.lower[lift.t_col] == -6.0
        assert model.upper[lift.t_col] == 6.0

    def test_k3_target(self):
        _, target, _ = k3_model()
        assert target.level == 1
        assert target.f2.trivially_zero
        assert target.f1.value(np.array([1.0, 0.0, 0.0])) == 2.0

    def test_single_edge_bound(self):
        model, _, _ = build_maxcut_model(Graph(2, [(0, 1, 1.0)]))
        assert solve(model).objective == pytest.approx(1.0, abs=1e-9)

    def test_empty_graph(self):
        model, _, _ = build_maxcut_model(Graph(3, []))
        assert solve(model).objective == pytest.approx(0.0, abs=1e-9)

    def test_negative_weight_rejected(self):
        with pytest.raises(ModelError):
            build_maxcut_model(Graph(2, [(0, 1, -1.0)]))

    def test_model_log_line(self, caplog):
        with caplog.at_level(logging.INFO, logger="subcut.models"):
            k3_model()
        lines = [r.getMessage() for r in caplog.records]
        assert "MODEL n=3 y=3 rows=10 targets=1" in lines

    def test_binary_x_recovers_cut_value(self):
        model, target, lift = k3_model()
        for bits in itertools.product((0, 1), repeat=3):
            sol = solve_with_fixed_x(model, lift, bits)
            assert sol.objective == pytest.approx(ref.cut_value(ref.K3_EDGES, bits), abs=1e-9)


class TestLinearizeTerm:
    def test_triple_support_rows(self):
        rows, senses, rhs = linearize_term({0, 1, 2}, 3, np.arange(3), 4)
        assert rows.shape == (4, 4)
        assert senses == ["<=", "<=", "<=", ">="]
        for k in range(3):
            want = np.zeros(4)
            want[3] = 1.0
            want[k] = -1.0
            assert rows[k].tolist() == want.tolist()
            assert rhs[k] == 0.0
        assert rows[3].tolist() == [-1.0, -1.0, -1.0, 1.0]
        assert rhs[3] == -2.0

    def test_singleton_rejected(self):
        with pytest.raises(ValueError):
            linearize_term({2}, 3, np.arange(3), 4)

    def test_exact_at_binary(self):
        # the feasible y interval collapses to the product at every binary x
        for size in range(2, 6):
            rows, senses, rhs = linearize_term(set(range(size)), size, np.arange(size), size + 1)
            for bits in itertools.product((0, 1), repeat=size):
                hi = min(bits)
                lo = max(0, sum(bits) - size + 1)
                prod = 1
                for b in bits:
                    prod *= b
                assert lo == hi == prod

    def test_all_ones_forces_one(self):
        rows, _, rhs = linearize_term({0, 1}, 2, np.arange(2), 3)
        z = np.array([1.0, 1.0, 1.0])
        assert float(rows[2] @ z) >= rhs[2] - 1e-12  # the lower row is tight


class TestBuildMubo:
    def test_unconstrained_shape(self):
        model, targets, lift = build_mubo_model(BmpInstance(toy_poly()))
        assert len(lift.y_cols) == 2
        assert model.ncols == 6
        assert model.nrows == 8  # 3 + 4 linearization rows + the objective row
        assert len(targets) == 1
        assert targets[0].level == 1

    def test_decomposition_matches(self):
        _, targets, _ = build_mubo_model(BmpInstance(toy_poly()))
        t = targets[0]
        for bits in itertools.product((0, 1), repeat=3):
            x = np.array(bits, dtype=float)
            assert t.f1.value(x) - t.f2.value(x) == pytest.approx(
                toy_poly().evaluate(x), abs=1e-12
            )

    def test_t_bounds_from_coefficients(self):
        model, _, lift = build_mubo_model(BmpInstance(toy_poly()))
        assert model.lower[lift.t_col] == -2.0
        assert model.upper[lift.t_col] == 3.0

    def test_objective_row(self):
        model, _, lift = build_mubo_model(BmpInstance(toy_poly()))
        row = model.rows[7]
        assert model.row_senses[7] == "<=" and model.rhs[7] == 0.0
        assert row[lift.t_col] == 1.0
        assert row[lift.y_cols[frozenset({0, 1})]] == -3.0
        assert row[lift.y_cols[frozenset({0, 1, 2})]] == 2.0

    def test_constraint_adds_level_zero_target(self):
        cons = MultilinearFunction(3, [(1.0, {0, 1})])
        model, targets, lift = build_mubo_model(BmpInstance(toy_poly(), [cons]))
        assert len(targets) == 2
        assert targets[1].level == 0
        assert targets[1].f1.trivially_zero
        # the support {0,1} is shared, no extra y column
        assert len(lift.y_cols) == 2
        assert model.row_senses[-1] == ">="

    def test_degree_one_only(self):
        poly = MultilinearFunction(2, [(2.0, {0}), (-1.0, {1})])
        model, _, lift = build_mubo_model(BmpInstance(poly))
        assert len(lift.y_cols) == 0
        assert model.nrows == 1
        assert solve(model).objective == pytest.approx(2.0, abs=1e-9)

    def test_cardinality_row(self):
        inst = BmpInstance(toy_poly(), cardinality=1)
        model, _, lift = build_mubo_model(inst)
        assert model.row_senses[-1] == "="
        assert model.rhs[-1] == 1.0
        sol = solve(model)
        assert float(sol.x[lift.x_cols].sum()) == pytest.approx(1.0, abs=1e-9)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            BmpInstance(toy_poly(), [MultilinearFunction(2, [(1.0, {0})])])

    def test_model_log_line(self, caplog):
        with caplog.at_level(logging.INFO, logger="subcut.models"):
            build_mubo_model(BmpInstance(toy_poly()))
        assert "MODEL n=3 y=2 rows=8 targets=1" in [r.getMessage() for r in caplog.records]


class TestMilpEquivalence:
    def random_instance(self, rng, n):
        terms = []
        for _ in range(int(rng.integers(2, 7))):
            size = int(rng.integers(1, min(n, 3) + 1))
            support = set(rng.choice(n, size=size, replace=False).tolist())
            terms.append((float(rng.integers(-4, 5)), support))
        terms = [(a, s) for a, s in terms if a != 0.0] or [(1.0, {0})]
        return BmpInstance(MultilinearFunction(n, terms))

    def test_fixed_binary_x_recovers_polynomial(self):
        rng = np.random.default_rng(17)
        for _ in range(8):
            n = int(rng.integers(2, 6))
            inst = self.random_instance(rng, n)
            model, _, lift = build_mubo_model(inst)
            for bits in itertools.product((0, 1), repeat=n):
                sol = solve_with_fixed_x(model, lift, bits)
                assert sol.objective == pytest.approx(
                    inst.objective.evaluate(np.array(bits, dtype=float)), abs=1e-9
                )

    def test_lp_bound_dominates_optimum(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            n = int(rng.integers(2, 7))
            inst = self.random_instance(rng, n)
            model, _, _ = build_mubo_model(inst)
            d1 = solve(model).objective
            best = ref.best_binary(
                lambda bits: inst.objective.evaluate(np.array(bits, dtype=float)), n
            )
            assert d1 >= best - 1e-9


class TestProjectCorner:
    def test_k3_projection(self):
        model, _, lift = k3_model()
        sol = solve(model)
        cp = project_corner(corner(sol, model), lift)
        assert cp.apex.size == 7
        assert cp.apex_x.shape == (3,)
        assert cp.apex_x == pytest.approx([0.5, 0.5, 0.5], abs=1e-9)
        assert cp.apex_t == pytest.approx(3.0, abs=1e-9)
        for ray in cp.rays:
            assert ray.x_dir.shape == (3,)
            assert isinstance(ray.t_dir, float)

    def test_ray_order_preserved(self):
        model, _, lift = k3_model()
        sol = solve(model)
        cp = corner(sol, model)
        before = [r.column for r in cp.rays]
        project_corner(cp, lift)
        assert [r.column for r in cp.rays] == before

    def test_size_mismatch_rejected(self):
        _, _, lift = k3_model()
        cp = CornerPolyhedron(apex=np.zeros(3), rays=[])
        with pytest.raises(ValueError):
            project_corner(cp, lift)

    def test_y_only_ray_is_inert(self):
        # a ray moving only a lifted column projects to zero and never exits
        f = cut_oracle(Graph(2, [(0, 1, 1.0)]))
        lift = LiftMap(n=2, x_cols=np.arange(2), t_col=3, y_cols={frozenset({0, 1}): 2}, ncols=4)
        apex = np.array([0.5, 0.5, 0.0, 0.5])
        e_y = np.array([0.0, 0.0, 1.0, 0.0])
        t_down = np.array([0.0, 0.0, 0.0, -1.0])
        rays = [
            CornerRay(column=2, kind="bound", direction=e_y, eta_coef=e_y.copy(), eta_off=0.0),
            CornerRay(column=3, kind="bound", direction=t_down, eta_coef=t_down.copy(), eta_off=0.5),
        ]
        cp = project_corner(CornerPolyhedron(apex=apex, rays=rays), lift)
        assert cp.rays[0].x_dir.tolist() == [0.0, 0.0]
        assert cp.rays[0].t_dir == 0.0
        cut = intersection_cut(cp, EnvelopeEpigraph(f))
        assert cut is not None
        assert cut.infinite_steps == 1
        assert cut.coef[2] == 0.0  # the y column never enters the cut
