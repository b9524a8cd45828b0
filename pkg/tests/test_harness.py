import json
import math

import numpy as np
import pytest

import _reference as ref
from subcut import cli
from subcut.errors import CapacityError, ModelError
from subcut.harness import (
    CSV_HEADER,
    RootNodeReport,
    RunConfig,
    aggregate,
    autocorr_polynomial,
    brute_force_primal,
    build_model,
    closed_gap,
    g05_graph,
    generate_instances,
    load_instance,
    pw_graph,
    reference_primal,
    root_loop,
    run_benchmark,
    run_instance,
    shifted_geomean,
    sidecar_primal,
    split_selector,
    write_report_csv,
)
from subcut.models import BmpInstance, LiftMap
from subcut.oracles import (
    Graph,
    MultilinearFunction,
    SSFunction,
    cut_oracle,
    write_graph,
    zero_oracle,
)
from subcut.simplex import LpModel


def k3_graph():
    return Graph(3, ref.K3_EDGES)


def k3_setup():
    model, targets, lift = build_model(k3_graph())
    return model, targets, lift


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.mode == "submodular"
        assert cfg.rounds == 10
        assert cfg.max_cuts_per_round == 50
        assert cfg.validate_cuts == "auto"

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            RunConfig(mode="everything")

    def test_negative_rounds(self):
        with pytest.raises(ValueError):
            RunConfig(rounds=-1)

    def test_nonpositive_tolerance(self):
        with pytest.raises(ValueError):
            RunConfig(efficacy_min=0.0)

    def test_bad_validation_switch(self):
        with pytest.raises(ValueError):
            RunConfig(validate_cuts="sometimes")

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValueError):
            RunConfig.from_dict({"mode": "none", "cleverness": 11})

    def test_from_dict_ignores_benchmark_modes_key(self):
        cfg = RunConfig.from_dict({"rounds": 4, "modes": ["none", "split"]})
        assert cfg.rounds == 4

    def test_from_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"mode": "split", "rounds": 2}))
        cfg = RunConfig.from_json(path)
        assert cfg.mode == "split" and cfg.rounds == 2


class TestMetrics:
    def test_closed_gap_full(self):
        assert closed_gap(3.0, 2.0, 2.0) == pytest.approx(1.0)

    def test_closed_gap_none(self):
        assert closed_gap(3.0, 3.0, 2.0) == pytest.approx(0.0)

    def test_closed_gap_degenerate(self):
        assert closed_gap(2.0, 2.0, 2.0) == 0.0
        assert closed_gap(2.0, 2.0, 5.0) == 0.0  # bound below the optimum: count 0

    def test_closed_gap_nan(self):
        assert math.isnan(closed_gap(3.0, 2.0, math.nan))

    def test_split_selector_most_fractional(self):
        assert split_selector([0.5, 0.9, 0.1]) == 0

    def test_split_selector_tie(self):
        assert split_selector([0.4, 0.6]) == 0

    def test_split_selector_integral(self):
        assert split_selector([0.0, 1.0]) is None

    def test_shifted_geomean_two_point(self):
        assert shifted_geomean([0.0, 3.0]) == pytest.approx(1.0, abs=1e-12)

    def test_shifted_geomean_constant(self):
        assert shifted_geomean([0.7, 0.7, 0.7]) == pytest.approx(0.7, abs=1e-12)

    def test_shifted_geomean_empty(self):
        with pytest.raises(ValueError):
            shifted_geomean([])

    def test_shifted_geomean_domain(self):
        with pytest.raises(ValueError):
            shifted_geomean([-1.0])


def fake_report(mode, closed, cuts=1, failed=False):
    return RootNodeReport(
        instance="fake", mode=mode, d1=3.0, d2=3.0 - closed, p=2.0,
        closed=closed, cuts=cuts, sep_time_ms=1.0, total_time_ms=2.0, failed=failed,
    )


class TestAggregate:
    def test_relative_against_baseline(self):
        reports = [fake_report("none", 0.5), fake_report("submodular", 1.0)]
        out = aggregate(reports)
        assert out["none"]["relative"] == pytest.approx(1.0)
        assert out["submodular"]["relative"] == pytest.approx(
            out["submodular"]["closed"] / out["none"]["closed"]
        )

    def test_zero_baseline_gives_nan(self):
        reports = [fake_report("none", 0.0), fake_report("split", 0.4)]
        out = aggregate(reports)
        assert math.isnan(out["split"]["relative"])

    def test_failed_runs_excluded(self):
        reports = [fake_report("split", 0.4), fake_report("split", 0.9, failed=True)]
        out = aggregate(reports)
        assert out["split"]["runs"] == 1
        assert out["split"]["closed"] == pytest.approx(0.4)

    def test_all_failed(self):
        with pytest.raises(ValueError):
            aggregate([fake_report("split", 0.4, failed=True)])

    def test_columns(self):
        out = aggregate([fake_report("ss", 0.25, cuts=3)])
        row = out["ss"]
        assert set(row) == {"closed", "relative", "time", "cuts", "runs"}
        assert row["cuts"] == pytest.approx(3.0)


class TestGenerators:
    def test_g05_unit_weights(self):
        g = g05_graph(10, seed=1)
        assert g.n == 10
        assert all(w == 1.0 for _, _, w in g.edges)
        assert 10 <= g.m <= 35  # density 0.5 of 45 pairs, loose band

    def test_g05_deterministic(self):
        assert g05_graph(12, seed=7).edges == g05_graph(12, seed=7).edges
        assert g05_graph(12, seed=7).edges != g05_graph(12, seed=8).edges

    def test_g05_density_extremes(self):
        assert g05_graph(6, density=1.0, seed=0).m == 15
        assert g05_graph(6, density=0.0, seed=0).m == 0

    def test_pw_weight_range(self):
        g = pw_graph(10, seed=2)
        assert g.m > 0
        for _, _, w in g.edges:
            assert 1.0 <= w <= 100.0 and w == int(w)

    def test_autocorr_support_shapes(self):
        poly = autocorr_polynomial(5, max_lag=2, seed=0)
        assert poly.n == 5
        sizes = {len(s) for _, s in poly.terms}
        assert sizes <= {2, 4}
        for a, s in poly.terms:
            assert a in (-1.0, 1.0)
            idx = sorted(s)
            if len(s) == 2:
                assert idx[1] - idx[0] <= 2
            else:
                i, k, j, l = idx
                lags = {d for d in (k - i, l - j, j - i, l - k)}
                assert any(1 <= d <= 2 for d in lags)

    def test_autocorr_pair_terms_cover_all_lags(self):
        poly = autocorr_polynomial(6, max_lag=3, seed=1)
        pair_lags = {max(s) - min(s) for _, s in poly.terms if len(s) == 2}
        assert pair_lags == {1, 2, 3}

    def test_autocorr_density_subsamples_quads(self):
        dense = autocorr_polynomial(10, max_lag=3, density=1.0, seed=4)
        sparse = autocorr_polynomial(10, max_lag=3, density=0.3, seed=4)
        quads = lambda p: sum(1 for _, s in p.terms if len(s) == 4)
        assert quads(sparse) < quads(dense)
        # pair terms never subsampled
        pairs = lambda p: sum(1 for _, s in p.terms if len(s) == 2)
        assert pairs(sparse) == pairs(dense)

    def test_minimum_size(self):
        for gen in (g05_graph, pw_graph, autocorr_polynomial):
            with pytest.raises(ValueError):
                gen(1)


class TestInstanceFiles:
    def test_generate_and_load_graph(self, tmp_path):
        paths = generate_instances("g05", 6, count=2, seed=3, out_dir=tmp_path)
        assert len(paths) == 2
        assert {p.suffix for p in paths} == {".mc"}
        g = load_instance(paths[0])
        assert isinstance(g, Graph) and g.n == 6
        assert g.edges == g05_graph(6, seed=3).edges

    def test_generate_and_load_poly(self, tmp_path):
        (path,) = generate_instances("autocorr", 5, seed=1, out_dir=tmp_path)
        assert path.suffix == ".pol"
        inst = load_instance(path)
        assert isinstance(inst, BmpInstance) and inst.n == 5

    def test_sidecar_written_and_read(self, tmp_path):
        (path,) = generate_instances("pw", 6, seed=5, out_dir=tmp_path)
        value = sidecar_primal(path)
        assert value == pytest.approx(brute_force_primal(pw_graph(6, seed=5)), abs=1e-9)

    def test_sidecar_missing(self, tmp_path):
        assert sidecar_primal(tmp_path / "nothing.mc") is None

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ValueError):
            generate_instances("dense", 6, out_dir=tmp_path)

    def test_unknown_extension(self, tmp_path):
        path = tmp_path / "inst.lp"
        path.write_text("")
        with pytest.raises(ModelError):
            load_instance(path)


class TestBruteForcePrimal:
    def test_k3(self):
        assert brute_force_primal(k3_graph()) == 2.0

    def test_empty_graph(self):
        assert brute_force_primal(Graph(4, [])) == 0.0

    def test_matches_reference_on_graphs(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(2, 8))
            edges = [
                (i, j, float(rng.integers(1, 9)))
                for i in range(n)
                for j in range(i + 1, n)
                if rng.random() < 0.6
            ]
            g = Graph(n, edges)
            want = ref.best_binary(lambda bits: ref.cut_value(edges, bits), n)
            assert brute_force_primal(g) == pytest.approx(want, abs=1e-9)

    def test_matches_reference_on_constrained_polys(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            n = int(rng.integers(2, 7))
            def rand_poly():
                terms = []
                for _ in range(int(rng.integers(1, 5))):
                    size = int(rng.integers(1, min(n, 3) + 1))
                    support = set(rng.choice(n, size=size, replace=False).tolist())
                    terms.append((float(rng.integers(-4, 5)), support))
                terms = [(a, s) for a, s in terms if a != 0.0] or [(1.0, {0})]
                return MultilinearFunction(n, terms)
            inst = BmpInstance(rand_poly(), [rand_poly()])
            accept = lambda bits: ref.multilinear_value(inst.constraints[0].terms, bits) >= 0
            want = ref.best_binary(
                lambda bits: ref.multilinear_value(inst.objective.terms, bits), n, accept
            )
            if want == -math.inf:
                with pytest.raises(ModelError):
                    brute_force_primal(inst)
            else:
                assert brute_force_primal(inst) == pytest.approx(want, abs=1e-9)

    def test_cardinality_filter(self):
        poly = MultilinearFunction(3, [(1.0, {0}), (1.0, {1}), (1.0, {2})])
        inst = BmpInstance(poly, cardinality=2)
        assert brute_force_primal(inst) == pytest.approx(2.0)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            brute_force_primal(Graph(21, [(0, 1, 1.0)]))

    def test_reference_prefers_sidecar(self, tmp_path):
        path = tmp_path / "k3.mc"
        write_graph(k3_graph(), path)
        path.with_suffix(".sol").write_text("41.5 0 1 0\n")
        assert reference_primal(k3_graph(), path) == 41.5

    def test_reference_falls_back_to_enumeration(self, tmp_path):
        path = tmp_path / "k3.mc"
        write_graph(k3_graph(), path)
        assert reference_primal(k3_graph(), path) == 2.0

    def test_reference_too_big_without_sidecar(self):
        with pytest.raises(CapacityError):
            reference_primal(Graph(21, [(0, 1, 1.0)]))


class TestRootLoop:
    def test_none_mode_closes_nothing(self):
        model, targets, lift = k3_setup()
        rep = root_loop(model, targets, lift, RunConfig(mode="none"), primal=2.0)
        assert rep.d1 == pytest.approx(3.0, abs=1e-9)
        assert rep.d2 == pytest.approx(3.0, abs=1e-9)
        assert rep.closed == 0.0
        assert rep.cuts == 0

    def test_submodular_mode_closes_gap(self):
        model, targets, lift = k3_setup()
        rep = root_loop(
            model, targets, lift,
            RunConfig(mode="submodular", validate_cuts="on"), primal=2.0,
        )
        assert rep.cuts >= 1
        assert rep.closed == pytest.approx(1.0, abs=1e-6)
        assert rep.d2 == pytest.approx(2.0, abs=1e-6)

    def test_split_mode_closes_gap(self):
        model, targets, lift = k3_setup()
        rep = root_loop(
            model, targets, lift,
            RunConfig(mode="split", validate_cuts="on"), primal=2.0,
        )
        assert rep.cuts >= 1
        assert rep.closed > 0.0

    def test_both_mode_stacks_cuts(self):
        model, targets, lift = k3_setup()
        rep = root_loop(
            model, targets, lift,
            RunConfig(mode="both", validate_cuts="on"), primal=2.0,
        )
        assert rep.cuts >= 2

    def test_integral_optimum_stops_immediately(self):
        poly = MultilinearFunction(3, [(3.0, {0, 1}), (-2.0, {0, 1, 2})])
        model, targets, lift = build_model(BmpInstance(poly))
        rep = root_loop(model, targets, lift, RunConfig(mode="submodular"), primal=3.0)
        assert rep.rounds == 0
        assert rep.cuts == 0
        assert rep.closed == 0.0

    def test_bounds_monotone_and_gap_in_range(self):
        g = pw_graph(8, seed=11)
        model, targets, lift = build_model(g)
        p = brute_force_primal(g)
        for mode in ("split", "submodular", "ss", "both"):
            rep = root_loop(
                model, targets, lift,
                RunConfig(mode=mode, validate_cuts="on"), primal=p,
            )
            assert not rep.failed
            assert rep.d2 <= rep.d1 + 1e-9
            assert -1e-9 <= rep.closed <= 1.0 + 1e-9

    def test_deterministic(self, tmp_path):
        (path,) = generate_instances("g05", 8, seed=2, out_dir=tmp_path)
        cfg = RunConfig(mode="submodular")
        a = run_instance(path, cfg)
        b = run_instance(path, cfg)
        key = lambda r: (r.d1, r.d2, r.p, r.closed, r.cuts, r.rounds, r.skipped)
        assert key(a) == key(b)

    def test_unbounded_model_sets_failure_flag(self):
        model = LpModel(
            sense="max",
            objective=[0.0, 0.0, 1.0],
            rows=np.zeros((0, 3)),
            row_senses=[],
            rhs=[],
            lower=[0.0, 0.0, -math.inf],
            upper=[1.0, 1.0, math.inf],
        )
        lift = LiftMap(n=2, x_cols=np.arange(2), t_col=2, y_cols={}, ncols=3)
        targets = [SSFunction(cut_oracle(Graph(2, [(0, 1, 1.0)])), zero_oracle(2), 1)]
        rep = root_loop(model, targets, lift, RunConfig(mode="submodular"))
        assert rep.failed
        assert math.isnan(rep.d1)
        assert math.isnan(rep.closed)

    def test_primal_override(self):
        model, targets, lift = k3_setup()
        rep = root_loop(model, targets, lift, RunConfig(mode="none", primal=1.23))
        assert rep.p == 1.23

    def test_requires_targets(self):
        model, _, lift = k3_setup()
        with pytest.raises(ModelError):
            root_loop(model, [], lift, RunConfig(mode="none"))

    def test_rounds_zero(self):
        model, targets, lift = k3_setup()
        rep = root_loop(model, targets, lift, RunConfig(mode="submodular", rounds=0), primal=2.0)
        assert rep.cuts == 0 and rep.d2 == rep.d1


class TestBenchmarkAndCsv:
    def test_run_benchmark_and_csv(self, tmp_path):
        paths = generate_instances("g05", 6, count=2, seed=0, out_dir=tmp_path)
        reports = run_benchmark(paths, RunConfig(rounds=3), modes=["none", "submodular"])
        assert len(reports) == 4
        assert [r.mode for r in reports] == ["none", "submodular"] * 2
        out = tmp_path / "report.csv"
        write_report_csv(reports, out)
        lines = out.read_text().strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert lines[0] == "instance,mode,d1,d2,p,closed,cuts,sep_time_ms,total_time_ms"
        assert len(lines) == 5
        for line in lines[1:]:
            assert len(line.split(",")) == 9

    def test_csv_row_shape(self):
        rep = fake_report("split", 0.5)
        cells = rep.csv_row().split(",")
        assert cells[0] == "fake" and cells[1] == "split"
        assert float(cells[2]) == 3.0 and int(cells[6]) == 1


class TestCli:
    def write_k3(self, tmp_path):
        path = tmp_path / "k3.mc"
        write_graph(k3_graph(), path)
        return path

    def test_gen_command(self, tmp_path, capsys):
        rc = cli.main(["gen", "g05", "-n", "6", "--seed", "3", "--out", str(tmp_path)])
        assert rc == 0
        printed = capsys.readouterr().out.strip().split("\n")
        assert len(printed) == 1 and printed[0].endswith(".mc")
        assert (tmp_path / "g05_n6_s3.mc").exists()
        assert (tmp_path / "g05_n6_s3.sol").exists()

    def test_root_command(self, tmp_path, capsys):
        path = self.write_k3(tmp_path)
        rc = cli.main(["root", str(path), "--cuts", "submodular", "--validate", "on"])
        assert rc == 0
        out = capsys.readouterr().out.strip().split("\n")
        assert out[0] == CSV_HEADER
        cells = out[1].split(",")
        assert cells[0] == "k3" and cells[1] == "submodular"
        assert float(cells[2]) == pytest.approx(3.0, abs=1e-6)
        assert float(cells[4]) == pytest.approx(2.0, abs=1e-9)

    def test_root_report_file(self, tmp_path, capsys):
        path = self.write_k3(tmp_path)
        report = tmp_path / "row.csv"
        rc = cli.main(["root", str(path), "--cuts", "none", "--report", str(report)])
        assert rc == 0
        assert report.read_text().startswith(CSV_HEADER)

    def test_verify_graph(self, tmp_path, capsys):
        path = self.write_k3(tmp_path)
        rc = cli.main(["verify", str(path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "PASS normalized(f(0)=0)" in out
        assert "PASS submodular" in out
        assert "PASS extension_identity" in out
        assert "PASS bound_dominates_optimum" in out
        assert "FAIL" not in out

    def test_verify_poly(self, tmp_path, capsys):
        (path,) = generate_instances("autocorr", 5, seed=2, out_dir=tmp_path)
        rc = cli.main(["verify", str(path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "PASS objective_parts_submodular" in out
        assert "PASS objective_decomposition_identity" in out

    def test_bench_command(self, tmp_path, capsys):
        generate_instances("g05", 6, count=2, seed=0, out_dir=tmp_path)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"rounds": 2, "modes": ["none", "split"]}))
        report = tmp_path / "bench.csv"
        rc = cli.main(["bench", str(tmp_path), "--config", str(cfg), "--report", str(report)])
        assert rc == 0
        out = capsys.readouterr().out
        assert CSV_HEADER in out
        assert "mode,closed,relative,time_s,cuts,runs" in out
        lines = report.read_text().strip().split("\n")
        assert len(lines) == 5  # header + 2 instances x 2 modes

    def test_bench_empty_directory(self, tmp_path, capsys):
        rc = cli.main(["bench", str(tmp_path)])
        assert rc == 1

    def test_capacity_exit_code(self, tmp_path, capsys):
        # a 21-variable graph with no sidecar cannot be brute forced
        path = tmp_path / "big.mc"
        write_graph(Graph(21, [(0, 1, 1.0)]), path)
        rc = cli.main(["root", str(path)])
        assert rc == 2
