import json
import os

import numpy as np
import pytest

from ckdro.cases import (
    three_bus_aux_kernel,
    three_bus_config_dict,
    three_bus_demand_spec,
    three_bus_network,
)
from ckdro.embedding import Dataset
from ckdro.kernels import Gaussian
from ckdro.opf import network_to_dict
from ckdro.pipeline import (
    DatasetSchema,
    ExperimentConfig,
    kernel_interpolation,
    load_dataset,
    run_benchmarks,
    save_dataset,
)
from ckdro.report import emit_report
from ckdro.synthetic import SyntheticSpec, spec_from_dict, spec_to_dict, synth_generate

SCHEMA = DatasetSchema(aux=(("hour", 24.0), ("temp", None)), outcome=("d0",))


def write_csv(path, text):
    path.write_text(text)
    return path


class TestLoadDataset:
    def test_three_rows(self, tmp_path):
        p = write_csv(
            tmp_path / "d.csv",
            "hour,temp,d0\n1.0,20.0,30.0\n2.0,21.0,31.0\n3.0,22.0,32.0\n",
        )
        ds = load_dataset(p, SCHEMA)
        assert len(ds) == 3
        assert ds.xs.shape == (3, 2)
        assert ds.ys.shape == (3, 1)

    def test_column_order_follows_schema(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "d0,temp,hour\n30.0,20.0,1.0\n")
        ds = load_dataset(p, SCHEMA)
        np.testing.assert_array_equal(ds.xs, [[1.0, 20.0]])
        np.testing.assert_array_equal(ds.ys, [[30.0]])

    def test_missing_column_named(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "hour,d0\n1.0,30.0\n")
        with pytest.raises(ValueError, match="temp"):
            load_dataset(p, SCHEMA)

    def test_malformed_cell_names_row_and_column(self, tmp_path):
        p = write_csv(
            tmp_path / "d.csv", "hour,temp,d0\n1.0,20.0,30.0\n2.0,oops,31.0\n"
        )
        with pytest.raises(ValueError, match=r"row 3.*temp.*oops"):
            load_dataset(p, SCHEMA)

    def test_empty_file(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "")
        with pytest.raises(ValueError, match="empty"):
            load_dataset(p, SCHEMA)

    def test_header_only(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "hour,temp,d0\n")
        with pytest.raises(ValueError, match="no data rows"):
            load_dataset(p, SCHEMA)


class TestSynthetic:
    def test_deterministic(self):
        spec = three_bus_demand_spec(50)
        a, _ = synth_generate(spec, seed=5)
        b, _ = synth_generate(spec, seed=5)
        np.testing.assert_array_equal(a.xs, b.xs)
        np.testing.assert_array_equal(a.ys, b.ys)

    def test_true_conditional_weights(self):
        spec = SyntheticSpec(
            n=10, x_low=[0.0], x_high=[1.0], periods=(None,),
            weights=[[1.0, 2.0]], offsets=[[-1.0], [1.0]], probs=[0.7, 0.3],
        )
        _, truth = synth_generate(spec, seed=0)
        pts, probs = truth.at([0.5])
        np.testing.assert_allclose(probs, [0.7, 0.3])
        np.testing.assert_allclose(pts[:, 0], [1.0 + 1.0 - 1.0, 1.0 + 1.0 + 1.0])

    def test_deterministic_law_unit_mass(self):
        spec = SyntheticSpec(
            n=10, x_low=[0.0], x_high=[1.0], periods=(None,),
            weights=[[0.0, 3.0]], offsets=[[0.0]], probs=[1.0],
        )
        ds, truth = synth_generate(spec, seed=1)
        pts, probs = truth.at([0.25])
        assert probs.tolist() == [1.0]
        assert pts[0, 0] == pytest.approx(0.75)
        np.testing.assert_allclose(ds.ys[:, 0], 3.0 * ds.xs[:, 0], atol=1e-12)

    def test_offset_frequencies_binomial(self):
        spec = SyntheticSpec(
            n=10_000, x_low=[0.0], x_high=[1.0], periods=(None,),
            weights=[[0.0, 0.0]], offsets=[[-1.0], [1.0]], probs=[0.7, 0.3],
        )
        ds, _ = synth_generate(spec, seed=123)
        high = float(np.mean(ds.ys[:, 0] > 0))
        sigma = np.sqrt(0.3 * 0.7 / 10_000)
        assert abs(high - 0.3) <= 3.0 * sigma

    def test_core_concentration(self):
        spec = three_bus_demand_spec(20_000)
        ds, _ = synth_generate(spec, seed=2)
        temp = ds.xs[:, 1]
        frac_core = float(np.mean((temp >= 2.0) & (temp <= 24.0)))
        # 0.9 in the core band plus the band's share of the uniform tail draws
        expected = 0.9 + 0.1 * (24.0 - 2.0) / 40.0
        assert abs(frac_core - expected) <= 0.02

    def test_round_trip_exact(self, tmp_path):
        spec = three_bus_demand_spec(40)
        ds, _ = synth_generate(spec, seed=9)
        schema = DatasetSchema.for_synthetic(spec)
        path = tmp_path / "synth.csv"
        save_dataset(ds, path, schema)
        again = load_dataset(path, schema)
        np.testing.assert_array_equal(ds.xs, again.xs)
        np.testing.assert_array_equal(ds.ys, again.ys)

    def test_spec_dict_round_trip(self):
        spec = three_bus_demand_spec(30)
        assert spec_from_dict(spec_to_dict(spec)) == spec


class TestKernelInterpolation:
    def test_single_sample_returns_its_outcome(self):
        ds = Dataset(xs=np.array([[0.0]]), ys=np.array([[4.0]]))
        out = kernel_interpolation(ds, Gaussian(1.0), 0.5, [0.2])
        np.testing.assert_allclose(out, [4.0], atol=1e-12)

    def test_constant_cluster(self):
        xs = np.random.default_rng(0).normal(0, 0.1, (20, 1))
        ds = Dataset(xs=xs, ys=np.full((20, 2), 7.5))
        out = kernel_interpolation(ds, Gaussian(1.0), 0.3, [0.0])
        np.testing.assert_allclose(out, [7.5, 7.5], atol=1e-9)

    def test_linear_law_interior_accuracy(self):
        rng = np.random.default_rng(5)
        xs = np.sort(rng.uniform(0, 10, 400))[:, None]
        ys = 3.0 * xs
        ds = Dataset(xs=xs, ys=ys)
        span = float(ys.max() - ys.min())
        for xq in (2.5, 5.0, 7.5):
            out = kernel_interpolation(ds, Gaussian(1.0), 0.05, [xq])
            assert abs(out[0] - 3.0 * xq) <= 0.05 * span

    def test_far_query_rejected(self):
        ds = Dataset(xs=np.zeros((5, 1)), ys=np.ones((5, 1)))
        with pytest.raises(ValueError, match="outside data support"):
            kernel_interpolation(ds, Gaussian(1.0), 0.5, [1e4])


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg_dict = three_bus_config_dict("net.json", query_count=3)
        cfg = ExperimentConfig.from_dict(cfg_dict)
        again = ExperimentConfig.from_dict(cfg.to_dict())
        assert cfg == again

    def test_seed_mandatory(self):
        cfg = three_bus_config_dict("net.json")
        del cfg["seed"]
        with pytest.raises(KeyError):
            ExperimentConfig.from_dict(cfg)

    def test_fixed_mode_needs_value(self):
        cfg = three_bus_config_dict("net.json", epsilon_mode="fixed")
        with pytest.raises(ValueError, match="epsilon_value"):
            ExperimentConfig.from_dict(cfg)


def small_config(tmp_path, **overrides) -> ExperimentConfig:
    netpath = os.path.join(tmp_path, "net.json")
    with open(netpath, "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(three_bus_network()), fh)
    base = three_bus_config_dict(
        netpath,
        query_count=4,
        n_worst_samples=3,
        cert_size=24,
        neighbors=20,
        fixed_epsilons=[],
    )
    base["synthetic"] = spec_to_dict(three_bus_demand_spec(40))
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


class TestBenchmarks:
    def test_schema_and_invariants(self, tmp_path):
        report = run_benchmarks(small_config(tmp_path))
        assert report.method_names == [
            "optimal",
            "mean_load",
            "kernel_interp",
            "ckdro_adaptive",
        ]
        assert len(report.rows) == 4
        for row in report.rows:
            assert row.error is None
            scale = 1e-6 * (1.0 + abs(row.optimal))
            for outcome in row.methods.values():
                assert row.optimal <= outcome.nominal + scale
                assert outcome.worst >= outcome.nominal - 1e-9

    def test_zero_sigma_w_equalizes_worst(self, tmp_path):
        report = run_benchmarks(small_config(tmp_path, sigma_w=0.0, n_worst_samples=1))
        for row in report.rows:
            for outcome in row.methods.values():
                assert outcome.worst == pytest.approx(outcome.nominal, abs=1e-9)

    def test_fixed_epsilon_columns(self, tmp_path):
        report = run_benchmarks(small_config(tmp_path, fixed_epsilons=[0.15, 3.0]))
        assert report.method_names[-2:] == ["ckdro_fixed_0.15", "ckdro_fixed_3"]

    def test_deterministic_reports(self, tmp_path):
        a = run_benchmarks(small_config(tmp_path))
        b = run_benchmarks(small_config(tmp_path))
        assert a.config == b.config
        for ra, rb in zip(a.rows, b.rows):
            assert ra.query_id == rb.query_id
            assert ra.optimal == rb.optimal
            for m in ra.methods:
                assert ra.methods[m] == rb.methods[m]

    def test_workers_do_not_change_results(self, tmp_path):
        a = run_benchmarks(small_config(tmp_path))
        b = run_benchmarks(small_config(tmp_path, workers=3))
        for ra, rb in zip(a.rows, b.rows):
            assert ra.methods == rb.methods

    def test_failed_row_marked_not_fatal(self, tmp_path):
        # one auxiliary point sits so far out that its interpolation weights
        # vanish; that row must fail cleanly while the others succeed
        spec = three_bus_demand_spec(30)
        ds, _ = synth_generate(spec, seed=77)
        xs = ds.xs.copy()
        xs[:, 1] = np.clip(xs[:, 1], 0.0, 20.0)
        xs[5, 1] = 1e5
        schema = DatasetSchema.for_synthetic(spec)
        csv_path = os.path.join(tmp_path, "data.csv")
        save_dataset(Dataset(xs=xs, ys=ds.ys), csv_path, schema)
        cfg_dict = small_config(tmp_path).to_dict()
        cfg_dict["dataset"] = csv_path
        cfg_dict["schema"] = schema.to_dict()
        cfg_dict["synthetic"] = None
        cfg_dict["query_count"] = 30
        report = run_benchmarks(ExperimentConfig.from_dict(cfg_dict))
        failed = [r for r in report.rows if r.error is not None]
        assert len(failed) == 1
        assert failed[0].query_id == 5
        assert "support" in failed[0].error
        assert sum(r.error is None for r in report.rows) == 29


class TestEmitReport:
    def test_files_and_determinism(self, tmp_path):
        report = run_benchmarks(small_config(tmp_path))
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        m1 = emit_report(report, out1)
        m2 = emit_report(report, out2)
        assert [f["sha256"] for f in m1["files"]] == [f["sha256"] for f in m2["files"]]
        for name in ("benchmark.csv", "benchmark.json", "benchmark.svg", "manifest.json"):
            assert (out1 / name).exists()
        header = (out1 / "benchmark.csv").read_text().splitlines()[0]
        assert header.split(",")[:2] == ["query_id", "optimal"]

    def test_rows_sorted_by_optimal(self, tmp_path):
        report = run_benchmarks(small_config(tmp_path))
        lines = (tmp_path / "out").mkdir() or None
        emit_report(report, tmp_path / "out", formats=("csv",))
        rows = (tmp_path / "out" / "benchmark.csv").read_text().splitlines()[1:]
        optima = [float(r.split(",")[1]) for r in rows]
        assert optima == sorted(optima)

    def test_empty_report(self, tmp_path):
        from ckdro.pipeline import BenchmarkReport

        empty = BenchmarkReport(
            method_names=["optimal"], rows=[], config={}, provenance={}
        )
        emit_report(empty, tmp_path / "empty")
        csv_text = (tmp_path / "empty" / "benchmark.csv").read_text()
        assert csv_text.splitlines() == ["query_id,optimal,optimal_nominal,optimal_worst"]
        svg = (tmp_path / "empty" / "benchmark.svg").read_text()
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")

    def test_failure_marker_in_outputs(self, tmp_path):
        from ckdro.pipeline import BenchmarkReport, MethodOutcome, QueryRow

        rows = [
            QueryRow(query_id=0, optimal=1.0, methods={
                "optimal": MethodOutcome(nominal=1.0, worst=1.5, strict_feasible=True)
            }),
            QueryRow(query_id=1, error="SolverFailure: max-iter"),
        ]
        report = BenchmarkReport(
            method_names=["optimal"], rows=rows, config={}, provenance={}
        )
        emit_report(report, tmp_path / "f")
        csv_text = (tmp_path / "f" / "benchmark.csv").read_text()
        assert "FAILED" in csv_text
        payload = json.loads((tmp_path / "f" / "benchmark.json").read_text())
        failed_rows = [r for r in payload["rows"] if r["error"]]
        assert failed_rows and "max-iter" in failed_rows[0]["error"]

    def test_unknown_format_rejected(self, tmp_path):
        from ckdro.pipeline import BenchmarkReport

        empty = BenchmarkReport(method_names=[], rows=[], config={}, provenance={})
        with pytest.raises(ValueError, match="unknown report formats"):
            emit_report(empty, tmp_path, formats=("pdf",))
