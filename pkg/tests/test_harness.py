import json
import textwrap

import numpy as np
import pytest

from smoothltf.analysis import smoothed_error
from smoothltf.cube import ConfigurationError, generate_dataset
from smoothltf.harness.config import build_data_config, load_config
from smoothltf.harness.experiment import regenerate_test_data, run_experiment
from smoothltf.harness.lemmas import REGISTRY, UnknownLemma, format_table, lemma_check_suite
from smoothltf.harness.plots import emit_plots, series_rows
from smoothltf.harness.records import RECORD_SCHEMA, SchemaError, read_records, write_records
from smoothltf.regression import MonomialBasis, fit_once

BASE = """
[experiment]
name = "t"
seed = {seed}
test_size = 2000

[data]
n = 5
marginal = {{ kind = "uniform" }}
planted = {{ kind = "majority" }}
noise = {{ kind = "rcn", eta = 0.1 }}

[learn]
degree = 2
epsilon = 0.2
delta = 0.2
N = {N}
reps = 3
val_size = 300

[benchmark]
sigma = 0.02
"""


def write_config(tmp_path, extra="", seed=0, N=200, name="c.toml"):
    path = tmp_path / name
    path.write_text(BASE.format(seed=seed, N=N) + textwrap.dedent(extra))
    return path


class TestConfig:
    def test_load_and_points(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "[sweep]\ndegree = [1, 2]\nseed = [0, 1]\n"))
        assert len(cfg.points()) == 4

    def test_N_below_basis_rejected_before_compute(self, tmp_path, monkeypatch):
        import smoothltf.harness.experiment as ex

        monkeypatch.setattr(ex, "learn", lambda *a, **k: pytest.fail("learner was called"))
        with pytest.raises(ConfigurationError):
            run_experiment(write_config(tmp_path, N=5))

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(write_config(tmp_path, "[learn2]\nx = 1\n"))

    def test_bad_marginal(self, tmp_path):
        path = tmp_path / "b.toml"
        path.write_text(BASE.format(seed=0, N=200).replace('kind = "uniform"', 'kind = "weird"'))
        with pytest.raises(ConfigurationError):
            load_config(path)


class TestExperiment:
    def test_byte_identical_records(self, tmp_path):
        cfg = write_config(tmp_path)
        run_experiment(cfg, out=tmp_path / "a.jsonl", timing=False)
        run_experiment(cfg, out=tmp_path / "b.jsonl", timing=False)
        run_experiment(cfg, out=tmp_path / "c.jsonl", timing=False, jobs=2)
        a = (tmp_path / "a.jsonl").read_bytes()
        assert a == (tmp_path / "b.jsonl").read_bytes() == (tmp_path / "c.jsonl").read_bytes()

    def test_record_fields(self, tmp_path):
        (rec,) = run_experiment(write_config(tmp_path))
        assert rec["schema"] == RECORD_SCHEMA and rec["status"] == "ok"
        assert len(rec["rep_seeds"]) == 3
        assert set(rec["errors"]) == {"train", "validation", "test"}
        assert rec["timing"]["wall_clock_s"] > 0

    def test_benchmark_recomputable(self, tmp_path):
        (rec,) = run_experiment(write_config(tmp_path))
        data = regenerate_test_data(rec)
        planted = build_data_config(rec["config"]["data"]).planted
        assert smoothed_error(planted, data, 0.02).value == rec["benchmark"]["value"]

    def test_degree_sweep(self, tmp_path):
        # holds once N is large against the degree-3 basis (176 monomials); at N=2000 it overfits
        text = (BASE.format(seed=1, N=5000)
                .replace("n = 5", "n = 10").replace("test_size = 2000", "test_size = 20000")
                .replace("val_size = 300", "val_size = 2000"))
        path = tmp_path / "s.toml"
        path.write_text(text + "[sweep]\ndegree = [1, 2, 3]\n")
        recs = run_experiment(path)
        errs = [r["errors"]["test"] for r in recs]
        hw = 3 * np.sqrt(0.25 / 20000)
        assert all(b <= a + 2 * hw for a, b in zip(errs, errs[1:])), errs

    def test_richer_basis_lowers_l1_objective(self):
        cfg = build_data_config({"n": 6, "marginal": {"kind": "uniform"}, "planted": {"kind": "majority"},
                                 "noise": {"kind": "rcn", "eta": 0.2}})
        batch = generate_dataset(cfg, 400, seed=4)
        objs = [fit_once(batch, MonomialBasis(6, d))[1].objective for d in range(5)]
        assert all(b <= a + 1e-7 for a, b in zip(objs, objs[1:]))


class TestRecords:
    def test_round_trip_and_append(self, tmp_path):
        path = tmp_path / "r.jsonl"
        write_records(path, [{"schema": RECORD_SCHEMA, "x": 1}])
        write_records(path, [{"schema": RECORD_SCHEMA, "x": 2}])
        assert [r["x"] for r in read_records(path, RECORD_SCHEMA)] == [1, 2]

    def test_unknown_schema(self, tmp_path):
        path = tmp_path / "r.jsonl"
        path.write_text(json.dumps({"schema": "smoothltf.record/99"}) + "\n")
        with pytest.raises(SchemaError):
            read_records(path)


class TestLemmas:
    def test_single_selector(self):
        rows = lemma_check_suite("lm:ns", "smoke")
        assert rows and {r["id"] for r in rows} == {"lm:ns"}

    def test_all_smoke_passes(self):
        rows = lemma_check_suite("all", "smoke")
        assert {r["id"] for r in rows} == set(REGISTRY)
        assert all(r["passed"] for r in rows), format_table([r for r in rows if not r["passed"]])

    def test_negative_control(self):
        rows = lemma_check_suite("lm:tilting2", "smoke", bound_scale=0.5)
        assert any(not r["passed"] for r in rows)
        assert "FAIL" in format_table(rows)

    def test_unknown(self):
        with pytest.raises(UnknownLemma):
            lemma_check_suite("lm:nope")

    def test_jobs_match_serial(self):
        a = lemma_check_suite("lm:ns,lm:taylor", "smoke", seed=3)
        b = lemma_check_suite("lm:ns,lm:taylor", "smoke", seed=3, jobs=2)
        assert a == b


class TestPlots:
    def record(self, x, test, bench, N=100, d=1):
        return {"status": "ok", "learn": {"N": N, "d": d}, "benchmark": {"sigma": x, "value": bench},
                "errors": {"test": test, "validation": test, "train": test}}

    def test_single_record(self, tmp_path):
        paths = emit_plots([self.record(0.1, 0.2, 0.15)], tmp_path)
        assert {p.name for p in paths} == {"error_vs_N.csv", "error_vs_d.csv", "error_vs_sigma.csv", "plots.gp"}
        lines = (tmp_path / "error_vs_sigma.csv").read_text().splitlines()
        assert len(lines) == 2

    def test_ci_columns(self):
        rows = series_rows([self.record(0.1, 0.2 + 0.01 * i, 0.15) for i in range(20)], "sigma")
        assert rows[0]["runs"] == 20 and rows[0]["test_ci"] > 0
        assert rows[0]["benchmark_ci"] == pytest.approx(0, abs=1e-12)

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            emit_plots([], tmp_path)

    def test_sigma_sweep_matches_recomputation(self, tmp_path):
        path = write_config(tmp_path, "[sweep]\nsigma = [0.0, 0.05]\n")
        recs = run_experiment(path)
        rows = series_rows(recs, "sigma")
        for row, rec in zip(rows, recs):
            planted = build_data_config(rec["config"]["data"]).planted
            ref = smoothed_error(planted, regenerate_test_data(rec), row["x"]).value
            assert row["benchmark_mean"] == pytest.approx(ref, abs=1e-15)
