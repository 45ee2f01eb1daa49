"""Tests for dataset ingestion, the trial harness, and result emission."""

import dataclasses
import json

import numpy as np
import pytest

from postri.bench import (
    SUMMARY_HEADER,
    TRIALS_HEADER,
    CellSummary,
    SweepSpec,
    TrialRecord,
    emit,
    load_dataset,
    read_trials,
    run_trials,
    summarize,
    write_synthetic_csv,
)
from postri.domain import dedup_remap, true_median
from postri.errors import DataError
from postri.expmech import rng_stream
from postri.hyperparams import SplitPolicy, make_params
from postri.median import dp_median
from postri.ri import dp_ri


class TestLoadDataset:
    def test_comma_csv(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("id,value\n1,30\n2,10\n3,20\n")
        data, dom = load_dataset(p, "value", (0, 100), domain_size=1000)
        assert np.array_equal(data.values, [10, 20, 30])
        assert dom.original_lower == 0 and dom.original_upper == 100

    def test_semicolon_with_quotes(self, tmp_path):
        # bank-marketing style: semicolon delimited, quoted strings.
        p = tmp_path / "bank.csv"
        p.write_text(
            '"age";"job";"balance"\n'
            '30;"unemployed";1787\n'
            '33;"services";4789\n'
            '35;"management";-120\n'
        )
        data, dom = load_dataset(p, "balance", (-8019, 102127))
        assert np.array_equal(data.values + dom.original_lower, [-120, 1787, 4789])

    def test_tab_delimited(self, tmp_path):
        p = tmp_path / "d.tsv"
        p.write_text("a\tvalue\n1\t7\n2\t9\n")
        data, _ = load_dataset(p, "value", (0, 10), domain_size=100)
        assert np.array_equal(data.values, [7, 9])

    def test_lower_bound_shift(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("value\n5\n")
        data, dom = load_dataset(p, "value", (5, 10), domain_size=100)
        assert np.array_equal(data.values, [0])
        assert dom.to_original(0) == 5

    def test_integral_float_cells(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("value\n448.0\n12\n")
        data, _ = load_dataset(p, "value", (0, 1000), domain_size=10**4)
        assert np.array_equal(data.values, [12, 448])

    def test_fractional_cell_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("value\n448.5\n")
        with pytest.raises(DataError, match="non-integer"):
            load_dataset(p, "value", (0, 1000))

    def test_non_numeric_cell_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("value\nabc\n")
        with pytest.raises(DataError, match="non-numeric"):
            load_dataset(p, "value", (0, 1000))

    def test_empty_cell_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("id,value\n1,5\n2,\n")
        with pytest.raises(DataError, match="empty cell"):
            load_dataset(p, "value", (0, 1000))

    def test_short_row_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("id,value\n1,5\n2\n")
        with pytest.raises(DataError, match="too short"):
            load_dataset(p, "value", (0, 1000))

    def test_missing_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("id,value\n1,5\n")
        with pytest.raises(DataError, match="'balance' not found"):
            load_dataset(p, "balance", (0, 1000))

    def test_out_of_declared_range(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("value\n5\n200\n")
        with pytest.raises(DataError, match="outside the declared range"):
            load_dataset(p, "value", (0, 100))

    def test_empty_file(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("")
        with pytest.raises(DataError, match="empty"):
            load_dataset(p, "value", (0, 100))

    def test_header_only(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("value\n")
        with pytest.raises(DataError, match="no data rows"):
            load_dataset(p, "value", (0, 100))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot open"):
            load_dataset(tmp_path / "nope.csv", "value", (0, 100))


class TestSweepSpec:
    def _spec_dict(self, **overrides):
        d = dict(
            dataset="toy",
            path="toy.csv",
            column="value",
            data_range=[0, 100],
            domain_size=10**4,
            eps_grid=[0.5, 1.0],
            beta=0.05,
            runs=3,
            split_policies=["default"],
            master_seed=7,
        )
        d.update(overrides)
        return d

    def test_file_round_trip(self, tmp_path):
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(self._spec_dict()))
        spec = SweepSpec.from_file(p)
        assert spec.dataset == "toy"
        assert spec.eps_grid == (0.5, 1.0)
        assert spec.data_range == (0, 100)
        out = tmp_path / "copy.json"
        spec.to_file(out)
        assert SweepSpec.from_file(out) == spec

    def test_unknown_field(self, tmp_path):
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(self._spec_dict(bogus=1)))
        with pytest.raises(DataError, match="unknown sweep spec fields"):
            SweepSpec.from_file(p)

    def test_missing_required_field(self, tmp_path):
        d = self._spec_dict()
        del d["column"]
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(d))
        with pytest.raises(DataError, match="missing required"):
            SweepSpec.from_file(p)

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "spec.json"
        p.write_text("{not json")
        with pytest.raises(DataError, match="cannot read"):
            SweepSpec.from_file(p)
        with pytest.raises(DataError, match="cannot read"):
            SweepSpec.from_file(tmp_path / "absent.json")
        p.write_text("[1, 2]")
        with pytest.raises(DataError, match="JSON object"):
            SweepSpec.from_file(p)

    def test_validation(self):
        with pytest.raises(DataError, match="runs"):
            SweepSpec(**self._spec_dict(runs=0))
        with pytest.raises(DataError, match="beta"):
            SweepSpec(**self._spec_dict(beta=1.5))
        with pytest.raises(DataError, match="eps_grid"):
            SweepSpec(**self._spec_dict(eps_grid=[]))
        with pytest.raises(DataError, match="eps_grid"):
            SweepSpec(**self._spec_dict(eps_grid=[1.0, -2.0]))
        with pytest.raises(ValueError, match="split policy"):
            SweepSpec(**self._spec_dict(split_policies=["bogus"]))


@pytest.fixture
def toy_sweep(tmp_path):
    path = tmp_path / "toy.csv"
    write_synthetic_csv(path, "uniform", n=60, data_range=(0, 500), seed=1)
    return SweepSpec(
        dataset="toy",
        path=str(path),
        column="value",
        data_range=(0, 500),
        domain_size=10**4,
        eps_grid=(1.0, 4.0),
        beta=0.05,
        runs=5,
        split_policies=("default", "median-focused"),
        master_seed=3,
    )


def _strip_wall(records):
    return [dataclasses.replace(r, wall_time_ms=0.0) for r in records]


class TestRunTrials:
    def test_grid_shape_and_fields(self, toy_sweep):
        records = run_trials(toy_sweep)
        assert len(records) == 2 * 2 * 5
        cells = {(r.split_policy, r.eps_total) for r in records}
        assert cells == {
            ("default", 1.0),
            ("default", 4.0),
            ("median-focused", 1.0),
            ("median-focused", 4.0),
        }
        for r in records:
            assert r.technique == "postri"
            assert r.dataset == "toy"
            assert r.eps1 + r.eps2 == pytest.approx(r.eps_total)
            assert r.median_error >= 0 and r.ri_width >= 0
            assert isinstance(r.covered, bool)

    def test_deterministic_given_master_seed(self, toy_sweep):
        a = _strip_wall(run_trials(toy_sweep))
        b = _strip_wall(run_trials(toy_sweep))
        assert a == b
        shifted = dataclasses.replace(toy_sweep, master_seed=4)
        c = _strip_wall(run_trials(shifted))
        assert a != c

    def test_single_trial_replays_from_recorded_seed(self, toy_sweep):
        records = run_trials(toy_sweep)
        r = records[13]
        data, dom = load_dataset(
            toy_sweep.path, toy_sweep.column, toy_sweep.data_range,
            toy_sweep.domain_size,
        )
        m_true = true_median(data) + dom.original_lower
        exp_data, dmap = dedup_remap(data, dom)
        params = make_params(
            r.eps_total, toy_sweep.beta, dmap.expanded_size,
            SplitPolicy.parse(r.split_policy), toy_sweep.beta_split,
        )
        rng = rng_stream(r.seed)
        med = dp_median(
            exp_data, dmap.expanded_domain, params.eps1, params.beta1, rng,
            params.delta_u,
        )
        ri = dp_ri(exp_data, dmap.expanded_domain, med.o, dmap, params, rng)
        assert abs(dom.to_original(ri.center) - m_true) == pytest.approx(
            r.median_error
        )
        width = float(dom.to_original(ri.upper) - dom.to_original(ri.lower))
        assert width == pytest.approx(r.ri_width)
        assert ri.covered_rank == r.covered


def _record(**overrides):
    base = dict(
        trial_id=0,
        seed=1,
        dataset="toy",
        split_policy="default",
        eps_total=1.0,
        eps1=0.5,
        eps2=0.5,
        beta=0.05,
        median_error=1.0,
        ri_width=10.0,
        covered=True,
        covered_numeric=True,
    )
    base.update(overrides)
    return TrialRecord(**base)


class TestSummarize:
    def test_known_aggregates(self):
        errors = [0.0, 2.0, 2.0, 4.0]
        covered = [True, True, False, True]
        records = [
            _record(trial_id=i, median_error=e, ri_width=2 * e, covered=c)
            for i, (e, c) in enumerate(zip(errors, covered))
        ]
        (cell,) = summarize(records)
        assert cell.runs == 4
        assert cell.median_error_mean == pytest.approx(2.0)
        assert cell.median_error_std == pytest.approx(np.std(errors, ddof=1))
        assert cell.ri_width_mean == pytest.approx(4.0)
        assert cell.coverage == pytest.approx(0.75)
        assert cell.coverage_numeric == pytest.approx(1.0)

    def test_single_record_std_is_zero(self):
        (cell,) = summarize([_record()])
        assert cell.median_error_std == 0.0
        assert cell.ri_width_std == 0.0

    def test_groups_sorted_by_key(self):
        records = [
            _record(eps_total=4.0),
            _record(eps_total=1.0),
            _record(eps_total=1.0, split_policy="optimal"),
        ]
        cells = summarize(records)
        keys = [(c.split_policy, c.eps_total) for c in cells]
        assert keys == [("default", 1.0), ("default", 4.0), ("optimal", 1.0)]

    def test_empty_rejected(self):
        with pytest.raises(DataError, match="no trial records"):
            summarize([])

    def test_record_validation(self):
        with pytest.raises(ValueError, match="non-negative"):
            _record(median_error=-1.0)


class TestEmit:
    def test_writes_all_files(self, toy_sweep, tmp_path):
        records = run_trials(toy_sweep)
        summaries = summarize(records)
        paths = emit(records, summaries, tmp_path / "out")
        for key in ("trials_csv", "trials_json", "summary_csv", "summary_json"):
            assert paths[key].is_file()
        assert paths["fig_toy"].name == "fig_toy.csv"

        header = paths["trials_csv"].read_text().splitlines()[0]
        assert header == ",".join(TRIALS_HEADER)
        assert "wall_time_ms" not in header
        summary_header = paths["summary_csv"].read_text().splitlines()[0]
        assert summary_header == ",".join(SUMMARY_HEADER)

    def test_fig_file_layout(self, toy_sweep, tmp_path):
        records = run_trials(toy_sweep)
        paths = emit(records, summarize(records), tmp_path / "out")
        lines = paths["fig_toy"].read_text().splitlines()
        assert lines[0] == (
            "eps,default_error_mean,default_error_std,default_width_mean,"
            "default_width_std,median-focused_error_mean,"
            "median-focused_error_std,median-focused_width_mean,"
            "median-focused_width_std"
        )
        assert len(lines) == 1 + 2  # one row per eps value
        assert lines[1].startswith("1.0,")
        assert lines[2].startswith("4.0,")

    def test_round_trip_through_trials_csv(self, toy_sweep, tmp_path):
        records = run_trials(toy_sweep)
        paths = emit(records, summarize(records), tmp_path / "out")
        back = read_trials(paths["trials_csv"])
        assert back == _strip_wall(records)

    def test_byte_identical_across_reruns(self, toy_sweep, tmp_path):
        a = emit(run_trials(toy_sweep), summarize(run_trials(toy_sweep)),
                 tmp_path / "a")
        b = emit(run_trials(toy_sweep), summarize(run_trials(toy_sweep)),
                 tmp_path / "b")
        for key in a:
            assert a[key].read_bytes() == b[key].read_bytes(), key

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(DataError, match="no trial records"):
            emit([], [], tmp_path / "out")

    def test_read_trials_rejects_foreign_csv(self, tmp_path):
        p = tmp_path / "other.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="does not look like"):
            read_trials(p)


class TestWriteSyntheticCsv:
    def test_uniform_round_trip(self, tmp_path):
        p = tmp_path / "u.csv"
        write_synthetic_csv(p, "uniform", n=200, data_range=(10, 60), seed=5)
        data, dom = load_dataset(p, "value", (10, 60), domain_size=100)
        assert data.n == 200
        original = data.values + dom.original_lower
        assert original.min() >= 10 and original.max() <= 60

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_synthetic_csv(a, "skewed", n=100, data_range=(0, 1000), seed=9)
        write_synthetic_csv(b, "skewed", n=100, data_range=(0, 1000), seed=9)
        assert a.read_bytes() == b.read_bytes()

    def test_skewed_has_low_median(self, tmp_path):
        p = tmp_path / "s.csv"
        write_synthetic_csv(p, "skewed", n=2000, data_range=(0, 5000), seed=2)
        data, _ = load_dataset(p, "value", (0, 5000), domain_size=10**4)
        assert true_median(data) < 2500 / 2

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ValueError, match="unknown synthetic kind"):
            write_synthetic_csv(tmp_path / "x.csv", "normal", 10, (0, 10), 1)
