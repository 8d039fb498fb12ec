"""Arrival construction, spatial splitting, and trace parsing/replay."""

import math

import numpy as np
import pytest

from edgeq import distributions as dist
from edgeq.errors import ConfigError
from edgeq.workload import (
    TraceTable,
    aggregate_sites,
    empirical_scv,
    generate_arrivals,
    load_trace_csv,
    poisson_plan,
    renewal_plan,
    split_by_sites,
    trace_plan,
)


def test_poisson_count_concentration():
    epochs = generate_arrivals(poisson_plan(10.0, 1000.0), dist.RandomStream(1, 0))
    assert abs(len(epochs) - 10000) < 4 * math.sqrt(10000)
    assert np.all(np.diff(epochs) >= 0)
    assert epochs[0] >= 0 and epochs[-1] < 1000.0


def test_renewal_deterministic_epochs_exact():
    plan = renewal_plan(dist.deterministic(0.1), 1.0)
    epochs = generate_arrivals(plan, dist.RandomStream(2, 0))
    assert np.allclose(epochs, np.arange(0.0, 1.0, 0.1))
    assert len(epochs) == 10


def test_renewal_mean_rate_matches_spec():
    plan = renewal_plan(dist.fit_scv(0.25, 4.0), 5000.0)
    epochs = generate_arrivals(plan, dist.RandomStream(3, 1))
    # rate 4 req/s over 5000 s
    assert len(epochs) == pytest.approx(20000, rel=0.05)


def test_trace_replay_piecewise_rates():
    trace = TraceTable({"a": (60, 0)})
    epochs = generate_arrivals(trace_plan(trace, "a"), dist.RandomStream(4, 0))
    assert np.all(epochs < 60.0)
    assert abs(len(epochs) - 60) <= 4 * math.sqrt(60)


def test_trace_replay_count_conservation_in_expectation():
    counts = tuple(np.arange(30) * 7 % 40)
    trace = TraceTable({"s": counts})
    total = sum(counts)
    epochs = generate_arrivals(trace_plan(trace, "s"), dist.RandomStream(5, 0))
    assert abs(len(epochs) - total) <= 4 * math.sqrt(total)
    # per-bin rates: an empty bin stays empty
    trace2 = TraceTable({"s": (0, 120, 0)})
    e2 = generate_arrivals(trace_plan(trace2, "s"), dist.RandomStream(6, 0))
    assert np.all((e2 >= 60.0) & (e2 < 120.0))


def test_split_by_sites_conserves_exactly():
    epochs = generate_arrivals(poisson_plan(100.0, 10000.0), dist.RandomStream(7, 0))
    parts = split_by_sites(epochs, (0.5, 0.5), dist.RandomStream(7, 1))
    union = np.sort(np.concatenate(parts))
    assert np.array_equal(union, epochs)
    assert abs(len(parts[0]) - len(epochs) / 2) < 4 * math.sqrt(len(epochs) / 4)


def test_split_by_sites_fractions():
    epochs = np.arange(10**6, dtype=np.float64)
    parts = split_by_sites(epochs, (0.9, 0.1), dist.RandomStream(8, 0))
    frac = len(parts[0]) / 10**6
    assert abs(frac - 0.9) < 0.01


def test_split_single_site_passthrough():
    epochs = np.array([0.1, 0.2, 0.9])
    parts = split_by_sites(epochs, (1.0,), dist.RandomStream(9, 0))
    assert np.array_equal(parts[0], epochs)


def test_split_rejects_bad_weights():
    with pytest.raises(ConfigError):
        split_by_sites(np.array([1.0]), (0.7, 0.7), dist.RandomStream(1, 0))


def test_aggregate_sites():
    trace = TraceTable({"a": (3, 5), "b": (4,)})
    agg = aggregate_sites(trace)
    assert agg.counts == {"cloud": (7, 5)}
    single = aggregate_sites(TraceTable({"x": (1, 2, 3)}))
    assert single.counts == {"cloud": (1, 2, 3)}


def test_aggregate_conservation_on_synthetic_trace():
    rng = np.random.default_rng(0)
    trace = TraceTable({f"s{i}": tuple(int(x) for x in rng.integers(0, 50, 40)) for i in range(5)})
    agg = aggregate_sites(trace)
    assert agg.total_count() == trace.total_count()


class TestLoadTraceCsv:
    def test_happy_path(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("site,minute,count\nA,0,12\nA,1,0\n")
        trace = load_trace_csv(p)
        assert trace.sites == ["A"]
        assert trace.bins("A") == (12, 0)

    def test_empty_data_section(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("site,minute,count\n")
        with pytest.raises(ConfigError, match="no data rows"):
            load_trace_csv(p)

    def test_contiguity_error_names_site(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("site,minute,count\nB,0,1\nB,2,1\n")
        with pytest.raises(ConfigError, match="'B'"):
            load_trace_csv(p)

    def test_malformed_row_reports_line(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("site,minute,count\nA,0,1\nA,one,2\n")
        with pytest.raises(ConfigError, match=":3:"):
            load_trace_csv(p)

    def test_unknown_columns_warn(self, tmp_path, caplog):
        p = tmp_path / "t.csv"
        p.write_text("site,minute,count,region\nA,0,1,eu\n")
        with caplog.at_level("WARNING"):
            trace = load_trace_csv(p)
        assert trace.bins("A") == (1,)
        assert any("region" in rec.message for rec in caplog.records)

    def test_out_of_order_rows_accepted(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("site,minute,count\nA,1,5\nA,0,2\n")
        assert load_trace_csv(p).bins("A") == (2, 5)


def test_empirical_scv_deterministic_zero():
    assert empirical_scv(np.arange(0.0, 101.0)) == 0.0


def test_empirical_scv_exponential():
    epochs = np.cumsum(dist.sample_array(dist.exponential(1.0), dist.RandomStream(10, 0), 10**6))
    assert empirical_scv(epochs) == pytest.approx(1.0, rel=0.02)


def test_empirical_scv_hyperexp():
    gaps = dist.sample_array(dist.fit_scv(1.0, 4.0), dist.RandomStream(11, 0), 10**6)
    assert empirical_scv(np.cumsum(gaps)) == pytest.approx(4.0, rel=0.10)


def test_empirical_scv_needs_three_epochs():
    with pytest.raises(ConfigError):
        empirical_scv([0.0, 1.0])


def test_superposition_rate_preserved():
    epochs = generate_arrivals(poisson_plan(20.0, 5000.0), dist.RandomStream(12, 0))
    parts = split_by_sites(epochs, (0.3, 0.3, 0.4), dist.RandomStream(12, 1))
    merged = np.sort(np.concatenate(parts))
    rate = len(merged) / 5000.0
    assert rate == pytest.approx(len(epochs) / 5000.0, abs=1e-12)
    assert np.all(np.diff(merged) >= 0)
