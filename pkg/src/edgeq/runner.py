"""Experiment orchestration: single runs, rate sweeps with crossover
detection, trace replay, and JSON/CSV report assembly.

Reports embed the full resolved scenario and seed so any report can be
re-run as a config and reproduced byte-for-byte. Latencies in reports
are milliseconds rounded to 6 significant digits. Report files are
written atomically (temp file + rename).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import analytic
from . import distributions as dist
from .errors import ConfigError, InstabilityError
from .scenario import Scenario, scenario_to_dict
from .simulator import (
    ComparisonRecord,
    Deployment,
    StationSpec,
    run_edge_vs_cloud,
    simulate,
    summary_from_values,
)
from .workload import (
    TraceTable,
    generate_arrivals,
    poisson_plan,
    renewal_plan,
    trace_plan,
)

# stream-id namespace for workload generation (simulator uses kinds 0..3)
_SID_ARRIVAL = 8


def round_sig(x: float, digits: int = 6) -> float:
    """Round to ``digits`` significant digits (report formatting rule)."""
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


def edge_deployment(sc: Scenario) -> Deployment:
    station = StationSpec(sc.servers_per_site, sc.service, sc.n_edge)
    stations = tuple(station for _ in range(sc.k_sites))
    if sc.routing == "weighted":
        weights = sc.skew_weights or (1.0 / sc.k_sites,) * sc.k_sites
        return Deployment(stations, routing="weighted", weights=weights)
    return Deployment(stations, routing=sc.routing)


def cloud_deployment(sc: Scenario) -> Deployment:
    return Deployment((StationSpec(sc.cloud_servers, sc.service, sc.n_cloud),))


def site_rates(sc: Scenario, rate: float) -> list[float]:
    """Per-site arrival rates at a swept per-site rate; skew weights split
    the aggregate k*rate unevenly."""
    total = rate * sc.k_sites
    if sc.skew_weights is None:
        return [rate] * sc.k_sites
    return [w * total for w in sc.skew_weights]


def check_stability(sc: Scenario, rate: float) -> None:
    """Reject rates that push any station beyond saturation.

    Marginal saturation (rho == 1) is admitted: finite-horizon statistics
    remain well defined there and saturation endpoints are part of the
    standard sweep design.
    """
    tol = 1e-9
    for i, lam in enumerate(site_rates(sc, rate)):
        rho = lam / (sc.servers_per_site * sc.mu_req_per_s)
        if rho > 1.0 + tol:
            raise InstabilityError(
                f"edge site {i} unstable at rate {rate:g}: rho={rho:.4g} > 1"
            )
    rho_cloud = rate * sc.k_sites / (sc.cloud_servers * sc.mu_req_per_s)
    if rho_cloud > 1.0 + tol:
        raise InstabilityError(f"cloud unstable at rate {rate:g}: rho={rho_cloud:.4g} > 1")


def _site_arrivals(sc: Scenario, rate: float, rep_seed: int, horizon: float):
    streams = [
        dist.RandomStream(rep_seed, _SID_ARRIVAL * (1 << 20) + i) for i in range(sc.k_sites)
    ]
    arrivals = []
    for i, lam in enumerate(site_rates(sc, rate)):
        if lam <= 0:
            arrivals.append(np.empty(0))
            continue
        if sc.arrival == "poisson":
            plan = poisson_plan(lam, horizon)
        else:
            plan = renewal_plan(dist.fit_scv(1.0 / lam, sc.arrival_scv), horizon)
        arrivals.append(generate_arrivals(plan, streams[i]))
    return arrivals


@dataclass
class RepStats:
    edge_mean_ms: float
    edge_p50_ms: float
    edge_p95_ms: float
    edge_p99_ms: float
    edge_util: float
    cloud_mean_ms: float
    cloud_p50_ms: float
    cloud_p95_ms: float
    cloud_p99_ms: float
    cloud_util: float


def _stats_from_comparison(cmp: ComparisonRecord) -> RepStats:
    e, c = cmp.edge_aggregate, cmp.cloud
    if e.count == 0 or c.count == 0:
        raise ConfigError("run produced no post-warmup requests; extend the horizon")
    return RepStats(
        e.mean * 1e3, e.p50 * 1e3, e.p95 * 1e3, e.p99 * 1e3, e.measured_utilization,
        c.mean * 1e3, c.p50 * 1e3, c.p95 * 1e3, c.p99 * 1e3, c.measured_utilization,
    )


def _run_global_routing(sc: Scenario, rate: float, rep_seed: int,
                        warmup: float, horizon: float) -> ComparisonRecord:
    """Weighted / join-shortest-queue comparison: one aggregate arrival
    stream is routed across edge sites by the deployment's rule, and the
    cloud consumes the identical stream and service demands."""
    total = rate * sc.k_sites
    if sc.arrival == "poisson":
        plan = poisson_plan(total, horizon)
    else:
        plan = renewal_plan(dist.fit_scv(1.0 / total, sc.arrival_scv), horizon)
    epochs = generate_arrivals(plan, dist.RandomStream(rep_seed, _SID_ARRIVAL * (1 << 20)))
    demands = dist.sample_array(
        sc.service, dist.RandomStream(rep_seed, (_SID_ARRIVAL + 1) * (1 << 20)), len(epochs)
    )
    edge_result = simulate(
        edge_deployment(sc), epochs, warmup=warmup, horizon=horizon,
        seed=rep_seed, service_times=demands,
    )
    cloud_result = simulate(
        cloud_deployment(sc), [epochs], warmup=warmup, horizon=horizon,
        seed=dist.derive_seed(rep_seed, 0xC10D), service_times=[demands],
    )
    agg_vals = np.concatenate(
        [s.total[s.arrival >= warmup] for s in edge_result.stations]
    )
    agg_util = sum(su.measured_utilization for su in edge_result.summaries) / sc.k_sites
    if len(agg_vals) == 0:
        raise ConfigError("run produced no post-warmup requests; extend the horizon")
    return ComparisonRecord(
        edge_sites=edge_result.summaries,
        edge_aggregate=summary_from_values(agg_vals, utilization=agg_util),
        cloud=cloud_result.summaries[0],
        edge_result=edge_result,
        cloud_result=cloud_result,
    )


def run_point(sc: Scenario, rate: float, seed: int) -> tuple[list[RepStats], ComparisonRecord]:
    """Run all replications of one sweep point; returns per-rep stats and
    the last replication's raw comparison (for sample export)."""
    check_stability(sc, rate)
    edge = edge_deployment(sc)
    cloud = cloud_deployment(sc)
    warmup = sc.warmup_for(rate)
    horizon = sc.horizon_s
    stats, last = [], None
    for rep in range(sc.replications):
        rep_seed = dist.derive_seed(seed, 1000 + rep)
        if sc.routing == "per_site":
            arrivals = _site_arrivals(sc, rate, rep_seed, horizon)
            cmp = run_edge_vs_cloud(
                edge, cloud, arrivals, warmup=warmup, horizon=horizon, seed=rep_seed
            )
        else:
            cmp = _run_global_routing(sc, rate, rep_seed, warmup, horizon)
        stats.append(_stats_from_comparison(cmp))
        last = cmp
    return stats, last


def _point_entry(sc: Scenario, rate: float, stats: list[RepStats]) -> dict:
    def agg(vals):
        arr = np.asarray(vals)
        mean = float(arr.mean())
        ci = 2.0 * float(arr.std(ddof=1)) / math.sqrt(len(arr)) if len(arr) > 1 else 0.0
        return mean, ci

    e_mean, e_ci = agg([s.edge_mean_ms for s in stats])
    c_mean, c_ci = agg([s.cloud_mean_ms for s in stats])
    e_p95, e_p95_ci = agg([s.edge_p95_ms for s in stats])
    c_p95, c_p95_ci = agg([s.cloud_p95_ms for s in stats])
    entry = {
        "rate": rate,
        "rho_edge": round_sig(sc.rho_edge(rate)),
        "edge": {
            "mean_ms": round_sig(e_mean),
            "p50_ms": round_sig(float(np.mean([s.edge_p50_ms for s in stats]))),
            "p95_ms": round_sig(e_p95),
            "p99_ms": round_sig(float(np.mean([s.edge_p99_ms for s in stats]))),
            "ci_ms": round_sig(e_ci),
            "p95_ci_ms": round_sig(e_p95_ci),
            "utilization": round_sig(float(np.mean([s.edge_util for s in stats]))),
        },
        "cloud": {
            "mean_ms": round_sig(c_mean),
            "p50_ms": round_sig(float(np.mean([s.cloud_p50_ms for s in stats]))),
            "p95_ms": round_sig(c_p95),
            "p99_ms": round_sig(float(np.mean([s.cloud_p99_ms for s in stats]))),
            "ci_ms": round_sig(c_ci),
            "p95_ci_ms": round_sig(c_p95_ci),
            "utilization": round_sig(float(np.mean([s.cloud_util for s in stats]))),
        },
    }
    return entry


def crossover_rates(rates, edge_vals, edge_cis, cloud_vals, cloud_cis):
    """Crossover detection over one sweep column pair.

    Returns (first_exceed_rate, interpolated_rate) or None. The first is
    the smallest swept rate where edge exceeds cloud with non-overlapping
    confidence intervals; the second refines it by linear interpolation
    of the (edge - cloud) difference over the bracketing points. None
    when the sweep contains no sign change.
    """
    diffs = [e - c for e, c in zip(edge_vals, cloud_vals)]
    hit = None
    for i in range(len(rates)):
        separated = (edge_vals[i] - edge_cis[i]) > (cloud_vals[i] + cloud_cis[i])
        if diffs[i] > 0 and separated:
            hit = i
            break
    if hit is None:
        return None
    j = hit - 1
    while j >= 0 and diffs[j] > 0:
        j -= 1
    if j < 0:
        return None  # edge already loses at the first point: no sign change
    d0, d1 = diffs[j], diffs[j + 1]
    if d1 <= d0:
        return rates[hit], rates[j + 1]
    interp = rates[j] + (0.0 - d0) * (rates[j + 1] - rates[j]) / (d1 - d0)
    return rates[hit], interp


def interpolated_crossover(rates, edge_vals, edge_cis, cloud_vals, cloud_cis):
    """Interpolated crossover rate alone; see crossover_rates."""
    found = crossover_rates(rates, edge_vals, edge_cis, cloud_vals, cloud_cis)
    return None if found is None else found[1]


def _analytic_block(sc: Scenario) -> dict:
    gap = analytic.NetworkGap(sc.n_edge.mean, sc.n_cloud.mean)
    delta_units = gap.delta * sc.mu_req_per_s  # seconds -> mean service times
    k = sc.cloud_servers
    if delta_units <= 0:
        return {"cutoff_paper": None, "cutoff_exact": None}
    return {
        "cutoff_paper": round_sig(analytic.cutoff_utilization(k, delta_units, "paper")),
        "cutoff_exact": round_sig(analytic.cutoff_utilization(k, delta_units, "exact")),
    }


def sweep_report(sc: Scenario, seed: int | None = None) -> dict:
    """Run the configured rate sweep and assemble the inversion report."""
    if sc.rate_sweep_req_per_s is None or len(sc.rate_sweep_req_per_s) < 2:
        raise ConfigError("sweep needs rate_sweep_req_per_s with at least 2 points")
    seed = sc.seed if seed is None else seed
    rates = list(sc.rate_sweep_req_per_s)
    for r in rates:
        check_stability(sc, r)
    points = []
    for rate in rates:
        stats, _ = run_point(sc, rate, seed)
        points.append(_point_entry(sc, rate, stats))

    def col(side, key):
        return [p[side][key] for p in points]

    crossover = {}
    mean_found = crossover_rates(
        rates, col("edge", "mean_ms"), col("edge", "ci_ms"),
        col("cloud", "mean_ms"), col("cloud", "ci_ms"),
    )
    p95_found = crossover_rates(
        rates, col("edge", "p95_ms"), col("edge", "p95_ci_ms"),
        col("cloud", "p95_ms"), col("cloud", "p95_ci_ms"),
    )
    mean_rate = p95_rate = None
    if mean_found is not None:
        crossover["mean_first_exceed_rate"], mean_rate = mean_found[0], mean_found[1]
        crossover["mean_rate"] = round_sig(mean_rate)
    if p95_found is not None:
        crossover["p95_first_exceed_rate"], p95_rate = p95_found[0], p95_found[1]
        crossover["p95_rate"] = round_sig(p95_rate)
    if mean_rate is not None and p95_rate is not None:
        crossover["p95_rate_leq_mean_rate"] = p95_rate <= mean_rate

    return {
        "scenario": scenario_to_dict(sc),
        "seed": seed,
        "points": points,
        "crossover": crossover,
        "analytic": _analytic_block(sc),
    }


def simulate_report(sc: Scenario, seed: int | None = None) -> tuple[dict, ComparisonRecord]:
    """Run the single configured rate; same report schema with one point."""
    if sc.per_site_rate_req_per_s is None:
        raise ConfigError("simulate needs per_site_rate_req_per_s")
    seed = sc.seed if seed is None else seed
    rate = sc.per_site_rate_req_per_s
    stats, last = run_point(sc, rate, seed)
    report = {
        "scenario": scenario_to_dict(sc),
        "seed": seed,
        "points": [_point_entry(sc, rate, stats)],
        "crossover": {},
        "analytic": _analytic_block(sc),
    }
    return report, last


def _box_stats(values_s: np.ndarray) -> dict:
    vals = np.sort(values_s) * 1e3
    n = len(vals)

    def rank(p):
        return float(vals[max(1, math.ceil(p / 100.0 * n)) - 1])

    return {
        "count": n,
        "min_ms": round_sig(float(vals[0])),
        "q1_ms": round_sig(rank(25)),
        "median_ms": round_sig(rank(50)),
        "q3_ms": round_sig(rank(75)),
        "p95_ms": round_sig(rank(95)),
        "max_ms": round_sig(float(vals[-1])),
    }


def trace_report(sc: Scenario, trace: TraceTable, seed: int | None = None) -> dict:
    """Replay a per-minute trace at each edge site and its aggregate at the
    cloud; emit per-minute mean latencies and whole-run box statistics."""
    sites = trace.sites
    if len(sites) != sc.k_sites:
        raise ConfigError(
            f"trace has {len(sites)} sites but scenario.k_sites={sc.k_sites}"
        )
    seed = sc.seed if seed is None else seed
    n_bins = trace.n_bins
    horizon = n_bins * 60.0
    warmup = sc.warmup_s if sc.warmup_s is not None else 0.0
    if warmup >= horizon:
        raise ConfigError("warmup_s must be below the trace duration")

    arrivals = []
    for i, site in enumerate(sites):
        stream = dist.RandomStream(seed, _SID_ARRIVAL * (1 << 20) + i)
        arrivals.append(generate_arrivals(trace_plan(trace, site, horizon), stream))
    cmp = run_edge_vs_cloud(
        edge_deployment(sc), cloud_deployment(sc), arrivals,
        warmup=warmup, horizon=horizon, seed=seed,
    )

    windows = []
    station_data = {
        site: cmp.edge_result.stations[i] for i, site in enumerate(sites)
    }
    station_data["cloud"] = cmp.cloud_result.stations[0]
    for m in range(n_bins):
        lo, hi = m * 60.0, (m + 1) * 60.0
        entry = {"minute": m, "stations": {}}
        for name, st in station_data.items():
            mask = (st.arrival >= lo) & (st.arrival < hi)
            cnt = int(mask.sum())
            if cnt == 0:
                entry["stations"][name] = {"count": 0}
            else:
                entry["stations"][name] = {
                    "count": cnt,
                    "mean_ms": round_sig(float(st.total[mask].mean() * 1e3)),
                }
        windows.append(entry)

    box = {}
    for name, st in station_data.items():
        mask = st.arrival >= warmup
        if mask.any():
            box[name] = _box_stats(st.total[mask])
        else:
            box[name] = {"count": 0}
    merged = np.concatenate(
        [st.total[st.arrival >= warmup] for st in cmp.edge_result.stations]
    )
    box["edge_aggregate"] = _box_stats(merged) if len(merged) else {"count": 0}
    return {
        "scenario": scenario_to_dict(sc),
        "seed": seed,
        "sites": sites,
        "windows": windows,
        "box": box,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path) -> None:
    """Atomic write: byte-identical for identical (config, seed)."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(report_json(report))
    os.replace(tmp, path)


def points_csv(report: dict) -> str:
    """Plot-ready CSV projection of a sweep/simulate report."""
    cols = [
        "rate", "rho_edge",
        "edge_mean_ms", "edge_ci_ms", "edge_p50_ms", "edge_p95_ms", "edge_p99_ms",
        "cloud_mean_ms", "cloud_ci_ms", "cloud_p50_ms", "cloud_p95_ms", "cloud_p99_ms",
    ]
    lines = [",".join(cols)]
    for p in report["points"]:
        row = [f"{p['rate']:g}", f"{p['rho_edge']:g}"]
        for side in ("edge", "cloud"):
            for key in ("mean_ms", "ci_ms", "p50_ms", "p95_ms", "p99_ms"):
                row.append(f"{p[side][key]:g}")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
