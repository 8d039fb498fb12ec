"""Discrete-event simulation of FCFS multi-server stations behind network RTTs.

A ``Deployment`` is a set of stations (servers + service distribution +
network RTT distribution) with a routing rule; an edge topology is k
single- or multi-server stations routed per-site (or weighted / join-
shortest-queue), a cloud topology is one pooled station.  Requests are
served FCFS and non-preemptively by homogeneous servers; queues are
unbounded, so every admitted request produces exactly one sample record.

Network latency is additive and contention-free: it is sampled per
request and added to the total, never simulated as a queue, matching the
total = network + wait + service decomposition.  One simulation run is
strictly single-threaded; independent runs may execute concurrently.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .distributions import DistributionSpec, RandomStream, derive_seed, sample_array
from .errors import ConfigError

ROUTING_MODES = ("per_site", "weighted", "jsq")

# substream kinds used to key per-station randomness off the run seed
_SID_ROUTING = 0
_SID_SERVICE = 1
_SID_RTT = 2
_SID_DEMAND = 3


def _stream_id(kind: int, station: int) -> int:
    return kind * (1 << 20) + station


@dataclass(frozen=True)
class StationSpec:
    """One service station: ``servers`` homogeneous servers, a service-time
    distribution, and a network round-trip distribution (seconds; may be
    deterministic 0)."""

    servers: int
    service: DistributionSpec
    rtt: DistributionSpec

    def __post_init__(self):
        if int(self.servers) != self.servers or self.servers < 1:
            raise ConfigError(f"servers must be a positive integer, got {self.servers}")
        if self.service.kind != "deterministic" and not self.service.mean > 0:
            raise ConfigError("service distribution must have positive mean")
        if self.service.kind == "deterministic" and not self.service.params[0] > 0:
            raise ConfigError("service distribution must have positive mean")


@dataclass(frozen=True)
class Deployment:
    """Stations plus a routing rule. ``weights`` is required (and must sum
    to 1 within 1e-9) for weighted routing."""

    stations: tuple[StationSpec, ...]
    routing: str = "per_site"
    weights: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if not self.stations:
            raise ConfigError("deployment needs at least one station")
        if self.routing not in ROUTING_MODES:
            raise ConfigError(f"routing must be one of {ROUTING_MODES}, got {self.routing!r}")
        if self.routing == "weighted":
            if self.weights is None or len(self.weights) != len(self.stations):
                raise ConfigError("weighted routing needs one weight per station")
            if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
                raise ConfigError("routing weights must be nonnegative and sum to 1")


class SampleRecord(NamedTuple):
    """One completed request; total = wait + service + network."""

    station_id: int
    arrival: float
    wait: float
    service: float
    network: float
    total: float


@dataclass
class StationResult:
    """Column-oriented record store for one station's completed requests."""

    station_id: int
    arrival: np.ndarray
    wait: np.ndarray
    service: np.ndarray
    network: np.ndarray
    total: np.ndarray

    def __len__(self) -> int:
        return len(self.arrival)

    def __iter__(self) -> Iterator[SampleRecord]:
        for i in range(len(self.arrival)):
            yield SampleRecord(
                self.station_id,
                float(self.arrival[i]),
                float(self.wait[i]),
                float(self.service[i]),
                float(self.network[i]),
                float(self.total[i]),
            )

    def metric(self, name: str) -> np.ndarray:
        if name not in ("arrival", "wait", "service", "network", "total"):
            raise ConfigError(f"unknown metric {name!r}")
        return getattr(self, name)


@dataclass(frozen=True)
class LatencySummary:
    """Mean/percentile/histogram statistics for one latency series.

    Percentiles use the nearest-rank rule on the sorted sample, so
    summaries are deterministic and reproducible across platforms.
    ``measured_utilization`` is busy-server-time / (servers * horizon)
    when the summary describes a simulated station, else None.
    """

    count: int
    mean: float
    p50: float
    p95: float
    p99: float
    variance: float
    measured_utilization: Optional[float] = None
    histogram_edges: tuple = field(default=())
    histogram_counts: tuple = field(default=())


def _nearest_rank(sorted_vals: np.ndarray, pct: float) -> float:
    idx = max(1, math.ceil(pct / 100.0 * len(sorted_vals)))
    return float(sorted_vals[idx - 1])


def summary_from_values(
    values: np.ndarray, utilization: Optional[float] = None, bins: int = 50
) -> LatencySummary:
    if len(values) == 0:
        raise ConfigError("cannot summarize an empty sample")
    vals = np.sort(np.asarray(values, dtype=np.float64))
    hi = float(vals[-1])
    if hi <= 0.0:
        edges = np.array([0.0, 1.0])
    else:
        edges = np.linspace(0.0, hi, bins + 1)
    counts, _ = np.histogram(vals, bins=edges)
    return LatencySummary(
        count=len(vals),
        mean=float(vals.mean()),
        p50=_nearest_rank(vals, 50.0),
        p95=_nearest_rank(vals, 95.0),
        p99=_nearest_rank(vals, 99.0),
        variance=float(vals.var()),
        measured_utilization=utilization,
        histogram_edges=tuple(float(e) for e in edges),
        histogram_counts=tuple(int(c) for c in counts),
    )


def summarize(records, metric: str = "total") -> LatencySummary:
    """Summarize SampleRecords (or a StationResult) over one metric."""
    if isinstance(records, StationResult):
        values = records.metric(metric)
    else:
        records = list(records)
        if not records:
            raise ConfigError("cannot summarize an empty sample")
        values = np.array([getattr(r, metric) for r in records])
    return summary_from_values(values)


@dataclass
class SimulationResult:
    stations: list[StationResult]
    summaries: list[LatencySummary]
    warmup: float
    horizon: float
    seed: int

    def merged_records(self) -> tuple[np.ndarray, np.ndarray]:
        """All post-warmup (arrival, total) pairs across stations, for
        request-weighted aggregate statistics."""
        totals = [
            s.total[s.arrival >= self.warmup] for s in self.stations
        ]
        arrivals = [
            s.arrival[s.arrival >= self.warmup] for s in self.stations
        ]
        return np.concatenate(arrivals), np.concatenate(totals)


def _check_sorted(epochs: np.ndarray) -> None:
    if len(epochs) > 1 and np.any(np.diff(epochs) < 0):
        raise ConfigError("arrival epochs must be sorted nondecreasing")


def _serve_fcfs(arrivals: np.ndarray, services: np.ndarray, servers: int) -> np.ndarray:
    """Exact FCFS multi-server waits: each request starts on the earliest
    free server, never before its arrival."""
    waits = np.empty(len(arrivals))
    if servers == 1:
        free = 0.0
        for i in range(len(arrivals)):
            a = arrivals[i]
            start = a if free <= a else free
            waits[i] = start - a
            free = start + services[i]
        return waits
    heap = [0.0] * servers
    push, pop = heapq.heappush, heapq.heappop
    for i in range(len(arrivals)):
        a = arrivals[i]
        free = pop(heap)
        start = a if free <= a else free
        waits[i] = start - a
        push(heap, start + services[i])
    return waits


def _station_result(
    station_id: int,
    spec: StationSpec,
    arrivals: np.ndarray,
    services: np.ndarray,
    waits: np.ndarray,
    rtt_stream: RandomStream,
) -> StationResult:
    network = sample_array(spec.rtt, rtt_stream, len(arrivals))
    totals = waits + services + network
    return StationResult(station_id, arrivals, waits, services, network, totals)


def _station_utilization(
    result: StationResult, servers: int, horizon: float
) -> float:
    start = result.arrival + result.wait
    depart = start + result.service
    busy = np.clip(np.minimum(depart, horizon) - np.minimum(start, horizon), 0.0, None)
    return float(busy.sum() / (servers * horizon))


def simulate(
    deployment: Deployment,
    arrivals,
    *,
    warmup: float,
    horizon: float,
    seed: int,
    service_times=None,
) -> SimulationResult:
    """Run one deployment over an arrival workload.

    ``arrivals`` is a per-station list of sorted epoch arrays for per-site
    routing, or a single sorted epoch array for weighted / join-shortest-
    queue routing. ``service_times`` optionally supplies per-request
    service demands aligned with ``arrivals`` (used for common-random-
    number comparisons); otherwise demands are drawn from each station's
    service distribution. Arrivals at or beyond the horizon are not
    admitted. Records with arrival < warmup are excluded from summaries.
    Equal (configuration, seed) runs are bitwise reproducible.
    """
    if warmup < 0 or not horizon > warmup:
        raise ConfigError(f"need horizon > warmup >= 0, got warmup={warmup}, horizon={horizon}")
    root = RandomStream(seed)
    n_st = len(deployment.stations)

    if deployment.routing == "per_site":
        per_site, per_site_svc = _as_per_site(arrivals, service_times, n_st)
    elif deployment.routing == "weighted":
        epochs, svc = _as_global(arrivals, service_times)
        per_site, per_site_svc = _split_weighted(
            epochs, svc, deployment.weights, root.substream(_stream_id(_SID_ROUTING, 0))
        )
    else:  # jsq
        epochs, svc = _as_global(arrivals, service_times)
        return _simulate_jsq(deployment, epochs, svc, warmup, horizon, root, seed)

    stations = []
    for i, spec in enumerate(deployment.stations):
        _check_sorted(per_site[i])
        # sorted, so the admitted window is a prefix and demands stay aligned
        epochs = per_site[i][per_site[i] < horizon]
        if per_site_svc[i] is not None:
            services = np.asarray(per_site_svc[i], dtype=np.float64)[: len(epochs)]
        else:
            services = sample_array(
                spec.service, root.substream(_stream_id(_SID_SERVICE, i)), len(epochs)
            )
        waits = _serve_fcfs(epochs, services, spec.servers)
        stations.append(
            _station_result(
                i, spec, epochs, services, waits, root.substream(_stream_id(_SID_RTT, i))
            )
        )
    return _finish(deployment, stations, warmup, horizon, seed)


def _as_per_site(arrivals, service_times, n_st):
    if len(arrivals) != n_st or (len(arrivals) > 0 and np.isscalar(arrivals[0])):
        raise ConfigError(
            f"per-site routing needs one arrival sequence per station ({n_st})"
        )
    per_site = [np.asarray(a, dtype=np.float64) for a in arrivals]
    if service_times is None:
        per_svc = [None] * n_st
    else:
        if len(service_times) != n_st:
            raise ConfigError("service_times must match the arrival structure")
        per_svc = [np.asarray(s, dtype=np.float64) for s in service_times]
        for e, s in zip(per_site, per_svc):
            if len(e) != len(s):
                raise ConfigError("service_times must align one-to-one with arrivals")
    return per_site, per_svc


def _as_global(arrivals, service_times):
    epochs = np.asarray(arrivals, dtype=np.float64)
    if epochs.ndim != 1:
        raise ConfigError("weighted/jsq routing needs a single global arrival sequence")
    svc = None
    if service_times is not None:
        svc = np.asarray(service_times, dtype=np.float64)
        if len(svc) != len(epochs):
            raise ConfigError("service_times must align one-to-one with arrivals")
    return epochs, svc


def _split_weighted(epochs, svc, weights, stream):
    cum = np.cumsum(np.asarray(weights, dtype=np.float64))
    draws = stream.uniforms(len(epochs))
    choice = np.searchsorted(cum, draws, side="right")
    choice = np.minimum(choice, len(weights) - 1)
    per_site = [epochs[choice == i] for i in range(len(weights))]
    per_svc = [svc[choice == i] if svc is not None else None for i in range(len(weights))]
    return per_site, per_svc


def _simulate_jsq(deployment, epochs, svc, warmup, horizon, root, seed):
    """Join-shortest-queue: each arrival goes to the station currently
    holding the fewest requests in system (ties to the lowest station id)."""
    _check_sorted(epochs)
    admitted = epochs < horizon
    epochs = epochs[admitted]
    if svc is not None:
        svc = svc[: len(epochs)]
    n_st = len(deployment.stations)
    free_heaps = [[0.0] * s.servers for s in deployment.stations]
    depart_heaps: list[list[float]] = [[] for _ in range(n_st)]
    svc_streams = [root.substream(_stream_id(_SID_SERVICE, i)) for i in range(n_st)]
    rows: list[list[list[float]]] = [[[], [], []] for _ in range(n_st)]  # arrival, wait, service

    for j in range(len(epochs)):
        a = float(epochs[j])
        for dh in depart_heaps:
            while dh and dh[0] <= a:
                heapq.heappop(dh)
        target = min(range(n_st), key=lambda i: (len(depart_heaps[i]), i))
        if svc is not None:
            s = float(svc[j])
        else:
            s = float(sample_array(deployment.stations[target].service, svc_streams[target], 1)[0])
        free = heapq.heappop(free_heaps[target])
        start = a if free <= a else free
        heapq.heappush(free_heaps[target], start + s)
        heapq.heappush(depart_heaps[target], start + s)
        rows[target][0].append(a)
        rows[target][1].append(start - a)
        rows[target][2].append(s)

    stations = []
    for i, spec in enumerate(deployment.stations):
        arr = np.array(rows[i][0])
        waits = np.array(rows[i][1])
        services = np.array(rows[i][2])
        stations.append(
            _station_result(
                i, spec, arr, services, waits, root.substream(_stream_id(_SID_RTT, i))
            )
        )
    return _finish(deployment, stations, warmup, horizon, seed)


def _finish(deployment, stations, warmup, horizon, seed):
    summaries = []
    for spec, st in zip(deployment.stations, stations):
        mask = st.arrival >= warmup
        util = _station_utilization(st, spec.servers, horizon)
        if mask.any():
            summaries.append(summary_from_values(st.total[mask], utilization=util))
        else:
            summaries.append(
                LatencySummary(0, math.nan, math.nan, math.nan, math.nan, math.nan, util)
            )
    return SimulationResult(stations, summaries, warmup, horizon, seed)


@dataclass
class ComparisonRecord:
    """Edge-vs-cloud comparison over an identical workload: per-site edge
    summaries, the request-weighted edge aggregate, and the cloud summary.
    Raw results are kept for percentile work on merged records."""

    edge_sites: list[LatencySummary]
    edge_aggregate: LatencySummary
    cloud: LatencySummary
    edge_result: SimulationResult
    cloud_result: SimulationResult


def run_edge_vs_cloud(
    edge: Deployment,
    cloud: Deployment,
    site_arrivals: Sequence[np.ndarray],
    *,
    warmup: float,
    horizon: float,
    seed: int,
    service_demands: Optional[Sequence[np.ndarray]] = None,
) -> ComparisonRecord:
    """Compare an edge deployment against a pooled cloud on one workload.

    The cloud station receives the superposition of all edge-site arrival
    streams, and every request carries the same service demand on both
    sides (common random numbers), so the comparison isolates queuing and
    network effects. Demands are drawn once per request from the matching
    edge site's service distribution unless supplied.
    """
    if len(cloud.stations) != 1:
        raise ConfigError("cloud deployment must have exactly one pooled station")
    if len(site_arrivals) != len(edge.stations):
        raise ConfigError(
            f"workload has {len(site_arrivals)} sites but edge has {len(edge.stations)} stations"
        )
    root = RandomStream(seed)
    site_arrivals = [np.asarray(a, dtype=np.float64) for a in site_arrivals]
    for a in site_arrivals:
        _check_sorted(a)
    if service_demands is None:
        service_demands = [
            sample_array(
                edge.stations[i].service,
                root.substream(_stream_id(_SID_DEMAND, i)),
                len(site_arrivals[i]),
            )
            for i in range(len(edge.stations))
        ]
    else:
        service_demands = [np.asarray(d, dtype=np.float64) for d in service_demands]
        for a, d in zip(site_arrivals, service_demands):
            if len(a) != len(d):
                raise ConfigError("service demands must align one-to-one with arrivals")

    edge_result = simulate(
        edge, site_arrivals, warmup=warmup, horizon=horizon, seed=seed,
        service_times=service_demands,
    )

    all_epochs = np.concatenate(site_arrivals) if len(site_arrivals) else np.empty(0)
    all_demands = np.concatenate(service_demands) if len(service_demands) else np.empty(0)
    order = np.argsort(all_epochs, kind="stable")
    # separate seed so the cloud's RTT draws do not replay edge site 0's
    cloud_result = simulate(
        cloud,
        [all_epochs[order]],
        warmup=warmup,
        horizon=horizon,
        seed=derive_seed(seed, 0xC10D),
        service_times=[all_demands[order]],
    )

    agg_vals = np.concatenate(
        [s.total[s.arrival >= warmup] for s in edge_result.stations]
    )
    total_busy_share = sum(
        su.measured_utilization * sp.servers
        for su, sp in zip(edge_result.summaries, edge.stations)
    )
    agg_util = total_busy_share / sum(sp.servers for sp in edge.stations)
    edge_aggregate = summary_from_values(agg_vals, utilization=agg_util)
    return ComparisonRecord(
        edge_sites=edge_result.summaries,
        edge_aggregate=edge_aggregate,
        cloud=cloud_result.summaries[0],
        edge_result=edge_result,
        cloud_result=cloud_result,
    )


def write_samples_csv(path, results: Iterable[StationResult]) -> None:
    """Export raw samples as CSV with 9 significant digits per value."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("station_id,arrival_s,wait_s,service_s,network_s,total_s\n")
        for st in results:
            for i in range(len(st)):
                fh.write(
                    f"{st.station_id},{st.arrival[i]:.9g},{st.wait[i]:.9g},"
                    f"{st.service[i]:.9g},{st.network[i]:.9g},{st.total[i]:.9g}\n"
                )
