"""Arrival-stream construction: renewal processes, spatial splitting, and
trace-driven replay of per-minute request-count series.

Trace CSV schema (UTF-8, one header row): ``site,minute,count`` with
``site`` an arbitrary string, ``minute`` a 0-based contiguous integer per
site, and ``count`` a nonnegative integer of requests in that minute.
Trace replay emits a piecewise-constant-rate Poisson stream at
count/60 req/s within each minute bin.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import DistributionSpec, RandomStream, sample_array
from .errors import ConfigError

log = logging.getLogger(__name__)

BIN_SECONDS = 60.0


@dataclass(frozen=True)
class TraceTable:
    """Per-site, per-minute request counts. Bin indices are contiguous
    from 0 for every site; sites may have different lengths."""

    counts: dict[str, tuple[int, ...]]

    def __post_init__(self):
        if not self.counts:
            raise ConfigError("trace table has no sites")
        for site, row in self.counts.items():
            if any(c < 0 or int(c) != c for c in row):
                raise ConfigError(f"site {site!r} has a negative or non-integer count")

    @property
    def sites(self) -> list[str]:
        return list(self.counts)

    def bins(self, site_id: str) -> tuple[int, ...]:
        try:
            return self.counts[site_id]
        except KeyError:
            raise ConfigError(f"trace has no site {site_id!r}") from None

    @property
    def n_bins(self) -> int:
        return max(len(row) for row in self.counts.values())

    def total_count(self) -> int:
        return sum(sum(row) for row in self.counts.values())


@dataclass(frozen=True)
class ArrivalPlan:
    """Declarative arrival stream over [0, duration) seconds.

    kind 'poisson' uses exponential gaps at ``rate`` req/s; 'renewal'
    draws gaps from ``interarrival`` with an arrival at time zero;
    'trace' replays one site of a TraceTable.
    """

    kind: str
    duration: float
    rate: float = 0.0
    interarrival: Optional[DistributionSpec] = None
    trace: Optional[TraceTable] = None
    site_id: Optional[str] = None

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigError(f"duration must be > 0, got {self.duration}")
        if self.kind == "poisson":
            if self.rate < 0:
                raise ConfigError(f"poisson rate must be >= 0, got {self.rate}")
        elif self.kind == "renewal":
            if self.interarrival is None or not self.interarrival.mean > 0:
                raise ConfigError("renewal plan needs an inter-arrival spec with positive mean")
        elif self.kind == "trace":
            if self.trace is None or self.site_id is None:
                raise ConfigError("trace plan needs a trace table and a site id")
            self.trace.bins(self.site_id)
        else:
            raise ConfigError(f"unknown arrival plan kind {self.kind!r}")


def poisson_plan(rate: float, duration: float) -> ArrivalPlan:
    return ArrivalPlan("poisson", duration, rate=rate)


def renewal_plan(interarrival: DistributionSpec, duration: float) -> ArrivalPlan:
    return ArrivalPlan("renewal", duration, interarrival=interarrival)


def trace_plan(trace: TraceTable, site_id: str, duration: Optional[float] = None) -> ArrivalPlan:
    if duration is None:
        duration = len(trace.bins(site_id)) * BIN_SECONDS
    return ArrivalPlan("trace", duration, trace=trace, site_id=site_id)


def _exponential_epochs(rate: float, duration: float, stream: RandomStream) -> np.ndarray:
    """Poisson-process epochs in [0, duration) at constant rate."""
    if rate <= 0.0:
        return np.empty(0)
    epochs: list[np.ndarray] = []
    t = 0.0
    expected = rate * duration
    while t < duration:
        chunk = max(64, int(1.1 * (expected - t * rate)) + 16)
        gaps = -np.log1p(-stream.uniforms(chunk)) / rate
        times = t + np.cumsum(gaps)
        epochs.append(times)
        t = float(times[-1])
    all_times = np.concatenate(epochs)
    return all_times[all_times < duration]


def generate_arrivals(plan: ArrivalPlan, stream: RandomStream) -> np.ndarray:
    """Sorted arrival epochs in [0, plan.duration) seconds."""
    if plan.kind == "poisson":
        return _exponential_epochs(plan.rate, plan.duration, stream)

    if plan.kind == "renewal":
        # renewal convention: an arrival occurs at time zero, gaps follow
        spec = plan.interarrival
        if spec.kind == "deterministic":
            # i*gap avoids cumsum drift, keeping counts exact
            gap = spec.params[0]
            n = int(math.ceil(plan.duration / gap)) + 1
            epochs = np.arange(n) * gap
            return epochs[epochs < plan.duration]
        mean_gap = spec.mean
        epochs = [np.zeros(1)]
        t = 0.0
        while t < plan.duration:
            remaining = plan.duration - t
            chunk = max(64, int(1.1 * remaining / mean_gap) + 16)
            gaps = sample_array(spec, stream, chunk)
            times = t + np.cumsum(gaps)
            epochs.append(times)
            t = float(times[-1]) if len(times) else plan.duration
        all_times = np.concatenate(epochs)
        return all_times[all_times < plan.duration]

    # trace: independent homogeneous segment per minute bin
    row = plan.trace.bins(plan.site_id)
    pieces = []
    for i, count in enumerate(row):
        start = i * BIN_SECONDS
        if start >= plan.duration or count == 0:
            continue
        width = min(BIN_SECONDS, plan.duration - start)
        seg = _exponential_epochs(count / BIN_SECONDS, width, stream)
        pieces.append(start + seg)
    if not pieces:
        return np.empty(0)
    return np.concatenate(pieces)


def split_by_sites(epochs, weights, stream: RandomStream) -> list[np.ndarray]:
    """Assign each epoch independently to site i with probability w_i.

    The union of the outputs equals the input exactly (requests are
    conserved, never duplicated or dropped).
    """
    weights = np.asarray(weights, dtype=np.float64)
    if len(weights) == 0 or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ConfigError("weights must be nonnegative and sum to 1 within 1e-9")
    epochs = np.asarray(epochs, dtype=np.float64)
    cum = np.cumsum(weights)
    draws = stream.uniforms(len(epochs))
    choice = np.minimum(np.searchsorted(cum, draws, side="right"), len(weights) - 1)
    return [epochs[choice == i] for i in range(len(weights))]


def aggregate_sites(trace: TraceTable) -> TraceTable:
    """Sum all sites into a single 'cloud' site; the bin range is the union
    of the site ranges with missing bins treated as zero."""
    n = trace.n_bins
    totals = [0] * n
    for row in trace.counts.values():
        for i, c in enumerate(row):
            totals[i] += c
    return TraceTable({"cloud": tuple(totals)})


def load_trace_csv(path) -> TraceTable:
    """Parse a trace CSV; malformed rows and non-contiguous bins are
    rejected with the offending line or site named."""
    rows: dict[str, list[tuple[int, int]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty trace file") from None
        header = [h.strip().lower() for h in header]
        for col in ("site", "minute", "count"):
            if col not in header:
                raise ConfigError(f"{path}: header must contain 'site,minute,count'")
        extra = [h for h in header if h not in ("site", "minute", "count")]
        if extra:
            log.warning("%s: ignoring unknown trace columns %s", path, extra)
        idx = {col: header.index(col) for col in ("site", "minute", "count")}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                site = row[idx["site"]].strip()
                minute = int(row[idx["minute"]])
                count = int(row[idx["count"]])
            except (IndexError, ValueError):
                raise ConfigError(f"{path}:{lineno}: malformed trace row {row!r}") from None
            if minute < 0 or count < 0:
                raise ConfigError(f"{path}:{lineno}: minute and count must be nonnegative")
            rows.setdefault(site, []).append((minute, count))
    if not rows:
        raise ConfigError(f"{path}: trace has no data rows")
    counts = {}
    for site, pairs in rows.items():
        pairs.sort()
        minutes = [m for m, _ in pairs]
        if minutes != list(range(len(minutes))):
            raise ConfigError(
                f"site {site!r} has non-contiguous minute bins {minutes}; "
                "bins must run 0..n-1"
            )
        counts[site] = tuple(c for _, c in pairs)
    return TraceTable(counts)


def empirical_scv(epochs) -> float:
    """Squared CoV of successive inter-arrival gaps: variance / mean^2."""
    epochs = np.asarray(epochs, dtype=np.float64)
    if len(epochs) < 3:
        raise ConfigError("need at least 3 epochs to estimate inter-arrival scv")
    gaps = np.diff(epochs)
    mean = gaps.mean()
    if mean <= 0:
        raise ConfigError("epochs must be strictly increasing on average")
    return float(gaps.var() / (mean * mean))
