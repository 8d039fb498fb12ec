"""Shared test helpers."""

from edgeq.workload import TraceTable


def synthetic_skewed_trace(n_sites=5, minutes=24, base=240, peak=780) -> TraceTable:
    """Per-minute counts with a staggered 3-minute peak per site, so sites
    saturate one after another while the aggregate stays moderate."""
    counts = {}
    for i in range(n_sites):
        row = [base] * minutes
        start = 2 + i * 4
        for m in range(start, min(start + 3, minutes)):
            row[m] = peak
        counts[f"site{i}"] = tuple(row)
    return TraceTable(counts)
