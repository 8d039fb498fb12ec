"""edgeq: queueing analysis and simulation of edge-vs-cloud latency.

The package answers one practical question: given a workload and a
choice between k geo-distributed edge sites or one pooled cloud
deployment, when does the edge's lower network latency get wiped out by
its higher queueing delay? It provides closed-form waiting-time models
and inversion thresholds, a reproducible discrete-event simulator,
workload/trace generators, capacity-planning formulas, a CLI, and an
HTTP service.
"""

__version__ = "0.1.0"
