"""Request handlers shared by the FastAPI routes and the in-process CLI.

Each handler takes a validated request model and returns a JSON-ready
dict; the analytic/capacity ones echo their inputs with unit annotations.
"""

from __future__ import annotations

import os
import tempfile

from .. import analytic
from ..runner import simulate_report, sweep_report, trace_report
from ..scenario import scenario_from_dict
from ..workload import load_trace_csv
from . import models as m

_SERVICE_UNITS = "mean service times"


def _resp(query: str, req, values: dict, units: dict) -> dict:
    inputs = req.model_dump(by_alias=False)
    return m.AnalyticResponse(
        query=query, inputs=inputs, values=values, units=units
    ).model_dump()


def erlang_c(req: m.ErlangCRequest) -> dict:
    v = analytic.erlang_c(req.k, req.offered_load)
    return _resp("erlang-c", req, {"probability": v}, {"probability": "probability"})


def mmk_wait(req: m.MmkWaitRequest) -> dict:
    v = analytic.mmk_mean_wait(analytic.QueueParams(req.k, req.lam, req.mu))
    return _resp("mmk-wait", req, {"mean_wait": v}, {"mean_wait": "s"})


def whitt_wait(req: m.WhittWaitRequest) -> dict:
    v = analytic.whitt_conditional_wait(req.k, req.rho)
    return _resp("whitt-wait", req, {"conditional_wait": v}, {"conditional_wait": _SERVICE_UNITS})


def gap_mmk(req: m.GapMmkRequest) -> dict:
    v = analytic.inversion_gap_mmk(req.k, req.rho_edge, req.rho_cloud)
    return _resp("gap-mmk", req, {"gap_threshold": v}, {"gap_threshold": _SERVICE_UNITS})


def cutoff(req: m.CutoffRequest) -> dict:
    v = analytic.cutoff_utilization(req.k, req.delta_n, req.mode)
    return _resp("cutoff", req, {"cutoff_utilization": v}, {"cutoff_utilization": "utilization"})


def cutoff_limit(req: m.CutoffLimitRequest) -> dict:
    v = analytic.cutoff_utilization_limit(req.delta_n, req.mode)
    return _resp(
        "cutoff-limit", req, {"cutoff_utilization": v}, {"cutoff_utilization": "utilization"}
    )


def cloud_latency_bound(req: m.GapMmkRequest) -> dict:
    v = analytic.cloud_latency_lower_bound(req.k, req.rho_edge, req.rho_cloud)
    return _resp(
        "cloud-latency-bound", req, {"lower_bound": v}, {"lower_bound": _SERVICE_UNITS}
    )


def ps(req: m.PsRequest) -> dict:
    v = analytic.ps_approx(req.k, req.rho)
    return _resp("ps", req, {"probability": v}, {"probability": "probability"})


def wait_gg1(req: m.WaitGg1Request) -> dict:
    v = analytic.ac_wait_gg1(req.rho, req.mu, req.ca2, req.cb2)
    return _resp("wait-gg1", req, {"mean_wait": v}, {"mean_wait": "s"})


def wait_ggk(req: m.WaitGgkRequest) -> dict:
    v = analytic.ac_wait_ggk(analytic.QueueParams(req.k, req.lam, req.mu), req.ca2, req.cb2)
    return _resp("wait-ggk", req, {"mean_wait": v}, {"mean_wait": "s"})


def gap_ggk(req: m.GapGgkRequest) -> dict:
    v = analytic.inversion_gap_ggk(
        req.k, req.rho_edge, req.mu, req.ca2_edge, req.cb2, req.rho_cloud, req.ca2_cloud
    )
    return _resp("gap-ggk", req, {"gap_threshold": v}, {"gap_threshold": "s"})


def gap_ggk_limit(req: m.GapGgkLimitRequest) -> dict:
    v = analytic.inversion_gap_ggk_limit(req.rho_edge, req.mu, req.ca2, req.cb2)
    return _resp("gap-ggk-limit", req, {"gap_threshold": v}, {"gap_threshold": "s"})


def gap_skewed(req: m.GapSkewedRequest) -> dict:
    profile = analytic.SkewProfile.from_rates(req.rates, req.mu)
    v = analytic.inversion_gap_skewed(profile, req.k, req.rho_cloud)
    return _resp("gap-skewed", req, {"gap_threshold": v}, {"gap_threshold": _SERVICE_UNITS})


def min_servers(req: m.MinServersRequest) -> dict:
    v = analytic.min_servers_per_site(
        req.delta_n, req.lambda_i, req.mu, req.k, req.lambda_total
    )
    return _resp("min-servers", req, {"servers": v}, {"servers": "servers"})


def capacity_ratio(req: m.CapacityRatioRequest) -> dict:
    v = analytic.dtrp_capacity_ratio(req.q)
    return _resp("capacity-ratio", req, {"ratio": v}, {"ratio": "dimensionless"})


def capacity_peak(req: m.PeakCapacityRequest) -> dict:
    c_cloud, c_edge = analytic.peak_capacity(req.lam, req.k)
    return _resp(
        "peak", req, {"c_cloud": c_cloud, "c_edge": c_edge},
        {"c_cloud": "req/s", "c_edge": "req/s"},
    )


def capacity_dtrp(req: m.DtrpCloudRequest) -> dict:
    cp = analytic.CapacityParams(
        q=req.q, rho_edge=req.rho_edge, rho_cloud=req.rho_cloud,
        tau_edge=req.tau, c_edge=req.c_edge,
    )
    v = analytic.dtrp_cloud_capacity(cp)
    return _resp("dtrp", req, {"c_cloud": v}, {"c_cloud": "servers"})


def capacity_dtrp_skewed(req: m.DtrpSkewedRequest) -> dict:
    cp = analytic.CapacityParams(
        rho_cloud=req.rho_cloud, sigma_s=req.sigma_s, beta=req.beta,
        area=req.area, speed=req.speed, batch=req.batch,
    )
    v = analytic.dtrp_skewed_edge_capacity(
        cp, req.lambda_edge, req.k_edge, req.mu_cloud, req.c_cloud
    )
    return _resp("dtrp-skewed", req, {"c_edge": v}, {"c_edge": "servers"})


def _scenario(model: m.ScenarioModel):
    return scenario_from_dict(model.model_dump(exclude_none=True))


def simulate(req: m.SimulateRequest) -> dict:
    report, _ = simulate_report(_scenario(req.scenario), req.seed)
    return report


def sweep(req: m.SweepRequest) -> dict:
    return sweep_report(_scenario(req.scenario), req.seed)


def trace(req: m.TraceRequest) -> dict:
    with tempfile.NamedTemporaryFile("w", suffix=".csv", delete=False) as fh:
        fh.write(req.trace_csv)
        path = fh.name
    try:
        table = load_trace_csv(path)
    finally:
        os.unlink(path)
    return trace_report(_scenario(req.scenario), table, req.seed)


# route path (under /v1) -> (request model, handler)
ANALYTIC_ROUTES = {
    "analytic/erlang-c": (m.ErlangCRequest, erlang_c),
    "analytic/mmk-wait": (m.MmkWaitRequest, mmk_wait),
    "analytic/whitt-wait": (m.WhittWaitRequest, whitt_wait),
    "analytic/gap-mmk": (m.GapMmkRequest, gap_mmk),
    "analytic/cutoff": (m.CutoffRequest, cutoff),
    "analytic/cutoff-limit": (m.CutoffLimitRequest, cutoff_limit),
    "analytic/cloud-latency-bound": (m.GapMmkRequest, cloud_latency_bound),
    "analytic/ps": (m.PsRequest, ps),
    "analytic/wait-gg1": (m.WaitGg1Request, wait_gg1),
    "analytic/wait-ggk": (m.WaitGgkRequest, wait_ggk),
    "analytic/gap-ggk": (m.GapGgkRequest, gap_ggk),
    "analytic/gap-ggk-limit": (m.GapGgkLimitRequest, gap_ggk_limit),
    "analytic/gap-skewed": (m.GapSkewedRequest, gap_skewed),
    "analytic/min-servers": (m.MinServersRequest, min_servers),
    "analytic/capacity-ratio": (m.CapacityRatioRequest, capacity_ratio),
}

CAPACITY_ROUTES = {
    "capacity/peak": (m.PeakCapacityRequest, capacity_peak),
    "capacity/dtrp": (m.DtrpCloudRequest, capacity_dtrp),
    "capacity/dtrp-ratio": (m.CapacityRatioRequest, capacity_ratio),
    "capacity/dtrp-skewed": (m.DtrpSkewedRequest, capacity_dtrp_skewed),
}

RUN_ROUTES = {
    "simulate": (m.SimulateRequest, simulate),
    "sweep": (m.SweepRequest, sweep),
    "trace": (m.TraceRequest, trace),
}

ALL_ROUTES = {**ANALYTIC_ROUTES, **CAPACITY_ROUTES, **RUN_ROUTES}
