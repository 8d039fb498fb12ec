"""Pydantic request/response models shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field


class ErlangCRequest(BaseModel):
    k: int
    offered_load: float = Field(alias="a")
    model_config = ConfigDict(populate_by_name=True)


class MmkWaitRequest(BaseModel):
    k: int
    lam: float = Field(alias="lambda")
    mu: float
    model_config = ConfigDict(populate_by_name=True)


class WhittWaitRequest(BaseModel):
    k: int
    rho: float


class GapMmkRequest(BaseModel):
    k: int
    rho_edge: float
    rho_cloud: float


class CutoffRequest(BaseModel):
    k: int
    delta_n: float
    mode: Literal["paper", "exact"] = "paper"


class CutoffLimitRequest(BaseModel):
    delta_n: float
    mode: Literal["paper", "exact"] = "paper"


class PsRequest(BaseModel):
    k: int
    rho: float


class WaitGg1Request(BaseModel):
    rho: float
    mu: float
    ca2: float = 1.0
    cb2: float = 1.0


class WaitGgkRequest(BaseModel):
    k: int
    lam: float = Field(alias="lambda")
    mu: float
    ca2: float = 1.0
    cb2: float = 1.0
    model_config = ConfigDict(populate_by_name=True)


class GapGgkRequest(BaseModel):
    k: int
    rho_edge: float
    mu: float
    ca2_edge: float = 1.0
    cb2: float = 1.0
    rho_cloud: float
    ca2_cloud: float = 1.0


class GapGgkLimitRequest(BaseModel):
    rho_edge: float
    mu: float
    ca2: float = 1.0
    cb2: float = 1.0


class GapSkewedRequest(BaseModel):
    rates: list[float]
    mu: float
    k: int
    rho_cloud: float


class MinServersRequest(BaseModel):
    delta_n: float
    lambda_i: float
    mu: float
    k: int
    lambda_total: float


class PeakCapacityRequest(BaseModel):
    lam: float = Field(alias="lambda")
    k: int
    model_config = ConfigDict(populate_by_name=True)


class CapacityRatioRequest(BaseModel):
    q: float


class DtrpCloudRequest(BaseModel):
    q: float
    c_edge: float
    rho_edge: float
    rho_cloud: float
    tau: float = 0.0


class DtrpSkewedRequest(BaseModel):
    rho_cloud: float
    sigma_s: float
    beta: float
    area: float = 1.0
    speed: float = 1.0
    batch: float = 1.0
    lambda_edge: float
    k_edge: int
    mu_cloud: float
    c_cloud: float


class AnalyticResponse(BaseModel):
    """Echoes the inputs and reports one or more named result values with
    unit annotations."""

    query: str
    inputs: dict
    values: dict[str, Union[int, float]]
    units: dict[str, str]


class ScenarioModel(BaseModel):
    """Request-side mirror of the scenario config (see scenario module)."""

    k_sites: int
    mu_req_per_s: float
    n_edge: str
    n_cloud: str
    servers_per_site: int = 1
    cloud_servers: Optional[int] = None
    per_site_rate_req_per_s: Optional[float] = None
    rate_sweep_req_per_s: Optional[list[float]] = None
    arrival: str = "poisson"
    arrival_scv: float = 1.0
    service: Optional[str] = None
    skew_weights: Optional[list[float]] = None
    routing: str = "per_site"
    seed: int = 1
    horizon_s: float = 300.0
    warmup_s: Optional[float] = None
    replications: int = 5


class SimulateRequest(BaseModel):
    scenario: ScenarioModel
    seed: Optional[int] = None


class SweepRequest(BaseModel):
    scenario: ScenarioModel
    seed: Optional[int] = None


class TraceRequest(BaseModel):
    scenario: ScenarioModel
    trace_csv: str
    seed: Optional[int] = None


class HealthResponse(BaseModel):
    status: str
    version: str
