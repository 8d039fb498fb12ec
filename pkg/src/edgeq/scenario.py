"""Scenario configuration: the deployment matrix for one experiment.

Scenarios are written as plain-text INI files with a ``[scenario]``
section whose keys match the field names below (units are part of the
key name, e.g. ``horizon_s``, ``mu_req_per_s``). A previously emitted
JSON report can also be used as a config: its embedded resolved
``scenario`` object is loaded, which reproduces the original run
byte-for-byte.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, fields
from typing import Optional

from . import distributions as dist
from .errors import ConfigError

ROUTING_CHOICES = ("per_site", "weighted", "jsq")
ARRIVAL_CHOICES = ("poisson", "renewal")


@dataclass(frozen=True)
class Scenario:
    """Edge/cloud deployment matrix plus workload and run controls.

    ``cloud_servers`` defaults to k_sites * servers_per_site (the equal
    aggregate-resources assumption) unless explicitly overridden.
    Exactly one of ``per_site_rate_req_per_s`` / ``rate_sweep_req_per_s``
    must be set. Rates are per site; with ``skew_weights`` the aggregate
    k_sites * rate is split across sites in proportion to the weights.
    """

    k_sites: int
    mu_req_per_s: float
    n_edge: dist.DistributionSpec
    n_cloud: dist.DistributionSpec
    servers_per_site: int = 1
    cloud_servers: Optional[int] = None
    per_site_rate_req_per_s: Optional[float] = None
    rate_sweep_req_per_s: Optional[tuple[float, ...]] = None
    arrival: str = "poisson"
    arrival_scv: float = 1.0
    service: Optional[dist.DistributionSpec] = None
    skew_weights: Optional[tuple[float, ...]] = None
    routing: str = "per_site"
    seed: int = 1
    horizon_s: float = 300.0
    warmup_s: Optional[float] = None
    replications: int = 5

    def __post_init__(self):
        if self.k_sites < 1 or self.servers_per_site < 1:
            raise ConfigError("k_sites and servers_per_site must be positive integers")
        if not self.mu_req_per_s > 0:
            raise ConfigError("mu_req_per_s must be > 0")
        if self.cloud_servers is None:
            object.__setattr__(self, "cloud_servers", self.k_sites * self.servers_per_site)
        if self.cloud_servers < 1:
            raise ConfigError("cloud_servers must be a positive integer")
        if self.per_site_rate_req_per_s is not None and self.rate_sweep_req_per_s is not None:
            raise ConfigError(
                "set at most one of per_site_rate_req_per_s / rate_sweep_req_per_s"
            )
        if self.per_site_rate_req_per_s is not None and self.per_site_rate_req_per_s < 0:
            raise ConfigError("per_site_rate_req_per_s must be >= 0")
        if self.rate_sweep_req_per_s is not None:
            if len(self.rate_sweep_req_per_s) < 2:
                raise ConfigError("rate_sweep_req_per_s needs at least 2 points")
            if any(r < 0 for r in self.rate_sweep_req_per_s):
                raise ConfigError("sweep rates must be >= 0")
        if self.arrival not in ARRIVAL_CHOICES:
            raise ConfigError(f"arrival must be one of {ARRIVAL_CHOICES}, got {self.arrival!r}")
        if not self.arrival_scv > 0:
            raise ConfigError("arrival_scv must be > 0")
        if self.service is None:
            object.__setattr__(self, "service", dist.exponential(self.mu_req_per_s))
        svc_mean = self.service.mean
        if abs(svc_mean * self.mu_req_per_s - 1.0) > 1e-6:
            raise ConfigError(
                f"service mean {svc_mean:g}s is inconsistent with mu_req_per_s="
                f"{self.mu_req_per_s:g} (expected {1.0 / self.mu_req_per_s:g}s)"
            )
        if self.skew_weights is not None:
            if len(self.skew_weights) != self.k_sites:
                raise ConfigError("skew_weights must have one entry per site")
            if any(w < 0 for w in self.skew_weights) or abs(sum(self.skew_weights) - 1.0) > 1e-9:
                raise ConfigError("skew_weights must be nonnegative and sum to 1")
        if self.routing not in ROUTING_CHOICES:
            raise ConfigError(f"routing must be one of {ROUTING_CHOICES}, got {self.routing!r}")
        if self.horizon_s <= 0:
            raise ConfigError("horizon_s must be > 0")
        if self.warmup_s is not None and not 0 <= self.warmup_s < self.horizon_s:
            raise ConfigError("need 0 <= warmup_s < horizon_s")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")

    @property
    def rates(self) -> tuple[float, ...]:
        if self.rate_sweep_req_per_s is not None:
            return self.rate_sweep_req_per_s
        if self.per_site_rate_req_per_s is None:
            raise ConfigError(
                "scenario has neither per_site_rate_req_per_s nor rate_sweep_req_per_s"
            )
        return (self.per_site_rate_req_per_s,)

    def rho_edge(self, rate: float) -> float:
        return rate / (self.servers_per_site * self.mu_req_per_s)

    def warmup_for(self, rate: float) -> float:
        """Configured warmup, or the default: max(10% of horizon,
        10*k/(mu*(1-rho))) seconds, capped at half the horizon."""
        if self.warmup_s is not None:
            return self.warmup_s
        rho_cloud = rate * self.k_sites / (self.cloud_servers * self.mu_req_per_s)
        rho = max(self.rho_edge(rate), rho_cloud)
        headroom = max(1.0 - rho, 1e-9)
        transient = 10.0 * self.cloud_servers / (self.mu_req_per_s * headroom)
        return min(max(0.1 * self.horizon_s, transient), 0.5 * self.horizon_s)


_INT_KEYS = {"k_sites", "servers_per_site", "cloud_servers", "seed", "replications"}
_FLOAT_KEYS = {"mu_req_per_s", "per_site_rate_req_per_s", "arrival_scv", "horizon_s", "warmup_s"}
_SPEC_KEYS = {"n_edge", "n_cloud", "service"}
_LIST_KEYS = {"rate_sweep_req_per_s", "skew_weights"}
_STR_KEYS = {"arrival", "routing"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _SPEC_KEYS | _LIST_KEYS | _STR_KEYS


def _parse_value(key: str, raw):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _SPEC_KEYS:
            return raw if isinstance(raw, dist.DistributionSpec) else dist.parse_spec(str(raw))
        if key in _LIST_KEYS:
            if isinstance(raw, (list, tuple)):
                return tuple(float(x) for x in raw)
            return tuple(float(x) for x in str(raw).split(",") if x.strip())
        return str(raw)
    except (ValueError, TypeError):
        raise ConfigError(f"scenario.{key}: cannot parse value {raw!r}") from None


def scenario_from_dict(data: dict) -> Scenario:
    kwargs = {}
    for key, raw in data.items():
        if key not in _ALL_KEYS:
            raise ConfigError(f"scenario.{key}: unknown key")
        if raw is None:
            continue
        kwargs[key] = _parse_value(key, raw)
    missing = [k for k in ("k_sites", "mu_req_per_s", "n_edge", "n_cloud") if k not in kwargs]
    if missing:
        raise ConfigError(f"scenario is missing required keys: {', '.join(missing)}")
    return Scenario(**kwargs)


def scenario_to_dict(sc: Scenario) -> dict:
    """JSON-friendly resolved form (all defaults materialized)."""
    out = {}
    for f in fields(Scenario):
        val = getattr(sc, f.name)
        if val is None:
            continue
        if isinstance(val, dist.DistributionSpec):
            val = dist.format_spec(val)
        elif isinstance(val, tuple):
            val = list(val)
        out[f.name] = val
    return out


def load_config_dict(path) -> dict:
    """Raw scenario key/value mapping from an INI config or a JSON report."""
    text = _read(path)
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        data = doc.get("scenario", doc)
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: JSON config must hold a scenario object")
        return data
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not parser.has_section("scenario"):
        raise ConfigError(f"{path}: missing [scenario] section")
    return dict(parser.items("scenario"))


def load_config(path) -> Scenario:
    """Load a scenario from an INI config file or an emitted JSON report."""
    return scenario_from_dict(load_config_dict(path))


def _read(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()
