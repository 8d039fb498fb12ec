"""Closed-form queueing results for edge-vs-cloud latency comparison.

Two unit conventions coexist, mirroring how the results are commonly
stated:

* The Whitt-style conditional-wait results (``whitt_conditional_wait``,
  ``inversion_gap_mmk``, ``cutoff_utilization``, ``cloud_latency_lower_bound``,
  ``inversion_gap_skewed``, ``min_servers_per_site``) are *dimensionless*:
  waiting times and network-gap thresholds are expressed in units of one
  mean service time (1/mu).  ``wall_clock`` converts to seconds.
* The Allen-Cunneen operations (``ac_wait_gg1``, ``ac_wait_ggk``,
  ``inversion_gap_ggk``, ``inversion_gap_ggk_limit``) carry an explicit
  service rate ``mu`` and return seconds, as does ``mmk_mean_wait``.

All functions are pure and safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, InstabilityError, NoPositiveRootError

_SQRT2 = math.sqrt(2.0)
# absolute tolerance for classifying values sitting on a branch boundary
_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class QueueParams:
    """An M/M/k- or G/G/k-style station: k servers, arrival rate lambda,
    per-server service rate mu (both in req/s)."""

    k: int
    lam: float
    mu: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"server count must be a positive integer, got {self.k}")
        if self.lam < 0:
            raise ConfigError(f"arrival rate must be >= 0, got {self.lam}")
        if not self.mu > 0:
            raise ConfigError(f"service rate must be > 0, got {self.mu}")

    @property
    def rho(self) -> float:
        return self.lam / (self.k * self.mu)


@dataclass(frozen=True)
class NetworkGap:
    """Round-trip latencies to edge and cloud; delta is the edge's network
    advantage. Units must match whatever waiting-time convention the
    caller uses (seconds or mean-service-time units)."""

    n_edge: float
    n_cloud: float

    def __post_init__(self):
        if self.n_edge < 0 or self.n_cloud < self.n_edge:
            raise ConfigError(
                f"need 0 <= n_edge <= n_cloud, got n_edge={self.n_edge}, n_cloud={self.n_cloud}"
            )

    @property
    def delta(self) -> float:
        return self.n_cloud - self.n_edge


@dataclass(frozen=True)
class SkewProfile:
    """Spatially skewed workload split: per-site weights w_i = lambda_i / sum(lambda),
    per-site utilizations, and per-site arrival rates."""

    weights: tuple
    utilizations: tuple
    rates: tuple

    def __post_init__(self):
        w, u, r = self.weights, self.utilizations, self.rates
        if not (len(w) == len(u) == len(r)) or not w:
            raise ConfigError("weights, utilizations and rates must be equally sized and nonempty")
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ConfigError("weights must be nonnegative and sum to 1 within 1e-9")
        if any(not 0.0 <= x < 1.0 for x in u):
            raise InstabilityError("every site utilization must lie in [0, 1)")
        total = sum(r)
        if total > 0 and any(abs(w[i] - r[i] / total) > 1e-9 for i in range(len(w))):
            raise ConfigError("weights must equal per-site rate fractions")

    @classmethod
    def from_rates(cls, rates, mu: float) -> "SkewProfile":
        """Single-server sites: utilization of site i is rate_i / mu."""
        rates = tuple(float(r) for r in rates)
        total = sum(rates)
        if not total > 0:
            raise ConfigError("total rate must be > 0")
        return cls(
            weights=tuple(r / total for r in rates),
            utilizations=tuple(r / mu for r in rates),
            rates=rates,
        )


@dataclass(frozen=True)
class CapacityParams:
    """Inputs to the VM-packing capacity relations.

    ``q`` is the packing factor (VMs per site lower bound), ``tau_edge``
    the expected VM upload time, ``c_edge`` the edge capacity in servers.
    The remaining positive reals (sigma_s, beta, area, speed, batch,
    gamma) parameterize the spatially skewed variant and are opaque
    caller-supplied constants.
    """

    q: float = 1.0
    rho_edge: float = 0.0
    rho_cloud: float = 0.0
    tau_edge: float = 0.0
    c_edge: float = 1.0
    sigma_s: float = 0.0
    beta: float = 0.0
    area: float = 1.0
    speed: float = 1.0
    batch: float = 1.0
    gamma: float = 1.0


def erlang_b(k: int, offered_load: float) -> float:
    """Erlang-B blocking probability via the stable recursion
    B(n) = a*B(n-1) / (n + a*B(n-1))."""
    if int(k) != k or k < 1:
        raise ConfigError(f"server count must be a positive integer, got {k}")
    if offered_load < 0:
        raise ConfigError(f"offered load must be >= 0, got {offered_load}")
    b = 1.0
    for n in range(1, int(k) + 1):
        b = offered_load * b / (n + offered_load * b)
    return b


def erlang_c(k: int, offered_load: float) -> float:
    """Exact M/M/k probability that an arrival must wait.

    ``offered_load`` is a = lambda/mu; requires a < k for stability.
    """
    if int(k) != k or k < 1:
        raise ConfigError(f"server count must be a positive integer, got {k}")
    if offered_load < 0:
        raise ConfigError(f"offered load must be >= 0, got {offered_load}")
    if offered_load >= k:
        raise InstabilityError(f"offered load {offered_load} must be below server count {k}")
    b = erlang_b(k, offered_load)
    rho = offered_load / k
    return b / (1.0 - rho * (1.0 - b))


def mmk_mean_wait(params: QueueParams) -> float:
    """Exact M/M/k mean waiting time in seconds: C(k, a) / (k*mu - lambda)."""
    if params.lam == 0.0:
        return 0.0
    c = erlang_c(params.k, params.lam / params.mu)
    return c / (params.k * params.mu - params.lam)


def whitt_conditional_wait(k: int, rho: float) -> float:
    """Expected wait given waiting, sqrt(2) / ((1-rho) * sqrt(k)), in units
    of mean service time."""
    if int(k) != k or k < 1:
        raise ConfigError(f"server count must be a positive integer, got {k}")
    if not 0.0 <= rho < 1.0:
        raise InstabilityError(f"utilization must be in [0, 1), got {rho}")
    return _SQRT2 / ((1.0 - rho) * math.sqrt(k))


def inversion_gap_mmk(k: int, rho_edge: float, rho_cloud: float) -> float:
    """Network-gap threshold below which a k-site edge is predicted to lose.

    Returns sqrt(2) * (1/(1-rho_edge) - 1/(sqrt(k)*(1-rho_cloud))) in mean
    service time units; inversion is predicted iff delta_n < this value.
    """
    return whitt_conditional_wait(1, rho_edge) - whitt_conditional_wait(k, rho_cloud)


def cloud_latency_lower_bound(k: int, rho_edge: float, rho_cloud: float) -> float:
    """Cloud RTT (service-time units) below which the edge always yields
    worse end-to-end latency, even with a zero-latency edge network."""
    return inversion_gap_mmk(k, rho_edge, rho_cloud)


def _cutoff_constant(mode: str) -> float:
    if mode == "paper":
        return 2.0
    if mode == "exact":
        return _SQRT2
    raise ConfigError(f"constant_mode must be 'paper' or 'exact', got {mode!r}")


def cutoff_utilization(k: int, delta_n: float, mode: str = "paper") -> float:
    """Edge utilization above which inversion is predicted for a balanced
    k-site edge: 1 - (c/delta_n) * (1 - 1/sqrt(k)), clamped to [0, 1).

    ``delta_n`` is dimensionless (mean service time units). mode='paper'
    uses the published constant c=2; mode='exact' the c=sqrt(2) implied by
    the underlying waiting-time bound. k=1 returns 1.0: a single-site edge
    never inverts.
    """
    if int(k) != k or k < 1:
        raise ConfigError(f"server count must be a positive integer, got {k}")
    if not delta_n > 0:
        raise ConfigError(f"delta_n must be > 0, got {delta_n}")
    if k == 1:
        return 1.0
    c = _cutoff_constant(mode)
    val = 1.0 - (c / delta_n) * (1.0 - 1.0 / math.sqrt(k))
    return min(max(val, 0.0), 1.0)


def cutoff_utilization_limit(delta_n: float, mode: str = "paper") -> float:
    """Many-site limit of cutoff_utilization: 1 - c/delta_n, clamped to [0, 1)."""
    if not delta_n > 0:
        raise ConfigError(f"delta_n must be > 0, got {delta_n}")
    val = 1.0 - _cutoff_constant(mode) / delta_n
    return min(max(val, 0.0), 1.0)


def ps_approx(k: int, rho: float) -> float:
    """Approximate steady-state probability that an arrival waits.

    (rho^k + rho)/2 in the high-utilization regime (rho > 0.7, boundary
    included), rho^((k+1)/2) below it.
    """
    if int(k) != k or k < 1:
        raise ConfigError(f"server count must be a positive integer, got {k}")
    if not 0.0 <= rho < 1.0:
        raise InstabilityError(f"utilization must be in [0, 1), got {rho}")
    if rho >= 0.7 - _BOUNDARY_TOL:
        return (rho ** k + rho) / 2.0
    return rho ** ((k + 1) / 2.0)


def ac_wait_gg1(rho: float, mu: float, ca2: float, cb2: float) -> float:
    """Allen-Cunneen mean wait for a G/G/1 queue, in seconds:
    rho/(mu*(1-rho)) * (ca2 + cb2)/2."""
    if not mu > 0:
        raise ConfigError(f"service rate must be > 0, got {mu}")
    if ca2 < 0 or cb2 < 0:
        raise ConfigError("squared CoVs must be >= 0")
    if not 0.0 <= rho < 1.0:
        raise InstabilityError(f"utilization must be in [0, 1), got {rho}")
    return rho / (mu * (1.0 - rho)) * (ca2 + cb2) / 2.0


def ac_wait_ggk(params: QueueParams, ca2: float, cb2: float) -> float:
    """Allen-Cunneen mean wait for a G/G/k queue, in seconds:
    P_s/(mu*(1-rho)) * (ca2 + cb2)/(2k), with P_s from ps_approx."""
    if ca2 < 0 or cb2 < 0:
        raise ConfigError("squared CoVs must be >= 0")
    rho = params.rho
    if rho >= 1.0:
        raise InstabilityError(f"utilization must be below 1, got {rho}")
    if rho == 0.0:
        return 0.0
    ps = ps_approx(params.k, rho)
    return ps / (params.mu * (1.0 - rho)) * (ca2 + cb2) / (2.0 * params.k)


def inversion_gap_ggk(
    k: int,
    rho_edge: float,
    mu: float,
    ca2_edge: float,
    cb2: float,
    rho_cloud: float,
    ca2_cloud: float,
) -> float:
    """G/G network-gap threshold in seconds for one-server edge sites vs a
    pooled k-server cloud.

    Edge term is the G/G/1 Allen-Cunneen wait with the edge's arrival
    burstiness; the cloud term uses the high-utilization waiting
    probability (rho^k + rho)/2, the cloud arrival burstiness, the shared
    service burstiness ``cb2``, and the same service rate on both sides.
    Inversion is predicted iff delta_n (seconds) < returned value.
    """
    if not mu > 0:
        raise ConfigError(f"service rate must be > 0, got {mu}")
    if int(k) != k or k < 1:
        raise ConfigError(f"server count must be a positive integer, got {k}")
    if not (0.0 <= rho_edge < 1.0 and 0.0 <= rho_cloud < 1.0):
        raise InstabilityError("both utilizations must be in [0, 1)")
    edge_term = ac_wait_gg1(rho_edge, mu, ca2_edge, cb2)
    ps_high = (rho_cloud ** k + rho_cloud) / 2.0
    cloud_term = ps_high / (mu * (1.0 - rho_cloud)) * (ca2_cloud + cb2) / (2.0 * k)
    return edge_term - cloud_term


def inversion_gap_ggk_limit(rho_edge: float, mu: float, ca2: float, cb2: float) -> float:
    """Many-site limit of the G/G threshold: the edge G/G/1 wait alone
    (seconds); a function of the edge workload parameters only."""
    return ac_wait_gg1(rho_edge, mu, ca2, cb2)


def inversion_gap_skewed(profile: SkewProfile, k: int, rho_cloud: float) -> float:
    """Network-gap threshold (service-time units) under a spatially skewed
    workload: sqrt(2) * (sum_i w_i/(1-rho_i) - 1/(sqrt(k)*(1-rho_cloud)))."""
    site_term = sum(
        w / (1.0 - rho) for w, rho in zip(profile.weights, profile.utilizations)
    )
    return _SQRT2 * site_term - whitt_conditional_wait(k, rho_cloud)


def min_servers_per_site(
    delta_n: float, lambda_i: float, mu: float, k: int, lambda_total: float
) -> int:
    """Smallest per-site server count k_i avoiding predicted inversion.

    Scans k_i upward from the smallest stable value until
    delta_n >= sqrt(2) * (1/(sqrt(k_i)*(1-lambda_i/(mu*k_i))) -
    1/(sqrt(k)*(1-lambda_total/(mu*k)))). ``delta_n`` is dimensionless.
    Monotonicity of the gap in k_i is not assumed.
    """
    if not mu > 0:
        raise ConfigError(f"service rate must be > 0, got {mu}")
    if lambda_i < 0 or lambda_total < 0:
        raise ConfigError("arrival rates must be >= 0")
    if delta_n < 0:
        raise ConfigError(f"delta_n must be >= 0, got {delta_n}")
    if lambda_total >= k * mu:
        raise InstabilityError("cloud side must be stable: lambda_total < k * mu")
    cloud_term = whitt_conditional_wait(k, lambda_total / (k * mu))
    k_i = max(1, math.floor(lambda_i / mu) + 1)
    cap = 10 ** 6
    while k_i <= cap:
        rho_i = lambda_i / (mu * k_i)
        if rho_i < 1.0:
            gap = whitt_conditional_wait(k_i, rho_i) - cloud_term
            if delta_n >= gap:
                return k_i
        k_i += 1
    raise ConfigError("no per-site server count up to 1e6 satisfies the bound")


def peak_capacity(lam: float, k: int) -> tuple[float, float]:
    """Two-sigma peak provisioning for Poisson load split over k sites:
    (cloud, edge) = (lambda + 2*sqrt(lambda), lambda + 2*sqrt(k*lambda))."""
    if lam < 0:
        raise ConfigError(f"rate must be >= 0, got {lam}")
    if int(k) != k or k < 1:
        raise ConfigError(f"site count must be a positive integer, got {k}")
    return lam + 2.0 * math.sqrt(lam), lam + 2.0 * math.sqrt(k * lam)


def dtrp_capacity_ratio(q: float) -> float:
    """Edge-over-cloud capacity scaling factor 1 + 1/q for packing factor q >= 1."""
    if not q >= 1:
        raise ConfigError(f"packing factor must be >= 1, got {q}")
    return 1.0 + 1.0 / q


def dtrp_cloud_capacity(cp: CapacityParams) -> float:
    """Centralized capacity giving the same packing performance as an edge
    of capacity c_edge:

        C_cloud = C_edge * (1 - rho_edge - tau_edge/C_edge)^2
                  / ((1 + 1/q) * (1 - rho_cloud)^2)

    Under the equivalent-utilization premise (rho_edge >= rho_cloud) the
    result is strictly below c_edge.
    """
    if not cp.q >= 1:
        raise ConfigError(f"packing factor must be >= 1, got {cp.q}")
    if not cp.c_edge > 0:
        raise ConfigError(f"edge capacity must be > 0, got {cp.c_edge}")
    if not 0.0 <= cp.rho_cloud < 1.0:
        raise InstabilityError(f"cloud utilization must be in [0, 1), got {cp.rho_cloud}")
    headroom = 1.0 - cp.rho_edge - cp.tau_edge / cp.c_edge
    if headroom <= 0.0:
        raise InstabilityError(
            "edge headroom 1 - rho_edge - tau_edge/c_edge must be positive"
        )
    return cp.c_edge * headroom ** 2 / ((1.0 + 1.0 / cp.q) * (1.0 - cp.rho_cloud) ** 2)


def skewed_capacity_residual(
    c_edge: float,
    cp: CapacityParams,
    lambda_edge: float,
    k_edge: int,
    mu_cloud: float,
    c_cloud: float,
) -> float:
    """Imbalance of the skewed capacity equation at a candidate c_edge;
    zero at a solution of dtrp_skewed_edge_capacity."""
    g = cp.beta * math.sqrt(cp.area) / (cp.speed * math.sqrt(cp.batch))
    rhs_wait = (cp.rho_cloud ** 2 + cp.rho_cloud) / (
        2.0 * c_cloud * mu_cloud * (1.0 - cp.rho_cloud)
    )
    lhs = lambda_edge * (1.0 / lambda_edge ** 2 + (cp.sigma_s * k_edge / c_edge) ** 2)
    rhs = 2.0 * rhs_wait * (1.0 - lambda_edge / (mu_cloud * c_edge) - lambda_edge * g / c_edge)
    return lhs - rhs


def dtrp_skewed_edge_capacity(
    cp: CapacityParams,
    lambda_edge: float,
    k_edge: int,
    mu_cloud: float,
    c_cloud: float,
) -> float:
    """Edge capacity matching a given cloud's packing performance under
    spatially skewed VM arrivals.

    Balances the heavy-traffic edge placement wait against the pooled
    cloud wait, with the edge utilization induced by the solved capacity
    and the service-time spread scaled by the per-site capacity share:

        lambda*(1/lambda^2 + (sigma_s*k_edge/C)^2)
            = 2*R*(1 - lambda/(mu*C) - (lambda/C)*beta*sqrt(area)/(speed*sqrt(batch)))

    where R = (rho_cloud^2 + rho_cloud) / (2*c_cloud*mu*(1-rho_cloud)).
    Cross-multiplying by C^2 gives a quadratic; returns its positive root.
    Raises NoPositiveRootError when the discriminant is negative or no
    positive real root exists (e.g. extreme sigma_s).
    """
    if not lambda_edge > 0:
        raise ConfigError(f"edge arrival rate must be > 0, got {lambda_edge}")
    if int(k_edge) != k_edge or k_edge < 1:
        raise ConfigError(f"site count must be a positive integer, got {k_edge}")
    if not mu_cloud > 0:
        raise ConfigError(f"cloud service rate must be > 0, got {mu_cloud}")
    if not c_cloud > 0:
        raise ConfigError(f"cloud capacity must be > 0, got {c_cloud}")
    if not 0.0 < cp.rho_cloud < 1.0:
        raise InstabilityError(f"cloud utilization must be in (0, 1), got {cp.rho_cloud}")
    if cp.sigma_s < 0 or cp.beta < 0:
        raise ConfigError("sigma_s and beta must be >= 0")
    if not (cp.area > 0 and cp.speed > 0 and cp.batch > 0):
        raise ConfigError("area, speed and batch must be > 0")

    g = cp.beta * math.sqrt(cp.area) / (cp.speed * math.sqrt(cp.batch))
    r = (cp.rho_cloud ** 2 + cp.rho_cloud) / (
        2.0 * c_cloud * mu_cloud * (1.0 - cp.rho_cloud)
    )
    # quadratic a*C^2 + b*C + c = 0 from the balance equation times C^2
    a = 2.0 * r - 1.0 / lambda_edge
    b = -2.0 * r * lambda_edge * (1.0 / mu_cloud + g)
    c = -lambda_edge * (cp.sigma_s * k_edge) ** 2

    if abs(a) <= _BOUNDARY_TOL:
        if b >= 0:
            raise NoPositiveRootError("degenerate balance equation has no positive root")
        root = -c / b
        if root <= 0:
            raise NoPositiveRootError("degenerate balance equation has no positive root")
        return root
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise NoPositiveRootError("negative discriminant: no real capacity solves the balance")
    sq = math.sqrt(disc)
    roots = [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)]
    positive = [x for x in roots if x > 0]
    if not positive:
        raise NoPositiveRootError("no positive real root for the skewed capacity equation")
    return max(positive)


def wall_clock(value_in_service_units: float, mu: float) -> float:
    """Convert a dimensionless waiting time (mean-service-time units) to
    seconds by multiplying with the mean service time 1/mu."""
    if not mu > 0:
        raise ConfigError(f"service rate must be > 0, got {mu}")
    return value_in_service_units / mu
