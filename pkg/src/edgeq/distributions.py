"""Seedable random-variate generation with controlled mean and burstiness.

Every arrival and service process in the simulator is described by a
``DistributionSpec`` (immutable, shareable) and sampled through a
``RandomStream`` (single-owner, splittable). Both mean and squared
coefficient of variation (scv) are available in closed form for every
variant except ``empirical``, and ``fit_scv`` builds a spec matching a
requested (mean, scv) pair.

The generator is a SplitMix-style 64-bit mixer: each stream owns a Weyl
state advanced by a per-stream odd increment, with the standard 64-bit
finalizer applied to each state.  This keeps every (seed, stream_id)
pair bitwise reproducible across runs and platforms with no external
dependencies.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_TO_UNIT = 2.0 ** -53


def _mix64(z: int) -> int:
    """SplitMix64 finalizer (Stafford mix13)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, tag: int) -> int:
    """Deterministically derive an independent 64-bit seed from (seed, tag)."""
    return _mix64((seed & _MASK64) ^ _mix64(tag & _MASK64))


class RandomStream:
    """Deterministic pseudo-random stream identified by (seed, stream_id).

    Identical (seed, stream_id) pairs produce bitwise-identical draw
    sequences; distinct stream ids get distinct Weyl increments and are
    statistically independent for simulation purposes.  A stream is
    mutable single-owner state: never share one instance between
    concurrent consumers, derive substreams instead.
    """

    __slots__ = ("seed", "stream_id", "_state", "_gamma")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = seed & _MASK64
        self.stream_id = stream_id & _MASK64
        self._state = _mix64(self.seed ^ _mix64(self.stream_id))
        # per-stream increment, forced odd so it generates the full cycle
        self._gamma = _mix64(self.stream_id ^ _GOLDEN) | 1

    def substream(self, index: int) -> "RandomStream":
        """Derive an independent child stream; same (seed, index) -> same child."""
        return RandomStream(self.seed, _mix64(self.stream_id ^ ((index + 1) * _GOLDEN)))

    def next_u64(self) -> int:
        self._state = (self._state + self._gamma) & _MASK64
        return _mix64(self._state)

    def uniform(self) -> float:
        """One draw in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * _TO_UNIT

    def uniforms(self, n: int) -> np.ndarray:
        """Vectorized uniforms; consumes exactly n states, same values as n
        scalar uniform() calls."""
        if n <= 0:
            return np.empty(0, dtype=np.float64)
        with np.errstate(over="ignore"):
            steps = np.arange(1, n + 1, dtype=np.uint64)
            z = np.uint64(self._state) + steps * np.uint64(self._gamma)
            self._state = (self._state + n * self._gamma) & _MASK64
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) * _TO_UNIT

    def expovariate(self, rate: float) -> float:
        return -math.log1p(-self.uniform()) / rate

    def normal(self) -> float:
        """Standard normal via the polar (Marsaglia) method.

        Consumes uniform pairs until acceptance; the spare variate of an
        accepted pair is discarded so consumption depends only on the
        accepted-pair positions, not on caller-side buffering.
        """
        while True:
            v1 = 2.0 * self.uniform() - 1.0
            v2 = 2.0 * self.uniform() - 1.0
            s = v1 * v1 + v2 * v2
            if 0.0 < s < 1.0:
                return v1 * math.sqrt(-2.0 * math.log(s) / s)


_VARIANTS = ("exponential", "deterministic", "erlang", "hyperexp2", "lognormal", "empirical")


@dataclass(frozen=True)
class DistributionSpec:
    """Declarative description of a nonnegative time distribution.

    ``kind`` is one of exponential / deterministic / erlang / hyperexp2 /
    lognormal / empirical; ``params`` holds the variant's parameters.
    Use the factory functions below rather than constructing directly.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in _VARIANTS:
            raise ConfigError(f"unknown distribution kind {self.kind!r}")

    @property
    def mean(self) -> float:
        return moments(self)[0]

    @property
    def scv(self) -> float:
        return moments(self)[1]

    def __str__(self) -> str:
        return format_spec(self)


def exponential(rate: float) -> DistributionSpec:
    if not rate > 0:
        raise ConfigError(f"exponential rate must be > 0, got {rate}")
    return DistributionSpec("exponential", (float(rate),))


def deterministic(value: float) -> DistributionSpec:
    # zero allowed: deterministic(0) models a free network hop
    if value < 0:
        raise ConfigError(f"deterministic value must be >= 0, got {value}")
    return DistributionSpec("deterministic", (float(value),))


def erlang(phases: int, rate: float) -> DistributionSpec:
    if int(phases) != phases or phases < 1:
        raise ConfigError(f"erlang phases must be a positive integer, got {phases}")
    if not rate > 0:
        raise ConfigError(f"erlang rate must be > 0, got {rate}")
    return DistributionSpec("erlang", (int(phases), float(rate)))


def hyperexp2(p: float, rate1: float, rate2: float) -> DistributionSpec:
    if not 0.0 < p < 1.0:
        raise ConfigError(f"hyperexp2 branch probability must be in (0, 1), got {p}")
    if not (rate1 > 0 and rate2 > 0):
        raise ConfigError(f"hyperexp2 rates must be > 0, got {rate1}, {rate2}")
    return DistributionSpec("hyperexp2", (float(p), float(rate1), float(rate2)))


def lognormal(location: float, scale: float) -> DistributionSpec:
    if not scale > 0:
        raise ConfigError(f"lognormal scale must be > 0, got {scale}")
    return DistributionSpec("lognormal", (float(location), float(scale)))


def empirical(samples) -> DistributionSpec:
    vals = tuple(float(s) for s in samples)
    if not vals:
        raise ConfigError("empirical distribution needs at least one sample")
    if any(v < 0 for v in vals):
        raise ConfigError("empirical samples must be nonnegative")
    return DistributionSpec("empirical", vals)


def moments(spec: DistributionSpec) -> tuple[float, float]:
    """Closed-form (mean, scv); sample moments for the empirical variant."""
    k, p = spec.kind, spec.params
    if k == "exponential":
        return 1.0 / p[0], 1.0
    if k == "deterministic":
        return p[0], 0.0
    if k == "erlang":
        m, rate = p
        return m / rate, 1.0 / m
    if k == "hyperexp2":
        prob, r1, r2 = p
        mean = prob / r1 + (1.0 - prob) / r2
        second = 2.0 * prob / (r1 * r1) + 2.0 * (1.0 - prob) / (r2 * r2)
        return mean, second / (mean * mean) - 1.0
    if k == "lognormal":
        mu, sigma = p
        mean = math.exp(mu + sigma * sigma / 2.0)
        return mean, math.expm1(sigma * sigma)
    # empirical
    if len(p) < 2:
        raise ConfigError("empirical moments need at least 2 samples")
    arr = np.asarray(p)
    mean = float(arr.mean())
    if mean == 0.0:
        raise ConfigError("empirical samples have zero mean")
    return mean, float(arr.var() / (mean * mean))


def sample(spec: DistributionSpec, stream: RandomStream) -> float:
    """One nonnegative variate from ``spec`` using ``stream``."""
    return float(sample_array(spec, stream, 1)[0])


def sample_array(spec: DistributionSpec, stream: RandomStream, n: int) -> np.ndarray:
    """n variates; consumes the stream exactly like n scalar sample() calls."""
    k, p = spec.kind, spec.params
    if k == "deterministic":
        return np.full(n, p[0])
    if k == "exponential":
        return -np.log1p(-stream.uniforms(n)) / p[0]
    if k == "erlang":
        m, rate = p
        u = stream.uniforms(n * m).reshape(n, m)
        return (-np.log1p(-u) / rate).sum(axis=1)
    if k == "hyperexp2":
        prob, r1, r2 = p
        u = stream.uniforms(2 * n).reshape(n, 2)
        rates = np.where(u[:, 0] < prob, r1, r2)
        return -np.log1p(-u[:, 1]) / rates
    if k == "lognormal":
        mu, sigma = p
        out = np.empty(n)
        for i in range(n):
            out[i] = math.exp(mu + sigma * stream.normal())
        return out
    # empirical: uniform index with replacement
    vals = np.asarray(p)
    idx = np.minimum((stream.uniforms(n) * len(vals)).astype(np.int64), len(vals) - 1)
    return vals[idx]


def fit_scv(mean: float, scv: float) -> DistributionSpec:
    """Build a spec with the requested mean and squared CoV.

    scv == 1 gives exponential; scv < 1 an Erlang with round(1/scv)
    phases (mean exact, scv snapped to the nearest 1/m); scv > 1 a
    balanced-means two-phase hyperexponential (both moments exact).
    """
    if not mean > 0:
        raise ConfigError(f"fit_scv mean must be > 0, got {mean}")
    if not scv > 0:
        raise ConfigError(f"fit_scv scv must be > 0, got {scv}")
    if abs(scv - 1.0) <= 1e-12:
        return exponential(1.0 / mean)
    if scv < 1.0:
        m = max(1, round(1.0 / scv))
        return erlang(m, m / mean)
    p = 0.5 * (1.0 + math.sqrt((scv - 1.0) / (scv + 1.0)))
    return hyperexp2(p, 2.0 * p / mean, 2.0 * (1.0 - p) / mean)


_CANON = {
    "exp": "exponential",
    "exponential": "exponential",
    "det": "deterministic",
    "deterministic": "deterministic",
    "erlang": "erlang",
    "hyperexp2": "hyperexp2",
    "lognormal": "lognormal",
}

_SPEC_RE = re.compile(r"^([a-z0-9]+)\(([^()]*)\)$")


def parse_spec(text: str) -> DistributionSpec:
    """Parse the canonical text form, e.g. ``exp(12.0)`` or ``erlang(4,48.0)``.

    Case-insensitive; whitespace is ignored. The empirical variant has no
    text form (it only arises programmatically).
    """
    compact = re.sub(r"\s+", "", text).lower()
    m = _SPEC_RE.match(compact)
    if not m:
        raise ConfigError(f"cannot parse distribution spec {text!r}")
    name, argtext = m.groups()
    kind = _CANON.get(name)
    if kind is None:
        raise ConfigError(f"unknown distribution {name!r} in {text!r}")
    try:
        args = [float(a) for a in argtext.split(",")] if argtext else []
    except ValueError:
        raise ConfigError(f"bad numeric arguments in distribution spec {text!r}") from None
    arity = {"exponential": 1, "deterministic": 1, "erlang": 2, "hyperexp2": 3, "lognormal": 2}[kind]
    if len(args) != arity:
        raise ConfigError(f"{name} expects {arity} argument(s), got {len(args)} in {text!r}")
    if kind == "exponential":
        return exponential(args[0])
    if kind == "deterministic":
        return deterministic(args[0])
    if kind == "erlang":
        if args[0] != int(args[0]):
            raise ConfigError(f"erlang phases must be an integer in {text!r}")
        return erlang(int(args[0]), args[1])
    if kind == "hyperexp2":
        return hyperexp2(args[0], args[1], args[2])
    return lognormal(args[0], args[1])


def format_spec(spec: DistributionSpec) -> str:
    """Canonical text form; inverse of parse_spec for non-empirical specs."""
    k, p = spec.kind, spec.params
    if k == "exponential":
        return f"exp({p[0]:.12g})"
    if k == "deterministic":
        return f"det({p[0]:.12g})"
    if k == "erlang":
        return f"erlang({p[0]},{p[1]:.12g})"
    if k == "hyperexp2":
        return f"hyperexp2({p[0]:.12g},{p[1]:.12g},{p[2]:.12g})"
    if k == "lognormal":
        return f"lognormal({p[0]:.12g},{p[1]:.12g})"
    raise ConfigError("empirical distributions have no canonical text form")
