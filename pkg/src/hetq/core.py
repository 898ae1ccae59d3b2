"""Rate distributions, heavy-traffic scaling arithmetic, and configuration.

Everything here is immutable after construction and safe to share across
threads. Randomness is handled through named streams derived from a single
64-bit seed, so any consumer can ask for "the arrival stream of replication
7" and always get the same generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError

__all__ = [
    "Policy",
    "RateDistribution",
    "RateMoments",
    "HalfinWhitt",
    "SystemConfig",
    "RealizedSystem",
    "rate_moments",
    "sample_rates",
    "drift_beta",
    "drift_beta_finite",
    "rng_stream",
    "Stream",
    "parse_config_text",
    "load_config_file",
    "format_config",
    "CONFIG_KEYS",
]

_PROB_TOL = 1e-12


class Policy(Enum):
    """Routing policy for arrivals that find more than one idle server."""

    LISF = "LISF"
    FSF = "FSF"
    RANDOM = "RANDOM"


class Stream(Enum):
    """Named sub-stream purposes; keeps replications and uses independent."""

    RATES = 0
    ARRIVAL = 1
    SERVICE = 2
    ABANDON = 3
    ROUTING = 4
    SKELETON = 5
    SDE = 6


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Deterministic, independent generator for (seed, key...).

    Streams with different keys are statistically independent; the same
    (seed, key) always yields the same generator state.
    """
    ints = tuple(int(k.value) if isinstance(k, Stream) else int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=ints))


@dataclass(frozen=True)
class RateDistribution:
    """Law of a single server's service rate, supported on [p, q].

    Three shapes cover the artifact's needs: a point mass, a uniform
    interval, and a finite discrete mixture. Construct through the
    classmethods; the constructor validates support and probabilities.
    """

    kind: str
    rate: float = 0.0
    lo: float = 0.0
    hi: float = 0.0
    atoms: tuple = ()

    def __post_init__(self):
        if self.kind == "point":
            if not (0.0 < self.rate < math.inf):
                raise ConfigError(f"point rate must be in (0, inf), got {self.rate}")
        elif self.kind == "uniform":
            if not (0.0 < self.lo < self.hi < math.inf):
                raise ConfigError(f"uniform needs 0 < lo < hi, got ({self.lo}, {self.hi})")
        elif self.kind == "discrete":
            if not self.atoms:
                raise ConfigError("discrete distribution needs at least one atom")
            total = 0.0
            for rate, prob in self.atoms:
                if not (0.0 < rate < math.inf):
                    raise ConfigError(f"atom rate must be in (0, inf), got {rate}")
                if prob < 0.0:
                    raise ConfigError(f"atom probability must be >= 0, got {prob}")
                total += prob
            if abs(total - 1.0) > _PROB_TOL:
                raise ConfigError(f"atom probabilities sum to {total!r}, expected 1")
        else:
            raise ConfigError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def point(cls, rate: float) -> "RateDistribution":
        return cls(kind="point", rate=float(rate))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "RateDistribution":
        return cls(kind="uniform", lo=float(lo), hi=float(hi))

    @classmethod
    def discrete(cls, atoms: Sequence[tuple]) -> "RateDistribution":
        merged: dict = {}
        for r, p in atoms:
            r, p = float(r), float(p)
            merged[r] = merged.get(r, 0.0) + p
        return cls(kind="discrete", atoms=tuple(sorted(merged.items())))

    @property
    def p(self) -> float:
        """Lower support bound (essential infimum)."""
        if self.kind == "point":
            return self.rate
        if self.kind == "uniform":
            return self.lo
        return min(r for r, pr in self.atoms if pr > 0.0)

    @property
    def q(self) -> float:
        """Upper support bound (essential supremum)."""
        if self.kind == "point":
            return self.rate
        if self.kind == "uniform":
            return self.hi
        return max(r for r, pr in self.atoms if pr > 0.0)

    def mean(self) -> float:
        if self.kind == "point":
            return self.rate
        if self.kind == "uniform":
            return 0.5 * (self.lo + self.hi)
        return sum(r * pr for r, pr in self.atoms)

    def second_moment(self) -> float:
        if self.kind == "point":
            return self.rate * self.rate
        if self.kind == "uniform":
            # E[X^2] = (lo^2 + lo*hi + hi^2) / 3 for uniform(lo, hi)
            return (self.lo * self.lo + self.lo * self.hi + self.hi * self.hi) / 3.0
        return sum(r * r * pr for r, pr in self.atoms)

    def variance(self) -> float:
        m = self.mean()
        return max(self.second_moment() - m * m, 0.0)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise ConfigError(f"sample size must be >= 1, got {n}")
        if self.kind == "point":
            return np.full(n, self.rate)
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size=n)
        rates = np.array([r for r, _ in self.atoms])
        probs = np.array([pr for _, pr in self.atoms])
        probs = probs / probs.sum()
        idx = rng.choice(len(rates), size=n, p=probs)
        return rates[idx]


class RateMoments(NamedTuple):
    mean: float
    variance: float
    second_moment: float
    gamma_lisf: float
    gamma_fsf: float


def rate_moments(dist: RateDistribution) -> RateMoments:
    """Moments plus the policy-dependent idleness coefficients.

    gamma_lisf is the size-biased mean E[mu^2]/E[mu]; gamma_fsf is the
    lower support bound, the rate that retains all idleness under
    fastest-server-first routing.
    """
    m = dist.mean()
    m2 = dist.second_moment()
    return RateMoments(
        mean=m,
        variance=max(m2 - m * m, 0.0),
        second_moment=m2,
        gamma_lisf=m2 / m,
        gamma_fsf=dist.p,
    )


def sample_rates(dist: RateDistribution, n: int, stream: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. service rates; deterministic given the stream state."""
    return dist.sample(n, stream)


def drift_beta(theta: float, zeta: float, mu_bar: float) -> float:
    """Limit drift of the scaled headcount: -zeta - theta * mu_bar."""
    return -zeta - theta * mu_bar


def drift_beta_finite(n_servers: int, r: float, mu_bar: float, sum_mu: float, x: float) -> float:
    """Finite-scale drift -(sum_mu - N*mu_bar)/sqrt(r) - x*mu_bar."""
    return -(sum_mu - n_servers * mu_bar) / math.sqrt(r) - x * mu_bar


@dataclass(frozen=True)
class HalfinWhitt:
    """Square-root safety staffing: N = ceil(R + theta*sqrt(R)), R = lambda/mu_bar."""

    theta: float

    def __post_init__(self):
        if self.theta < 0.0:
            raise ConfigError(f"safety coefficient must be >= 0, got {self.theta}")

    def resolve(self, lambda_r: float, mu_bar: float) -> int:
        offered = lambda_r / mu_bar
        n = math.ceil(offered + self.theta * math.sqrt(offered))
        return max(int(n), 1)


Staffing = Union[int, HalfinWhitt]


@dataclass(frozen=True)
class SystemConfig:
    """Scale index, arrival law, staffing rule, policy, and seed for one system."""

    r: float
    lambda_r: float
    seed: int
    staffing: Staffing = HalfinWhitt(1.0)
    arrival_scv: float = 1.0
    abandon_rate: float = 0.0
    policy: Policy = Policy.LISF
    pools: Optional[tuple] = None  # ((beta_i, mu_i), ...), mu strictly increasing

    def __post_init__(self):
        if self.r <= 0.0:
            raise ConfigError(f"scale index r must be > 0, got {self.r}")
        if self.lambda_r < 0.0:
            raise ConfigError(f"arrival rate must be >= 0, got {self.lambda_r}")
        if self.arrival_scv < 0.0:
            raise ConfigError(f"arrival SCV must be >= 0, got {self.arrival_scv}")
        if self.abandon_rate < 0.0:
            raise ConfigError(f"abandonment rate must be >= 0, got {self.abandon_rate}")
        if isinstance(self.staffing, int):
            if self.staffing < 1:
                raise ConfigError(f"explicit staffing must be >= 1, got {self.staffing}")
        elif not isinstance(self.staffing, HalfinWhitt):
            raise ConfigError(f"staffing must be an int or HalfinWhitt, got {self.staffing!r}")
        if self.pools is not None:
            betas = [b for b, _ in self.pools]
            mus = [m for _, m in self.pools]
            if abs(sum(betas) - 1.0) > _PROB_TOL:
                raise ConfigError(f"pool fractions sum to {sum(betas)!r}, expected 1")
            if any(b <= 0.0 for b in betas):
                raise ConfigError("pool fractions must be > 0")
            if any(m2 <= m1 for m1, m2 in zip(mus, mus[1:])) or any(m <= 0.0 for m in mus):
                raise ConfigError(f"pool rates must be positive and strictly increasing, got {mus}")

    def pool_distribution(self) -> RateDistribution:
        """Discrete rate law implied by the pool structure."""
        if self.pools is None:
            raise ConfigError("config has no pools")
        return RateDistribution.discrete(tuple((m, b) for b, m in self.pools))

    def resolve_staffing(self, mu_bar: float) -> int:
        if isinstance(self.staffing, HalfinWhitt):
            if self.lambda_r <= 0.0:
                raise ConfigError("square-root staffing needs lambda_r > 0")
            return self.staffing.resolve(self.lambda_r, mu_bar)
        return self.staffing

    def theta_equivalent(self, mu_bar: float) -> float:
        """Safety coefficient implied by the staffing rule at this load."""
        if isinstance(self.staffing, HalfinWhitt):
            return self.staffing.theta
        offered = self.lambda_r / mu_bar
        return (self.staffing - offered) / math.sqrt(offered)


@dataclass(frozen=True)
class RealizedSystem:
    """A concrete system: server count and one realized rate vector.

    ``zeta_hat`` is the CLT-centered total rate (sum_mu - N*mu_bar)/sqrt(r);
    it is the finite-scale stand-in for the limit drift's random part.
    """

    n_servers: int
    mu: np.ndarray
    mu_bar: float
    r: float
    lambda_r: float
    pool_of: Optional[np.ndarray] = None
    pool_sizes: Optional[tuple] = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (self.n_servers,):
            raise ConfigError(f"rate vector has shape {mu.shape}, expected ({self.n_servers},)")
        if np.any(mu <= 0.0) or not np.all(np.isfinite(mu)):
            raise ConfigError("all service rates must be positive and finite")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        if self.pool_of is not None:
            pool_of = np.asarray(self.pool_of, dtype=np.int64)
            pool_of.setflags(write=False)
            object.__setattr__(self, "pool_of", pool_of)

    @property
    def sum_mu(self) -> float:
        return float(self.mu.sum())

    @property
    def zeta_hat(self) -> float:
        return (self.sum_mu - self.n_servers * self.mu_bar) / math.sqrt(self.r)

    @property
    def stable(self) -> bool:
        return self.sum_mu > self.lambda_r

    @property
    def n_pools(self) -> int:
        return 1 if self.pool_sizes is None else len(self.pool_sizes)

    @classmethod
    def realize(
        cls,
        config: SystemConfig,
        dist: RateDistribution,
        stream: np.random.Generator,
    ) -> "RealizedSystem":
        """Draw i.i.d. rates from ``dist`` for the staffed server count."""
        n = config.resolve_staffing(dist.mean())
        mu = sample_rates(dist, n, stream)
        return cls(n_servers=n, mu=mu, mu_bar=dist.mean(), r=config.r, lambda_r=config.lambda_r)

    @classmethod
    def realize_pools(cls, config: SystemConfig) -> "RealizedSystem":
        """Deterministic inverted-V system: pool i holds round(beta_i*N) servers at rate mu_i.

        Pool sizes use largest-remainder rounding so they sum to N exactly.
        """
        if config.pools is None:
            raise ConfigError("realize_pools needs a config with pools")
        dist = config.pool_distribution()
        mu_bar = dist.mean()
        n = config.resolve_staffing(mu_bar)
        betas = [b for b, _ in config.pools]
        raw = [b * n for b in betas]
        sizes = [int(math.floor(x)) for x in raw]
        short = n - sum(sizes)
        order = sorted(range(len(betas)), key=lambda i: raw[i] - sizes[i], reverse=True)
        for i in order[:short]:
            sizes[i] += 1
        if any(s < 1 for s in sizes):
            raise ConfigError(f"pool sizes {sizes} collapse at N={n}; increase the scale")
        mu = np.concatenate([np.full(s, m) for s, (_, m) in zip(sizes, config.pools)])
        pool_of = np.concatenate([np.full(s, i, dtype=np.int64) for i, s in enumerate(sizes)])
        return cls(
            n_servers=n,
            mu=mu,
            mu_bar=mu_bar,
            r=config.r,
            lambda_r=config.lambda_r,
            pool_of=pool_of,
            pool_sizes=tuple(sizes),
        )


# --------------------------------------------------------------------------
# Flat key = value configuration files
# --------------------------------------------------------------------------

def _parse_rates(text: str) -> RateDistribution:
    text = text.strip()
    if text.startswith("point(") and text.endswith(")"):
        return RateDistribution.point(float(text[6:-1]))
    if text.startswith("uniform(") and text.endswith(")"):
        lo, hi = text[8:-1].split(",")
        return RateDistribution.uniform(float(lo), float(hi))
    if text.startswith("discrete(") and text.endswith(")"):
        atoms = []
        for part in text[9:-1].split(","):
            rate, prob = part.split(":")
            atoms.append((float(rate), float(prob)))
        return RateDistribution.discrete(atoms)
    raise ConfigError(f"cannot parse rate distribution {text!r}")


def _format_rates(dist: RateDistribution) -> str:
    if dist.kind == "point":
        return f"point({dist.rate!r})"
    if dist.kind == "uniform":
        return f"uniform({dist.lo!r},{dist.hi!r})"
    parts = ",".join(f"{r!r}:{p!r}" for r, p in dist.atoms)
    return f"discrete({parts})"


def _parse_staffing(text: str) -> Staffing:
    text = text.strip()
    if text.startswith("hw(") and text.endswith(")"):
        return HalfinWhitt(float(text[3:-1]))
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"staffing must be an integer or hw(theta), got {text!r}") from None


def _format_staffing(st: Staffing) -> str:
    if isinstance(st, HalfinWhitt):
        return f"hw({st.theta!r})"
    return str(st)


def _parse_pools(text: str):
    pools = []
    for part in text.split(","):
        beta, mu = part.split(":")
        pools.append((float(beta), float(mu)))
    return tuple(pools)


def _format_pools(pools) -> str:
    return ",".join(f"{b!r}:{m!r}" for b, m in pools)


def _parse_policy(text: str) -> Policy:
    try:
        return Policy[text.strip().upper()]
    except KeyError:
        raise ConfigError(f"policy must be one of LISF/FSF/RANDOM, got {text!r}") from None


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean {text!r}")


def _parse_floats(text: str):
    return tuple(float(x) for x in text.split(","))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Policy):
        return value.value
    if isinstance(value, RateDistribution):
        return _format_rates(value)
    if isinstance(value, (int, float, str)):
        return repr(value) if isinstance(value, float) else str(value)
    if isinstance(value, HalfinWhitt):
        return _format_staffing(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return _format_pools(value)
        return ",".join(repr(float(v)) for v in value)
    raise ConfigError(f"cannot format config value {value!r}")


# key -> (parser, formatter). Keys mirror SystemConfig plus the knobs of the
# individual subcommands; everything is optional and validated at use time.
CONFIG_KEYS: dict = {
    # system
    "r": (float, None),
    "lambda_r": (float, None),
    "seed": (int, None),
    "arrival_scv": (float, None),
    "staffing": (_parse_staffing, _format_staffing),
    "abandon_rate": (float, None),
    "policy": (_parse_policy, lambda p: p.value),
    "rates": (_parse_rates, _format_rates),
    "pools": (_parse_pools, _format_pools),
    # simulation
    "horizon": (float, None),
    "warmup": (float, None),
    "abandon_mode": (str, None),
    "x0": (int, None),
    "grid_points": (int, None),
    "queue_cap": (int, None),
    "record_idle": (_parse_bool, _fmt),
    "reps": (int, None),
    # staffing costs
    "c_s": (float, None),
    "c_w": (float, None),
    "d": (float, None),
    "c_un": (float, None),
    "cost_model": (str, None),
    "bracket_lo": (float, None),
    "bracket_hi": (float, None),
    "opt_tol": (float, None),
    # diffusion analytics
    "beta": (float, None),
    "sigma": (float, None),
    "gamma": (float, None),
    "nu": (float, None),
    "theta": (float, None),
    "mu_bar": (float, None),
    "density_points": (int, None),
    "density_span": (float, None),
    # ql sweep
    "eps_min": (float, None),
    "eps_max": (float, None),
    "eps_steps": (int, None),
    # ssc / fairness / coupling
    "r_values": (_parse_floats, _fmt),
    "ssc_horizon": (float, None),
    "lambda_hat": (float, None),
    "bins": (int, None),
    "p_rate": (float, None),
    "skeleton_events": (int, None),
}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (UTF-8, ``#`` comments) into typed values."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        parser = CONFIG_KEYS[key][0]
        try:
            values[key] = parser(val)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"bad value for {key!r}: {val!r} ({exc})") from None
    return values


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def format_config(values: dict) -> str:
    """Render a typed config dict back to the flat text format."""
    lines = []
    for key in sorted(values):
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        formatter = CONFIG_KEYS[key][1]
        value = values[key]
        lines.append(f"{key} = {formatter(value) if formatter else _fmt(value)}")
    return "\n".join(lines) + "\n"
