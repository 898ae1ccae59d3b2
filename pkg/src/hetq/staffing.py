"""Cost functionals, exact small-system formulas, and the staffing optimizer.

The two cost models trade a staffing cost F against congestion: expected
delay cost for the no-abandonment model, expected abandonment flow for the
abandonment model. Both average over the random drift implied by the rate
distribution, so every evaluation is a deterministic quadrature; repeated
calls are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.special import gammaln, ndtr

from .core import RateDistribution, SystemConfig, rate_moments
from .diffusion import (
    DiffusionParams,
    _expected_positive_part_vec,
    _hermgauss,
    expected_positive_part,
    prob_wait_no_aband,
)
from .errors import BracketError, ConfigError, DegenerateError, DomainError, UnstableError

__all__ = [
    "LinearDelay",
    "CostSpec",
    "OptimizationResult",
    "erlang_c",
    "erlang_a",
    "waiting_cost_G",
    "cost_no_aband",
    "cost_aband",
    "optimize_staffing",
]


def erlang_c(n: int, lam: float, mu: float) -> Tuple[float, float, float]:
    """Classical M/M/N delay quantities: (p_wait, mean_Q, mean_W).

    Uses the Erlang-B recursion, so it is overflow-free up to very large N.
    """
    if n < 1:
        raise ConfigError(f"need at least one server, got {n}")
    if lam <= 0.0 or mu <= 0.0:
        raise ConfigError("rates must be positive")
    if lam >= n * mu:
        raise UnstableError(f"offered load {lam/mu:.6g} needs more than {n} servers")
    a = lam / mu
    rho = a / n
    b = 1.0
    for j in range(1, n + 1):
        b = a * b / (j + a * b)
    p_wait = b / (1.0 - rho * (1.0 - b))
    mean_q = p_wait * rho / (1.0 - rho)
    mean_w = mean_q / lam
    return p_wait, mean_q, mean_w


def erlang_a(n: int, lam: float, mu: float, nu: float) -> Tuple[float, float, float]:
    """M/M/N+M stationary quantities: (p_wait, mean_Q, abandon_prob).

    Stationary weights are (lam/mu)^j/j! up to N, extended beyond N with
    factors lam/(N*mu + k*nu). Everything is accumulated in log space and
    the queue tail is summed until it is exhausted at double precision.
    """
    if n < 1:
        raise ConfigError(f"need at least one server, got {n}")
    if lam <= 0.0 or mu <= 0.0 or nu <= 0.0:
        raise ConfigError("all rates must be positive")
    log_a = math.log(lam) - math.log(mu)
    j = np.arange(n + 1)
    log_below = j * log_a - gammaln(j + 1.0)
    peak = float(log_below.max())

    # tail beyond N, in chunks; each block multiplies in lam/(N mu + k nu)
    log_tail = []
    log_cur = float(log_below[-1])
    k = 0
    while True:
        ks = np.arange(k + 1, k + 4097, dtype=float)
        incr = np.cumsum(math.log(lam) - np.log(n * mu + ks * nu))
        block = log_cur + incr
        log_tail.append(block)
        log_cur = float(block[-1])
        k += 4096
        peak = max(peak, float(block.max()))
        # stop once both the mass and the (j-N)-weighted mass are negligible
        if block[-1] + math.log1p(k) < peak - 750.0:
            break
    log_tail = np.concatenate(log_tail)

    below = np.exp(log_below - peak)
    tail = np.exp(log_tail - peak)
    total = below.sum() + tail.sum()
    kk = np.arange(1, log_tail.size + 1, dtype=float)
    p_wait = (below[-1] + tail.sum()) / total
    mean_q = float((kk * tail).sum()) / total
    abandon_prob = nu * mean_q / lam
    return p_wait, mean_q, abandon_prob


@dataclass(frozen=True)
class LinearDelay:
    """Delay cost D(t) = c_w * t; its exponential transform is exact."""

    c_w: float

    def __call__(self, t):
        return self.c_w * np.asarray(t, dtype=float)


def waiting_cost_G(h: float, lam: float, delay_cost) -> float:
    """Expected delay cost of a waiting customer when capacity is h.

    Evaluates (h - lam) * int_0^inf D(t) exp(-(h - lam) t) dt, the mean of
    D over an exponential wait with rate h - lam. Linear costs are closed
    form; anything callable goes through adaptive quadrature.
    """
    if h <= lam:
        raise DomainError(f"needs total service rate above arrival rate, got {h} <= {lam}")
    rate = h - lam
    if isinstance(delay_cost, LinearDelay):
        return delay_cost.c_w / rate
    val, _ = integrate.quad(lambda u: float(delay_cost(u / rate)) * math.exp(-u), 0.0, np.inf)
    return val


@dataclass(frozen=True)
class CostSpec:
    """Cost coefficients; which term drives the trade-off depends on the model.

    ``staffing_cost`` overrides the default linear form
    F(x) = c_s * x * sqrt(lambda_r / mu_bar); it receives (x, config, dist).
    """

    c_s: float = 1.0
    c_w: float = 1.0
    d: float = 1.0
    c_un: float = 0.0
    nu: float = 0.0
    staffing_cost: Optional[Callable] = None

    def __post_init__(self):
        for name in ("c_s", "c_w", "d", "c_un"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be >= 0")
        if self.nu < 0.0:
            raise ConfigError("nu must be >= 0")

    def staffing_term(self, x: float, config: SystemConfig, dist: RateDistribution) -> float:
        if self.staffing_cost is not None:
            return float(self.staffing_cost(x, config, dist))
        return self.c_s * x * math.sqrt(config.lambda_r / dist.mean())


def _gamma_for(moments, policy) -> float:
    if policy.name == "LISF":
        return moments.gamma_lisf
    if policy.name == "FSF":
        return moments.gamma_fsf
    raise DomainError(f"no idleness coefficient is derived for {policy.name} routing")


@lru_cache(maxsize=8)
def _leggauss(nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _gauss_legendre(fn, lo: float, hi: float, nodes: int) -> float:
    x, w = _leggauss(nodes)
    mid = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    return half * float(np.dot(w, fn(mid + half * x)))


def cost_no_aband(
    x: float,
    config: SystemConfig,
    dist: RateDistribution,
    cost: CostSpec,
    nodes: int = 128,
) -> float:
    """Approximate cost F(x) + lambda_r * E[P(beta) G(-beta sqrt(r)) | beta < 0].

    The drift is beta ~ N(-x*mu_bar, Var of the rate law); only its stable
    (negative) region enters, normalized by P(beta < 0). The unstable mass
    contributes c_un * P(beta >= 0) additively.

    Note the integrand behaves like 1/|beta| near zero for unbounded delay
    costs, so the quadrature value is dominated by the stability boundary
    whenever the drift law puts mass there; see the README for guidance.
    """
    if x <= 0.0:
        raise DomainError(f"safety coefficient must be > 0, got {x}")
    moments = rate_moments(dist)
    mu_bar = moments.mean
    gamma = _gamma_for(moments, config.policy)
    sigma = math.sqrt(mu_bar * (config.arrival_scv + 1.0))
    sqrt_r = math.sqrt(config.r)
    m = -x * mu_bar
    s = math.sqrt(moments.variance)
    f_term = cost.staffing_term(x, config, dist)
    delay = LinearDelay(cost.c_w)

    if s == 0.0:
        if m >= 0.0:
            raise DegenerateError("point rates with x <= 0 leave no stable region")
        p = prob_wait_no_aband(m, sigma, gamma)
        g = waiting_cost_G(-m * sqrt_r + config.lambda_r, config.lambda_r, delay)
        return f_term + config.lambda_r * p * g

    p_stable = float(ndtr((0.0 - m) / s))
    if p_stable < 1e-12:
        raise DegenerateError(f"P(beta < 0) = {p_stable:.3g}: all drift mass is unstable")

    def integrand(b):
        b = np.asarray(b, dtype=float)
        dens = np.exp(-0.5 * ((b - m) / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
        pw = np.array([prob_wait_no_aband(bi, sigma, gamma) for bi in np.atleast_1d(b)])
        g = cost.c_w / (-b * sqrt_r)
        return pw * g * dens

    lo = m - 8.0 * s
    hi = min(0.0, m + 8.0 * s)
    if hi <= lo:
        raise DegenerateError("stable region lies outside the 8-sigma drift window")
    integral = _gauss_legendre(integrand, lo, hi, nodes)
    return (
        f_term
        + config.lambda_r * integral / p_stable
        + cost.c_un * (1.0 - p_stable)
    )


def cost_aband(
    x: float,
    config: SystemConfig,
    dist: RateDistribution,
    cost: CostSpec,
    nodes: int = 128,
) -> float:
    """Approximate cost F(x) + d * nu * sqrt(r) * E_beta[E[xi(infty)^+; xi >= 0]].

    The inner expectation over the stationary state is closed form; the
    outer one over beta ~ N(-x*mu_bar, Var) uses Gauss-Hermite quadrature.
    The sqrt(r) factor converts the scaled queue length into customers, so
    the variable term is an abandonment flow in customers per unit time.
    """
    if x <= 0.0:
        raise DomainError(f"safety coefficient must be > 0, got {x}")
    nu = cost.nu if cost.nu > 0.0 else config.abandon_rate
    if nu <= 0.0:
        raise DomainError("abandonment cost model needs nu > 0")
    moments = rate_moments(dist)
    mu_bar = moments.mean
    gamma = _gamma_for(moments, config.policy)
    sigma = math.sqrt(mu_bar * (config.arrival_scv + 1.0))
    m = -x * mu_bar
    s = math.sqrt(moments.variance)
    f_term = cost.staffing_term(x, config, dist)
    if s == 0.0:
        epp = expected_positive_part(DiffusionParams(sigma, m, gamma, nu))
    else:
        gh_x, gh_w = _hermgauss(nodes)
        betas = m + math.sqrt(2.0) * s * gh_x
        vals = _expected_positive_part_vec(betas, sigma, gamma, nu)
        epp = float(np.dot(gh_w, vals) / math.sqrt(math.pi))
    return f_term + cost.d * nu * math.sqrt(config.r) * epp


@dataclass(frozen=True)
class OptimizationResult:
    x_star: float
    cost_at_optimum: float
    curve_x: np.ndarray
    curve_cost: np.ndarray
    bracket: Tuple[float, float]
    tol: float
    unimodal: bool
    used_grid_fallback: bool


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(fn, lo: float, hi: float, tol: float) -> Tuple[float, float]:
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = fn(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = fn(x2)
    x = 0.5 * (lo + hi)
    return x, fn(x)


def optimize_staffing(
    cost_fn: Callable[[float], float],
    bracket: Tuple[float, float] = (0.05, 6.0),
    tol: float = 1e-4,
    curve_points: int = 64,
) -> OptimizationResult:
    """One-dimensional minimization of a staffing cost over the safety range.

    Samples a coarse curve first; a clean unimodal curve goes straight to
    golden-section search, anything with interior local maxima falls back
    to grid-then-refine and is flagged.
    """
    lo, hi = bracket
    if not (0.0 < lo < hi):
        raise ConfigError(f"bracket must satisfy 0 < lo < hi, got {bracket}")
    xs = np.linspace(lo, hi, curve_points)
    costs = np.empty(curve_points)
    failures = 0
    for i, xi in enumerate(xs):
        try:
            costs[i] = cost_fn(float(xi))
        except Exception:
            costs[i] = np.nan
            failures += 1
    if failures == curve_points or not np.isfinite(costs).any():
        raise BracketError(f"cost evaluation failed across the bracket {bracket}")
    if np.isnan(costs).any():
        raise BracketError(f"cost evaluation failed at {failures} bracket points")

    interior_maxima = [
        i for i in range(1, curve_points - 1)
        if costs[i] > costs[i - 1] and costs[i] > costs[i + 1]
    ]
    unimodal = not interior_maxima

    if unimodal:
        x_star, f_star = _golden_section(cost_fn, lo, hi, tol)
        used_grid = False
    else:
        k = int(np.argmin(costs))
        sub_lo = xs[max(k - 1, 0)]
        sub_hi = xs[min(k + 1, curve_points - 1)]
        x_star, f_star = _golden_section(cost_fn, float(sub_lo), float(sub_hi), tol)
        used_grid = True

    # the reported optimum must never sit above any sampled curve value
    k = int(np.argmin(costs))
    if costs[k] < f_star:
        x_star, f_star = float(xs[k]), float(costs[k])
    return OptimizationResult(
        x_star=float(x_star),
        cost_at_optimum=float(f_star),
        curve_x=xs,
        curve_cost=costs,
        bracket=(lo, hi),
        tol=tol,
        unimodal=unimodal,
        used_grid_fallback=used_grid,
    )
