"""Analytics for the limiting diffusion of the scaled headcount process.

The limit process solves

    xi(t) = xi(0) + sigma*w(t) + beta*t + gamma*int xi^- ds - nu*int xi^+ ds,

a two-sided Ornstein-Uhlenbeck-type diffusion: plain drift above zero when
nu = 0, mean reversion at rate nu above zero otherwise, and mean reversion
at rate gamma below zero. Everything here is closed form except the outer
integral over the random drift, which uses Gauss-Hermite quadrature.

All normal-CDF ratios are evaluated in log space (scipy's erf-based
``ndtr``/``log_ndtr``), so the formulas stay accurate far into the tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy.special import expit, log_ndtr

from .core import Policy
from .errors import ConfigError, DomainError

__all__ = [
    "DiffusionParams",
    "SteadyStateDensity",
    "ExponentialPiece",
    "ConditionedNormalPiece",
    "prob_wait_no_aband",
    "prob_wait_aband",
    "stationary_no_aband",
    "stationary_aband",
    "expected_positive_part",
    "ql_eps",
    "simulate_sde",
    "halfin_whitt_delay",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _log_phi(x):
    return -0.5 * np.square(x) - _LOG_SQRT_2PI


def _phi(x):
    return np.exp(_log_phi(x))


@dataclass(frozen=True)
class DiffusionParams:
    """Coefficients (sigma, beta, gamma, nu) of the limit SDE."""

    sigma: float
    beta: float
    gamma: float
    nu: float = 0.0

    def __post_init__(self):
        # sigma = 0 is admitted so the integrator can run noise-free ODE
        # reductions; the stationary-law operations insist on sigma > 0.
        if self.sigma < 0.0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if not self.gamma > 0.0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.nu < 0.0:
            raise ConfigError(f"nu must be >= 0, got {self.nu}")


def prob_wait_no_aband(beta: float, sigma: float, gamma: float) -> float:
    """P(xi(infty) >= 0) for the no-abandonment diffusion; needs beta < 0."""
    if beta >= 0.0:
        raise DomainError(f"no stationary law without abandonment unless beta < 0, got {beta}")
    if sigma <= 0.0:
        raise DomainError(f"stationary law needs sigma > 0, got {sigma}")
    a = math.sqrt(2.0) * (-beta) / (math.sqrt(gamma) * sigma)
    # rho = (1 + a*Phi(a)/phi(a))^-1, evaluated as a logistic of log terms
    t = math.log(a) + log_ndtr(a) - _log_phi(a)
    return float(expit(-t))


def prob_wait_aband(beta: float, sigma: float, gamma: float, nu: float) -> float:
    """P(xi(infty) >= 0) with abandonment; defined for any drift."""
    if nu <= 0.0:
        raise DomainError(f"abandonment rate must be > 0, got {nu}")
    if gamma <= 0.0:
        raise DomainError(f"gamma must be > 0, got {gamma}")
    if sigma <= 0.0:
        raise DomainError(f"stationary law needs sigma > 0, got {sigma}")
    a_nu = math.sqrt(2.0) * beta / (math.sqrt(nu) * sigma)
    a_ga = math.sqrt(2.0) * beta / (math.sqrt(gamma) * sigma)
    t = (
        0.5 * (math.log(nu) - math.log(gamma))
        + _log_phi(a_nu)
        - _log_phi(a_ga)
        + log_ndtr(-a_ga)
        - log_ndtr(a_nu)
    )
    return float(expit(-t))


@dataclass(frozen=True)
class ExponentialPiece:
    """Exponential density on [0, inf), normalized on its half line."""

    rate: float

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 0.0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)
        return out if out.ndim else float(out)

    def mean(self) -> float:
        return 1.0 / self.rate

    def density_at_zero(self) -> float:
        return self.rate


@dataclass(frozen=True)
class ConditionedNormalPiece:
    """N(mean, sd^2) conditioned on one side of zero, normalized there."""

    mean_: float
    sd: float
    side: str  # "upper" ([0, inf)) or "lower" ((-inf, 0))

    def _log_mass(self) -> float:
        a = self.mean_ / self.sd
        return float(log_ndtr(a if self.side == "upper" else -a))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mean_) / self.sd
        logpdf = _log_phi(z) - math.log(self.sd) - self._log_mass()
        inside = x >= 0.0 if self.side == "upper" else x < 0.0
        out = np.where(inside, np.exp(logpdf), 0.0)
        return out if out.ndim else float(out)

    def mean(self) -> float:
        a = self.mean_ / self.sd
        if self.side == "upper":
            # E[X | X >= 0] = m + s * phi(a)/Phi(a)
            return self.mean_ + self.sd * math.exp(_log_phi(a) - log_ndtr(a))
        return self.mean_ - self.sd * math.exp(_log_phi(a) - log_ndtr(-a))

    def density_at_zero(self) -> float:
        """One-sided limit of the conditioned density at the origin."""
        a = self.mean_ / self.sd
        return math.exp(_log_phi(a) - self._log_mass()) / self.sd


Piece = Union[ExponentialPiece, ConditionedNormalPiece]


@dataclass(frozen=True)
class SteadyStateDensity:
    """Stationary law of xi glued at zero: varrho*upper + (1-varrho)*lower."""

    varrho: float
    upper: Piece
    lower: Piece

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(
            x >= 0.0,
            self.varrho * self.upper.pdf(np.maximum(x, 0.0)),
            (1.0 - self.varrho) * self.lower.pdf(np.minimum(x, 0.0)),
        )
        return out if out.ndim else float(out)

    def continuity_residual(self) -> float:
        """|f(0-) - f(0+)| relative to f(0+); analytically zero."""
        left = (1.0 - self.varrho) * self.lower.density_at_zero()
        right = self.varrho * self.upper.density_at_zero()
        return abs(left - right) / right

    def mean_positive_part(self) -> float:
        """E[xi^+; xi >= 0] = varrho * E[upper]."""
        return self.varrho * self.upper.mean()


def stationary_no_aband(params: DiffusionParams) -> SteadyStateDensity:
    """Exponential piece above zero, conditioned normal below; nu must be 0."""
    if params.nu != 0.0:
        raise DomainError("stationary_no_aband needs nu = 0")
    if params.beta >= 0.0:
        raise DomainError(f"stationary law needs beta < 0, got {params.beta}")
    varrho = prob_wait_no_aband(params.beta, params.sigma, params.gamma)
    upper = ExponentialPiece(rate=-2.0 * params.beta / params.sigma**2)
    lower = ConditionedNormalPiece(
        mean_=params.beta / params.gamma,
        sd=params.sigma / math.sqrt(2.0 * params.gamma),
        side="lower",
    )
    return SteadyStateDensity(varrho=varrho, upper=upper, lower=lower)


def stationary_aband(params: DiffusionParams) -> SteadyStateDensity:
    """Two conditioned-normal pieces glued at zero; needs nu > 0."""
    if params.nu <= 0.0:
        raise DomainError("stationary_aband needs nu > 0")
    varrho = prob_wait_aband(params.beta, params.sigma, params.gamma, params.nu)
    upper = ConditionedNormalPiece(
        mean_=params.beta / params.nu,
        sd=params.sigma / math.sqrt(2.0 * params.nu),
        side="upper",
    )
    lower = ConditionedNormalPiece(
        mean_=params.beta / params.gamma,
        sd=params.sigma / math.sqrt(2.0 * params.gamma),
        side="lower",
    )
    return SteadyStateDensity(varrho=varrho, upper=upper, lower=lower)


def expected_positive_part(params: DiffusionParams) -> float:
    """E[xi(infty)^+; xi(infty) >= 0], the expected scaled queue length."""
    if params.nu > 0.0:
        rho = prob_wait_aband(params.beta, params.sigma, params.gamma, params.nu)
        m = params.beta / params.nu
        s = params.sigma / math.sqrt(2.0 * params.nu)
        cond_mean = m + s * math.exp(_log_phi(m / s) - log_ndtr(m / s))
        return rho * cond_mean
    if params.beta >= 0.0:
        raise DomainError("expected_positive_part with nu = 0 needs beta < 0")
    rho = prob_wait_no_aband(params.beta, params.sigma, params.gamma)
    return rho * params.sigma**2 / (-2.0 * params.beta)


def _expected_positive_part_vec(beta, sigma, gamma, nu):
    """Vectorized abandonment-case closed form, for quadrature over beta."""
    beta = np.asarray(beta, dtype=float)
    a_nu = math.sqrt(2.0) * beta / (math.sqrt(nu) * sigma)
    a_ga = math.sqrt(2.0) * beta / (math.sqrt(gamma) * sigma)
    t = (
        0.5 * (math.log(nu) - math.log(gamma))
        + _log_phi(a_nu)
        - _log_phi(a_ga)
        + log_ndtr(-a_ga)
        - log_ndtr(a_nu)
    )
    rho = expit(-t)
    m = beta / nu
    s = sigma / math.sqrt(2.0 * nu)
    cond_mean = m + s * np.exp(_log_phi(m / s) - log_ndtr(m / s))
    return rho * cond_mean


@lru_cache(maxsize=8)
def _hermgauss(nodes: int):
    x, w = np.polynomial.hermite.hermgauss(nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_hermite_expectation(fn, mean: float, sd: float, nodes: int) -> float:
    """E[fn(X)] for X ~ N(mean, sd^2) by Gauss-Hermite quadrature."""
    x, w = _hermgauss(nodes)
    vals = fn(mean + math.sqrt(2.0) * sd * x)
    return float(np.dot(w, vals) / math.sqrt(math.pi))


def ql_eps(
    eps: float,
    mu_bar: float,
    sigma: float,
    theta: float,
    nu: float,
    policy: Policy = Policy.LISF,
    rel_tol: float = 1e-6,
) -> float:
    """Expected scaled queue length when rates are uniform(mu_bar-eps, mu_bar+eps).

    The drift is N(-theta*mu_bar, eps^2/3) and the idleness coefficient is
    mu_bar + eps^2/(3*mu_bar) under LISF or mu_bar - eps under FSF. The
    inner integral over the state is closed form; only the drift integral
    is numeric, with the node count escalated until two successive
    Gauss-Hermite rules agree to ``rel_tol``.
    """
    if not 0.0 < eps < mu_bar:
        raise DomainError(f"eps must lie in (0, mu_bar), got {eps}")
    if nu <= 0.0:
        raise DomainError(f"ql_eps needs nu > 0, got {nu}")
    if theta <= 0.0:
        raise DomainError(f"ql_eps needs theta > 0, got {theta}")
    if policy is Policy.LISF:
        gamma = mu_bar + eps * eps / (3.0 * mu_bar)
    elif policy is Policy.FSF:
        gamma = mu_bar - eps
    else:
        raise DomainError(f"ql_eps is defined for LISF and FSF only, got {policy}")
    mean = -theta * mu_bar
    sd = eps / math.sqrt(3.0)

    def inner(beta):
        return _expected_positive_part_vec(beta, sigma, gamma, nu)

    prev = gauss_hermite_expectation(inner, mean, sd, 64)
    for nodes in (128, 256, 512):
        cur = gauss_hermite_expectation(inner, mean, sd, nodes)
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise DomainError(f"ql_eps quadrature did not converge to {rel_tol} at eps={eps}")


def halfin_whitt_delay(theta: float) -> float:
    """Classical square-root-staffing delay probability (1 + theta*Phi/phi)^-1."""
    if theta <= 0.0:
        raise DomainError(f"theta must be > 0, got {theta}")
    t = math.log(theta) + log_ndtr(theta) - _log_phi(theta)
    return float(expit(-t))


def simulate_sde(
    params: DiffusionParams,
    x0,
    horizon: float,
    step: float = 1e-3,
    stream: Optional[np.random.Generator] = None,
    sample_stride: int = 1,
):
    """Explicit Euler path(s) of the limit SDE.

    ``x0`` may be a scalar (one path) or a vector (independent paths sharing
    the time grid). Returns (times, values) where values has one column per
    path; a scalar ``x0`` gives a flat array. ``sample_stride`` keeps every
    k-th point to bound memory on long runs.
    """
    if step <= 0.0:
        raise ConfigError(f"step must be > 0, got {step}")
    if horizon <= 0.0:
        raise ConfigError(f"horizon must be > 0, got {horizon}")
    scalar = np.isscalar(x0)
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    n_steps = int(round(horizon / step))
    n_keep = n_steps // sample_stride + 1
    times = np.arange(n_keep) * (step * sample_stride)
    out = np.empty((n_keep, x.size))
    out[0] = x
    sqrt_dt = math.sqrt(step)
    if stream is None:
        stream = np.random.default_rng(0)
    kept = 1
    for k in range(1, n_steps + 1):
        drift = params.beta + params.gamma * np.maximum(-x, 0.0) - params.nu * np.maximum(x, 0.0)
        if params.sigma > 0.0:
            x = x + drift * step + params.sigma * sqrt_dt * stream.standard_normal(x.size)
        else:
            x = x + drift * step
        if k % sample_stride == 0:
            out[kept] = x
            kept += 1
    out = out[:kept]
    times = times[:kept]
    return (times, out[:, 0]) if scalar else (times, out)
