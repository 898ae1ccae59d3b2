"""State-space-collapse diagnostics for inverted-V systems, plus fairness.

The collapse function g(q, z) = |sum_i z_i mu_i - gamma(I) sum_i z_i|
vanishes exactly on a one-dimensional subspace; the theory says the
diffusion-scaled pool occupancies are asymptotically confined there. The
evidence produced here is empirical: per-scale Monte-Carlo tables of the
multiplicative ratio ||g||_T / (||Z_hat||_T v 1), medians over replications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    Policy,
    RateDistribution,
    RealizedSystem,
    SystemConfig,
)
from .errors import ConfigError, DomainError, NoIdlenessError, WindowError
from .sim import PathRecord, run

__all__ = [
    "SSCFunctionSpec",
    "HydroScaledPath",
    "FairnessEstimate",
    "SPPResult",
    "ssc_g",
    "diffusion_scaled",
    "ssc_convergence",
    "SSCTable",
    "hydro_scale",
    "almost_lipschitz_check",
    "fairness_estimate",
    "default_bins",
    "eta_theory",
    "static_planning_inverted_v",
    "inverted_v_config",
]


@dataclass(frozen=True)
class SSCFunctionSpec:
    """Pool fractions, pool rates, and the idleness coefficient gamma(I)."""

    beta: Tuple[float, ...]
    mu: Tuple[float, ...]
    gamma_i: float = 0.0

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        mu = tuple(float(m) for m in self.mu)
        if len(beta) != len(mu) or not beta:
            raise ConfigError("pool fractions and rates must align and be nonempty")
        if abs(sum(beta) - 1.0) > 1e-12:
            raise ConfigError(f"pool fractions sum to {sum(beta)!r}, expected 1")
        if any(m2 <= m1 for m1, m2 in zip(mu, mu[1:])) or mu[0] <= 0.0:
            raise ConfigError(f"pool rates must be positive and strictly increasing, got {mu}")
        want = sum(b * m * m for b, m in zip(beta, mu)) / sum(b * m for b, m in zip(beta, mu))
        if self.gamma_i and abs(self.gamma_i - want) > 1e-9 * want:
            raise ConfigError(f"gamma(I) {self.gamma_i} disagrees with pools ({want})")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma_i", want)

    @property
    def n_pools(self) -> int:
        return len(self.beta)

    @classmethod
    def from_pools(cls, pools: Sequence[Tuple[float, float]]) -> "SSCFunctionSpec":
        return cls(beta=tuple(b for b, _ in pools), mu=tuple(m for _, m in pools))


def ssc_g(spec: SSCFunctionSpec, q, z) -> np.ndarray:
    """|sum_i z_i mu_i - gamma(I) sum_i z_i|; q enters the signature only.

    ``z`` may be one pool vector or an array of them (last axis = pools).
    Homogeneous of degree one, and zero exactly on the kernel
    {z : sum_i z_i (mu_i - gamma(I)) = 0}.
    """
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != spec.n_pools:
        raise ConfigError(f"z has {z.shape[-1]} pools, spec has {spec.n_pools}")
    mu = np.asarray(spec.mu)
    val = np.abs(z @ mu - spec.gamma_i * z.sum(axis=-1))
    return val if val.ndim else float(val)


def diffusion_scaled(path: PathRecord) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, Q_hat, Z_hat) with Q_hat = Q/sqrt(|N|), Z_hat_i = (Z_i - N_i)/sqrt(|N|)."""
    if path.pool_of is None:
        sizes = np.array([path.n_servers])
    else:
        sizes = np.bincount(path.pool_of, minlength=path.n_pools)
    root = math.sqrt(path.n_servers)
    q_hat = path.grid_Q / root
    z_hat = (path.grid_Z - sizes[None, :]) / root
    return path.grid_t, q_hat, z_hat


@dataclass(frozen=True)
class SSCTable:
    """Per-replication collapse statistics over increasing scale."""

    r_values: Tuple[float, ...]
    rows: Tuple[dict, ...]  # keys: r, rep, g_supnorm, z_supnorm, ratio

    def medians(self) -> List[dict]:
        out = []
        for r in self.r_values:
            ratios = np.sort([row["ratio"] for row in self.rows if row["r"] == r])
            out.append(
                {
                    "r": r,
                    "median_ratio": float(np.median(ratios)),
                    "q1": float(np.percentile(ratios, 25)),
                    "q3": float(np.percentile(ratios, 75)),
                }
            )
        return out


def ssc_convergence(
    configs: Sequence[SystemConfig],
    horizon: float,
    t_window: float,
    n_reps: int = 30,
    grid_points: int = 2_000,
) -> SSCTable:
    """Monte-Carlo table of the multiplicative collapse ratio per scale.

    All configs must share the same pool structure. Each replication runs
    the inverted-V system from the fully-busy state and records
    ||g(Q_hat, Z_hat)||_T, (||Z_hat||_T v 1), and their ratio.
    """
    if not configs:
        raise ConfigError("need at least one config")
    pools0 = configs[0].pools
    if pools0 is None:
        raise ConfigError("ssc_convergence needs inverted-V configs (pools set)")
    for cfg in configs:
        if cfg.pools != pools0:
            raise ConfigError("pool structures differ across scales")
    if t_window > horizon:
        raise ConfigError(f"statistic window {t_window} exceeds horizon {horizon}")
    spec = SSCFunctionSpec.from_pools(pools0)
    rows = []
    for cfg in configs:
        system = RealizedSystem.realize_pools(cfg)
        for rep in range(n_reps):
            path = run(
                cfg,
                system,
                horizon,
                grid_points=grid_points,
                record_idle=False,
                rep=rep,
            )
            t, q_hat, z_hat = diffusion_scaled(path)
            win = t <= t_window
            g_vals = ssc_g(spec, q_hat[win], z_hat[win])
            g_sup = float(np.max(g_vals))
            z_sup = float(np.max(np.abs(z_hat[win])))
            denom = max(z_sup, 1.0)
            rows.append(
                {
                    "r": cfg.r,
                    "rep": rep,
                    "g_supnorm": g_sup,
                    "z_supnorm": z_sup,
                    "ratio": g_sup / denom,
                }
            )
    return SSCTable(r_values=tuple(cfg.r for cfg in configs), rows=tuple(rows))


@dataclass(frozen=True)
class HydroScaledPath:
    """One hydrodynamic window: trajectories on [0, L] under the x_{r,m} scaling."""

    r: float
    m: int
    x_rm: float
    t: np.ndarray  # scaled times in [0, L]
    q: np.ndarray
    z: np.ndarray  # (len(t), pools)
    x_scaled: np.ndarray  # scaled total headcount deviation

    @property
    def initial_norm(self) -> float:
        parts = [abs(float(self.q[0]))] + [abs(float(v)) for v in self.z[0]]
        return max(parts)


def hydro_scale(path: PathRecord, m: int, length: float) -> HydroScaledPath:
    """Window m of the hydrodynamic scaling, read off the recorded grid.

    The scaling factor is x_{r,m} = |Z(m/sqrt(|N|)) - N|^2 v |N| (max norm
    over pools, |N| the total server count), taken at the window start.
    """
    if m < 0:
        raise ConfigError(f"window index must be >= 0, got {m}")
    if length <= 0.0:
        raise ConfigError(f"window length must be > 0, got {length}")
    n_total = path.n_servers
    if path.pool_of is None:
        sizes = np.array([n_total])
    else:
        sizes = np.bincount(path.pool_of, minlength=path.n_pools)
    root_n = math.sqrt(n_total)
    t_start = m / root_n
    if t_start > path.end_time:
        raise WindowError(f"window start {t_start:.6g} beyond the path end {path.end_time:.6g}")
    # state at the window start: last grid sample at or before t_start
    j0 = int(np.searchsorted(path.grid_t, t_start, side="right") - 1)
    dev = np.max(np.abs(path.grid_Z[j0] - sizes))
    x_rm = max(float(dev) ** 2, float(n_total))
    t_end = math.sqrt(x_rm) * length / n_total + t_start
    if t_end > path.end_time + 1e-12:
        raise WindowError(
            f"path ends at {path.end_time:.6g} but window m={m} needs {t_end:.6g}"
        )
    sel = (path.grid_t >= t_start) & (path.grid_t <= t_end)
    tt = path.grid_t[sel]
    scale = 1.0 / math.sqrt(x_rm)
    scaled_t = (tt - t_start) * n_total / math.sqrt(x_rm)
    q = path.grid_Q[sel] * scale
    z = (path.grid_Z[sel] - sizes[None, :]) * scale
    x_scaled = (path.grid_X[sel] - n_total) * scale
    return HydroScaledPath(
        r=path.r, m=m, x_rm=x_rm, t=scaled_t, q=q, z=z, x_scaled=x_scaled
    )


def almost_lipschitz_check(
    scaled_paths: Sequence[HydroScaledPath],
    n_const: float,
    eps: float,
    max_pairs: int = 200,
) -> float:
    """Fraction of (m, t1, t2) grid pairs violating |X(t2)-X(t1)| <= N|t2-t1| + eps.

    The state is the max norm over (q, z components). Each window is probed
    on at most ``max_pairs`` evenly-spaced grid times; purely diagnostic.
    """
    total = 0
    exceed = 0
    for sp in scaled_paths:
        k = sp.t.size
        if k < 2:
            continue
        idx = np.unique(np.linspace(0, k - 1, min(max_pairs, k)).astype(int))
        state = np.column_stack([sp.q[idx], sp.z[idx]])
        tt = sp.t[idx]
        for a in range(len(idx)):
            diff = np.max(np.abs(state[a + 1 :] - state[a]), axis=1)
            bound = n_const * np.abs(tt[a + 1 :] - tt[a]) + eps
            exceed += int((diff > bound).sum())
            total += diff.size
    if total == 0:
        raise DomainError("no usable scaled windows for the Lipschitz check")
    return exceed / total


@dataclass(frozen=True)
class FairnessEstimate:
    """Idleness-mass shares per rate bin against the policy's fairness measure."""

    bin_edges: np.ndarray
    eta_hat: np.ndarray
    eta_theory: Optional[np.ndarray]
    sup_discrepancy: Optional[float]
    total_idle_time: float


def default_bins(dist: RateDistribution, n_bins: int = 10) -> np.ndarray:
    """Equal-width bins over [p, q]; discrete laws get atom-aligned bins."""
    if dist.kind == "discrete":
        atoms = np.array([r for r, _ in dist.atoms])
        if atoms.size == 1:
            return np.array([atoms[0] - 0.5, atoms[0] + 0.5])
        mids = 0.5 * (atoms[:-1] + atoms[1:])
        return np.concatenate([[atoms[0] - 0.5], mids, [atoms[-1] + 0.5]])
    if dist.p == dist.q:
        return np.array([dist.p - 0.5, dist.q + 0.5])
    return np.linspace(dist.p, dist.q, n_bins + 1)


def eta_theory(dist: RateDistribution, edges: np.ndarray, policy: Policy) -> Optional[np.ndarray]:
    """Fairness measure of each bin: size-biased law for LISF, min-rate atom for FSF."""
    edges = np.asarray(edges, dtype=float)
    n_bins = edges.size - 1
    if policy is Policy.FSF:
        out = np.zeros(n_bins)
        k = int(np.searchsorted(edges, dist.p, side="right") - 1)
        k = min(max(k, 0), n_bins - 1)
        out[k] = 1.0
        return out
    if policy is not Policy.LISF:
        return None
    out = np.zeros(n_bins)
    if dist.kind == "uniform":
        lo, hi = dist.lo, dist.hi
        total = (hi * hi - lo * lo) / 2.0
        for b in range(n_bins):
            a = max(edges[b], lo)
            c = min(edges[b + 1], hi)
            if c > a:
                out[b] = (c * c - a * a) / 2.0 / total
        return out
    if dist.kind == "point":
        atoms = ((dist.rate, 1.0),)
    else:
        atoms = dist.atoms
    total = sum(r * p for r, p in atoms)
    for rate, prob in atoms:
        b = int(np.searchsorted(edges, rate, side="right") - 1)
        if b == n_bins:  # rate sits on the top edge
            b -= 1
        if 0 <= b < n_bins:
            out[b] += rate * prob / total
    return out


def fairness_estimate(
    path: PathRecord,
    rates: np.ndarray,
    bins: np.ndarray,
    dist: Optional[RateDistribution] = None,
) -> FairnessEstimate:
    """Share of idleness mass per rate bin, plus the scaled sup-norm discrepancy.

    The share uses exact per-server idle-time integrals over the run; the
    discrepancy statistic needs the recorded idle indicators and the
    policy's theoretical measure (available for LISF and FSF).
    """
    rates = np.asarray(rates, dtype=float)
    edges = np.asarray(bins, dtype=float)
    if rates.size != path.n_servers:
        raise ConfigError("rate vector does not match the path's server count")
    if edges.size < 2 or np.any(np.diff(edges) <= 0.0):
        raise ConfigError("bins must be strictly increasing edges")
    idle_time = path.end_time - path.busy_time
    total_idle = float(idle_time.sum())
    if total_idle <= 0.0:
        raise NoIdlenessError("path carries no idleness")
    n_bins = edges.size - 1
    which = np.clip(np.searchsorted(edges, rates, side="right") - 1, 0, n_bins - 1)
    eta_hat = np.zeros(n_bins)
    np.add.at(eta_hat, which, idle_time)
    eta_hat /= total_idle

    theory = eta_theory(dist, edges, path.policy) if dist is not None else None
    sup = None
    if theory is not None and path.idle_grid is not None:
        member = np.zeros((path.n_servers, n_bins))
        member[np.arange(path.n_servers), which] = 1.0
        per_bin = path.idle_grid.astype(float) @ member  # (grid, bins)
        idle_tot = path.idle_grid.sum(axis=1).astype(float)
        dev = np.abs(per_bin - theory[None, :] * idle_tot[:, None])
        sup = float(dev.max() / math.sqrt(path.n_servers))
    return FairnessEstimate(
        bin_edges=edges,
        eta_hat=eta_hat,
        eta_theory=None if theory is None else np.asarray(theory),
        sup_discrepancy=sup,
        total_idle_time=total_idle,
    )


@dataclass(frozen=True)
class SPPResult:
    rho_star: float
    x_star: Tuple[float, ...]
    heavy_traffic: bool


def static_planning_inverted_v(
    beta: Sequence[float], mu: Sequence[float], lam: float
) -> SPPResult:
    """Utilization-minimizing allocation for one class over I pools.

    Every pool can serve the class, so the bottleneck utilization is
    minimized by loading all pools equally: rho* = lam / sum_i beta_i mu_i
    and x*_i = rho*. The heavy-traffic flag marks rho* = 1.
    """
    beta = tuple(float(b) for b in beta)
    mu = tuple(float(m) for m in mu)
    if lam < 0.0:
        raise ConfigError(f"arrival rate must be >= 0, got {lam}")
    capacity = sum(b * m for b, m in zip(beta, mu))
    if capacity <= 0.0:
        raise ConfigError("total capacity must be positive")
    rho = lam / capacity
    return SPPResult(
        rho_star=rho,
        x_star=tuple(rho for _ in beta),
        heavy_traffic=abs(rho - 1.0) < 1e-9,
    )


def inverted_v_config(
    r: float,
    pools: Sequence[Tuple[float, float]],
    lambda_hat: float,
    seed: int,
    policy: Policy = Policy.LISF,
) -> SystemConfig:
    """Inverted-V config at scale r with lambda_r = capacity + lambda_hat*sqrt(r).

    The server count is round(r) split across pools by largest remainder,
    so the heavy-traffic centering is exact for the realized pool sizes.
    """
    if lambda_hat >= 0.0:
        raise ConfigError(f"heavy-traffic centering needs lambda_hat < 0, got {lambda_hat}")
    n_total = int(round(r))
    betas = [b for b, _ in pools]
    raw = [b * n_total for b in betas]
    sizes = [int(math.floor(v)) for v in raw]
    short = n_total - sum(sizes)
    order = sorted(range(len(betas)), key=lambda i: raw[i] - sizes[i], reverse=True)
    for i in order[:short]:
        sizes[i] += 1
    capacity = sum(s * m for s, (_, m) in zip(sizes, pools))
    lam = capacity + lambda_hat * math.sqrt(r)
    if lam <= 0.0:
        raise ConfigError("lambda_hat drives the arrival rate negative at this scale")
    return SystemConfig(
        r=float(r),
        lambda_r=lam,
        seed=seed,
        staffing=n_total,
        policy=policy,
        pools=tuple(pools),
    )
