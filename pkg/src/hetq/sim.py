"""Seeded discrete-event simulation of the heterogeneous many-server queue.

One pool or several (inverted-V), FIFO non-preemptive service, LISF / FSF /
RANDOM routing, and two abandonment constructions: independent patience per
customer, or the head-of-queue process that abandons at rate nu * Q(t).

A run is strictly single-threaded and deterministic in (config, seed, rep).
Counters (arrivals, departures, abandonments, busy time) are exact; the
trajectory is additionally sampled on a uniform grid for trajectory output.
"""

from __future__ import annotations

import math
import os
from collections import deque
from dataclasses import dataclass
from enum import Enum
from heapq import heappop, heappush
from typing import List, Optional, Tuple

import numpy as np

from .core import (
    Policy,
    RateDistribution,
    RealizedSystem,
    Stream,
    SystemConfig,
    rng_stream,
)
from .errors import ConfigError, EmptyWindowError

__all__ = [
    "AbandonMode",
    "PathRecord",
    "SteadyEstimates",
    "CoupledPaths",
    "Replication",
    "run",
    "steady_estimates",
    "coupled_run",
    "replicate",
    "path_to_csv",
    "path_summary",
]

_INF = math.inf
_BLOCK = 8192


class AbandonMode(Enum):
    NONE = "none"
    PER_CUSTOMER = "per_customer"
    PERTURBED = "perturbed"


class _ExpDraws:
    """Buffered unit-exponential draws from one generator."""

    __slots__ = ("_rng", "_buf", "_i")

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._buf = rng.standard_exponential(_BLOCK).tolist()
        self._i = 0

    def __call__(self) -> float:
        i = self._i
        if i == _BLOCK:
            self._buf = self._rng.standard_exponential(_BLOCK).tolist()
            i = 0
        self._i = i + 1
        return self._buf[i]


class _UniformDraws:
    """Buffered uniform(0,1) draws from one generator."""

    __slots__ = ("_rng", "_buf", "_i")

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._buf = rng.random(_BLOCK).tolist()
        self._i = 0

    def __call__(self) -> float:
        i = self._i
        if i == _BLOCK:
            self._buf = self._rng.random(_BLOCK).tolist()
            i = 0
        self._i = i + 1
        return self._buf[i]


@dataclass
class PathRecord:
    """Everything a run produced: grid trajectory plus exact counters."""

    r: float
    n_servers: int
    n_pools: int
    horizon: float
    end_time: float
    seed: int
    rep: int
    policy: Policy
    abandon_mode: AbandonMode
    lambda_r: float
    mu: np.ndarray
    pool_of: Optional[np.ndarray]
    grid_t: np.ndarray
    grid_X: np.ndarray
    grid_Q: np.ndarray
    grid_Z: np.ndarray  # (grid, pools)
    grid_R: np.ndarray
    grid_A: np.ndarray
    idle_grid: Optional[np.ndarray]  # (grid, servers) 1 = idle
    arrival_t: np.ndarray
    waits: np.ndarray  # NaN when unresolved at end_time
    waited: np.ndarray
    abandoned: np.ndarray
    abandon_total: int
    departures: np.ndarray
    busy_time: np.ndarray
    overflowed: bool

    @property
    def arrivals_total(self) -> int:
        return int(self.arrival_t.size)

    @property
    def departures_total(self) -> int:
        return int(self.departures.sum())


def _arrival_sampler(lam: float, scv: float, exp_draw: _ExpDraws):
    """Inter-arrival sampler for a renewal stream with the requested SCV.

    SCV 1 is exponential; SCV in [0, 1) uses a deterministic-plus-exponential
    inter-arrival d + m_e*E with m_e = sqrt(scv)/lam, which hits the SCV
    exactly. Values above 1 are outside the simulator's renewal family.
    """
    if scv > 1.0 + 1e-12:
        raise ConfigError(f"simulator supports arrival SCV in [0, 1], got {scv}")
    if abs(scv - 1.0) <= 1e-12:
        mean = 1.0 / lam
        return lambda: mean * exp_draw()
    if scv <= 0.0:
        mean = 1.0 / lam
        return lambda: mean
    root = math.sqrt(scv)
    det = (1.0 - root) / lam
    m_e = root / lam
    return lambda: det + m_e * exp_draw()


def run(
    config: SystemConfig,
    system: RealizedSystem,
    horizon: float,
    mode: AbandonMode = AbandonMode.NONE,
    x0: Optional[int] = None,
    grid_points: int = 10_000,
    queue_cap: int = 1_000_000,
    record_idle: bool = True,
    rep: int = 0,
    validate: bool = False,
) -> PathRecord:
    """Simulate one path on [0, horizon].

    The initial state holds ``x0`` customers (default N: all servers busy,
    empty queue). Simultaneous events process in the fixed order departure,
    abandonment, arrival. A queue exceeding ``queue_cap`` terminates the
    run cleanly with the overflow flag set. With ``validate`` every event
    asserts flow conservation, work conservation, and the LISF selection
    rule.
    """
    if horizon <= 0.0:
        raise ConfigError(f"horizon must be > 0, got {horizon}")
    if mode is not AbandonMode.NONE and config.abandon_rate <= 0.0:
        raise ConfigError(f"abandonment mode {mode.value} needs abandon_rate > 0")
    if grid_points < 2:
        raise ConfigError("need at least two grid points")

    n = system.n_servers
    mu = system.mu.tolist()
    pool_of = (
        system.pool_of.tolist() if system.pool_of is not None else [0] * n
    )
    n_pools = system.n_pools
    lam = config.lambda_r
    nu = config.abandon_rate
    policy = config.policy
    seed = config.seed

    arrival_exp = _ExpDraws(rng_stream(seed, rep, Stream.ARRIVAL))
    service_exp = _ExpDraws(rng_stream(seed, rep, Stream.SERVICE))
    abandon_exp = _ExpDraws(rng_stream(seed, rep, Stream.ABANDON))
    routing_u = _UniformDraws(rng_stream(seed, rep, Stream.ROUTING))
    next_inter = _arrival_sampler(lam, config.arrival_scv, arrival_exp) if lam > 0.0 else None

    per_customer = mode is AbandonMode.PER_CUSTOMER
    perturbed = mode is AbandonMode.PERTURBED

    # state
    busy = [False] * n
    busy_since = [0.0] * n
    t_busy = [0.0] * n
    d_count = [0] * n
    z = [0] * n_pools
    idle_since = [0.0] * n
    dep_heap: List[Tuple[float, int]] = []

    queue: deque = deque()
    in_q: List[bool] = []
    arr_t: List[float] = []
    waited: List[bool] = []
    waits: List[float] = []
    abandoned: List[bool] = []
    deadline_heap: List[Tuple[float, int]] = []

    # idle-server structures (policy specific)
    lisf_q: deque = deque()
    fsf_heap: List[Tuple[float, int]] = []
    rand_list: List[int] = []
    rand_pos = [0] * n
    idle_count = 0

    def add_idle(k: int, t: float) -> None:
        nonlocal idle_count
        idle_count += 1
        idle_since[k] = t
        if policy is Policy.LISF:
            lisf_q.append(k)
        elif policy is Policy.FSF:
            heappush(fsf_heap, (-mu[k], k))
        else:
            rand_pos[k] = len(rand_list)
            rand_list.append(k)

    def pick_idle() -> int:
        nonlocal idle_count
        idle_count -= 1
        if policy is Policy.LISF:
            return lisf_q.popleft()
        if policy is Policy.FSF:
            while True:
                _, k = heappop(fsf_heap)
                if not busy[k]:
                    return k
        pos = int(routing_u() * len(rand_list))
        if pos == len(rand_list):
            pos -= 1
        k = rand_list[pos]
        last = rand_list[-1]
        rand_list[pos] = last
        rand_pos[last] = pos
        rand_list.pop()
        return k

    # initial state: x0 in system, lowest-index servers busy first
    x = n if x0 is None else int(x0)
    if x < 0:
        raise ConfigError(f"x0 must be >= 0, got {x0}")
    n_busy0 = min(x, n)
    for k in range(n):
        if k < n_busy0:
            busy[k] = True
            z[pool_of[k]] += 1
            heappush(dep_heap, (service_exp() / mu[k], k))
        else:
            add_idle(k, 0.0)
    q = x - n_busy0
    for _ in range(q):
        cid = len(arr_t)
        arr_t.append(0.0)
        waited.append(True)
        waits.append(math.nan)
        abandoned.append(False)
        in_q.append(True)
        queue.append(cid)
        if per_customer:
            heappush(deadline_heap, (abandon_exp() / nu, cid))
    n_seed_customers = len(arr_t)  # excluded from arrival statistics

    busy_u8 = np.zeros(n, dtype=np.uint8)
    busy_u8[:n_busy0] = 1

    grid_t = np.linspace(0.0, horizon, grid_points)
    g_x = np.zeros(grid_points, dtype=np.int64)
    g_q = np.zeros(grid_points, dtype=np.int64)
    g_z = np.zeros((grid_points, n_pools), dtype=np.int64)
    g_r = np.zeros(grid_points, dtype=np.int64)
    g_a = np.zeros(grid_points, dtype=np.int64)
    idle_grid = np.zeros((grid_points, n), dtype=np.uint8) if record_idle else None
    gi = 0

    a_count = 0
    r_count = 0
    sum_d = 0
    x_init = x
    next_arr = next_inter() if next_inter is not None else _INF
    hazard = abandon_exp() if perturbed else 0.0
    t_cur = 0.0
    overflowed = False
    end_time = horizon
    grid_list = grid_t.tolist()

    while True:
        t_dep = dep_heap[0][0] if dep_heap else _INF
        if perturbed:
            t_ab = t_cur + max(hazard, 0.0) / (nu * q) if q > 0 else _INF
        elif per_customer:
            while deadline_heap and not in_q[deadline_heap[0][1]]:
                heappop(deadline_heap)
            t_ab = deadline_heap[0][0] if deadline_heap else _INF
        else:
            t_ab = _INF

        # tie order: departure, abandonment, arrival
        if t_dep <= t_ab and t_dep <= next_arr:
            t_next, kind = t_dep, 0
        elif t_ab <= next_arr:
            t_next, kind = t_ab, 1
        else:
            t_next, kind = next_arr, 2
        if t_next > horizon:
            break

        while gi < grid_points and grid_list[gi] < t_next:
            g_x[gi] = x
            g_q[gi] = q
            g_r[gi] = r_count
            g_a[gi] = a_count
            for i in range(n_pools):
                g_z[gi, i] = z[i]
            if record_idle:
                idle_grid[gi] = busy_u8
            gi += 1

        if perturbed and q > 0:
            hazard -= nu * q * (t_next - t_cur)
        t_cur = t_next

        if kind == 0:
            # departure of server k
            _, k = heappop(dep_heap)
            x -= 1
            d_count[k] += 1
            sum_d += 1
            t_busy[k] += t_cur - busy_since[k]
            served = False
            while queue:
                cid = queue.popleft()
                if in_q[cid]:
                    in_q[cid] = False
                    q -= 1
                    waits[cid] = t_cur - arr_t[cid]
                    busy_since[k] = t_cur
                    heappush(dep_heap, (t_cur + service_exp() / mu[k], k))
                    served = True
                    break
            if not served:
                busy[k] = False
                busy_u8[k] = 0
                z[pool_of[k]] -= 1
                add_idle(k, t_cur)
        elif kind == 1:
            # abandonment
            if perturbed:
                while True:
                    cid = queue.popleft()
                    if in_q[cid]:
                        break
                hazard = abandon_exp()
            else:
                _, cid = heappop(deadline_heap)
            in_q[cid] = False
            q -= 1
            x -= 1
            r_count += 1
            waits[cid] = t_cur - arr_t[cid]
            abandoned[cid] = True
        else:
            # arrival
            a_count += 1
            cid = len(arr_t)
            arr_t.append(t_cur)
            abandoned.append(False)
            x += 1
            if idle_count > 0:
                k = pick_idle()
                if validate and policy is Policy.LISF:
                    oldest = min(idle_since[j] for j in range(n) if not busy[j])
                    assert idle_since[k] == oldest, "LISF selection rule broken"
                waited.append(False)
                waits.append(0.0)
                in_q.append(False)
                busy[k] = True
                busy_u8[k] = 1
                z[pool_of[k]] += 1
                busy_since[k] = t_cur
                heappush(dep_heap, (t_cur + service_exp() / mu[k], k))
            else:
                waited.append(True)
                waits.append(math.nan)
                in_q.append(True)
                queue.append(cid)
                q += 1
                if per_customer:
                    heappush(deadline_heap, (t_cur + abandon_exp() / nu, cid))
                if q > queue_cap:
                    overflowed = True
                    end_time = t_cur
                    break
            next_arr = t_cur + next_inter()

        if validate:
            assert x == x_init + a_count - sum_d - r_count, "flow conservation broken"
            assert not (q > 0 and idle_count > 0), "work conservation broken"
            assert q == max(x - n, 0), "queue-headcount identity broken"

    # fill the remaining grid with the terminal state
    while gi < grid_points:
        g_x[gi] = x
        g_q[gi] = q
        g_r[gi] = r_count
        g_a[gi] = a_count
        for i in range(n_pools):
            g_z[gi, i] = z[i]
        if record_idle:
            idle_grid[gi] = busy_u8
        gi += 1
    for k in range(n):
        if busy[k]:
            t_busy[k] += end_time - busy_since[k]

    if record_idle:
        idle_grid = (1 - idle_grid).astype(np.uint8)

    return PathRecord(
        r=config.r,
        n_servers=n,
        n_pools=n_pools,
        horizon=horizon,
        end_time=end_time,
        seed=seed,
        rep=rep,
        policy=policy,
        abandon_mode=mode,
        lambda_r=lam,
        mu=system.mu,
        pool_of=system.pool_of,
        grid_t=grid_t,
        grid_X=g_x,
        grid_Q=g_q,
        grid_Z=g_z,
        grid_R=g_r,
        grid_A=g_a,
        idle_grid=idle_grid,
        arrival_t=np.asarray(arr_t[n_seed_customers:], dtype=float),
        waits=np.asarray(waits[n_seed_customers:], dtype=float),
        waited=np.asarray(waited[n_seed_customers:], dtype=bool),
        abandoned=np.asarray(abandoned[n_seed_customers:], dtype=bool),
        abandon_total=r_count,
        departures=np.asarray(d_count, dtype=np.int64),
        busy_time=np.asarray(t_busy, dtype=float),
        overflowed=overflowed,
    )


@dataclass(frozen=True)
class SteadyEstimates:
    p_wait: float
    mean_Q: float
    abandon_rate: float
    scaled_X: np.ndarray
    window: Tuple[float, float]
    n_arrivals: int
    mean_scaled_queue: float


def steady_estimates(path: PathRecord, warmup_fraction: float) -> SteadyEstimates:
    """Post-warmup summary statistics of one path.

    ``p_wait`` is the fraction of post-warmup arrivals that found every
    server busy; queue statistics are grid averages over the same window;
    ``scaled_X`` is (X - N)/sqrt(r) at the window's sample times.
    """
    if not 0.0 <= warmup_fraction < 1.0:
        raise ConfigError(f"warmup fraction must be in [0, 1), got {warmup_fraction}")
    t0 = warmup_fraction * path.end_time
    mask = (path.grid_t >= t0) & (path.grid_t <= path.end_time)
    if not mask.any():
        raise EmptyWindowError(f"no samples in ({t0}, {path.end_time}]")
    tw = path.grid_t[mask]
    arrivals = (path.arrival_t >= t0) & (path.arrival_t <= path.end_time)
    n_arr = int(arrivals.sum())
    p_wait = float(path.waited[arrivals].mean()) if n_arr else 0.0
    mean_q = float(path.grid_Q[mask].mean())
    r_window = path.grid_R[mask]
    span = float(tw[-1] - tw[0])
    ab_rate = float(r_window[-1] - r_window[0]) / span if span > 0.0 else 0.0
    scaled = (path.grid_X[mask] - path.n_servers) / math.sqrt(path.r)
    scaled_q = np.maximum(path.grid_Q[mask], 0) / math.sqrt(path.r)
    return SteadyEstimates(
        p_wait=p_wait,
        mean_Q=mean_q,
        abandon_rate=ab_rate,
        scaled_X=scaled,
        window=(float(t0), float(path.end_time)),
        n_arrivals=n_arr,
        mean_scaled_queue=float(scaled_q.mean()),
    )


@dataclass(frozen=True)
class CoupledPaths:
    """Departure counts of the homogeneous and heterogeneous systems on one skeleton."""

    skeleton_t: np.ndarray
    d_hom: np.ndarray
    d_het: np.ndarray
    p_rate: float
    q_rate: float
    n_servers: int

    def ordered_everywhere(self) -> bool:
        return bool(np.all(self.d_hom <= self.d_het))


def coupled_run(
    config: SystemConfig,
    p_rate: float,
    system: RealizedSystem,
    horizon: float,
    rep: int = 0,
    q_rate: Optional[float] = None,
) -> CoupledPaths:
    """Thinning coupling of a rate-p homogeneous twin against ``system``.

    One master Poisson skeleton of rate N*q (q the rate law's upper support
    bound; defaults to the realized maximum) is thinned with shared
    uniforms: the homogeneous system accepts a point when
    U <= (X_hom ^ N)*p/(N*q), the heterogeneous one when U is below the
    ratio of its busy-rate total to N*q, freeing a busy server chosen with
    probability proportional to its rate. Arrivals (and, when nu > 0,
    abandonment epochs driven by the heterogeneous queue) are shared, so
    the homogeneous departure count can never overtake the heterogeneous
    one.
    """
    mu = system.mu
    n = system.n_servers
    if p_rate > float(mu.min()) + 1e-12:
        raise ConfigError(f"p_rate {p_rate} exceeds the minimum realized rate {mu.min()}")
    if horizon <= 0.0:
        raise ConfigError(f"horizon must be > 0, got {horizon}")
    if q_rate is None:
        q_rate = float(mu.max())
    elif q_rate < float(mu.max()):
        raise ConfigError(f"q_rate {q_rate} is below the maximum realized rate {mu.max()}")
    lam = config.lambda_r
    nu = config.abandon_rate
    master_rate = n * q_rate

    arrival_exp = _ExpDraws(rng_stream(config.seed, rep, Stream.ARRIVAL))
    skel_exp = _ExpDraws(rng_stream(config.seed, rep, Stream.SKELETON))
    skel_u = _UniformDraws(rng_stream(config.seed, rep, Stream.SERVICE))
    pick_u = _UniformDraws(rng_stream(config.seed, rep, Stream.ROUTING))
    abandon_exp = _ExpDraws(rng_stream(config.seed, rep, Stream.ABANDON))

    mu_l = mu.tolist()
    busy = [True] * n  # both systems start full: X(0) = N
    x_het = n
    x_hom = n
    sum_busy_mu = float(mu.sum())
    idle: deque = deque()  # LISF order for the heterogeneous twin

    next_arr = (arrival_exp() / lam) if lam > 0.0 else _INF
    next_skel = skel_exp() / master_rate
    hazard = abandon_exp()
    t_cur = 0.0

    times: List[float] = []
    hom_counts: List[int] = []
    het_counts: List[int] = []
    d_hom = 0
    d_het = 0

    while True:
        q_het = max(x_het - n, 0)
        t_ab = t_cur + max(hazard, 0.0) / (nu * q_het) if (nu > 0.0 and q_het > 0) else _INF
        t_next = min(next_skel, t_ab, next_arr)
        if t_next > horizon:
            break
        if nu > 0.0 and q_het > 0:
            hazard -= nu * q_het * (t_next - t_cur)
        t_cur = t_next

        if t_next == next_skel:
            u = skel_u()
            # homogeneous acceptance: all busy servers work at rate p
            if u <= (min(x_hom, n) * p_rate) / master_rate:
                if x_hom > 0:
                    x_hom -= 1
                    d_hom += 1
            # heterogeneous acceptance: realized busy rates
            if u <= sum_busy_mu / master_rate:
                # free a busy server with probability proportional to its rate
                target = pick_u() * sum_busy_mu
                acc = 0.0
                freed = -1
                for k in range(n):
                    if busy[k]:
                        acc += mu_l[k]
                        if target < acc:
                            freed = k
                            break
                if freed < 0:  # numerical edge: last busy server
                    for k in range(n - 1, -1, -1):
                        if busy[k]:
                            freed = k
                            break
                x_het -= 1
                d_het += 1
                if x_het < n:
                    busy[freed] = False
                    sum_busy_mu -= mu_l[freed]
                    idle.append(freed)
                # else: a queued customer takes the freed server immediately
            times.append(t_cur)
            hom_counts.append(d_hom)
            het_counts.append(d_het)
            next_skel = t_cur + skel_exp() / master_rate
        elif t_next == t_ab:
            # shared abandonment epoch: heterogeneous queue loses its head,
            # the (longer) homogeneous queue loses one as well
            x_het -= 1
            if x_hom > n:  # always true while the ordering holds
                x_hom -= 1
            hazard = abandon_exp()
        else:
            x_het += 1
            x_hom += 1
            if x_het <= n:
                k = idle.popleft()
                busy[k] = True
                sum_busy_mu += mu_l[k]
            next_arr = t_cur + arrival_exp() / lam

    return CoupledPaths(
        skeleton_t=np.asarray(times),
        d_hom=np.asarray(hom_counts, dtype=np.int64),
        d_het=np.asarray(het_counts, dtype=np.int64),
        p_rate=p_rate,
        q_rate=q_rate,
        n_servers=n,
    )


@dataclass(frozen=True)
class Replication:
    rep: int
    zeta_hat: float
    sum_mu: float
    stable: bool
    estimates: SteadyEstimates


def _replicate_one(args) -> Replication:
    config, dist, rep, horizon, mode, warmup, grid_points, record_idle = args
    if config.pools is not None:
        system = RealizedSystem.realize_pools(config)
    else:
        system = RealizedSystem.realize(config, dist, rng_stream(config.seed, rep, Stream.RATES))
    path = run(
        config,
        system,
        horizon,
        mode=mode,
        grid_points=grid_points,
        record_idle=record_idle,
        rep=rep,
    )
    return Replication(
        rep=rep,
        zeta_hat=system.zeta_hat,
        sum_mu=system.sum_mu,
        stable=system.stable,
        estimates=steady_estimates(path, warmup),
    )


def replicate(
    config: SystemConfig,
    dist: RateDistribution,
    n_reps: int,
    horizon: float,
    mode: AbandonMode = AbandonMode.NONE,
    warmup: float = 0.2,
    grid_points: int = 10_000,
    record_idle: bool = False,
) -> List[Replication]:
    """Independent replications with fresh rate draws; streams split by rep.

    Fan-out across processes is capped by HETQ_THREADS (default: in-process
    sequential). Results are keyed by replication index either way.
    """
    if n_reps < 1:
        raise ConfigError(f"n_reps must be >= 1, got {n_reps}")
    jobs = [
        (config, dist, rep, horizon, mode, warmup, grid_points, record_idle)
        for rep in range(n_reps)
    ]
    threads = int(os.environ.get("HETQ_THREADS", "1"))
    if threads > 1 and n_reps > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(threads, n_reps)) as pool:
            results = list(pool.map(_replicate_one, jobs))
    else:
        results = [_replicate_one(job) for job in jobs]
    return sorted(results, key=lambda rr: rr.rep)


def path_to_csv(path: PathRecord) -> str:
    """Fixed-layout trajectory table: t,X,Q,Z_1..Z_I,R plus a trailing A."""
    cols = ["t", "X", "Q"] + [f"Z_{i+1}" for i in range(path.n_pools)] + ["R", "A"]
    lines = [",".join(cols)]
    ts = path.grid_t.tolist()
    for j in range(len(ts)):
        z = ",".join(str(int(path.grid_Z[j, i])) for i in range(path.n_pools))
        lines.append(
            f"{ts[j]!r},{int(path.grid_X[j])},{int(path.grid_Q[j])},"
            f"{z},{int(path.grid_R[j])},{int(path.grid_A[j])}"
        )
    return "\n".join(lines) + "\n"


def path_summary(path: PathRecord) -> dict:
    """JSON-ready run summary: counts, realized rates, seed, flags."""
    return {
        "seed": path.seed,
        "rep": path.rep,
        "r": path.r,
        "n_servers": path.n_servers,
        "n_pools": path.n_pools,
        "policy": path.policy.value,
        "abandon_mode": path.abandon_mode.value,
        "lambda_r": path.lambda_r,
        "horizon": path.horizon,
        "end_time": path.end_time,
        "overflowed": path.overflowed,
        "arrivals": path.arrivals_total,
        "departures": path.departures_total,
        "abandonments": path.abandon_total,
        "sum_mu": float(path.mu.sum()),
        "mu_min": float(path.mu.min()),
        "mu_max": float(path.mu.max()),
    }
