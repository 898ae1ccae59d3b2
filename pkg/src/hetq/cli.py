"""Command-line front end: config files in, plot-ready CSV/JSON out.

Every command resolves its configuration (file plus ``--set`` overrides),
writes its data artifacts into ``--out``, and finishes with a
``manifest.json`` recording the fully resolved config, the seed, and a
sha256 per artifact. ``hetq rerun manifest.json`` replays a manifest and
reproduces the artifacts byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numerical-domain error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from . import diffusion as dfn
from . import ssc as ssc_mod
from .core import (
    HalfinWhitt,
    Policy,
    RateDistribution,
    RealizedSystem,
    Stream,
    SystemConfig,
    format_config,
    load_config_file,
    parse_config_text,
    rate_moments,
    rng_stream,
)
from .errors import ConfigError, DomainError, HetqError
from .sim import (
    AbandonMode,
    coupled_run,
    path_summary,
    path_to_csv,
    replicate,
    run,
    steady_estimates,
)
from .staffing import CostSpec, cost_aband, cost_no_aband, optimize_staffing

COMMANDS = ("simulate", "analyze", "staff", "ql-sweep", "ssc", "fairness", "couple")


def _f(x) -> str:
    return repr(float(x))


def _csv(rows, header) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _resolve_values(config_path: Optional[str], overrides, seed, reps) -> dict:
    values = load_config_file(config_path) if config_path else {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        values.update(parse_config_text(item))
    if seed is not None:
        values["seed"] = int(seed)
    if reps is not None:
        values["reps"] = int(reps)
    return values


def _system_config(values: dict, need_lambda=True) -> SystemConfig:
    try:
        lambda_r = float(values["lambda_r"]) if need_lambda else float(values.get("lambda_r", 1.0))
    except KeyError:
        raise ConfigError("missing required key 'lambda_r'") from None
    r = float(values.get("r", lambda_r if lambda_r > 0 else 1.0))
    return SystemConfig(
        r=r,
        lambda_r=lambda_r,
        seed=int(values.get("seed", 0)),
        staffing=values.get("staffing", HalfinWhitt(1.0)),
        arrival_scv=float(values.get("arrival_scv", 1.0)),
        abandon_rate=float(values.get("abandon_rate", 0.0)),
        policy=values.get("policy", Policy.LISF),
        pools=values.get("pools"),
    )


def _rates(values: dict) -> RateDistribution:
    return values.get("rates", RateDistribution.point(1.0))


def _realize(config: SystemConfig, dist: RateDistribution, rep: int = 0) -> RealizedSystem:
    if config.pools is not None:
        return RealizedSystem.realize_pools(config)
    return RealizedSystem.realize(config, dist, rng_stream(config.seed, rep, Stream.RATES))


def _abandon_mode(values: dict) -> AbandonMode:
    name = str(values.get("abandon_mode", "none")).lower()
    try:
        return AbandonMode(name)
    except ValueError:
        raise ConfigError(f"abandon_mode must be none/per_customer/perturbed, got {name!r}") from None


def _diffusion_params(values: dict) -> dfn.DiffusionParams:
    dist = _rates(values)
    moments = rate_moments(dist)
    mu_bar = float(values.get("mu_bar", moments.mean))
    scv = float(values.get("arrival_scv", 1.0))
    sigma = float(values.get("sigma", math.sqrt(mu_bar * (scv + 1.0))))
    policy = values.get("policy", Policy.LISF)
    if "gamma" in values:
        gamma = float(values["gamma"])
    elif policy is Policy.FSF:
        gamma = moments.gamma_fsf
    else:
        gamma = moments.gamma_lisf
    if "beta" in values:
        beta = float(values["beta"])
    else:
        theta = float(values.get("theta", 1.0))
        beta = -theta * mu_bar
    nu = float(values.get("nu", values.get("abandon_rate", 0.0)))
    return dfn.DiffusionParams(sigma=sigma, beta=beta, gamma=gamma, nu=nu)


# --------------------------------------------------------------------------
# command handlers: values -> {filename: bytes}
# --------------------------------------------------------------------------

def _cmd_simulate(values: dict) -> Dict[str, bytes]:
    config = _system_config(values)
    dist = _rates(values)
    horizon = float(values.get("horizon", 1000.0))
    warmup = float(values.get("warmup", 0.2))
    mode = _abandon_mode(values)
    n_reps = int(values.get("reps", 1))
    grid_points = int(values.get("grid_points", 10_000))
    queue_cap = int(values.get("queue_cap", 1_000_000))
    if n_reps <= 1:
        system = _realize(config, dist)
        path = run(
            config,
            system,
            horizon,
            mode=mode,
            x0=values.get("x0"),
            grid_points=grid_points,
            queue_cap=queue_cap,
            record_idle=bool(values.get("record_idle", True)),
        )
        est = steady_estimates(path, warmup)
        summary = path_summary(path)
        summary["estimates"] = {
            "p_wait": est.p_wait,
            "mean_Q": est.mean_Q,
            "abandon_rate": est.abandon_rate,
            "mean_scaled_queue": est.mean_scaled_queue,
            "warmup_fraction": warmup,
        }
        summary["realized_rates_head"] = [float(v) for v in path.mu[:32]]
        summary["zeta_hat"] = system.zeta_hat
        return {"path.csv": path_to_csv(path).encode(), "summary.json": _json_bytes(summary)}
    reps = replicate(
        config, dist, n_reps, horizon, mode=mode, warmup=warmup, grid_points=grid_points
    )
    rows = [
        (
            str(rr.rep),
            _f(rr.zeta_hat),
            _f(rr.estimates.p_wait),
            _f(rr.estimates.mean_Q),
            _f(rr.estimates.abandon_rate),
            _f(rr.estimates.mean_scaled_queue),
        )
        for rr in reps
    ]
    csv = _csv(rows, ["rep", "zeta_hat", "p_wait", "mean_Q", "abandon_rate", "mean_scaled_queue"])
    summary = {
        "reps": n_reps,
        "mean_p_wait": float(np.mean([rr.estimates.p_wait for rr in reps])),
        "mean_Q": float(np.mean([rr.estimates.mean_Q for rr in reps])),
        "mean_abandon_rate": float(np.mean([rr.estimates.abandon_rate for rr in reps])),
        "stable_fraction": float(np.mean([rr.stable for rr in reps])),
    }
    return {"reps.csv": csv.encode(), "summary.json": _json_bytes(summary)}


def _cmd_analyze(values: dict) -> Dict[str, bytes]:
    params = _diffusion_params(values)
    if params.nu > 0.0:
        dens = dfn.stationary_aband(params)
    else:
        dens = dfn.stationary_no_aband(params)
    epp = dfn.expected_positive_part(params)
    points = int(values.get("density_points", 401))
    span = values.get("density_span")
    if span is None:
        upper_scale = dens.upper.mean() if params.nu == 0.0 else abs(params.beta / params.nu) + params.sigma
        lower_scale = abs(params.beta / params.gamma) + params.sigma
        span = 5.0 * max(upper_scale, lower_scale, 1.0)
    xs = np.linspace(-span, span, points)
    pdf = dens.pdf(xs)
    rows = [(_f(x), _f(v)) for x, v in zip(xs, pdf)]
    info = {
        "sigma": params.sigma,
        "beta": params.beta,
        "gamma": params.gamma,
        "nu": params.nu,
        "varrho": dens.varrho,
        "mean_positive_part": epp,
        "continuity_residual": dens.continuity_residual(),
        "density_grid": {"x": [float(v) for v in xs], "pdf": [float(v) for v in pdf]},
    }
    return {
        "density.csv": _csv(rows, ["x", "pdf"]).encode(),
        "analysis.json": _json_bytes(info),
    }


def _cmd_staff(values: dict) -> Dict[str, bytes]:
    config = _system_config(values)
    dist = _rates(values)
    model = str(values.get("cost_model", "abandon")).lower()
    cost = CostSpec(
        c_s=float(values.get("c_s", 1.0)),
        c_w=float(values.get("c_w", 1.0)),
        d=float(values.get("d", 1.0)),
        c_un=float(values.get("c_un", 0.0)),
        nu=float(values.get("nu", values.get("abandon_rate", 0.0))),
    )
    if model == "abandon":
        fn = lambda x: cost_aband(x, config, dist, cost)
    elif model == "waiting":
        fn = lambda x: cost_no_aband(x, config, dist, cost)
    else:
        raise ConfigError(f"cost_model must be 'waiting' or 'abandon', got {model!r}")
    bracket = (float(values.get("bracket_lo", 0.05)), float(values.get("bracket_hi", 6.0)))
    tol = float(values.get("opt_tol", 1e-4))
    res = optimize_staffing(fn, bracket, tol=tol)
    offered = config.lambda_r / dist.mean()
    n_star = math.ceil(offered + res.x_star * math.sqrt(offered))
    info = {
        "x_star": res.x_star,
        "N_star": int(n_star),
        "cost_at_optimum": res.cost_at_optimum,
        "bracket": list(res.bracket),
        "tol": res.tol,
        "unimodal": res.unimodal,
        "used_grid_fallback": res.used_grid_fallback,
        "cost_model": model,
        "curve": {
            "x": [float(v) for v in res.curve_x],
            "cost": [float(v) for v in res.curve_cost],
        },
    }
    rows = [(_f(x), _f(c)) for x, c in zip(res.curve_x, res.curve_cost)]
    return {
        "staffing.json": _json_bytes(info),
        "curve.csv": _csv(rows, ["x", "cost"]).encode(),
    }


def _cmd_ql_sweep(values: dict) -> Dict[str, bytes]:
    sigma = float(values.get("sigma", 4.0))
    theta = float(values.get("theta", 2.0))
    nu = float(values.get("nu", 2.0))
    mu_bar = float(values.get("mu_bar", 1.0))
    lo = float(values.get("eps_min", 0.05))
    hi = float(values.get("eps_max", 0.5))
    steps = int(values.get("eps_steps", 10))
    eps_grid = np.linspace(lo, hi, steps)
    rows = []
    for eps in eps_grid:
        lisf = dfn.ql_eps(float(eps), mu_bar, sigma, theta, nu, policy=Policy.LISF)
        fsf = dfn.ql_eps(float(eps), mu_bar, sigma, theta, nu, policy=Policy.FSF)
        rows.append((_f(eps), _f(lisf), _f(fsf)))
    return {"ql.csv": _csv(rows, ["eps", "QL_lisf", "QL_fsf"]).encode()}


def _cmd_ssc(values: dict) -> Dict[str, bytes]:
    pools = values.get("pools")
    if pools is None:
        raise ConfigError("ssc needs the 'pools' key (inverted-V structure)")
    r_values = values.get("r_values", (25.0, 100.0, 400.0))
    lambda_hat = float(values.get("lambda_hat", -3.0))
    horizon = float(values.get("ssc_horizon", 50.0))
    n_reps = int(values.get("reps", 30))
    seed = int(values.get("seed", 0))
    policy = values.get("policy", Policy.LISF)
    configs = [
        ssc_mod.inverted_v_config(rv, pools, lambda_hat, seed=seed, policy=policy)
        for rv in r_values
    ]
    table = ssc_mod.ssc_convergence(configs, horizon, horizon, n_reps=n_reps)
    rows = [
        (
            _f(row["r"]),
            str(row["rep"]),
            _f(row["g_supnorm"]),
            _f(row["z_supnorm"]),
            _f(row["ratio"]),
        )
        for row in table.rows
    ]
    return {
        "ssc.csv": _csv(rows, ["r", "rep", "g_supnorm", "z_supnorm", "ratio"]).encode(),
        "ssc_summary.json": _json_bytes({"medians": table.medians()}),
    }


def _cmd_fairness(values: dict) -> Dict[str, bytes]:
    config = _system_config(values)
    dist = _rates(values)
    horizon = float(values.get("horizon", 1000.0))
    n_bins = int(values.get("bins", 10))
    system = _realize(config, dist)
    path = run(
        config,
        system,
        horizon,
        record_idle=bool(values.get("record_idle", True)),
        grid_points=int(values.get("grid_points", 10_000)),
    )
    edges = ssc_mod.default_bins(dist, n_bins)
    fe = ssc_mod.fairness_estimate(path, system.mu, edges, dist=dist)
    rows = []
    for b in range(edges.size - 1):
        theory = _f(fe.eta_theory[b]) if fe.eta_theory is not None else ""
        rows.append((_f(edges[b]), _f(edges[b + 1]), _f(fe.eta_hat[b]), theory))
    info = {
        "policy": config.policy.value,
        "total_idle_time": fe.total_idle_time,
        "sup_discrepancy": fe.sup_discrepancy,
        "sup_abs_error": (
            float(np.abs(fe.eta_hat - fe.eta_theory).max())
            if fe.eta_theory is not None
            else None
        ),
    }
    return {
        "fairness.csv": _csv(rows, ["bin_lo", "bin_hi", "eta_hat", "eta_theory"]).encode(),
        "fairness.json": _json_bytes(info),
    }


def _cmd_couple(values: dict) -> Dict[str, bytes]:
    config = _system_config(values)
    dist = _rates(values)
    system = _realize(config, dist)
    p_rate = float(values.get("p_rate", dist.p))
    q_rate = max(dist.q, float(system.mu.max()))
    events = int(values.get("skeleton_events", 10_000))
    horizon = events / (system.n_servers * q_rate)
    cp = coupled_run(config, p_rate, system, horizon, q_rate=q_rate)
    rows = [
        (_f(t), str(int(h)), str(int(g)))
        for t, h, g in zip(cp.skeleton_t, cp.d_hom, cp.d_het)
    ]
    info = {
        "ordered_everywhere": cp.ordered_everywhere(),
        "skeleton_points": int(cp.skeleton_t.size),
        "p_rate": cp.p_rate,
        "q_rate": cp.q_rate,
        "final_gap": int(cp.d_het[-1] - cp.d_hom[-1]) if cp.skeleton_t.size else 0,
    }
    return {
        "couple.csv": _csv(rows, ["t", "D_hom", "D_het"]).encode(),
        "couple.json": _json_bytes(info),
    }


_HANDLERS = {
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "staff": _cmd_staff,
    "ql-sweep": _cmd_ql_sweep,
    "ssc": _cmd_ssc,
    "fairness": _cmd_fairness,
    "couple": _cmd_couple,
}

# simple defaults materialized into the manifest; derived quantities
# (sigma from the rate law, r from lambda_r, ...) stay derived
_DEFAULTS = {
    "simulate": {
        "seed": 0, "horizon": 1000.0, "warmup": 0.2, "abandon_mode": "none",
        "grid_points": 10_000, "queue_cap": 1_000_000, "record_idle": True,
        "reps": 1,
    },
    "analyze": {"density_points": 401},
    "staff": {
        "seed": 0, "cost_model": "abandon", "c_s": 1.0, "c_w": 1.0, "d": 1.0,
        "c_un": 0.0, "bracket_lo": 0.05, "bracket_hi": 6.0, "opt_tol": 1e-4,
    },
    "ql-sweep": {
        "sigma": 4.0, "theta": 2.0, "nu": 2.0, "mu_bar": 1.0,
        "eps_min": 0.05, "eps_max": 0.5, "eps_steps": 10,
    },
    "ssc": {
        "seed": 0, "r_values": (25.0, 100.0, 400.0), "lambda_hat": -3.0,
        "ssc_horizon": 50.0, "reps": 30,
    },
    "fairness": {
        "seed": 0, "horizon": 1000.0, "bins": 10, "record_idle": True,
        "grid_points": 10_000,
    },
    "couple": {"seed": 0, "skeleton_events": 10_000},
}

_PLOT_STUB = """\
# Minimal plotting stub for the '{command}' artifacts in this directory.
# Reads the CSV next to this script; tweak to taste.
import csv
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent.parent
for name in {names!r}:
    with open(here / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        continue
    keys = list(rows[0])
    xs = [float(r[keys[0]]) for r in rows]
    plt.figure()
    for col in keys[1:]:
        try:
            plt.plot(xs, [float(r[col] or "nan") for r in rows], label=col)
        except ValueError:
            continue
    plt.xlabel(keys[0])
    plt.legend()
    plt.title(name)
plt.show()
"""


def dispatch(command: str, values: dict, out_dir, fmt: str = "csv") -> dict:
    """Run one command and write its artifacts plus manifest into out_dir."""
    if command not in _HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    values = {**_DEFAULTS.get(command, {}), **values}
    artifacts = _HANDLERS[command](values)
    if fmt == "json":
        converted = {}
        for name, data in artifacts.items():
            if name.endswith(".csv"):
                lines = data.decode("utf-8").strip().splitlines()
                table = {
                    "header": lines[0].split(","),
                    "rows": [line.split(",") for line in lines[1:]],
                }
                converted[name[:-4] + ".json"] = _json_bytes(table)
            else:
                converted[name] = data
        artifacts = converted
    checksums = {}
    for name, data in sorted(artifacts.items()):
        (out / name).write_bytes(data)
        checksums[name] = _sha256(data)
    csv_names = [n for n in artifacts if n.endswith(".csv")]
    if csv_names:
        stub_dir = out / "plots"
        stub_dir.mkdir(exist_ok=True)
        stub = _PLOT_STUB.format(command=command, names=sorted(csv_names)).encode()
        (stub_dir / f"plot_{command.replace('-', '_')}.py").write_bytes(stub)
    config_map = {}
    for line in format_config(values).strip().splitlines():
        key, _, rendered = line.partition(" = ")
        config_map[key] = rendered
    manifest = {
        "command": command,
        "format": fmt,
        "seed": int(values.get("seed", 0)),
        "config": config_map,
        "artifacts": checksums,
    }
    (out / "manifest.json").write_bytes(_json_bytes(manifest))
    return manifest


def rerun_manifest(manifest_path, out_dir) -> dict:
    """Replay a manifest; artifact bytes must reproduce exactly."""
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    text = "\n".join(f"{k} = {v}" for k, v in manifest["config"].items())
    values = parse_config_text(text)
    return dispatch(manifest["command"], values, out_dir, fmt=manifest.get("format", "csv"))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hetq",
        description="Heterogeneous many-server queue simulator and analytics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key = value config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--format", default="csv", choices=("csv", "json"))
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--reps", type=int, default=None)
    p = sub.add_parser("rerun")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            rerun_manifest(args.manifest, args.out)
        else:
            values = _resolve_values(args.config, args.set, args.seed, args.reps)
            dispatch(args.command, values, args.out, fmt=args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except HetqError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
