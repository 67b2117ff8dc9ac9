"""Command-line front end: solve, sweep and validate model configurations."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import measures, moments, oracle, solver
from .model import (
    BatchDistribution,
    ConfigError,
    ModelError,
    ModelParams,
    UnstableError,
    params_from_config,
    validate_params,
)

SWEEP_PARAMS = ("rho", "alpha", "batch_size", "delta")
_SWEEP_COLUMNS = ("P_on_off", "P_on_idle", "E_Q", "C_on_off", "C_on_idle")


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _load_config(path: str) -> ModelParams:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return params_from_config(cfg)


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _solve_payload(params: ModelParams, moment_order: int | None) -> dict:
    solved = solver.solve(params)
    joint = solver.joint_distribution(solved)
    e_qi = oracle.onidle_mean_queue(params)
    report = measures.build_report(solved, joint, e_qi)
    payload = {
        "rho": params.rho,
        "pi00": solved.pi00,
        "boundary": list(solved.boundary),
        "level_masses": list(report.level_masses),
        "E_Q": report.mean_queue,
        "E_W": report.mean_wait,
        "E_Q_onidle": report.onidle_mean_queue,
        "P_on_off": report.power_on_off,
        "P_on_idle": report.power_on_idle,
        "C_on_off": report.cost_on_off,
        "C_on_idle": report.cost_on_idle,
        "decomposition_gap": report.decomposition_gap,
        "tail_mass_bound": joint.tail_mass_bound,
    }
    if moment_order is not None:
        table = moments.moment_table(solved, moment_order)
        payload["moments"] = [list(row) for row in table.values]
    return payload


def cmd_solve(args) -> int:
    params = _load_config(args.config)
    validate_params(params)
    payload = _solve_payload(params, args.moments)
    _write_output(json.dumps(payload, sort_keys=True, indent=2), args.out)
    return 0


def _sweep_point(params: ModelParams, name: str, value: float) -> ModelParams:
    """Model at one grid point; the swept quantity replaces its base value."""
    lam = params.arrival_rate
    mu = params.service_rate
    c = params.servers
    if name == "rho":
        lam_new = value * c * mu / params.batch.mean
        return ModelParams(lam_new, mu, c, params.setup_rates, params.batch, params.costs)
    if name == "alpha":
        base = params.setup_rates[0]
        scaled = tuple(a * value / base for a in params.setup_rates)
        return ModelParams(lam, mu, c, scaled, params.batch, params.costs)
    if name == "batch_size":
        size = int(value)
        if size != value or size < 1:
            raise ConfigError(f"batch_size grid values must be positive integers (got {value})")
        # keep the traffic intensity of the base model
        lam_new = lam * params.batch.mean / size
        return ModelParams(
            lam_new, mu, c, params.setup_rates, BatchDistribution.deterministic(size), params.costs
        )
    if name == "delta":
        costs = params.costs
        new_costs = type(costs)(setup=costs.setup, run=costs.run, idle=costs.idle, delta=value)
        return ModelParams(lam, mu, c, params.setup_rates, params.batch, new_costs)
    raise ConfigError(f"unknown sweep parameter {name!r}")


def _sweep_row(params: ModelParams, name: str, value: float) -> list[str]:
    try:
        point = _sweep_point(params, name, value)
        validate_params(point)
        solved = solver.solve(point)
        e_qi = oracle.onidle_mean_queue(point)
        on_off, on_idle = measures.cost_functions(solved, e_qi)
        metrics = (
            measures.power_on_off(solved),
            measures.power_on_idle(point),
            moments.mean_queue_length(solved),
            on_off,
            on_idle,
        )
        return [_fmt(value)] + [_fmt(m) for m in metrics] + ["ok"]
    except UnstableError:
        return [_fmt(value)] + [""] * len(_SWEEP_COLUMNS) + ["skipped: unstable"]
    except ModelError as exc:
        return [_fmt(value)] + [""] * len(_SWEEP_COLUMNS) + [f"skipped: {exc}"]


def cmd_sweep(args) -> int:
    params = _load_config(args.config)
    grid = [float(v) for v in args.grid.split(",") if v.strip() != ""]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([args.param, *_SWEEP_COLUMNS, "status"])
    if grid:
        with ThreadPoolExecutor(max_workers=min(8, len(grid))) as pool:
            rows = list(pool.map(lambda v: _sweep_row(params, args.param, v), grid))
        writer.writerows(rows)
    _write_output(buf.getvalue(), args.out)
    return 0


def _validation_gaps(params: ModelParams, j_max: int | None) -> dict[str, float]:
    solved = solver.solve(params)
    joint = solver.joint_distribution(solved)
    rows_oracle, depth = oracle.reference_rows(params, j_max=j_max)
    c = params.servers

    boundary_gap = max(
        abs(solved.boundary[i] - rows_oracle[i][0]) for i in range(c + 1)
    )

    joint_gap = 0.0
    half = min(joint.j_max, depth) // 2
    for i in range(c + 1):
        keep = half - i + 1
        if keep <= 0:
            continue
        ana = np.asarray(joint.rows[i][:keep])
        ref = rows_oracle[i][: len(ana)]
        joint_gap = max(joint_gap, float(np.max(np.abs(ana - ref))))

    table = moments.moment_table(solved, 2)
    moment_gap = 0.0
    for i in range(c + 1):
        row = np.asarray(rows_oracle[i])
        k = np.arange(len(row), dtype=float)
        first = float(np.sum(k * row))
        second = float(np.sum(k * (k - 1.0) * row))
        moment_gap = max(moment_gap, abs(table.moment(i, 1) - first))
        moment_gap = max(moment_gap, abs(table.moment(i, 2) - second))

    decomposition = measures.decomposition_gap(solved, joint)
    return {
        "boundary": boundary_gap,
        "joint": joint_gap,
        "moments": moment_gap,
        "decomposition": decomposition,
    }


def cmd_validate(args) -> int:
    params = _load_config(args.config)
    validate_params(params)
    gaps = _validation_gaps(params, args.jmax)
    failing = [name for name, gap in gaps.items() if not gap < args.tol]
    for name, gap in gaps.items():
        status = "ok" if gap < args.tol else "FAIL"
        print(f"{name} max_gap {gap:.3e} {status}")
    if failing:
        print(f"error: validation failed: {', '.join(failing)} (tol {args.tol:g})", file=sys.stderr)
        return 4
    print(f"validation ok (tol {args.tol:g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="setupq",
        description="Batch-arrival multiserver queues with setup times: "
        "stationary solve, parameter sweeps, oracle validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one config, emit a JSON report")
    p_solve.add_argument("--config", required=True, help="JSON model configuration")
    p_solve.add_argument("--moments", type=int, default=None, metavar="N",
                         help="include factorial moments up to order N")
    p_solve.add_argument("--out", default=None, help="output file (default stdout)")
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter, emit CSV")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p_sweep.add_argument("--grid", required=True, help="comma-separated grid values")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="compare against the truncated-chain oracle")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--jmax", type=int, default=None, help="oracle truncation override")
    p_val.add_argument("--tol", type=float, default=1e-6)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (solver.NumericalBreakdownError, solver.TruncationTooSmallError,
            oracle.SingularSystemError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    raise SystemExit(main())
