"""Command-line entry point: ``edgesim {run,sweep,gibbs-check,verify-bounds,min-cover}``."""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness, traceio
from .baselines import PolicyKind
from .config import ConfigError, ExperimentConfig, dumps, load_config
from .rejo import InfeasibleInstanceError, gibbs_check
from .system_model import CoverageError, OverloadError
from .topology import TopologyError, UnsupportedSizeError, minimum_cover_size

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_INFEASIBLE = 4
EXIT_IO = 5


class UsageError(Exception):
    pass


def parse_seeds(text: str) -> list[int]:
    """``"7"`` -> [7]; ``"0..4"`` -> [0, 1, 2, 3, 4]; ``"1,3,5"`` -> [1, 3, 5]."""
    m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise UsageError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    try:
        return [int(s) for s in text.split(",")]
    except ValueError:
        raise UsageError(f"bad seed list {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", help="N..M or comma list")
    p.add_argument("--out", type=Path)
    p.add_argument("--policy")
    p.add_argument("--V", type=float)
    p.add_argument("--Q", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--slots", type=int)
    p.add_argument("--print-defaults", action="store_true", help="print the resolved config and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgesim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("run", help="simulate one policy"))
    p = sub.add_parser("sweep", help="seed-averaged parameter sweep")
    _common(p)
    p.add_argument("--param", required=True, choices=harness.SWEEP_PARAMETERS)
    p.add_argument("--values", required=True, help="comma-separated values")
    _common(sub.add_parser("verify-bounds", help="ENGINE averages against the long-run guarantees"))
    _common(sub.add_parser("min-cover", help="size of the smallest covering activation"))
    p = sub.add_parser("gibbs-check", help="visit frequencies vs the Gibbs distribution")
    p.add_argument("--bs", type=int, default=2)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--iters", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=0.05)
    p.add_argument("--out", type=Path)
    return parser


def resolve_config(args) -> tuple[ExperimentConfig, Path | None]:
    if args.config is not None:
        cfg = load_config(args.config)
        base = args.config.parent
    else:
        cfg, base = ExperimentConfig(), None
    ctrl = cfg.controller
    if args.V is not None:
        ctrl = replace(ctrl, V=args.V)
    if args.Q is not None:
        ctrl = replace(ctrl, Q=args.Q)
    if args.slots is not None:
        ctrl = replace(ctrl, horizon=args.slots)
    rejo = cfg.rejo if args.tau is None else replace(cfg.rejo, tau=args.tau)
    seeds = cfg.seeds
    if args.seeds is not None:
        seeds = tuple(parse_seeds(args.seeds))
    elif args.seed is not None:
        seeds = (args.seed,)
    policy = cfg.policy if args.policy is None else args.policy
    try:
        cfg = replace(cfg, controller=ctrl, rejo=rejo, seeds=seeds, policy=policy)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, base


def _out_dir(args) -> Path:
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    cfg, base = resolve_config(args)
    if args.print_defaults:
        print(dumps(cfg))
        return EXIT_OK
    scenario = cfg.scenario(base)
    out = _out_dir(args)
    results = harness.run_batch(scenario, cfg.policy, cfg.seeds)
    for res in results:
        target = out if len(results) == 1 else out / f"seed-{res.seed}"
        target.mkdir(parents=True, exist_ok=True)
        traceio.write_trace(res.rows, target / "trace.csv")
        traceio.write_summary(res.summary(), target / "summary.json")
    if len(results) > 1:
        traceio.write_summary(
            {
                "policy": cfg.policy,
                "seeds": list(cfg.seeds),
                "mean_cost": float(np.mean([r.mean_cost for r in results])),
                "mean_power": float(np.mean([r.mean_power for r in results])),
                "runs": [r.summary() for r in results],
            },
            out / "summary.json",
        )
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, base = resolve_config(args)
    if args.print_defaults:
        print(dumps(cfg))
        return EXIT_OK
    try:
        values = [float(v) for v in args.values.split(",")]
    except ValueError:
        raise UsageError(f"bad --values {args.values!r}") from None
    result = harness.sweep(args.param, values, cfg.scenario(base), cfg.policy, cfg.seeds)
    out = _out_dir(args)
    traceio.write_summary(result.to_dict(), out / "sweep.json")
    lines = ["value,mean_cost,mean_power,mean_sleeping,mean_local_fraction,cost_stderr,seeds"]
    for p in result.points:
        lines.append(",".join(traceio.fmt(x) for x in (
            p.value, p.mean_cost, p.mean_power, p.mean_sleeping, p.mean_local_fraction, p.cost_stderr, p.seeds
        )))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    print(json.dumps(result.to_dict()["spearman"], sort_keys=True))
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    cfg, base = resolve_config(args)
    if args.print_defaults:
        print(dumps(cfg))
        return EXIT_OK
    scenario = cfg.scenario(base)
    runs = {p: harness.run_batch(scenario, p, cfg.seeds) for p in (PolicyKind.ENGINE, PolicyKind.PCU, PolicyKind.DCU)}
    report = harness.verify_bounds(
        runs[PolicyKind.ENGINE], runs[PolicyKind.PCU], runs[PolicyKind.DCU],
        scenario.controller, scenario.topology.power_caps,
    )
    if args.out is not None:
        traceio.write_summary(report, _out_dir(args) / "bounds.json")
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_min_cover(args) -> int:
    cfg, base = resolve_config(args)
    if args.print_defaults:
        print(dumps(cfg))
        return EXIT_OK
    print(minimum_cover_size(cfg.topology.build(base)))
    return EXIT_OK


def cmd_gibbs_check(args) -> int:
    report = gibbs_check(args.bs, args.tau, args.iters, args.seed)
    report["tolerance"] = args.tolerance
    report["pass"] = report["total_variation"] <= args.tolerance
    if args.out is not None:
        traceio.write_summary(report, _out_dir(args) / "gibbs_check.json")
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "verify-bounds": cmd_verify_bounds,
    "min-cover": cmd_min_cover,
    "gibbs-check": cmd_gibbs_check,
}


def _error(kind: str, exc: BaseException, code: int) -> int:
    print(json.dumps({"error": kind, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _error("usage", exc, EXIT_USAGE)
    except (ConfigError, TopologyError, UnsupportedSizeError) as exc:
        return _error("config", exc, EXIT_CONFIG)
    except (InfeasibleInstanceError, CoverageError, OverloadError) as exc:
        return _error("infeasible", exc, EXIT_INFEASIBLE)
    except OSError as exc:
        return _error("io", exc, EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
