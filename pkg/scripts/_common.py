"""Shared helpers for the experiment scripts."""
import argparse
import csv
from pathlib import Path

from edgesim.config import ExperimentConfig, load_config


def parser(description: str, out: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--config", type=Path, help="JSON experiment config (defaults if omitted)")
    p.add_argument("--seeds", type=int, default=20, help="number of seeds, 0..n-1")
    p.add_argument("--slots", type=int, default=None, help="override the horizon")
    p.add_argument("--out", type=Path, default=Path("results") / out)
    return p


def scenario(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    base = args.config.parent if args.config else None
    return cfg.scenario(base)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path}")
