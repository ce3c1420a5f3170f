"""Delay and power of ENGINE against the STSC, PCU and DCU baselines.

Writes per-slot averages across seeds (one column pair per policy) and a
summary with long-run means and the drift-plus-penalty bound check.
"""
import json

import numpy as np

from _common import parser, scenario, write_csv
from edgesim.harness import run_batch, verify_bounds

POLICIES = ("ENGINE", "STSC", "PCU", "DCU")


def main():
    args = parser(__doc__, "fig3").parse_args()
    sc = scenario(args)
    seeds = range(args.seeds)
    runs = {p: run_batch(sc, p, seeds) for p in POLICIES}
    T = runs["ENGINE"][0].T
    header = ["t"] + [f"{k}_{p}" for p in POLICIES for k in ("c", "P")]
    rows = []
    for t in range(T):
        row = [t + 1]
        for p in POLICIES:
            row += [np.mean([r.rows[t].cost for r in runs[p]]), np.mean([r.rows[t].power for r in runs[p]])]
        rows.append(row)
    write_csv(args.out / "per_slot.csv", header, rows)
    summary = {
        p: {"mean_cost": float(np.mean([r.mean_cost for r in rs])), "mean_power": float(np.mean([r.mean_power for r in rs]))}
        for p, rs in runs.items()
    }
    summary["bounds"] = verify_bounds(runs["ENGINE"], runs["PCU"], runs["DCU"], sc.controller, sc.topology.power_caps)
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps({p: summary[p] for p in POLICIES}, indent=2))


if __name__ == "__main__":
    main()
