"""Number of sleeping stations when the power-deficit queue is pinned at fixed values.

Also records how often each station is active, to show which ones are kept on.
"""
from dataclasses import replace

import numpy as np

from _common import parser, scenario, write_csv
from edgesim.harness import run_batch


def main():
    p = parser(__doc__, "fig5")
    p.add_argument("--values", default="0,25,50,100,200,400,800,1600,1e4,1e6")
    args = p.parse_args()
    sc = scenario(args)
    T = args.slots or 50
    sc = replace(sc, controller=replace(sc.controller, horizon=T))
    N = sc.topology.num_stations
    rows = []
    for v in (float(x) for x in args.values.split(",")):
        runs = run_batch(sc, "ENGINE", range(args.seeds), pinned_q=v)
        acts = np.array([r.decision.activation for run in runs for r in run.rows])
        sleeping = N - acts.sum(axis=1)
        rows.append([v, sleeping.mean(), sleeping.min(), sleeping.max(), *acts.mean(axis=0)])
        print(f"q={v:g}: mean sleeping {sleeping.mean():.2f}")
    header = ["q", "mean_sleeping", "min_sleeping", "max_sleeping"] + [f"on_{n}" for n in range(N)]
    write_csv(args.out / "pinned_q.csv", header, rows)


if __name__ == "__main__":
    main()
