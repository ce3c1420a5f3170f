"""Objective-vs-iteration curves of the randomized search for several temperatures.

Runs on the first slot of the default scenario with weights V = q = 3, so that
objective gaps between neighbouring activations are comparable to the middle
temperature.
"""
import json

from _common import parser, scenario, write_csv
from edgesim.harness import rejo_convergence


def main():
    p = parser(__doc__, "fig6")
    p.add_argument("--taus", default="0.1,10,1000")
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--V", type=float, default=3.0)
    p.add_argument("--q", type=float, default=3.0)
    args = p.parse_args()
    taus = [float(t) for t in args.taus.split(",")]
    out = rejo_convergence(scenario(args), taus, range(args.seeds), args.V, args.q, args.iterations)
    header = ["iteration"] + [f"tau_{t:g}" for t in taus]
    rows = [[i + 1] + [o["mean_curve"][i] for o in out] for i in range(args.iterations)]
    write_csv(args.out / "curves.csv", header, rows)
    summary = [{k: v for k, v in o.items() if k != "mean_curve"} for o in out]
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
