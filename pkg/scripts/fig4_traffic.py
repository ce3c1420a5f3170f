"""Offloading and delay as the mean regional traffic grows (ENGINE)."""
from _common import parser, scenario, write_csv
from edgesim.harness import sweep


def main():
    p = parser(__doc__, "fig4")
    p.add_argument("--values", default="4,6,8,10,12,14,16,18,20")
    args = p.parse_args()
    values = [float(v) for v in args.values.split(",")]
    res = sweep("traffic_mean", values, scenario(args), "ENGINE", range(args.seeds), args.slots)
    cols = ["value", "mean_local_fraction", "mean_cost", "mean_power", "mean_sleeping", "cost_stderr"]
    write_csv(args.out / "traffic_sweep.csv", cols, [[getattr(pt, c) for c in cols] for pt in res.points])
    print({k: round(v, 3) for k, v in res.to_dict()["spearman"].items()})


if __name__ == "__main__":
    main()
