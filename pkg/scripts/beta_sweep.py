"""Cumulative boundary term |P| against the shock's distance from the boundary.

Runs a preset at several beta factors (beta = factor / delta) and fits
log cum|P| linearly in delta * beta.

    python scripts/beta_sweep.py --factors 40 60 80 --t-end 20
"""
import argparse
import json
from pathlib import Path

import numpy as np

from halfline_ns.harness.config import apply_overrides, preset_sections, scenario_from_sections
from halfline_ns.harness.runner import run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="impermeable-weak-shock")
    ap.add_argument("--factors", type=float, nargs="+", default=[40.0, 60.0, 80.0])
    ap.add_argument("--t-end", type=float, default=20.0)
    ap.add_argument("--out", default="runs/beta_sweep")
    args = ap.parse_args()

    rows = []
    for f in args.factors:
        sec = apply_overrides(preset_sections(args.preset),
                              {"shock.beta_factor": f, "time.t_end": args.t_end, "time.output_stride": 500})
        o = run_scenario(scenario_from_sections(sec, args.preset), Path(args.out) / f"factor_{f:g}")
        cum = o.rows[-1]["cumulative_abs_P"]
        rows.append({"factor": f, "beta": o.problem.beta, "cum_abs_P": cum, "exit_code": o.exit_code})
        print(f"factor {f:6.1f}  beta {o.problem.beta:8.2f}  cum|P| {cum:.4e}  exit {o.exit_code}")

    x = np.array([r["factor"] for r in rows])
    y = np.log([r["cum_abs_P"] for r in rows])
    slope, icpt = np.polyfit(x, y, 1)
    r2 = 1 - np.sum((y - (slope * x + icpt)) ** 2) / np.sum((y - y.mean()) ** 2)
    print(f"log cum|P| = {icpt:.3f} {slope:+.4f} * delta*beta   R2 = {r2:.5f}")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    with open(Path(args.out) / "fit.json", "w") as fh:
        json.dump({"rows": rows, "slope": slope, "intercept": icpt, "r2": r2}, fh, indent=2)


if __name__ == "__main__":
    main()
