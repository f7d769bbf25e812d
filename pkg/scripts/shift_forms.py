"""Run one preset under both shift-rate forms and compare the headline metrics."""
import argparse
from pathlib import Path

from halfline_ns.harness.config import apply_overrides, preset_sections, scenario_from_sections
from halfline_ns.harness.runner import run_scenario
from halfline_ns.shift_weight import ShiftForm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="impermeable-weak-shock")
    ap.add_argument("--t-end", type=float, default=50.0)
    ap.add_argument("--out", default="runs/shift_forms")
    args = ap.parse_args()

    print(f"{'form':>9} {'sup(T)/sup(0)':>14} {'|Xdot(T)|':>11} {'max|Xdot|':>11} {'X(T)':>11} {'max res':>9}")
    for form in ShiftForm:
        sec = apply_overrides(preset_sections(args.preset),
                              {"shock.shift_form": form.value, "time.t_end": args.t_end})
        o = run_scenario(scenario_from_sections(sec, args.preset), Path(args.out) / form.value)
        r = o.rows
        xd = [abs(x["xdot"]) for x in r]
        res = max(x["identity_residual"] for x in r[1:])
        print(f"{form.value:>9} {r[-1]['sup_pert'] / r[0]['sup_pert']:14.4f} {xd[-1]:11.3e} {max(xd):11.3e} "
              f"{r[-1]['X']:11.3e} {res:9.2e}")


if __name__ == "__main__":
    main()
