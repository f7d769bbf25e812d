"""halfline-ns command line: profile, run, sweep, check."""
from __future__ import annotations

import argparse
import configparser
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..shock_profile import build_profile, check_tail_decay, profile_residuals, write_profile_csv
from .checks import certificate_suite, poincare_suite, profile_suite
from .config import (OUTPUT_ENV, PRESETS, ConfigError, ValidationError, apply_overrides,
                     preset_sections, scenario_from_sections)
from .runner import resolve_out_dir, run_scenario


def _sections(args) -> dict:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
        cp.optionxform = str
        try:
            with open(args.config) as fh:
                cp.read_file(fh)
        except configparser.Error as err:
            raise ConfigError(f"malformed document: {err}") from None
        sec = {s: dict(cp[s]) for s in cp.sections()}
        sec["name"] = Path(args.config).stem
        return sec
    return preset_sections(args.preset or "impermeable-weak-shock")


def _overrides(pairs):
    out = {}
    for p in pairs or ():
        if "=" not in p:
            raise ConfigError(f"{p}: overrides look like section.key=value")
        k, v = p.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _scenario(args, extra=None):
    sec = _sections(args)
    ov = _overrides(getattr(args, "set", None))
    if getattr(args, "seed", None) is not None:
        ov["perturbation.seed"] = str(args.seed)
    ov.update(extra or {})
    sec = apply_overrides(sec, ov)
    return sec, scenario_from_sections(sec, sec.get("name", "custom"))


def cmd_profile(args) -> int:
    _, sc = _scenario(args)
    end = sc.end_states()
    prof = build_profile(end)
    out = resolve_out_dir(sc, args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_profile_csv(prof, out / "profile.csv")
    r1, r2, r3 = profile_residuals(prof)
    rep = check_tail_decay(prof)
    summary = {"v_minus": end.v_minus, "u_minus": end.u_minus, "v_plus": end.v_plus, "u_plus": end.u_plus,
               "sigma": end.sigma, "delta": end.delta, "half_width": prof.half_width,
               "residuals": [r1, r2, r3], "rate_minus": rep.rate_minus, "rate_plus": rep.rate_plus,
               "r2_minus": rep.r2_minus, "r2_plus": rep.r2_plus}
    with open(out / "profile.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(json.dumps(summary, indent=2))
    return 0


def cmd_run(args) -> int:
    _, sc = _scenario(args)
    outcome = run_scenario(sc, resolve_out_dir(sc, args.out), quiet=False)
    oracle = outcome.metadata.get("traveling_wave_oracle")
    if oracle:
        print("traveling-wave oracle: " + json.dumps(oracle))
    for v in outcome.violations[:10]:
        print(f"violation: {v}")
    return outcome.exit_code


def _sweep_one(job):
    sec, out = job
    sc = scenario_from_sections(sec, sec.get("name", "custom"))
    o = run_scenario(sc, out)
    last = o.rows[-1] if o.rows else {}
    return {"out": str(out), "exit_code": o.exit_code, "cumulative_abs_P": last.get("cumulative_abs_P"),
            "sup_pert": last.get("sup_pert"), "X": last.get("X")}


def cmd_sweep(args) -> int:
    base, sc = _scenario(args)
    root = resolve_out_dir(sc, args.out)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values is empty")
    jobs = []
    for v in values:
        sec = apply_overrides(base, {args.param: v})
        tag = f"{args.param}={v}"
        sec["name"] = f"{sc.name}-{tag}"
        scenario_from_sections(sec)  # fail fast before spawning workers
        jobs.append((sec, root / tag))
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(_sweep_one, jobs))
    summary = [{"param": args.param, "value": v} | r for v, r in zip(values, results)]
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "sweep.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    for row in summary:
        print(json.dumps(row))
    return max(r["exit_code"] for r in results)


def cmd_check(args) -> int:
    suites = {"poincare": lambda: poincare_suite(args.cases, args.seed or 0),
              "certificates": certificate_suite,
              "profile": profile_suite}
    chosen = suites if args.suite == "all" else {args.suite: suites[args.suite]}
    ok = True
    for name, fn in chosen.items():
        res = fn()
        ok = ok and res["passed"]
        print(f"{'PASS' if res['passed'] else 'FAIL'} {name}")
        if args.verbose:
            print(json.dumps(res, indent=2, default=float))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="halfline-ns", description=__doc__,
                                 epilog=f"{OUTPUT_ENV} overrides the output directory of configs and presets "
                                        f"(--out wins over both). Presets: {', '.join(PRESETS)}.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", metavar="PATH", help="INI scenario document")
        p.add_argument("--preset", metavar="NAME", help="built-in scenario")
        p.add_argument("--out", metavar="DIR", help="output directory")
        if seed:
            p.add_argument("--seed", type=int, metavar="N", help="randomize the perturbation shape")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one key")

    common(sub.add_parser("profile", help="build and export the shock profile"), seed=False)
    common(sub.add_parser("run", help="execute a scenario"))
    sw = sub.add_parser("sweep", help="vary one parameter over a list")
    common(sw)
    sw.add_argument("--param", required=True, metavar="SECTION.KEY")
    sw.add_argument("--values", required=True, metavar="V1,V2,...")
    sw.add_argument("--jobs", type=int, default=None, help="worker processes")
    ck = sub.add_parser("check", help="run the property suites")
    ck.add_argument("--suite", choices=("all", "poincare", "certificates", "profile"), default="all")
    ck.add_argument("--cases", type=int, default=1000)
    ck.add_argument("--seed", type=int, metavar="N")
    ck.add_argument("--out", metavar="DIR", help="unused; accepted for symmetry")
    ck.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"profile": cmd_profile, "run": cmd_run, "sweep": cmd_sweep, "check": cmd_check}[args.command]
    try:
        return handler(args)
    except (ConfigError, ValidationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
