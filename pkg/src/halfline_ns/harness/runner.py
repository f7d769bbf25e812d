"""Run a Scenario end to end and write its artifacts."""
from __future__ import annotations

import csv
import json
import math
import os
import platform
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..diagnostics import DIAGNOSTIC_COLUMNS, DiagnosticsRecorder
from ..halfline_solver import (BlowUpError, StateInvalidError, StepEvent, make_initial_data, run)
from ..shift_weight import ShiftIntegrator, WeightBoundWarning, WeightParams, weight_eval
from ..shock_profile import write_profile_csv
from .config import OUTPUT_ENV, TRAVELING_WAVE_BUDGET, Scenario

SHIFT_COLUMNS = ("t", "X", "xdot")
PLOT_COLUMNS = ("t", "sup_pert", "abs_xdot", "x_over_t", "weighted_entropy")
STATE_COLUMNS = ("x", "v", "u")

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_BLOWUP = 2


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def resolve_out_dir(scenario: Scenario, cli_out: str | None = None) -> Path:
    """--out beats the environment override, which beats the config file."""
    if cli_out:
        return Path(cli_out)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env) / scenario.name
    return Path(scenario.out_dir)


class _SnapshotWriter:
    """Keeps (t, X, Xdot) at every output and writes every k-th state to disk."""

    def __init__(self, x, folder: Path, every: int):
        self.x = x
        self.folder = folder
        self.every = every
        self.k = 0
        self.shift_rows = []
        self.files = []

    def __call__(self, ev: StepEvent):
        if not ev.is_output:
            return
        self.shift_rows.append((ev.t, ev.X, ev.Xdot))
        if self.k % self.every == 0 or ev.is_final:
            self.dump(ev)
        self.k += 1

    def dump(self, ev: StepEvent):
        name = f"state_{self.k:05d}.csv"
        if self.files and self.files[-1][1] == name:
            return
        _write_csv(self.folder / name, STATE_COLUMNS, zip(self.x, ev.state.v, ev.state.u))
        self.files.append((ev.t, name))


@dataclass
class RunOutcome:
    exit_code: int
    out_dir: Path
    scenario: Scenario
    rows: list
    violations: list
    metadata: dict
    shift_rows: list = field(default_factory=list)
    problem: object = None
    params: object = None
    final_state: object = None


def _oracle_report(problem, state, X):
    e_v, e_u = _translation_error(problem, state)
    budget = TRAVELING_WAVE_BUDGET * problem.grid.dx ** 2
    return {"max_error_v": e_v, "max_error_u": e_u, "abs_X": abs(X), "budget": budget,
            "passed": bool(max(e_v, e_u) <= budget and abs(X) <= budget)}


def _translation_error(problem, state):
    s = problem.profile.sample(problem.zeta(state.t, 0.0))
    return float(np.max(np.abs(state.v - s.v))), float(np.max(np.abs(state.u - s.u)))


def _weight_checks(problem, params):
    z = problem.zeta(0.0, 0.0)
    a, ap = weight_eval(problem.profile, params, z)
    return {"a_min": float(a.min()), "a_max": float(a.max()),
            "a_upper": 1.0 + math.sqrt(params.delta), "min_a_prime": float(ap.min())}


def _versions():
    import numba
    import scipy
    from importlib import metadata
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "artifact": pkg}


def run_scenario(scenario: Scenario, out_dir=None, quiet: bool = True) -> RunOutcome:
    """Execute ``scenario``; exit code 0 iff every hard invariant held.

    Hard invariants: positivity of v (no blow-up), exact boundary values,
    nonnegative relative entropy and good terms at every snapshot.
    """
    out = Path(out_dir) if out_dir is not None else resolve_out_dir(scenario)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    problem = scenario.problem()
    end = problem.end
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", WeightBoundWarning)
        params = WeightParams.from_end_states(end, problem.beta, strict=False)
    init = make_initial_data(problem, scenario.perturbation())
    write_profile_csv(problem.profile, out / "profile.csv")

    shift = ShiftIntegrator(problem.profile, params, problem.grid, scenario.form())
    recorder = DiagnosticsRecorder(problem, params, scenario.t_floor,
                                   scenario.b_constant, scenario.p_stride)
    snaps = _SnapshotWriter(problem.grid.nodes, out / "snapshots", scenario.state_every)

    violations = []
    exit_code = EXIT_OK
    failure = None
    final = None
    steps = 0
    try:
        rec = run(problem, scenario.solver_config(), init.state, shift=shift,
                  observers=[recorder, snaps])
        final = rec.final_state
        steps = rec.steps
        X_final = rec.shifts[-1]
    except (BlowUpError, StateInvalidError) as err:
        recorder.flush()
        exit_code = EXIT_BLOWUP
        failure = f"{type(err).__name__}: {err}"
        partial = getattr(err, "record", None)
        if partial is not None:
            final = partial.final_state
            steps = partial.steps
        X_final = snaps.shift_rows[-1][1] if snaps.shift_rows else 0.0
        violations.append({"t": final.t if final is not None else None, "check": "positivity",
                           "detail": failure})

    if final is not None and exit_code == EXIT_OK:
        bc = problem.bc
        exact = final.u[0] == bc.u_left and final.v[-1] == bc.v_right and final.u[-1] == bc.u_right
        if problem.kind != "impermeable":
            exact = exact and final.v[0] == bc.v_left
        if not exact:
            violations.append({"t": final.t, "check": "boundary", "detail": "boundary values drifted"})
    for t, name, val in recorder.hard_violations:
        violations.append({"t": t, "check": "nonnegativity", "detail": f"{name} = {val!r}"})
    if violations and exit_code == EXIT_OK:
        exit_code = EXIT_INVARIANT

    rows = recorder.rows
    _write_csv(out / "diagnostics.csv", DIAGNOSTIC_COLUMNS,
               ([r[c] for c in DIAGNOSTIC_COLUMNS] for r in rows))
    _write_csv(out / "shift.csv", SHIFT_COLUMNS, snaps.shift_rows)
    _write_csv(out / "plot_data.csv", PLOT_COLUMNS,
               ((r["t"], r["sup_pert"], abs(r["xdot"]), r["x_over_t"], r["weighted_entropy"]) for r in rows))

    r1 = [r["r1_margin"] for r in rows if r["t"] >= scenario.transient]
    r1_flags = sum(1 for m in r1 if not m >= 0)
    meta = {
        "scenario": scenario.to_sections(),
        "grid": {"length": problem.grid.length, "n_cells": problem.grid.n_cells, "dx": problem.grid.dx},
        "end_states": {"v_minus": end.v_minus, "u_minus": end.u_minus, "v_plus": end.v_plus,
                       "u_plus": end.u_plus, "sigma": end.sigma, "sigma_minus": problem.sigma_minus,
                       "delta": end.delta, "rh_residuals": list(end.rh_residuals())},
        "beta": problem.beta,
        "weight": {k: v for k, v in asdict(params).items()} | {"c1": params.c1},
        "weight_checks": _weight_checks(problem, params),
        "warnings": [str(w.message) for w in caught],
        "initial_perturbation_h1": init.perturbation_h1,
        "steps": steps,
        "snapshots": len(rows),
        "state_files": [{"t": t, "file": f"snapshots/{n}"} for t, n in snaps.files],
        "final_X": X_final,
        "r1_post_transient": {"count": len(r1), "flagged": r1_flags},
        "violations": violations,
        "failure": failure,
        "exit_code": exit_code,
        "runtime_seconds": time.perf_counter() - t0,
        "versions": _versions(),
    }
    if scenario.name == "traveling-wave-oracle" and final is not None:
        meta["traveling_wave_oracle"] = _oracle_report(problem, final, X_final)
    with open(out / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=2, default=float)
        fh.write("\n")
    if not quiet:
        print(f"{scenario.name}: {len(rows)} snapshots, {steps} steps, exit {exit_code}, "
              f"{meta['runtime_seconds']:.1f} s -> {out}")
    return RunOutcome(exit_code, out, scenario, rows, violations, meta, snaps.shift_rows,
                      problem, params, final)
