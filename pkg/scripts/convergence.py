"""Grid convergence of the profile-tracking run and of the entropy-identity residual.

The traveling-wave error and |X(T)| should fall like dx^2; the identity
residual should shrink as dx is halved.
"""
import argparse

import numpy as np

from halfline_ns.diagnostics import DiagnosticsRecorder
from halfline_ns.halfline_solver import Perturbation, SolverConfig, make_initial_data, make_problem, run
from halfline_ns.harness.config import load_preset
from halfline_ns.shift_weight import ShiftIntegrator, WeightParams


def traveling_wave(end, dx, T, beta, length):
    pb = make_problem(end, beta=beta, dx=dx, t_end=T, length=length)
    wp = WeightParams.from_end_states(end, pb.beta)
    rec = run(pb, SolverConfig(t_end=T, output_stride=10 ** 9), make_initial_data(pb).state,
              shift=ShiftIntegrator(pb.profile, wp, pb.grid))
    st = rec.final_state
    s = pb.profile.sample(pb.zeta(st.t, 0.0))
    return max(np.max(np.abs(st.v - s.v)), np.max(np.abs(st.u - s.u))), abs(rec.shifts[-1])


def identity_residual(end, dx, T, beta, length):
    pb = make_problem(end, beta=beta, dx=dx, t_end=T, length=length)
    wp = WeightParams.from_end_states(end, pb.beta)
    rec = DiagnosticsRecorder(pb, wp)
    run(pb, SolverConfig(t_end=T, output_stride=max(1, int(0.2 / dx ** 2))),
        make_initial_data(pb, Perturbation(0.01)).state, shift=ShiftIntegrator(pb.profile, wp, pb.grid),
        observers=[rec])
    return max(rec.column("identity_residual")[1:])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="impermeable-weak-shock")
    ap.add_argument("--dx", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    ap.add_argument("--t-end", type=float, default=5.0)
    args = ap.parse_args()
    end = load_preset(args.preset).end_states()

    prev = None
    print(f"{'dx':>6} {'tw error':>11} {'|X(T)|':>11} {'order':>6} {'identity res':>13}")
    for dx in args.dx:
        err, X = traveling_wave(end, dx, args.t_end, 100.0, 200.0)
        res = identity_residual(end, dx, min(args.t_end, 1.0), 100.0, 200.0)
        order = "" if prev is None else f"{np.log2(prev / err):6.2f}"
        print(f"{dx:6.3f} {err:11.3e} {X:11.3e} {order:>6} {res:13.3e}")
        prev = err


if __name__ == "__main__":
    main()
