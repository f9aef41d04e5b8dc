#!/usr/bin/env python3
"""Compare the kernel backends on the two hot paths.

Times the nonnegativity-constrained QP and the full closed-loop RK4 step
over identical inputs for every available backend (interpreted reference,
vectorized numpy, compiled numba when importable), checks that they produce
the same numbers, and prints a table.

    python benchmarks/bench_kernels.py
    COTRANS_NUMBA=0 python benchmarks/bench_kernels.py   # fallback only
"""

import argparse
import time

import numpy as np

from cotrans import CircularCommand, assemble_qp, evenly_spaced_directions
from cotrans._kernels import QP_OK, STEP_OK, available_backends

DIRS = evenly_spaced_directions(3)
STIFFNESS = 30.0
DT = 1e-3


def qp_inputs(count, rng):
    """Fixed quadratic term, a batch of random linear terms."""
    R = assemble_qp(DIRS, STIFFNESS, 0.01, 0.5, np.zeros(2), np.zeros(2)).R
    u = rng.uniform(-2.0, 2.0, (count, 2))
    rs = -2.0 * STIFFNESS * (u @ DIRS.matrix)
    return R, rs


def step_inputs(count):
    """Initial cluster state plus command samples along the horizon."""
    p_o = np.array([-8.0, 0.0])
    v_o = np.zeros(2)
    p = np.array([[-7.0, 1.0], [-9.0, 1.0], [-9.0, -1.0]])
    R = assemble_qp(DIRS, STIFFNESS, 0.01, 0.5, np.zeros(2), np.zeros(2)).R
    command = CircularCommand(amplitude=1.0, period=20.0)
    vc3 = np.empty((count, 3, 2))
    dvc3 = np.empty((count, 3, 2))
    for k in range(count):
        t = k * DT
        for j, tau in enumerate((t, t + 0.5 * DT, t + DT)):
            v_c, dv_c, _ = command.evaluate(tau)
            vc3[k, j] = v_c
            dvc3[k, j] = dv_c
    return p_o, v_o, p, R, vc3, dvc3


def time_qp(kernel, R, rs):
    kernel(R, rs[0], 300)  # warmup (compiles the numba variant)
    total = np.zeros(rs.shape[1])
    started = time.perf_counter()
    for r in rs:
        s, _mult, _active, _iters, status = kernel(R, r, 300)
        assert status == QP_OK
        total += s
    elapsed = time.perf_counter() - started
    return elapsed / len(rs), total


def time_step(kernel, p_o, v_o, p, R, vc3, dvc3):
    kernel(p_o, v_o, p, R, DIRS.vectors, STIFFNESS, 0.8, 0.5, 1.0,
           vc3[0], dvc3[0], DT, 300)  # warmup
    po, vo, q = p_o.copy(), v_o.copy(), p.copy()
    started = time.perf_counter()
    for k in range(vc3.shape[0]):
        po, vo, q, status, _bad = kernel(
            po, vo, q, R, DIRS.vectors, STIFFNESS, 0.8, 0.5, 1.0,
            vc3[k], dvc3[k], DT, 300,
        )
        assert status == STEP_OK
    elapsed = time.perf_counter() - started
    return elapsed / vc3.shape[0], (po, vo, q)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--qp-calls", type=int, default=5000)
    parser.add_argument("--steps", type=int, default=1000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    R, rs = qp_inputs(args.qp_calls, rng)
    step_args = step_inputs(args.steps)

    backends = available_backends()
    qp_times, qp_totals = {}, {}
    step_times, step_finals = {}, {}
    for name, (qp, _force, step) in backends.items():
        qp_times[name], qp_totals[name] = time_qp(qp, R, rs)
        step_times[name], step_finals[name] = time_step(step, *step_args)

    # Backends must be telling the same story before we compare speed.
    base_total = qp_totals["reference"]
    base_final = step_finals["reference"]
    for name in backends:
        qp_gap = np.max(np.abs(qp_totals[name] - base_total)) / len(rs)
        step_gap = max(
            np.max(np.abs(a - b)) for a, b in zip(step_finals[name], base_final)
        )
        assert qp_gap <= 1e-10, f"{name} QP results diverge ({qp_gap:.2e})"
        assert step_gap <= 1e-9, f"{name} trajectories diverge ({step_gap:.2e})"
    print(f"agreement: all backends match the reference "
          f"({args.qp_calls} QP calls, {args.steps} RK4 steps)\n")

    header = f"{'backend':<12} {'qp per call':>14} {'rk4 step':>14} {'step speedup':>14}"
    print(header)
    print("-" * len(header))
    for name in sorted(backends, key=lambda b: step_times[b], reverse=True):
        speedup = step_times["reference"] / step_times[name]
        print(f"{name:<12} {qp_times[name] * 1e6:>11.1f} us "
              f"{step_times[name] * 1e6:>11.1f} us {speedup:>13.1f}x")


if __name__ == "__main__":
    main()
