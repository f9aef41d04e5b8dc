"""Release gate: nine end-to-end properties, one test per property.

Each test prints a [PASS]/[FAIL] line per checked clause so the gate can be
read off the captured output, then asserts that every clause held. Long
simulations come from the shared session fixtures in conftest.
"""

import time

import numpy as np
import pytest

from cotrans import (
    GainCertificateInput,
    QpProblem,
    SystemState,
    assemble_qp,
    check_small_gain,
    cli,
    contact_force,
    metrics,
    net_force,
    positive_combination_basis,
    run,
    solve_qp,
    solve_qp_oracle,
)

import support
from support import GEOM, TRIPLE, random_spd_problem
from conftest import bundled_scenario


def _report(lines):
    for name, ok in lines:
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}")
    failed = [name for name, ok in lines if not ok]
    assert not failed, "failed: " + "; ".join(failed)


@pytest.fixture(scope="module", autouse=True)
def warm_solver():
    # One throwaway solve so compiled-backend warmup stays out of the timers.
    solve_qp(QpProblem(R=2.0 * np.eye(2), r=np.array([-1.0, 1.0])))


def test_qp_solver_matches_bruteforce_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    started = time.perf_counter()
    for _ in range(1000):
        size = int(rng.integers(1, 9))
        R, r = random_spd_problem(rng, size)
        problem = QpProblem(R=R, r=r)
        got = solve_qp(problem)
        want = solve_qp_oracle(problem)
        worst = max(
            worst,
            float(np.max(np.abs(got.s_star - want.s_star))),
            float(np.max(np.abs(got.multipliers - want.multipliers))),
        )
    elapsed = time.perf_counter() - started
    _report([
        (f"1000 random strictly convex instances, sizes 1..8, within 1e-8 "
         f"of exhaustive enumeration (worst gap {worst:.2e})", worst <= 1e-8),
        (f"completed in {elapsed:.2f} s (< 10 s)", elapsed < 10.0),
    ])


def test_allocation_residual_within_regularization_bound():
    # The realized push stiffness * L s* may miss the demanded acceleration u
    # only by what the eps term buys: sqrt(eps) |M^-1| |u| / stiffness, with
    # M the positive-combination basis that reproduces u.
    k_f, eps, k_v = GEOM.stiffness, 0.01, 0.5
    rng = np.random.default_rng(77)
    checked = 0
    worst_ratio = 0.0
    started = time.perf_counter()
    for _ in range(1000):
        vel_error = rng.uniform(-2.0, 2.0, 2)
        cmd_accel = rng.uniform(-2.0, 2.0, 2)
        u = k_v * vel_error - cmd_accel
        norm_u = float(np.linalg.norm(u))
        if norm_u < 1e-9:
            continue
        solution = solve_qp(assemble_qp(TRIPLE, k_f, eps, k_v, vel_error, cmd_accel))
        residual = float(np.linalg.norm(k_f * (TRIPLE.matrix @ solution.s_star) - u))
        indices, _coeffs = positive_combination_basis(TRIPLE, u)
        basis = TRIPLE.vectors[indices].T
        bound = np.sqrt(eps) * np.linalg.norm(np.linalg.inv(basis), 2) * norm_u / k_f
        worst_ratio = max(worst_ratio, residual / bound)
        checked += 1
    elapsed = time.perf_counter() - started
    _report([
        (f"residual bound held on all {checked} sampled inputs "
         f"(worst residual/bound {worst_ratio:.2e})",
         checked >= 990 and worst_ratio <= 1.0),
        (f"completed in {elapsed:.2f} s (< 5 s)", elapsed < 5.0),
    ])


def test_circular_command_reproduction(set1_result):
    # Known shortfall: the object orbits on a wider circle than the command
    # sweeps because the robot position loop lags, so the fitted-radius
    # clause fails while the fit quality and error clauses hold.
    _log, summary, runtime = set1_result
    target = 10.0 / np.pi
    radius_gap = abs(summary.circle_radius - target)
    _report([
        (f"final-period path is circular: fit rms {summary.circle_rms:.2e} "
         f"< 5% of {target:.4f}", summary.circle_rms < 0.05 * target),
        (f"fitted radius {summary.circle_radius:.4f} within 5% of "
         f"{target:.4f} (gap {radius_gap:.4f})", radius_gap <= 0.05 * target),
        (f"tail-mean velocity error {summary.vel_error_tail_mean:.4f} < 0.2",
         summary.vel_error_tail_mean < 0.2),
        (f"60 s horizon integrated in {runtime:.1f} s (< 60 s)", runtime < 60.0),
    ])


def test_sluggish_position_gain_degrades_tracking(set1_result, set2_result):
    _log1, summary1, _runtime = set1_result
    _log2, summary2 = set2_result
    _report([
        (f"tail-mean velocity error grows: {summary2.vel_error_tail_mean:.4f} "
         f"> {summary1.vel_error_tail_mean:.4f}",
         summary2.vel_error_tail_mean > summary1.vel_error_tail_mean),
        (f"circle-fit rms grows: {summary2.circle_rms:.4f} > "
         f"{summary1.circle_rms:.2e}",
         summary2.circle_rms > summary1.circle_rms),
    ])


def test_resting_equilibrium_is_invariant(equilibrium_log):
    vel_peak = float(np.max(equilibrium_log.vel_error_norm))
    pos_peak = float(np.max(equilibrium_log.pos_error_norm_max))
    _report([
        (f"velocity error stays < 1e-9 over 10 s (peak {vel_peak:.2e})",
         vel_peak < 1e-9),
        (f"position error stays < 1e-9 over 10 s (peak {pos_peak:.2e})",
         pos_peak < 1e-9),
    ])


def test_contact_force_properties():
    d = GEOM.contact_distance
    inside = contact_force(GEOM, np.array([d - 1e-8, 0.0]))
    outside = contact_force(GEOM, np.array([d + 1e-8, 0.0]))
    jump = float(np.linalg.norm(inside - outside))

    rng = np.random.default_rng(11)
    equivariance_worst = 0.0
    for _ in range(100):
        angle = rng.uniform(0.0, 2.0 * np.pi)
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        rel = rng.uniform(0.1, d) * np.array([np.cos(angle / 3), np.sin(angle / 3)])
        gap = np.linalg.norm(contact_force(GEOM, rot @ rel) - rot @ contact_force(GEOM, rel))
        equivariance_worst = max(equivariance_worst, float(gap))

    symmetric = SystemState(
        p_o=np.zeros(2), v_o=np.zeros(2), p=0.7 * TRIPLE.vectors
    )
    cancellation = float(np.linalg.norm(net_force(GEOM, symmetric)))

    _report([
        (f"continuous across the contact boundary (jump {jump:.2e} < 1e-6)",
         jump < 1e-6),
        (f"equivariant under 100 random rotations (worst {equivariance_worst:.2e} "
         "< 1e-12)", equivariance_worst < 1e-12),
        (f"symmetric pushes cancel (net {cancellation:.2e} < 1e-12)",
         cancellation < 1e-12),
    ])


def test_small_gain_checker_hand_examples():
    base = dict(k_v=2.0, delta=0.5, L_f=3.0, L_phi=0.1, N=3)
    reject = check_small_gain(GainCertificateInput(k_p=2.0, **base))
    accept = check_small_gain(GainCertificateInput(k_p=10.0, **base))
    _report([
        (f"marginal gain set rejected, lhs {reject.small_gain_lhs:.4g}",
         f"{reject.small_gain_lhs:.4g}" == "1.636" and not reject.small_gain_ok),
        (f"stiffened gain set accepted, lhs {accept.small_gain_lhs:.4g}",
         f"{accept.small_gain_lhs:.4g}" == "0.1978" and accept.small_gain_ok),
    ])


def test_velocity_error_shrinks_with_command_amplitude(set1_result):
    _log, summary, _runtime = set1_result
    tails = [summary.vel_error_tail_mean]
    for amplitude in (0.5, 0.25):
        log = run(support.circle_config(amplitude=amplitude))
        tails.append(metrics(log).vel_error_tail_mean)
    rendered = ", ".join(f"{t:.4f}" for t in tails)
    _report([
        (f"tail-mean velocity error non-increasing over amplitudes "
         f"1, 0.5, 0.25: {rendered}", tails[0] >= tails[1] >= tails[2]),
    ])


def test_bundled_scenario_runs_are_byte_identical(tmp_path):
    scenario = bundled_scenario("equilibrium.scenario")
    first = cli.main(["run", scenario, "-o", str(tmp_path / "a")])
    second = cli.main(["run", scenario, "-o", str(tmp_path / "b")])
    lines = [(f"both runs exit 0 (got {first}, {second})", first == 0 and second == 0)]
    for name in ("trajectory.csv", "errors.csv", "velocities.csv"):
        same = (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        lines.append((f"{name} byte-identical across runs", same))
    _report(lines)
