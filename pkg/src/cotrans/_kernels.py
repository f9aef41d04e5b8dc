"""Hot numeric kernels: nonnegativity-constrained QP and the closed-loop RK4 step.

Two interchangeable implementations live here. The loop kernels are written
in numba-friendly style (no allocation tricks, no exceptions, status codes
instead) and get compiled with ``numba.njit`` when the accelerated backend is
active. The numpy kernels are vectorized equivalents used as the fallback.

Backend selection happens once at import time:

* ``COTRANS_NUMBA=0`` (or ``false``/``off``/``no``) forces the numpy path;
* otherwise numba is used when importable, numpy when it is not.

``BACKEND`` records the outcome ("numba" or "numpy").
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "QP_OK",
    "QP_NOT_POSITIVE_DEFINITE",
    "QP_MAX_ITERATIONS",
    "STEP_OK",
    "STEP_CENTER_COINCIDENCE",
    "STEP_QP_NOT_POSITIVE_DEFINITE",
    "STEP_QP_MAX_ITERATIONS",
    "qp_active_set",
    "closed_loop_rk4_step",
    "net_contact_force",
    "available_backends",
    "rk4_increment",
]

QP_OK = 0
QP_NOT_POSITIVE_DEFINITE = 1
QP_MAX_ITERATIONS = 2

STEP_OK = 0
STEP_CENTER_COINCIDENCE = 1
STEP_QP_NOT_POSITIVE_DEFINITE = 2
STEP_QP_MAX_ITERATIONS = 3

# Multiplier values above this (negative) threshold count as nonnegative;
# matching the KKT certificate tolerance used by the solver wrapper.
_DUAL_TOL = 1e-10


def _env_wants_numba() -> bool:
    value = os.environ.get("COTRANS_NUMBA", "1").strip().lower()
    return value not in ("0", "false", "off", "no")


def _make_loop_kernels(jit):
    """Build the loop-style kernel set, decorating each function with `jit`.

    Called twice: once with a no-op decorator for the interpreted reference
    set, once with ``numba.njit`` for the compiled set. Keeping one source
    for both guarantees the benchmark compares identical arithmetic.
    """

    @jit
    def chol_factor(a):
        # In-place-free lower Cholesky; ok=False when a pivot is not positive.
        n = a.shape[0]
        low = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1):
                acc = a[i, j]
                for k in range(j):
                    acc -= low[i, k] * low[j, k]
                if i == j:
                    if acc <= 0.0:
                        return low, False
                    low[i, i] = np.sqrt(acc)
                else:
                    low[i, j] = acc / low[j, j]
        return low, True

    @jit
    def chol_solve(low, b):
        n = b.shape[0]
        y = np.zeros(n)
        for i in range(n):
            acc = b[i]
            for k in range(i):
                acc -= low[i, k] * y[k]
            y[i] = acc / low[i, i]
        x = np.zeros(n)
        for i in range(n - 1, 0 - 1, -1):
            acc = y[i]
            for k in range(i + 1, n):
                acc -= low[k, i] * x[k]
            x[i] = acc / low[i, i]
        return x

    @jit
    def qp_active_set(R, r, max_iter):
        # min 0.5 s'Rs + r's subject to s >= 0, primal active set from s = 0.
        # Returns (s, multipliers, active_mask, iterations, status).
        n = r.shape[0]
        s = np.zeros(n)
        mult = np.zeros(n)
        active = np.ones(n, dtype=np.bool_)

        low_full, ok = chol_factor(R)
        if not ok:
            return s, mult, active, 0, QP_NOT_POSITIVE_DEFINITE

        iters = 0
        while iters < max_iter:
            iters += 1

            # Unconstrained minimizer on the current free set.
            nf = 0
            for i in range(n):
                if not active[i]:
                    nf += 1
            target = np.zeros(n)
            if nf > 0:
                free_idx = np.empty(nf, dtype=np.int64)
                k = 0
                for i in range(n):
                    if not active[i]:
                        free_idx[k] = i
                        k += 1
                sub = np.empty((nf, nf))
                rhs = np.empty(nf)
                for a in range(nf):
                    ia = free_idx[a]
                    rhs[a] = -r[ia]
                    for b in range(nf):
                        sub[a, b] = R[ia, free_idx[b]]
                low, okf = chol_factor(sub)
                if not okf:
                    return s, mult, active, iters, QP_NOT_POSITIVE_DEFINITE
                xf = chol_solve(low, rhs)
                for a in range(nf):
                    target[free_idx[a]] = xf[a]

            step_inf = 0.0
            for i in range(n):
                d = target[i] - s[i]
                if d < 0.0:
                    d = -d
                if d > step_inf:
                    step_inf = d

            if step_inf <= 1e-14:
                # At the free-set minimizer: check multipliers on the bound.
                worst = -1
                worst_val = -_DUAL_TOL
                for i in range(n):
                    g = r[i]
                    for j in range(n):
                        g += R[i, j] * s[j]
                    if active[i]:
                        mult[i] = g
                        if g < worst_val:
                            worst_val = g
                            worst = i
                    else:
                        mult[i] = 0.0
                if worst < 0:
                    return s, mult, active, iters, QP_OK
                active[worst] = False
            else:
                # Longest feasible step toward the candidate.
                alpha = 1.0
                blocking = -1
                for i in range(n):
                    if not active[i]:
                        d = target[i] - s[i]
                        if d < 0.0:
                            cur = s[i]
                            if cur < 0.0:
                                cur = 0.0
                            ratio = cur / (-d)
                            if ratio < alpha:
                                alpha = ratio
                                blocking = i
                if blocking >= 0:
                    for i in range(n):
                        if not active[i]:
                            s[i] += alpha * (target[i] - s[i])
                    s[blocking] = 0.0
                    active[blocking] = True
                else:
                    for i in range(n):
                        if not active[i]:
                            s[i] = target[i]

        return s, mult, active, iters, QP_MAX_ITERATIONS

    @jit
    def net_contact_force(p_o, p, stiffness, contact_dist, out):
        # Sum of penalty pushes on the object; out must be zero-filled by the
        # caller or is overwritten here. Returns (status, offending_robot).
        n = p_o.shape[0]
        count = p.shape[0]
        for c in range(n):
            out[c] = 0.0
        for i in range(count):
            dist2 = 0.0
            for c in range(n):
                d = p[i, c] - p_o[c]
                dist2 += d * d
            dist = np.sqrt(dist2)
            if dist <= 1e-9:
                return STEP_CENTER_COINCIDENCE, i
            pen = contact_dist - dist
            if pen > 0.0:
                coef = -stiffness * pen / dist
                for c in range(n):
                    out[c] += coef * (p[i, c] - p_o[c])
        return STEP_OK, -1

    @jit
    def stage_rates(po, vo, q, R, vecs, stiffness, contact_dist,
                    k_v, k_p, vc, dvc, max_iter, force, vr):
        # Closed-loop rates at one RK4 stage: net contact force on the object
        # and commanded robot velocities from the allocation QP. `force` (n,)
        # and `vr` (count, n) are outputs. Returns (status, offending_robot).
        n = po.shape[0]
        count = q.shape[0]

        status, bad = net_contact_force(po, q, stiffness, contact_dist, force)
        if status != STEP_OK:
            return status, bad

        u = np.empty(n)
        for c in range(n):
            u[c] = k_v * (vo[c] - vc[c]) - dvc[c]
        r = np.empty(count)
        for i in range(count):
            acc = 0.0
            for c in range(n):
                acc += vecs[i, c] * u[c]
            r[i] = -2.0 * stiffness * acc
        s, mult, active, iters, qp_status = qp_active_set(R, r, max_iter)
        if qp_status == QP_NOT_POSITIVE_DEFINITE:
            return STEP_QP_NOT_POSITIVE_DEFINITE, -1
        if qp_status == QP_MAX_ITERATIONS:
            return STEP_QP_MAX_ITERATIONS, -1

        for i in range(count):
            reach = contact_dist - s[i]
            for c in range(n):
                p_star = po[c] + vecs[i, c] * reach
                vr[i, c] = vo[c] - k_p * (q[i, c] - p_star)
        return STEP_OK, -1

    @jit
    def closed_loop_rk4_step(p_o, v_o, p, R, vecs, stiffness, contact_dist,
                             k_v, k_p, vc3, dvc3, dt, max_iter):
        # One classic RK4 step of the coupled closed loop
        #   dp_o = v_o, dv_o = F(p_o, p), dp_i = v_r,i(p_o, v_o, p, t),
        # with the command samples vc3/dvc3 rows at t, t+dt/2, t+dt.
        # Returns (p_o', v_o', p', status, offending_robot).
        n = p_o.shape[0]
        count = p.shape[0]
        half = 0.5 * dt

        f1 = np.empty(n)
        f2 = np.empty(n)
        f3 = np.empty(n)
        f4 = np.empty(n)
        vr1 = np.empty((count, n))
        vr2 = np.empty((count, n))
        vr3 = np.empty((count, n))
        vr4 = np.empty((count, n))
        po_s = np.empty(n)
        vo_s = np.empty(n)
        q_s = np.empty((count, n))
        vel2 = np.empty(n)
        vel3 = np.empty(n)
        vel4 = np.empty(n)

        status, bad = stage_rates(p_o, v_o, p, R, vecs, stiffness,
                                  contact_dist, k_v, k_p, vc3[0], dvc3[0],
                                  max_iter, f1, vr1)
        if status != STEP_OK:
            return p_o, v_o, p, status, bad

        for c in range(n):
            po_s[c] = p_o[c] + half * v_o[c]
            vel2[c] = v_o[c] + half * f1[c]
            vo_s[c] = vel2[c]
        for i in range(count):
            for c in range(n):
                q_s[i, c] = p[i, c] + half * vr1[i, c]
        status, bad = stage_rates(po_s, vo_s, q_s, R, vecs, stiffness,
                                  contact_dist, k_v, k_p, vc3[1], dvc3[1],
                                  max_iter, f2, vr2)
        if status != STEP_OK:
            return p_o, v_o, p, status, bad

        for c in range(n):
            po_s[c] = p_o[c] + half * vel2[c]
            vel3[c] = v_o[c] + half * f2[c]
            vo_s[c] = vel3[c]
        for i in range(count):
            for c in range(n):
                q_s[i, c] = p[i, c] + half * vr2[i, c]
        status, bad = stage_rates(po_s, vo_s, q_s, R, vecs, stiffness,
                                  contact_dist, k_v, k_p, vc3[1], dvc3[1],
                                  max_iter, f3, vr3)
        if status != STEP_OK:
            return p_o, v_o, p, status, bad

        for c in range(n):
            po_s[c] = p_o[c] + dt * vel3[c]
            vel4[c] = v_o[c] + dt * f3[c]
            vo_s[c] = vel4[c]
        for i in range(count):
            for c in range(n):
                q_s[i, c] = p[i, c] + dt * vr3[i, c]
        status, bad = stage_rates(po_s, vo_s, q_s, R, vecs, stiffness,
                                  contact_dist, k_v, k_p, vc3[2], dvc3[2],
                                  max_iter, f4, vr4)
        if status != STEP_OK:
            return p_o, v_o, p, status, bad

        new_po = np.empty(n)
        new_vo = np.empty(n)
        new_p = np.empty((count, n))
        for c in range(n):
            new_po[c] = p_o[c] + dt * (
                (v_o[c] + 2.0 * vel2[c] + 2.0 * vel3[c] + vel4[c]) / 6.0)
            new_vo[c] = v_o[c] + dt * (
                (f1[c] + 2.0 * f2[c] + 2.0 * f3[c] + f4[c]) / 6.0)
        for i in range(count):
            for c in range(n):
                new_p[i, c] = p[i, c] + dt * (
                    (vr1[i, c] + 2.0 * vr2[i, c] + 2.0 * vr3[i, c]
                     + vr4[i, c]) / 6.0)

        return new_po, new_vo, new_p, STEP_OK, -1

    return qp_active_set, net_contact_force, closed_loop_rk4_step


def rk4_increment(f, y, h):
    """One classic RK4 update for dy/dt = f(y), y a flat float array."""
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h * ((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)


class _Coincidence(Exception):
    def __init__(self, index):
        self.index = index


def _net_force_numpy(p_o, p, stiffness, contact_dist):
    rel = p - p_o[np.newaxis, :]
    dist = np.sqrt(np.sum(rel * rel, axis=1))
    if np.any(dist <= 1e-9):
        raise _Coincidence(int(np.argmin(dist)))
    pen = contact_dist - dist
    pen[pen < 0.0] = 0.0
    coef = -stiffness * pen / dist
    return coef @ rel


def qp_active_set_numpy(R, r, max_iter):
    """Vectorized twin of the loop QP kernel; same contract, numpy solves."""
    n = r.shape[0]
    s = np.zeros(n)
    mult = np.zeros(n)
    active = np.ones(n, dtype=np.bool_)

    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        return s, mult, active, 0, QP_NOT_POSITIVE_DEFINITE

    iters = 0
    while iters < int(max_iter):
        iters += 1
        free = ~active
        target = np.zeros(n)
        if np.any(free):
            sub = R[np.ix_(free, free)]
            try:
                cf = np.linalg.cholesky(sub)
            except np.linalg.LinAlgError:
                return s, mult, active, iters, QP_NOT_POSITIVE_DEFINITE
            y = np.linalg.solve(cf, -r[free])
            target[free] = np.linalg.solve(cf.T, y)

        delta = target - s
        if np.max(np.abs(delta)) <= 1e-14:
            grad = R @ s + r
            mult = np.where(active, grad, 0.0)
            candidates = np.where(active & (grad < -_DUAL_TOL))[0]
            if candidates.size == 0:
                return s, mult, active, iters, QP_OK
            worst = candidates[np.argmin(grad[candidates])]
            active[worst] = False
        else:
            decreasing = free & (delta < 0.0)
            alpha = 1.0
            blocking = -1
            if np.any(decreasing):
                cur = np.where(s > 0.0, s, 0.0)
                ratios = cur[decreasing] / (-delta[decreasing])
                k = int(np.argmin(ratios))
                if ratios[k] < alpha:
                    alpha = float(ratios[k])
                    blocking = int(np.where(decreasing)[0][k])
            s = np.where(free, s + alpha * delta, s)
            if blocking >= 0:
                s[blocking] = 0.0
                active[blocking] = True

    return s, mult, active, iters, QP_MAX_ITERATIONS


def net_contact_force_numpy(p_o, p, stiffness, contact_dist, out):
    try:
        out[:] = _net_force_numpy(p_o, p, stiffness, contact_dist)
    except _Coincidence as exc:
        return STEP_CENTER_COINCIDENCE, exc.index
    return STEP_OK, -1


def _stage_rates_numpy(po, vo, q, R, vecs, stiffness, contact_dist,
                       k_v, k_p, vc, dvc, max_iter):
    force = _net_force_numpy(po, q, stiffness, contact_dist)
    u = k_v * (vo - vc) - dvc
    r = -2.0 * stiffness * (vecs @ u)
    s, mult, active, iters, qp_status = qp_active_set_numpy(R, r, max_iter)
    if qp_status == QP_NOT_POSITIVE_DEFINITE:
        return None, None, STEP_QP_NOT_POSITIVE_DEFINITE
    if qp_status == QP_MAX_ITERATIONS:
        return None, None, STEP_QP_MAX_ITERATIONS
    p_star = po[np.newaxis, :] + vecs * (contact_dist - s)[:, np.newaxis]
    vr = vo[np.newaxis, :] - k_p * (q - p_star)
    return force, vr, STEP_OK


def closed_loop_rk4_step_numpy(p_o, v_o, p, R, vecs, stiffness, contact_dist,
                               k_v, k_p, vc3, dvc3, dt, max_iter):
    """Vectorized twin of the loop closed-loop RK4 kernel."""
    half = 0.5 * dt
    try:
        f1, vr1, status = _stage_rates_numpy(
            p_o, v_o, p, R, vecs, stiffness, contact_dist,
            k_v, k_p, vc3[0], dvc3[0], max_iter)
        if status != STEP_OK:
            return p_o, v_o, p, status, -1

        vel2 = v_o + half * f1
        f2, vr2, status = _stage_rates_numpy(
            p_o + half * v_o, vel2, p + half * vr1, R, vecs, stiffness,
            contact_dist, k_v, k_p, vc3[1], dvc3[1], max_iter)
        if status != STEP_OK:
            return p_o, v_o, p, status, -1

        vel3 = v_o + half * f2
        f3, vr3, status = _stage_rates_numpy(
            p_o + half * vel2, vel3, p + half * vr2, R, vecs, stiffness,
            contact_dist, k_v, k_p, vc3[1], dvc3[1], max_iter)
        if status != STEP_OK:
            return p_o, v_o, p, status, -1

        vel4 = v_o + dt * f3
        f4, vr4, status = _stage_rates_numpy(
            p_o + dt * vel3, vel4, p + dt * vr3, R, vecs, stiffness,
            contact_dist, k_v, k_p, vc3[2], dvc3[2], max_iter)
        if status != STEP_OK:
            return p_o, v_o, p, status, -1
    except _Coincidence as exc:
        return p_o, v_o, p, STEP_CENTER_COINCIDENCE, exc.index

    new_po = p_o + dt * ((v_o + 2.0 * vel2 + 2.0 * vel3 + vel4) / 6.0)
    new_vo = v_o + dt * ((f1 + 2.0 * f2 + 2.0 * f3 + f4) / 6.0)
    new_p = p + dt * ((vr1 + 2.0 * vr2 + 2.0 * vr3 + vr4) / 6.0)
    return new_po, new_vo, new_p, STEP_OK, -1


def _identity(func):
    return func


_LOOP_REFERENCE = _make_loop_kernels(_identity)

_NUMBA_KERNELS = None
if _env_wants_numba():
    try:
        import numba
    except ImportError:
        pass
    else:
        _NUMBA_KERNELS = _make_loop_kernels(numba.njit)

if _NUMBA_KERNELS is not None:
    BACKEND = "numba"
    qp_active_set, net_contact_force, closed_loop_rk4_step = _NUMBA_KERNELS
else:
    BACKEND = "numpy"
    qp_active_set = qp_active_set_numpy
    net_contact_force = net_contact_force_numpy
    closed_loop_rk4_step = closed_loop_rk4_step_numpy


def available_backends():
    """Kernel triples (qp, net_force, step) by backend name for benchmarks."""
    table = {
        "numpy": (qp_active_set_numpy, net_contact_force_numpy,
                  closed_loop_rk4_step_numpy),
        "reference": _LOOP_REFERENCE,
    }
    if _NUMBA_KERNELS is not None:
        table["numba"] = _NUMBA_KERNELS
    return table
