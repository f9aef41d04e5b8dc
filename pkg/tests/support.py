"""Shared builders and frozen regression values for the test suite."""

import numpy as np

from cotrans import (
    BodyGeometry,
    CircularCommand,
    ControllerGains,
    ScenarioConfig,
    SystemState,
    ZeroCommand,
    evenly_spaced_directions,
)

GEOM = BodyGeometry(robot_radius=0.2, object_radius=0.6, stiffness=30.0)
TRIPLE = evenly_spaced_directions(3)

# Exact touch points p_o + l_i * contact_distance for the triple at the origin.
TOUCH_POINTS = np.array(
    [
        [0.8, 0.0],
        [-0.39999999999999986, 0.692820323027551],
        [-0.40000000000000036, -0.6928203230275507],
    ]
)

# Baseline-run regression values (dt = 1e-3, t_end = 60, default backend).
SET1_TAIL_VEL = 0.19365833241559582
SET1_RADIUS = 3.6880915474473426
SET1_RMS = 3.975302256124757e-06
SET1_CENTER = np.array([-4.931256, -0.116531])
SET1_POS_TAIL = 0.0031675976502383674
SET1_DELTA_HAT = 2.222172840547523e-05

# Estimator regression values (seed 0, 10^4 samples).
L_F_HAT = 29.991009308859738
L_PHI_HAT = 0.05191199207953267
DELTA_BOUND = 0.004714045207910319

# control_step on the circular-command scenario's initial state at t = 0.
GOLDEN_S_STAR = np.array([0.02271223850207412, 0.01209164838722607, 0.0])
GOLDEN_P_STAR = np.array(
    [
        [-7.2227122385020746, 0.0],
        [-8.393954175806387, 0.6823486483505841],
        [-8.4, -0.6928203230275507],
    ]
)
GOLDEN_ROBOT_VEL = np.array(
    [
        [-0.22271223850207456, -1.0],
        [0.6060458241936129, -0.31765135164941594],
        [0.5999999999999996, 0.3071796769724493],
    ]
)
GOLDEN_QP_RESIDUAL = 1.1779971329568273e-05


def circle_config(k_p=1.0, amplitude=1.0, dt=1e-3, t_end=60.0):
    """The three-robot circular-command scenario used throughout."""
    return ScenarioConfig(
        n=2,
        N=3,
        geom=GEOM,
        gains=ControllerGains(k_v=0.5, k_p=k_p, eps=0.01, directions=TRIPLE),
        command=CircularCommand(amplitude=amplitude, period=20.0),
        initial_state=SystemState(
            p_o=np.array([-8.0, 0.0]),
            v_o=np.array([0.0, 0.0]),
            p=np.array([[-7.0, 1.0], [-9.0, 1.0], [-9.0, -1.0]]),
        ),
        dt=dt,
        t_end=t_end,
    )


def equilibrium_config(t_end=10.0):
    """Zero command, robots exactly at their touch points, object at rest."""
    return ScenarioConfig(
        n=2,
        N=3,
        geom=GEOM,
        gains=ControllerGains(k_v=0.5, k_p=1.0, eps=0.01, directions=TRIPLE),
        command=ZeroCommand(dimension=2),
        initial_state=SystemState(
            p_o=np.zeros(2), v_o=np.zeros(2), p=TOUCH_POINTS.copy()
        ),
        dt=1e-3,
        t_end=t_end,
    )


def no_contact_config(v_o=(1.0, 0.0), dt=0.01, t_end=1.0):
    """Robots far outside contact range; the object drifts freely."""
    return ScenarioConfig(
        n=2,
        N=3,
        geom=GEOM,
        gains=ControllerGains(k_v=0.5, k_p=1.0, eps=0.01, directions=TRIPLE),
        command=ZeroCommand(dimension=2),
        initial_state=SystemState(
            p_o=np.zeros(2),
            v_o=np.asarray(v_o, dtype=float),
            p=np.array([[50.0, 0.0], [-50.0, 50.0], [-50.0, -50.0]]),
        ),
        dt=dt,
        t_end=t_end,
    )


def random_spd_problem(rng, size, scale=2.0):
    """Random strictly convex QP data (R, r)."""
    a = rng.normal(size=(size, size))
    R = a.T @ a + 0.1 * np.eye(size)
    r = scale * rng.normal(size=size)
    return R, r
