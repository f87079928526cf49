"""RoboWalk leg model: bearing geometry, closed-form inverse kinematics,
differential kinematics and the per-leg Newton dynamics with the
weight-support control closure.

Geometry of one leg: the upper link runs from the rail-arc center (the
anchor, held at the user's CoG) down to the robot knee at distance L; the
lower link of length r continues to the robot ankle.  Two bearings ride
rails of radius R centered on the anchor; they sit on the upper link side
at angles theta_opt and theta_opt + theta_R forward of the upper-link
line, so each bearing force acts along a line through the anchor.

Angles follow the human-model convention (counterclockwise-positive in
the x-z plane, zero pointing straight down).  theta_b >= 0 puts the robot
knee forward of the anchor-ankle chord, so the relative knee angle
theta2 = gamma - pi is signed negative for a flexed leg.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .config import read_config

REACH_MARGIN = 1e-9       # [m] hard feasibility margin on the leg reach
NEAR_REACH_WARN = 1e-6    # [m] warn when this close to a reach boundary
SIN_SINGULAR = 1e-6       # |sin theta2| below which the leg Jacobian dies
GEOMETRY_EPS = 1e-9       # [m] minimum knee-to-bearing distance


class RobotError(RuntimeError):
    pass


class GeometryError(RobotError):
    """Degenerate bearing geometry (bearing collapses onto the knee)."""


class ReachError(RobotError):
    """Ankle target outside the leg's reachable annulus."""


class LegSingularityError(RobotError):
    """Straight or folded leg: differential kinematics undefined."""


class NearSingularWarning(UserWarning):
    pass


def _dir(theta):
    """Unit vector of a link hanging at angle theta (zero = straight down)."""
    return np.array([np.sin(theta), -np.cos(theta)])


def _dir_d(theta):
    return np.array([np.cos(theta), np.sin(theta)])


def _cross2(a, b):
    return a[0] * b[1] - a[1] * b[0]


@dataclass(frozen=True)
class RobotParams:
    """One-leg design and mass parameters (legs are identical)."""

    L: float = 0.55            # anchor (user CoG) to robot knee
    r: float = 0.55            # lower link length
    R: float = 0.20            # rail arc radius
    theta_opt: float = np.deg2rad(30.0)
    theta_R: float = np.deg2rad(30.0)
    ankle_offset: tuple = (0.05, 0.0)   # robot ankle in the human foot frame
    m1: float = 3.0
    m2: float = 1.0
    I_G1: float = None         # about each link CoG; None -> m len^2 / 12
    I_G2: float = None
    a: float = None            # upper-link CoG along the link from the anchor
    b: float = None            # ... and perpendicular offset
    r_G2: float = None         # lower-link CoG polar distance from the knee
    beta: float = 0.0          # ... and polar angle offset

    def __post_init__(self):
        if min(self.L, self.r, self.R) <= 0:
            raise RobotError("L, r, R must be positive")
        if not 0 < self.theta_opt < np.pi / 2:
            raise RobotError("theta_opt must lie in (0, pi/2)")
        if not 0 < self.theta_R < np.pi / 2:
            raise RobotError("theta_R must lie in (0, pi/2)")
        if min(self.m1, self.m2) <= 0:
            raise RobotError("link masses must be positive")
        defaults = {
            "I_G1": self.m1 * self.L ** 2 / 12.0,
            "I_G2": self.m2 * self.r ** 2 / 12.0,
            "a": 0.5 * self.L,
            "b": 0.0,
            "r_G2": 0.5 * self.r,
        }
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        object.__setattr__(self, "ankle_offset",
                           tuple(float(v) for v in self.ankle_offset))

    def with_design(self, L, r, R, theta_opt):
        """New params for a candidate design vector; CoG/inertia defaults
        track the new lengths (uniform rods of unchanged mass)."""
        return replace(self, L=L, r=r, R=R, theta_opt=theta_opt,
                       I_G1=None, I_G2=None, a=None, b=None, r_G2=None,
                       beta=self.beta)

    @property
    def total_mass(self):
        """Both legs."""
        return 2.0 * (self.m1 + self.m2)


_ROBOT_KEYS = {
    "upper_length": "L", "lower_length": "r", "arc_radius": "R",
    "theta_opt": "theta_opt", "theta_r": "theta_R",
    "upper_mass": "m1", "lower_mass": "m2",
    "upper_inertia": "I_G1", "lower_inertia": "I_G2",
    "upper_com_a": "a", "upper_com_b": "b",
    "lower_com_r": "r_G2", "lower_com_beta": "beta",
}


def robot_from_config(path) -> RobotParams:
    """RobotParams from a key=value file (angles in radians); unset keys
    keep the defaults."""
    cfg = read_config(path)
    kwargs = {}
    ankle = list(RobotParams().ankle_offset)
    for key, value in cfg.items():
        if key == "ankle_dx":
            ankle[0] = value
        elif key == "ankle_dz":
            ankle[1] = value
        elif key in _ROBOT_KEYS:
            kwargs[_ROBOT_KEYS[key]] = value
        else:
            raise RobotError(f"unknown robot config key {key!r}")
    return RobotParams(ankle_offset=tuple(ankle), **kwargs)


# ---------------------------------------------------------------------------
# bearing geometry


@dataclass(frozen=True)
class DerivedGeometry:
    ll1: float
    ll2: float
    theta_ll1: float
    theta_ll2: float


def derive_geometry(L, R, theta_opt, theta_R) -> DerivedGeometry:
    """Knee-to-bearing distances and angles from the anchor-knee-bearing
    triangles (law of cosines / law of sines)."""
    if L <= 0 or R <= 0:
        raise GeometryError("L and R must be positive")
    out = []
    for delta in (theta_opt, theta_opt + theta_R):
        ll_sq = L * L + R * R - 2.0 * L * R * np.cos(delta)
        ll = np.sqrt(max(ll_sq, 0.0))
        if ll <= GEOMETRY_EPS:
            raise GeometryError(
                f"bearing coincides with the knee (ll = {ll:.3e})")
        cos_t = np.clip((L * L + ll * ll - R * R) / (2.0 * L * ll), -1.0, 1.0)
        out.append((float(ll), float(np.arccos(cos_t))))
    return DerivedGeometry(out[0][0], out[1][0], out[0][1], out[1][1])


@dataclass(frozen=True)
class AssistDirections:
    alpha_f1: float           # force-line angles from the horizontal
    alpha_f2: float
    bearing1: np.ndarray      # world bearing positions
    bearing2: np.ndarray
    u1: np.ndarray            # unit vectors bearing -> anchor (force on user
    u2: np.ndarray            # is F_i * u_i)


def assist_directions(params: RobotParams, geometry: DerivedGeometry,
                      theta1, anchor) -> AssistDirections:
    """Bearing positions on the rail arc and the force lines through the
    anchor."""
    anchor = np.asarray(anchor, dtype=float)
    bearings = []
    units = []
    for delta in (params.theta_opt, params.theta_opt + params.theta_R):
        direction = _dir(theta1 + delta)
        bearings.append(anchor + params.R * direction)
        units.append(-direction)
    alpha1 = float(np.arctan2(units[0][1], units[0][0]))
    alpha2 = float(np.arctan2(units[1][1], units[1][0]))
    return AssistDirections(alpha1, alpha2, bearings[0], bearings[1],
                            units[0], units[1])


# ---------------------------------------------------------------------------
# kinematics


def inverse_kinematics(params: RobotParams, anchor, ankle):
    """Closed-form leg IK.

    Returns (theta_a, theta_b, theta1, theta2) with theta1 = theta_a +
    theta_b; theta2 <= 0 is the signed knee angle, so the chain
    anchor + L dir(theta1) + r dir(theta1 + theta2) lands on the ankle.
    """
    return two_link_ik(params.L, params.r, anchor, ankle)


def two_link_ik(l, r, anchor, ankle):
    """Two-segment planar IK with the knee forward of the chord; shared by
    the robot leg and the gait synthesizer's human-leg solve."""
    anchor = np.asarray(anchor, dtype=float)
    ankle = np.asarray(ankle, dtype=float)
    rel = ankle - anchor
    p = float(np.linalg.norm(rel))
    lo, hi = abs(l - r) + REACH_MARGIN, l + r - REACH_MARGIN
    if p < lo or p > hi:
        raise ReachError(
            f"ankle at distance {p:.6f} outside reachable [{lo:.6f}, {hi:.6f}]")
    if p < lo + NEAR_REACH_WARN or p > hi - NEAR_REACH_WARN:
        warnings.warn(f"leg within {NEAR_REACH_WARN} of a reach boundary "
                      f"(P = {p:.9f})", NearSingularWarning, stacklevel=2)
    theta_a = float(np.arctan2(rel[0], -rel[1]))
    cos_b = np.clip((l * l + p * p - r * r) / (2.0 * l * p), -1.0, 1.0)
    theta_b = float(np.arccos(cos_b))
    cos_g = np.clip((l * l + r * r - p * p) / (2.0 * l * r), -1.0, 1.0)
    theta2 = float(np.arccos(cos_g) - np.pi)
    return theta_a, theta_b, theta_a + theta_b, theta2


def leg_forward(params: RobotParams, anchor, theta1, theta2):
    """Chain closure: (knee, ankle) world positions."""
    anchor = np.asarray(anchor, dtype=float)
    knee = anchor + params.L * _dir(theta1)
    return knee, knee + params.r * _dir(theta1 + theta2)


@dataclass(frozen=True)
class RobotLegState:
    anchor: np.ndarray
    anchor_vel: np.ndarray
    anchor_acc: np.ndarray
    ankle: np.ndarray
    ankle_vel: np.ndarray
    ankle_acc: np.ndarray
    theta_a: float
    theta_b: float
    theta1: float
    theta2: float
    p_dist: float
    theta1_dot: float = 0.0
    theta2_dot: float = 0.0
    theta1_ddot: float = 0.0
    theta2_ddot: float = 0.0


def _leg_jacobian(params, theta1, theta2):
    l, r = params.L, params.r
    t12 = theta1 + theta2
    c1, s1 = np.cos(theta1), np.sin(theta1)
    c12, s12 = np.cos(t12), np.sin(t12)
    return np.array([[l * c1 + r * c12, r * c12],
                     [l * s1 + r * s12, r * s12]])


def differential_kinematics(params: RobotParams, state: RobotLegState):
    """Joint rates and accelerations from anchor/ankle motion (2x2 solve).

    The Jacobian determinant is L r sin(theta2); straight or folded legs
    raise LegSingularityError.
    """
    if abs(np.sin(state.theta2)) <= SIN_SINGULAR:
        raise LegSingularityError(
            f"|sin theta2| = {abs(np.sin(state.theta2)):.2e} at the "
            "straight/folded singularity")
    jac = _leg_jacobian(params, state.theta1, state.theta2)
    rate = np.linalg.solve(jac, state.ankle_vel - state.anchor_vel)
    l, r = params.L, params.r
    t1d = rate[0]
    t12d = rate[0] + rate[1]
    t12 = state.theta1 + state.theta2
    jdot = np.array([
        [-l * np.sin(state.theta1) * t1d - r * np.sin(t12) * t12d,
         -r * np.sin(t12) * t12d],
        [l * np.cos(state.theta1) * t1d + r * np.cos(t12) * t12d,
         r * np.cos(t12) * t12d]])
    accel = np.linalg.solve(jac, state.ankle_acc - state.anchor_acc - jdot @ rate)
    return float(rate[0]), float(rate[1]), float(accel[0]), float(accel[1])


def solve_leg_state(params: RobotParams, anchor_kin, ankle_kin) -> RobotLegState:
    """IK plus differential kinematics from (pos, vel, acc) triples."""
    anchor, anchor_vel, anchor_acc = (np.asarray(v, dtype=float)
                                      for v in anchor_kin)
    ankle, ankle_vel, ankle_acc = (np.asarray(v, dtype=float)
                                   for v in ankle_kin)
    theta_a, theta_b, theta1, theta2 = inverse_kinematics(params, anchor, ankle)
    state = RobotLegState(anchor, anchor_vel, anchor_acc,
                          ankle, ankle_vel, ankle_acc,
                          theta_a, theta_b, theta1, theta2,
                          float(np.linalg.norm(ankle - anchor)))
    t1d, t2d, t1dd, t2dd = differential_kinematics(params, state)
    return replace(state, theta1_dot=t1d, theta2_dot=t2d,
                   theta1_ddot=t1dd, theta2_ddot=t2dd)


# ---------------------------------------------------------------------------
# leg dynamics


class LegMode:
    STANCE = "STANCE"
    SWING = "SWING"


@dataclass(frozen=True)
class HriForces:
    """Solved interaction forces of one robot leg.

    f1/f2 are signed magnitudes along the bearing->anchor lines (the force
    on the user is f_i * u_i); (ax, az) is the force of the lower link on
    the upper at the robot knee; (bx, bz) the force of the environment
    (the user's shoe) on the lower link at the robot ankle;
    tm the motor torque (+tm on the upper link, -tm on the lower).
    """

    f1: float
    f2: float
    alpha_f1: float
    alpha_f2: float
    ax: float
    az: float
    bx: float
    bz: float
    tm: float
    residual: float
    seat_force: np.ndarray     # f1*u1 + f2*u2, the assist wrench on the user
    ankle_reaction: np.ndarray  # -(bx, bz), applied to the human foot


def leg_dynamics(params: RobotParams, geometry: DerivedGeometry,
                 state: RobotLegState, mode, p=0.0, w_human=0.0,
                 gravity=9.81) -> HriForces:
    """Solve the 7 unknowns [F1, F2, A_x, A_z, B_x, B_z, T_m] of one leg.

    Six Newton/moment balances (three per link, moments about each link
    CoG) plus the closure row: vertical assist = p * w_human in STANCE,
    motor off (T_m = 0) in SWING.
    """
    if mode not in (LegMode.STANCE, LegMode.SWING):
        raise RobotError(f"unknown mode {mode!r}")
    t1, t2 = state.theta1, state.theta2
    t12 = t1 + t2
    t1d, t12d = state.theta1_dot, state.theta1_dot + state.theta2_dot
    t1dd, t12dd = state.theta1_ddot, state.theta1_ddot + state.theta2_ddot

    assist = assist_directions(params, geometry, t1, state.anchor)
    u1, u2 = assist.u1, assist.u2

    knee = state.anchor + params.L * _dir(t1)
    knee_acc = (state.anchor_acc + t1dd * params.L * _dir_d(t1)
                - t1d ** 2 * params.L * _dir(t1))

    off1 = params.a * _dir(t1) + params.b * _dir_d(t1)
    off1_d = params.a * _dir_d(t1) - params.b * _dir(t1)
    g1 = state.anchor + off1
    g1_acc = state.anchor_acc + t1dd * off1_d - t1d ** 2 * off1

    off2 = params.r_G2 * _dir(t12 + params.beta)
    g2 = knee + off2
    g2_acc = (knee_acc + t12dd * params.r_G2 * _dir_d(t12 + params.beta)
              - t12d ** 2 * off2)

    ankle = state.ankle
    a = np.zeros((7, 7))
    rhs = np.zeros(7)
    # upper link forces
    a[0] = [-u1[0], -u2[0], 1.0, 0.0, 0.0, 0.0, 0.0]
    a[1] = [-u1[1], -u2[1], 0.0, 1.0, 0.0, 0.0, 0.0]
    rhs[0] = params.m1 * g1_acc[0]
    rhs[1] = params.m1 * g1_acc[1] + params.m1 * gravity
    # upper link moments about G1
    a[2, 0] = -_cross2(assist.bearing1 - g1, u1)
    a[2, 1] = -_cross2(assist.bearing2 - g1, u2)
    a[2, 2] = -(knee - g1)[1]
    a[2, 3] = (knee - g1)[0]
    a[2, 6] = 1.0
    rhs[2] = params.I_G1 * t1dd
    # lower link forces
    a[3] = [0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0]
    a[4] = [0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]
    rhs[3] = params.m2 * g2_acc[0]
    rhs[4] = params.m2 * g2_acc[1] + params.m2 * gravity
    # lower link moments about G2
    a[5, 2] = (knee - g2)[1]
    a[5, 3] = -(knee - g2)[0]
    a[5, 4] = -(ankle - g2)[1]
    a[5, 5] = (ankle - g2)[0]
    a[5, 6] = -1.0
    rhs[5] = params.I_G2 * t12dd
    # control closure
    if mode == LegMode.STANCE:
        a[6, 0] = u1[1]
        a[6, 1] = u2[1]
        rhs[6] = p * w_human
    else:
        a[6, 6] = 1.0
        rhs[6] = 0.0

    try:
        x = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise RobotError(f"leg force system singular: {exc}") from exc
    residual = float(np.linalg.norm(a @ x - rhs))
    if not np.all(np.isfinite(x)) or residual > 1e-9 * (1 + np.linalg.norm(rhs)):
        raise RobotError("leg force system ill-conditioned")
    f1, f2, ax, az, bx, bz, tm = (float(v) for v in x)
    return HriForces(f1, f2, assist.alpha_f1, assist.alpha_f2,
                     ax, az, bx, bz, tm, residual,
                     seat_force=f1 * u1 + f2 * u2,
                     ankle_reaction=np.array([-bx, -bz]))
