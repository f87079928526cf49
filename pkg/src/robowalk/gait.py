"""Gait trajectories: file ingestion, a synthetic gait generator, and the
end-to-end simulation pipeline coupling the robot legs to the human
inverse dynamics.

Gait files are comma-delimited text with a header row.  Required columns:
time plus the ten configuration coordinates (SI units, radians).
Optional velocity/acceleration columns use the d_/dd_ prefixes
(e.g. d_q_kR); when a derivative group is incomplete it is rebuilt by
central differences (second-order one-sided at the ends).
"""

from dataclasses import dataclass, replace

import numpy as np

from .human import (
    COORD_NAMES,
    NDOF,
    ContactState,
    GeneralizedCoordinates,
    GeneralizedState,
    HumanModel,
    LINK_NAMES,
    Phase,
    cog,
    detect_contact,
    forward_kinematics,
    _point_jacobian_from_links,
)
from .dynamics import (
    ExternalForce,
    joint_loads,
    rnea,
    solve_dsp,
    solve_ssp,
)
from .robot import (
    LegMode,
    ReachError,
    RobotParams,
    derive_geometry,
    leg_dynamics,
    solve_leg_state,
    REACH_MARGIN,
)

VEL_PREFIX = "d_"
ACC_PREFIX = "dd_"
JITTER_TOLERANCE = 1e-3   # relative time-step jitter allowed in gait files


class GaitError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaitTrajectory:
    """Uniformly sampled joint-space gait with optional phase tags."""

    dt: float
    samples: tuple
    phases: tuple = None

    def __post_init__(self):
        if not self.dt > 0:
            raise GaitError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.phases is not None:
            object.__setattr__(self, "phases", tuple(self.phases))
            if len(self.phases) != len(self.samples):
                raise GaitError("one phase tag per sample required")

    @property
    def n_data(self):
        return len(self.samples)

    @property
    def times(self):
        return self.dt * np.arange(self.n_data)

    def with_phases(self, model: HumanModel) -> "GaitTrajectory":
        tags = tuple(detect_contact(model, s.q) for s in self.samples)
        return replace(self, phases=tags)

    def window(self, start, stop) -> "GaitTrajectory":
        """Contiguous sub-trajectory (keeps dt and tags)."""
        phases = None if self.phases is None else self.phases[start:stop]
        return GaitTrajectory(self.dt, self.samples[start:stop], phases)

    def ssp_indices(self, side=None):
        """Indices of single-support samples (optionally one stance side)."""
        if self.phases is None:
            raise GaitError("trajectory has no phase tags; call with_phases")
        wanted = {Phase.SSP_LEFT, Phase.SSP_RIGHT}
        if side == "left":
            wanted = {Phase.SSP_LEFT}
        elif side == "right":
            wanted = {Phase.SSP_RIGHT}
        return [i for i, c in enumerate(self.phases) if c.phase in wanted]


# ---------------------------------------------------------------------------
# file I/O


def _differentiate(values, dt):
    """Central differences, second-order one-sided at the ends.

    Written in difference form so constant columns give exactly zero."""
    q = np.asarray(values, dtype=float)
    qd = np.empty_like(q)
    qd[1:-1] = (q[2:] - q[:-2]) / (2.0 * dt)
    if len(q) >= 3:
        qd[0] = (4.0 * (q[1] - q[0]) - (q[2] - q[0])) / (2.0 * dt)
        qd[-1] = -(4.0 * (q[-2] - q[-1]) - (q[-3] - q[-1])) / (2.0 * dt)
    else:
        qd[0] = qd[-1] = (q[-1] - q[0]) / dt
    return qd


def _second_differentiate(values, dt):
    """Central second differences of positions, second-order at the ends."""
    q = np.asarray(values, dtype=float)
    qdd = np.empty_like(q)
    qdd[1:-1] = (q[2:] - 2.0 * q[1:-1] + q[:-2]) / dt ** 2
    if len(q) >= 4:
        qdd[0] = (-5.0 * (q[1] - q[0]) + 4.0 * (q[2] - q[0])
                  - (q[3] - q[0])) / dt ** 2
        qdd[-1] = (-5.0 * (q[-2] - q[-1]) + 4.0 * (q[-3] - q[-1])
                   - (q[-4] - q[-1])) / dt ** 2
    elif len(q) >= 3:
        qdd[0] = qdd[-1] = qdd[1]
    else:
        qdd[:] = 0.0
    return qdd


def load_gait(path, model: HumanModel = None) -> GaitTrajectory:
    """Parse a gait table; with a model, also tag support phases."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise GaitError(f"{path}: empty gait file")
    header = [h.strip() for h in lines[0].split(",")]
    required = ("time",) + COORD_NAMES
    for name in required:
        if name not in header:
            raise GaitError(f"{path}: missing required column {name!r}")
    col = {name: header.index(name) for name in header}

    rows = np.empty((len(lines) - 1, len(header)))
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != len(header):
            raise GaitError(f"{path}: row {i} has {len(cells)} cells, "
                            f"expected {len(header)}")
        try:
            rows[i] = [float(c) for c in cells]
        except ValueError as exc:
            raise GaitError(f"{path}: row {i}: {exc}") from exc
    for name, j in col.items():
        bad = np.flatnonzero(~np.isfinite(rows[:, j]))
        if bad.size:
            raise GaitError(
                f"{path}: non-finite value at row {bad[0]}, column {name!r}")

    time = rows[:, col["time"]]
    if len(time) < 2:
        raise GaitError(f"{path}: need at least two samples")
    steps = np.diff(time)
    dt = float(np.median(steps))
    if dt <= 0:
        raise GaitError(f"{path}: non-increasing time column")
    jitter = np.abs(steps - dt)
    if np.any(jitter > JITTER_TOLERANCE * dt):
        row = int(np.argmax(jitter)) + 1
        raise GaitError(f"{path}: non-uniform time step at row {row} "
                        f"(dt = {steps[row - 1]:.6g} vs {dt:.6g})")

    q = np.column_stack([rows[:, col[name]] for name in COORD_NAMES])
    vel_cols = [VEL_PREFIX + n for n in COORD_NAMES]
    acc_cols = [ACC_PREFIX + n for n in COORD_NAMES]
    have_vel = all(name in col for name in vel_cols)
    if have_vel:
        qd = np.column_stack([rows[:, col[name]] for name in vel_cols])
    else:
        qd = _differentiate(q, dt)
    if all(name in col for name in acc_cols):
        qdd = np.column_stack([rows[:, col[name]] for name in acc_cols])
    elif have_vel:
        qdd = _differentiate(qd, dt)
    else:
        qdd = _second_differentiate(q, dt)

    samples = tuple(
        GeneralizedState(GeneralizedCoordinates(q[i]), qd[i], qdd[i])
        for i in range(len(q)))
    traj = GaitTrajectory(dt, samples)
    return traj.with_phases(model) if model is not None else traj


def write_gait(path, gait: GaitTrajectory, include_derivatives=True):
    """Emit a gait table that load_gait round-trips bitwise."""
    header = ["time", *COORD_NAMES]
    if include_derivatives:
        header += [VEL_PREFIX + n for n in COORD_NAMES]
        header += [ACC_PREFIX + n for n in COORD_NAMES]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i, s in enumerate(gait.samples):
            cells = [i * gait.dt, *s.q.values]
            if include_derivatives:
                cells += [*s.qdot, *s.qddot]
            fh.write(",".join(f"{v:.17g}" for v in cells) + "\n")


# ---------------------------------------------------------------------------
# synthetic gait

# stride phase fractions: double support, left stance, double support,
# right stance (per-leg stance fraction 0.6, typical of slow walking)
_DSP1_END = 0.1
_SSPL_END = 0.5
_DSP2_END = 0.6


def _smootherstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (6.0 * s ** 2 - 15.0 * s + 10.0)


def synthesize_gait(human: HumanModel, stride_period=1.35, step_length=0.25,
                    n_samples=135, lift_height=0.05,
                    pelvis_height=None) -> GaitTrajectory:
    """One full stride of a smooth sagittal gait.

    Stance feet are exactly flat and stationary; the swing foot advances a
    full stride (two step lengths) with a smooth lift profile whose
    support sits strictly inside the single-support window, so sampled
    phase tags match the construction.  Joint angles come from the
    two-link leg IK; derivatives from central differences of the sampled
    configuration.
    """
    if n_samples < 4:
        raise GaitError("need at least 4 samples per stride")
    if stride_period <= 0:
        raise GaitError("stride_period must be positive")
    from .robot import two_link_ik

    from .human import DSP_TOLERANCE

    leg = human.thigh_r.length + human.shank_r.length
    if pelvis_height is None:
        pelvis_height = human.ankle_height + 0.875 * leg
    dt = stride_period / n_samples
    speed = 2.0 * step_length / stride_period

    # sin^2 lift whose crossings of the phase-detection tolerance sit exactly
    # on the half-sample boundaries of the intended single-support window, so
    # single-support samples clear the ground and double-support samples do
    # not, with gentle accelerations
    if lift_height <= 2.0 * DSP_TOLERANCE:
        raise GaitError("lift_height must exceed twice the contact tolerance")
    s_cross = np.arcsin(np.sqrt(DSP_TOLERANCE / lift_height)) / np.pi

    def support(frac_lo, frac_hi):
        k_first = int(np.ceil(frac_lo * n_samples - 1e-9))
        k_last = int(np.ceil(frac_hi * n_samples - 1e-9)) - 1
        span = (k_last - k_first + 1) * dt
        width = span / (1.0 - 2.0 * s_cross)
        return ((k_first - 0.5) * dt - width * s_cross, width)

    swings = {
        "right": support(_DSP1_END, _SSPL_END),
        "left": support(_DSP2_END, 1.0),
    }
    start_x = {"right": human.hip_offset, "left": -human.hip_offset + step_length}

    def ankle_target(side, t):
        if step_length == 0.0:  # static standing, no swing at all
            return np.array([start_x[side], human.ankle_height])
        t0, width = swings[side]
        x0 = start_x[side]
        s = np.clip((t - t0) / width, 0.0, 1.0)
        x = x0 + 2.0 * step_length * _smootherstep(s)
        z = human.ankle_height + lift_height * np.sin(np.pi * s) ** 2
        return np.array([x, z])

    q_table = np.zeros((n_samples, NDOF))
    for k in range(n_samples):
        t = k * dt
        x_p = speed * t
        q = np.zeros(NDOF)
        q[0], q[1] = x_p, pelvis_height
        for side, cols in (("right", (4, 5, 6)), ("left", (7, 8, 9))):
            sgn = 1.0 if side == "right" else -1.0
            hip = np.array([x_p + sgn * human.hip_offset, pelvis_height])
            target = ankle_target(side, t)
            try:
                _, _, theta1, theta2 = two_link_ik(
                    human.thigh_r.length, human.shank_r.length, hip, target)
            except ReachError as exc:
                raise GaitError(
                    f"unreachable step length {step_length} at sample {k} "
                    f"({side} leg): {exc}") from exc
            q[cols[0]] = theta1          # hip (pelvis angle is zero)
            q[cols[1]] = theta2          # knee
            q[cols[2]] = -theta1 - theta2  # keep the foot flat
        q_table[k] = q

    qd = _differentiate(q_table, dt)
    qdd = _second_differentiate(q_table, dt)
    samples = tuple(
        GeneralizedState(GeneralizedCoordinates(q_table[i]), qd[i], qdd[i])
        for i in range(n_samples))
    return GaitTrajectory(dt, samples).with_phases(human)


# ---------------------------------------------------------------------------
# simulation pipeline


@dataclass(frozen=True)
class PreparedSample:
    """Per-sample quantities that do not depend on the robot design."""

    index: int
    state: GeneralizedState
    contact: ContactState
    stance_side: str
    b0: np.ndarray               # rnea output without interaction forces
    a_matrix: np.ndarray         # [D  J_frf^T]
    j_cog: np.ndarray            # 2 x 10 whole-body CoG jacobian
    anchor_kin: tuple            # CoG (pos, vel, acc) - the robot anchor
    ankle_kin: dict              # side -> (pos, vel, acc) of the robot ankle
    ankle_jac: dict              # side -> 3 x 10 jacobian at that point


def prepare_ssp_samples(human: HumanModel, gait: GaitTrajectory,
                        robot: RobotParams = None):
    """Precompute kinematics and the contact system for every SSP sample."""
    if gait.phases is None:
        gait = gait.with_phases(human)
    offset = np.asarray(robot.ankle_offset if robot is not None
                        else RobotParams().ankle_offset)
    prepared = []
    for i, (state, contact) in enumerate(zip(gait.samples, gait.phases)):
        if contact.phase is Phase.DSP:
            continue
        links = forward_kinematics(human, state)
        stance = contact.stance_side
        jac = _point_jacobian_from_links(
            links, f"foot_{stance[0]}", contact.contacts[0].point_local)
        a = np.zeros((NDOF, NDOF))
        a[3:, :7] = np.eye(7)
        a[:, 7:] = jac.T
        c = cog(human, state)
        ankle_kin = {}
        ankle_jac = {}
        for side in ("left", "right"):
            foot = links[f"foot_{side[0]}"]
            ankle_kin[side] = foot.point(offset)
            ankle_jac[side] = _point_jacobian_from_links(
                links, f"foot_{side[0]}", offset)
        prepared.append(PreparedSample(
            index=i, state=state, contact=contact, stance_side=stance,
            b0=rnea(human, state), a_matrix=a, j_cog=c.jacobian,
            anchor_kin=(c.position, c.velocity, c.acceleration),
            ankle_kin=ankle_kin, ankle_jac=ankle_jac))
    return prepared


def sample_reach_violation(params: RobotParams, prep: PreparedSample):
    """How far (m) the robot ankle targets fall outside the reach annulus."""
    lo = abs(params.L - params.r) + REACH_MARGIN
    hi = params.L + params.r - REACH_MARGIN
    violation = 0.0
    anchor = prep.anchor_kin[0]
    for side in ("left", "right"):
        dist = float(np.linalg.norm(prep.ankle_kin[side][0] - anchor))
        violation += max(0.0, dist - hi) + max(0.0, lo - dist)
    return violation


@dataclass(frozen=True)
class RobotSampleSolution:
    stance_side: str
    stance: object               # HriForces
    swing: object
    seat_force: np.ndarray       # both legs' assist resultant on the user
    leg_states: dict             # side -> RobotLegState

    @property
    def horizontal_force(self):
        """Horizontal assist of the stance leg on the user."""
        return float(self.stance.seat_force[0])

    def leg(self, side):
        return self.stance if side == self.stance_side else self.swing

    def motor_torque(self, side):
        return self.leg(side).tm


def solve_robot_sample(params: RobotParams, geometry, prep: PreparedSample,
                       p, w_human, gravity) -> RobotSampleSolution:
    """Both robot legs for one SSP sample (stance closure on the grounded
    side, motor off on the other)."""
    legs = {}
    states = {}
    for side in ("left", "right"):
        states[side] = solve_leg_state(params, prep.anchor_kin,
                                       prep.ankle_kin[side])
        mode = LegMode.STANCE if side == prep.stance_side else LegMode.SWING
        legs[side] = leg_dynamics(params, geometry, states[side], mode,
                                  p=p, w_human=w_human, gravity=gravity)
    stance = legs[prep.stance_side]
    swing = legs["left" if prep.stance_side == "right" else "right"]
    return RobotSampleSolution(
        prep.stance_side, stance, swing,
        seat_force=legs["left"].seat_force + legs["right"].seat_force,
        leg_states=states)


def hri_generalized_load(prep: PreparedSample, sol: RobotSampleSolution):
    """Generalized forces of the interaction wrenches (J_cog^T F_seat plus
    the two ankle-reaction terms)."""
    load = prep.j_cog.T @ sol.seat_force
    for side in ("left", "right"):
        reaction = sol.leg(side).ankle_reaction
        load += prep.ankle_jac[side].T @ np.array([reaction[0], reaction[1], 0.0])
    return load


def distribute_seat_force(human: HumanModel, force):
    """Mass-fraction split of a CoG-line force into per-link wrenches
    (reproduces J_cog^T F exactly)."""
    force = np.asarray(force, dtype=float)
    total = human.total_mass
    return [ExternalForce(name, human.cog_local(name),
                          [*(human.body(name).mass / total * force), 0.0])
            for name in LINK_NAMES]


def hri_external_forces(human: HumanModel, robot: RobotParams,
                        sol: RobotSampleSolution, seat_at_pelvis=False):
    """The interaction wrenches as explicit per-link external forces."""
    if seat_at_pelvis:
        ext = [ExternalForce("pelvis", [0.0, 0.0], [*sol.seat_force, 0.0])]
    else:
        ext = distribute_seat_force(human, sol.seat_force)
    for side in ("left", "right"):
        reaction = sol.leg(side).ankle_reaction
        ext.append(ExternalForce(f"foot_{side[0]}", robot.ankle_offset,
                                 [reaction[0], reaction[1], 0.0]))
    return ext


@dataclass(frozen=True)
class SimRow:
    index: int
    time: float
    phase: str
    stance: str
    tau: np.ndarray              # 7 actuated torques
    contact: np.ndarray          # (F_x, F_z, M) floor wrench
    knee_force_right: np.ndarray  # (F_x, F_z) thigh-on-shank reaction
    knee_force_left: np.ndarray
    knee_compression_right: float  # reaction component along the shank axis
    knee_compression_left: float
    hri_left: object             # HriForces or None
    hri_right: object
    motor_speed_left: float      # robot knee rate [rad/s]
    motor_speed_right: float
    residual: float


_HRI_FIELDS = ("f1", "f2", "ax", "az", "bx", "bz", "tm")


@dataclass(frozen=True)
class SimulationReport:
    rows: tuple

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def knee_force_magnitude(self, side):
        return np.array([np.linalg.norm(getattr(r, f"knee_force_{side}"))
                         for r in self.rows])

    def peak_stance_knee_force(self):
        return max(np.linalg.norm(getattr(r, f"knee_force_{r.stance}"))
                   for r in self.rows)

    def peak_stance_knee_compression(self):
        return max(getattr(r, f"knee_compression_{r.stance}")
                   for r in self.rows)

    def stance_motor_torques(self):
        return np.array([getattr(r, f"hri_{r.stance}").tm for r in self.rows])

    def to_table(self):
        header = ["index", "time", "phase", "stance",
                  "tau_T", "tau_HR", "tau_KR", "tau_AR",
                  "tau_HL", "tau_KL", "tau_AL",
                  "fc_x", "fc_z", "fc_m",
                  "f_knee_right", "f_knee_left"]
        for side in ("left", "right"):
            header += [f"{f}_{side}" for f in _HRI_FIELDS]
            header += [f"speed_rpm_{side}"]
        header += ["residual"]
        lines = [",".join(header)]
        for r in self.rows:
            cells = [str(r.index), f"{r.time:.17g}", r.phase, r.stance]
            cells += [f"{v:.17g}" for v in r.tau]
            cells += [f"{v:.17g}" for v in r.contact]
            cells += [f"{np.linalg.norm(r.knee_force_right):.17g}",
                      f"{np.linalg.norm(r.knee_force_left):.17g}"]
            for side in ("left", "right"):
                hri = getattr(r, f"hri_{side}")
                vals = [getattr(hri, f) for f in _HRI_FIELDS] if hri else [0.0] * 7
                cells += [f"{v:.17g}" for v in vals]
                rpm = getattr(r, f"motor_speed_{side}") * 60.0 / (2.0 * np.pi)
                cells += [f"{rpm:.17g}"]
            cells += [f"{r.residual:.17g}"]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def run_simulation(human: HumanModel, robot, gait: GaitTrajectory,
                   p=0.0, seat_at_pelvis=False) -> SimulationReport:
    """Inverse dynamics over every single-support sample of the gait.

    With a robot: leg IK -> differential kinematics -> leg force solve
    (stance closure at fraction p, swing motor off) -> human solve with
    the interaction wrenches -> joint loads.  Double-support samples are
    still solved (minimum norm) as a consistency check but not reported.
    """
    if gait.phases is None:
        gait = gait.with_phases(human)
    w_human = human.weight
    prepared = prepare_ssp_samples(human, gait, robot)
    geometry = None
    if robot is not None:
        violation = sum(sample_reach_violation(robot, s) for s in prepared)
        if violation > 0.0:
            raise GaitError(f"robot cannot span this gait "
                            f"(total reach violation {violation:.3f} m)")
        geometry = derive_geometry(robot.L, robot.R, robot.theta_opt,
                                   robot.theta_R)

    for i, (state, contact) in enumerate(zip(gait.samples, gait.phases)):
        if contact.phase is Phase.DSP:
            try:
                solve_dsp(human, state)
            except Exception as exc:
                raise GaitError(f"double-support solve failed at sample {i}: "
                                f"{exc}") from exc

    rows = []
    for prep in prepared:
        try:
            hri = []
            sol_robot = None
            if robot is not None:
                sol_robot = solve_robot_sample(
                    robot, geometry, prep, p, w_human, human.gravity)
                hri = hri_external_forces(human, robot, sol_robot,
                                          seat_at_pelvis)
            solution = solve_ssp(human, prep.state, hri=hri)
            loads = joint_loads(human, prep.state, solution, hri=hri)
        except Exception as exc:
            raise GaitError(f"solve failed at sample {prep.index}: {exc}") from exc

        # report post-condition: whole-system vertical equilibrium
        fz_total = solution.contacts[0].wrench[1] \
            + sum(f.wrench[1] for f in hri)
        fz_expect = human.total_mass * prep.anchor_kin[2][1] + w_human
        if abs(fz_total - fz_expect) > 1e-9 * max(1.0, abs(fz_expect)):
            raise GaitError(
                f"vertical equilibrium violated at sample {prep.index}: "
                f"{fz_total:.6e} vs {fz_expect:.6e}")

        speeds = {"left": 0.0, "right": 0.0}
        hri_by_side = {"left": None, "right": None}
        if sol_robot is not None:
            for side in ("left", "right"):
                speeds[side] = sol_robot.leg_states[side].theta2_dot
                hri_by_side[side] = sol_robot.leg(side)
        links = forward_kinematics(human, prep.state)
        compression = {}
        for side, load in (("right", loads.knee_r), ("left", loads.knee_l)):
            phi = links[f"shank_{side[0]}"].angle
            axis = np.array([np.sin(phi), -np.cos(phi)])  # knee -> ankle
            compression[side] = float(load[0:2] @ axis)
        rows.append(SimRow(
            index=prep.index, time=prep.index * gait.dt,
            phase=prep.contact.phase.value, stance=prep.stance_side,
            tau=solution.tau, contact=solution.contacts[0].wrench,
            knee_force_right=loads.knee_r[0:2],
            knee_force_left=loads.knee_l[0:2],
            knee_compression_right=compression["right"],
            knee_compression_left=compression["left"],
            hri_left=hri_by_side["left"], hri_right=hri_by_side["right"],
            motor_speed_left=speeds["left"],
            motor_speed_right=speeds["right"],
            residual=solution.residual))
    return SimulationReport(tuple(rows))
