"""Whole-body inverse dynamics.

Two independent pipelines over the same model:

  * a recursive Newton-Euler sweep in 6-D spatial coordinates (`rnea`),
    with the floating base realized as prismatic-x / prismatic-z /
    revolute chain of massless connectors;
  * an explicit planar Newton back-substitution over the link tree
    (`joint_loads` / `newton_generalized_forces`), which also exposes the
    internal joint reaction forces.

`verify_newton_vs_rnea` plays one against the other.  On top of the sweep
sit the constrained solvers: the square single-support solve (joint
torques + one contact wrench) and the minimum-norm double-support solve.
"""

import io
from dataclasses import dataclass

import numpy as np

from .human import (
    COORD_INDEX,
    NDOF,
    GeneralizedCoordinates,
    GeneralizedState,
    HumanModel,
    Phase,
    detect_contact,
    forward_kinematics,
    _point_jacobian_from_links,
)
from .spatial import (
    PluckerTransform,
    SpatialForce,
    SpatialInertia,
    SpatialMotion,
    force_cross,
    inertia_apply,
    motion_cross,
    pairing,
    transform_force,
    transform_motion,
)


class DynamicsError(RuntimeError):
    pass


class PhaseError(DynamicsError):
    """Solver called on a state in the wrong support phase."""


class SingularityError(DynamicsError):
    """Equation system lost rank in this configuration."""


@dataclass(frozen=True)
class ExternalForce:
    """World-frame wrench (f_x, f_z, m) applied at a body-local point."""

    body: str
    point: np.ndarray
    wrench: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point",
                           np.asarray(self.point, dtype=float).reshape(2))
        w = np.asarray(self.wrench, dtype=float).reshape(3)
        if not np.all(np.isfinite(w)):
            raise DynamicsError(f"non-finite external wrench {w}")
        object.__setattr__(self, "wrench", w)


@dataclass(frozen=True)
class ContactLoad:
    """Floor wrench on one grounded foot, moment counterclockwise-positive
    about the contact point."""

    side: str
    point: np.ndarray
    point_local: np.ndarray
    wrench: np.ndarray  # (F_x, F_z, M)

    def as_external_force(self):
        return ExternalForce(f"foot_{self.side[0]}", self.point_local, self.wrench)


@dataclass(frozen=True)
class DynamicsSolution:
    tau: np.ndarray            # 7 actuated torques, TAU_NAMES order
    contacts: tuple            # one ContactLoad (SSP) or two (DSP: left, right)
    residual: float
    phase: Phase

    def contact_for(self, side) -> ContactLoad:
        for c in self.contacts:
            if c.side == side:
                return c
        raise KeyError(side)


# ---------------------------------------------------------------------------
# kinematic tree for the spatial sweep


@dataclass(frozen=True)
class _Body:
    name: str
    parent: int
    joint: str          # "px" | "pz" | "ry"
    offset: np.ndarray  # joint position in the parent body frame
    inertia: object     # SpatialInertia or None for massless connectors


_S_AXES = {
    "px": SpatialMotion(np.zeros(3), np.array([1.0, 0.0, 0.0])),
    "pz": SpatialMotion(np.zeros(3), np.array([0.0, 0.0, 1.0])),
    # revolute about -y == counterclockwise in the x-z plane
    "ry": SpatialMotion(np.array([0.0, -1.0, 0.0]), np.zeros(3)),
}


def _joint_transform(joint, q):
    if joint == "px":
        return PluckerTransform(np.eye(3), np.array([q, 0.0, 0.0]))
    if joint == "pz":
        return PluckerTransform(np.eye(3), np.array([0.0, 0.0, q]))
    c, s = np.cos(q), np.sin(q)
    e = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return PluckerTransform(e, np.zeros(3))


def _planar_inertia(model, name):
    body = model.body(name)
    cx, cz = model.cog_local(name)
    return SpatialInertia(body.mass, np.array([cx, 0.0, cz]),
                          np.diag([0.0, body.inertia_cog, 0.0]))


def _tree(model: HumanModel):
    def off(x, z):
        return np.array([x, 0.0, z])

    lth = model.thigh_r.length
    ls = model.shank_r.length
    return (
        _Body("base_x", -1, "px", off(0, 0), None),
        _Body("base_z", 0, "pz", off(0, 0), None),
        _Body("pelvis", 1, "ry", off(0, 0), _planar_inertia(model, "pelvis")),
        _Body("trunk", 2, "ry", off(0, 0), _planar_inertia(model, "trunk")),
        _Body("thigh_r", 2, "ry", off(model.hip_offset, 0),
              _planar_inertia(model, "thigh_r")),
        _Body("shank_r", 4, "ry", off(0, -lth), _planar_inertia(model, "shank_r")),
        _Body("foot_r", 5, "ry", off(0, -ls), _planar_inertia(model, "foot_r")),
        _Body("thigh_l", 2, "ry", off(-model.hip_offset, 0),
              _planar_inertia(model, "thigh_l")),
        _Body("shank_l", 7, "ry", off(0, -model.thigh_l.length),
              _planar_inertia(model, "shank_l")),
        _Body("foot_l", 8, "ry", off(0, -model.shank_l.length),
              _planar_inertia(model, "foot_l")),
    )


def _world_spatial_force(point_world, wrench):
    """Planar wrench at a world point as a spatial force about the origin."""
    fx, fz, m = wrench
    f3 = np.array([fx, 0.0, fz])
    p3 = np.array([point_world[0], 0.0, point_world[1]])
    n3 = np.cross(p3, f3) + np.array([0.0, -m, 0.0])
    return SpatialForce(n3, f3)


def rnea(model: HumanModel, state: GeneralizedState, ext=(), gravity=None):
    """Generalized forces M(q) qdd + C(q, qd) - sum J_i^T F_i.

    ext is an iterable of ExternalForce; gravity overrides the model value
    (pass 0.0 for the inertia-only sweep).
    """
    g = model.gravity if gravity is None else gravity
    bodies = _tree(model)
    q, qd, qdd = state.q.values, state.qdot, state.qddot

    ext_by_name = {}
    for force in ext:
        ext_by_name.setdefault(force.body, []).append(force)

    nb = len(bodies)
    x_up = [None] * nb
    x0 = [None] * nb
    v = [None] * nb
    a = [None] * nb
    f = [None] * nb
    a_base = SpatialMotion(np.zeros(3), np.array([0.0, 0.0, g]))  # -gravity

    for i, body in enumerate(bodies):
        s = _S_AXES[body.joint]
        xj = _joint_transform(body.joint, q[i])
        x_up[i] = xj.compose(PluckerTransform(np.eye(3), body.offset))
        vj = s * qd[i]
        if body.parent < 0:
            x0[i] = x_up[i]
            v[i] = vj
            a[i] = transform_motion(x_up[i], a_base) + s * qdd[i]
        else:
            p = body.parent
            x0[i] = x_up[i].compose(x0[p])
            v[i] = transform_motion(x_up[i], v[p]) + vj
            a[i] = (transform_motion(x_up[i], a[p]) + s * qdd[i]
                    + motion_cross(v[i], vj))
        if body.inertia is None:
            f[i] = SpatialForce.zero()
        else:
            f[i] = (inertia_apply(body.inertia, a[i])
                    + force_cross(v[i], inertia_apply(body.inertia, v[i])))
        for force in ext_by_name.get(body.name, ()):
            p_local3 = np.array([force.point[0], 0.0, force.point[1]])
            p_world3 = x0[i].point_to_parent(p_local3)
            fw = _world_spatial_force((p_world3[0], p_world3[2]), force.wrench)
            f[i] = f[i] - transform_force(x0[i], fw)

    tau = np.zeros(NDOF)
    for i in range(nb - 1, -1, -1):
        body = bodies[i]
        tau[i] = pairing(_S_AXES[body.joint], f[i])
        if body.parent >= 0:
            f[body.parent] = f[body.parent] + transform_force(
                x_up[i].inverse(), f[i])
    return tau


def mass_matrix(model: HumanModel, q: GeneralizedCoordinates):
    """10x10 inertia matrix, column by column from gravity-free sweeps."""
    m = np.zeros((NDOF, NDOF))
    zero = np.zeros(NDOF)
    for j in range(NDOF):
        e = np.zeros(NDOF)
        e[j] = 1.0
        m[:, j] = rnea(model, GeneralizedState(q, zero, e), gravity=0.0)
    return m


def bias_vector(model: HumanModel, q: GeneralizedCoordinates, qdot):
    """Coriolis/centrifugal plus gravity generalized forces."""
    return rnea(model, GeneralizedState(q, qdot, np.zeros(NDOF)))


# ---------------------------------------------------------------------------
# constrained solvers

_D = np.zeros((NDOF, 7))
_D[3:, :] = np.eye(7)


def _contact_jacobian(model, links, contact):
    return _point_jacobian_from_links(links, f"foot_{contact.side[0]}",
                                      contact.point_local)


def solve_ssp(model: HumanModel, state: GeneralizedState,
              hri=()) -> DynamicsSolution:
    """Square single-support solve for [tau; F_contact].

    hri carries the known human-robot interaction wrenches; they are moved
    to the right-hand side through their own Jacobians by the sweep.
    """
    contact_state = detect_contact(model, state.q)
    if contact_state.phase is Phase.DSP:
        raise PhaseError("solve_ssp called on a double-support state")
    contact = contact_state.contacts[0]
    links = forward_kinematics(model, state)
    jac = _contact_jacobian(model, links, contact)
    a = np.hstack([_D, jac.T])
    b = rnea(model, state, ext=hri)
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"contact system singular: {exc}") from exc
    residual = float(np.linalg.norm(a @ x - b))
    if not np.all(np.isfinite(x)) or residual > 1e-9 * (1 + np.linalg.norm(b)):
        raise SingularityError("contact system ill-conditioned")
    load = ContactLoad(contact.side, contact.point, contact.point_local, x[7:])
    return DynamicsSolution(x[:7], (load,), residual, contact_state.phase)


def solve_dsp(model: HumanModel, state: GeneralizedState) -> DynamicsSolution:
    """Minimum-norm double-support solve for [tau; F_left; F_right]."""
    contact_state = detect_contact(model, state.q)
    if contact_state.phase is not Phase.DSP:
        raise PhaseError("solve_dsp called on a single-support state")
    left = contact_state.contact_for("left")
    right = contact_state.contact_for("right")
    links = forward_kinematics(model, state)
    a = np.hstack([_D,
                   _contact_jacobian(model, links, left).T,
                   _contact_jacobian(model, links, right).T])
    b = rnea(model, state)
    x, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < NDOF:
        raise SingularityError(f"double-support system rank {rank} < {NDOF}")
    residual = float(np.linalg.norm(a @ x - b))
    if residual > 1e-9 * (1 + np.linalg.norm(b)):
        raise SingularityError("double-support system ill-conditioned")
    loads = (ContactLoad("left", left.point, left.point_local, x[7:10]),
             ContactLoad("right", right.point, right.point_local, x[10:13]))
    return DynamicsSolution(x[:7], loads, residual, Phase.DSP)


# ---------------------------------------------------------------------------
# explicit Newton back-substitution


@dataclass(frozen=True)
class JointLoads:
    """Per-joint reaction force and torque, each as (F_x, F_z, T).

    Forces/torques are those the parent link applies to the child at the
    joint.  `pelvis` holds the virtual floating-base loads, which vanish
    for any solution consistent with the equations of motion.
    """

    ankle_r: np.ndarray
    knee_r: np.ndarray
    hip_r: np.ndarray
    ankle_l: np.ndarray
    knee_l: np.ndarray
    hip_l: np.ndarray
    trunk: np.ndarray
    pelvis: np.ndarray


def _cross2(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _link_balance(model, links, name, child_loads, ext_list):
    """Solve one link's Newton equations for the proximal joint load.

    child_loads: (point, force, torque) this link applies to each child;
    ext_list: (point, force, torque) external wrenches on this link.
    Returns (F, T) applied by the parent at the link's proximal joint.
    """
    kin = links[name]
    body = model.body(name)
    grav = np.array([0.0, -model.gravity * body.mass])
    force = body.mass * kin.cog_acc - grav
    torque = body.inertia_cog * kin.alpha
    for point, f_ext, t_ext in ext_list:
        force -= f_ext
        torque -= _cross2(point - kin.cog, f_ext) + t_ext
    for point, f_child, t_child in child_loads:
        force += f_child
        torque += _cross2(point - kin.cog, f_child) + t_child
    torque -= _cross2(kin.origin - kin.cog, force)
    return force, torque


def _newton_chain(model, state, ext=()) -> JointLoads:
    links = forward_kinematics(model, state)
    ext_by_link = {}
    for force in ext:
        point = links[force.body].world_point(force.point)
        ext_by_link.setdefault(force.body, []).append(
            (point, force.wrench[0:2], force.wrench[2]))

    loads = {}
    for side in ("r", "l"):
        f_a, t_a = _link_balance(model, links, f"foot_{side}", [],
                                 ext_by_link.get(f"foot_{side}", []))
        ankle = links[f"foot_{side}"].origin
        f_k, t_k = _link_balance(model, links, f"shank_{side}",
                                 [(ankle, f_a, t_a)],
                                 ext_by_link.get(f"shank_{side}", []))
        knee = links[f"shank_{side}"].origin
        f_h, t_h = _link_balance(model, links, f"thigh_{side}",
                                 [(knee, f_k, t_k)],
                                 ext_by_link.get(f"thigh_{side}", []))
        loads[f"ankle_{side}"] = np.array([*f_a, t_a])
        loads[f"knee_{side}"] = np.array([*f_k, t_k])
        loads[f"hip_{side}"] = np.array([*f_h, t_h])

    f_t, t_t = _link_balance(model, links, "trunk", [],
                             ext_by_link.get("trunk", []))
    loads["trunk"] = np.array([*f_t, t_t])

    children = [(links["trunk"].origin, f_t, t_t)]
    for side in ("r", "l"):
        children.append((links[f"thigh_{side}"].origin,
                         loads[f"hip_{side}"][0:2], loads[f"hip_{side}"][2]))
    f_p, t_p = _link_balance(model, links, "pelvis", children,
                             ext_by_link.get("pelvis", []))
    loads["pelvis"] = np.array([*f_p, t_p])
    return JointLoads(**loads)


def joint_loads(model: HumanModel, state: GeneralizedState,
                solution: DynamicsSolution, hri=()) -> JointLoads:
    """Distal-to-proximal joint reactions for a solved support phase."""
    ext = list(hri) + [c.as_external_force() for c in solution.contacts]
    return _newton_chain(model, state, ext)


def newton_generalized_forces(model: HumanModel, state: GeneralizedState,
                              ext=()):
    """The 10 generalized forces assembled from the planar Newton chain."""
    loads = _newton_chain(model, state, ext)
    return np.array([
        loads.pelvis[0], loads.pelvis[1], loads.pelvis[2],
        loads.trunk[2],
        loads.hip_r[2], loads.knee_r[2], loads.ankle_r[2],
        loads.hip_l[2], loads.knee_l[2], loads.ankle_l[2],
    ])


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class VerificationReport:
    errors: np.ndarray      # (n_samples, 10) absolute discrepancies
    max_error: float

    def to_table(self):
        out = io.StringIO()
        names = ",".join(f"err_{n}" for n in COORD_INDEX)
        out.write(f"sample,{names},max_error\n")
        for i, row in enumerate(self.errors):
            cells = ",".join(f"{v:.6e}" for v in row)
            out.write(f"{i},{cells},{np.max(row):.6e}\n")
        return out.getvalue()


def random_states(model, samples, seed, rng=None):
    """Bounded random joint states for verification sweeps."""
    rng = np.random.default_rng(seed) if rng is None else rng
    states = []
    for _ in range(samples):
        q = np.empty(NDOF)
        q[0] = rng.uniform(-0.5, 0.5)
        q[1] = rng.uniform(0.7, 1.0)
        q[2:] = rng.uniform(-0.8, 0.8, NDOF - 2)
        states.append(GeneralizedState(GeneralizedCoordinates(q),
                                       rng.uniform(-2.0, 2.0, NDOF),
                                       rng.uniform(-5.0, 5.0, NDOF)))
    return states


def verify_newton_vs_rnea(model: HumanModel, samples=100, seed=1,
                          states=None, with_external=False) -> VerificationReport:
    """Compare the planar Newton assembly against the spatial sweep."""
    rng = np.random.default_rng(seed)
    if states is None:
        states = random_states(model, samples, seed=None, rng=rng)
    errors = np.empty((len(states), NDOF))
    for i, state in enumerate(states):
        ext = ()
        if with_external:
            ext = (ExternalForce("foot_l", rng.uniform(-0.1, 0.1, 2),
                                 rng.uniform(-50, 50, 3)),
                   ExternalForce("trunk", rng.uniform(-0.1, 0.1, 2),
                                 rng.uniform(-50, 50, 3)))
        q_newton = newton_generalized_forces(model, state, ext)
        q_rnea = rnea(model, state, ext)
        errors[i] = np.abs(q_newton - q_rnea)
    return VerificationReport(errors, float(np.max(errors)))
