"""Sagittal-plane human model: an 8-link, 10-DoF kinematic tree
(floating pelvis, trunk, and thigh/shank/foot per leg).

Frame conventions:
  * world x forward, z up; angles counterclockwise-positive in the x-z plane;
  * a link hanging at absolute angle phi points along (sin phi, -cos phi),
    so phi = 0 is straight down and positive phi swings forward;
  * absolute link angles are sums of the coordinates along the chain
    (foot angle = q_p + q_h + q_k + q_a, trunk angle = q_p + q_t);
  * hips sit at +/- hip_offset along the pelvis bar (right hip at +x),
    the trunk is mounted at the pelvis center and points up at zero angles.

Generalized coordinate ordering (10 entries):
  [x_p, z_p, q_p, q_t, q_hR, q_kR, q_aR, q_hL, q_kL, q_aL]
"""

import enum
from dataclasses import dataclass, replace

import numpy as np

from .config import read_config

COORD_NAMES = ("x_p", "z_p", "q_p", "q_t",
               "q_hR", "q_kR", "q_aR", "q_hL", "q_kL", "q_aL")
COORD_INDEX = {name: i for i, name in enumerate(COORD_NAMES)}
NDOF = 10

LINK_NAMES = ("pelvis", "trunk",
              "thigh_r", "shank_r", "foot_r",
              "thigh_l", "shank_l", "foot_l")

# torque vector ordering used by the dynamics solvers:
# [tau_T, tau_HR, tau_KR, tau_AR, tau_HL, tau_KL, tau_AL]
TAU_NAMES = ("tau_T", "tau_HR", "tau_KR", "tau_AR", "tau_HL", "tau_KL", "tau_AL")

DSP_TOLERANCE = 1e-3  # [m] height gap below which both feet count as grounded


class ModelError(ValueError):
    """Invalid model parameters or state."""


def rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rot_d(theta):
    """d/dtheta of rot(theta)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[-s, -c], [c, -s]])


def perp(v):
    """90 deg counterclockwise rotation of a planar vector."""
    return np.array([-v[1], v[0]])


@dataclass(frozen=True)
class GeneralizedCoordinates:
    """The 10 configuration variables, ordered as COORD_NAMES."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(NDOF)
        if not np.all(np.isfinite(v)):
            raise ModelError(f"non-finite generalized coordinates: {v}")
        object.__setattr__(self, "values", v)

    def __getattr__(self, name):
        try:
            return self.values[COORD_INDEX[name]]
        except KeyError:
            raise AttributeError(name) from None

    @classmethod
    def from_named(cls, **kw):
        v = np.zeros(NDOF)
        for name, val in kw.items():
            if name not in COORD_INDEX:
                raise ModelError(f"unknown coordinate {name!r}")
            v[COORD_INDEX[name]] = val
        return cls(v)


@dataclass(frozen=True)
class GeneralizedState:
    """Configuration plus its first two time derivatives."""

    q: GeneralizedCoordinates
    qdot: np.ndarray
    qddot: np.ndarray

    def __post_init__(self):
        if not isinstance(self.q, GeneralizedCoordinates):
            object.__setattr__(self, "q", GeneralizedCoordinates(self.q))
        for name in ("qdot", "qddot"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(NDOF)
            if not np.all(np.isfinite(v)):
                raise ModelError(f"non-finite {name}: {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def static(cls, q):
        return cls(q, np.zeros(NDOF), np.zeros(NDOF))


@dataclass(frozen=True)
class BodyParams:
    """Planar rigid-link parameters.

    com_distance is measured from the link's proximal joint along the link
    axis (for the foot: along the ankle-to-toe line; for the pelvis: from
    the left hip along the bar).  inertia_cog is the scalar inertia about
    the CoG for rotations in the sagittal plane.
    """

    mass: float
    length: float
    com_distance: float
    inertia_cog: float

    def __post_init__(self):
        if not self.mass > 0:
            raise ModelError(f"mass must be positive, got {self.mass}")
        if not 0.0 <= self.com_distance <= self.length:
            raise ModelError(
                f"com_distance {self.com_distance} outside [0, {self.length}]")
        if self.inertia_cog < 0:
            raise ModelError("inertia_cog must be non-negative")

    @classmethod
    def rod(cls, mass, length, com_distance=None, inertia_cog=None):
        """Uniform slender rod defaults: CoG at mid-length, I = m L^2 / 12."""
        if com_distance is None:
            com_distance = 0.5 * length
        if inertia_cog is None:
            inertia_cog = mass * length ** 2 / 12.0
        return cls(mass, length, com_distance, inertia_cog)


@dataclass(frozen=True)
class HumanModel:
    pelvis: BodyParams
    trunk: BodyParams
    thigh_r: BodyParams
    shank_r: BodyParams
    foot_r: BodyParams
    thigh_l: BodyParams
    shank_l: BodyParams
    foot_l: BodyParams
    ankle_height: float = 0.10
    gravity: float = 9.81
    hip_offset: float = 0.085   # pelvis center to each hip, along the bar
    heel_back: float = 0.0625   # ankle to heel, along the sole

    @property
    def foot_length(self):
        return self.foot_r.length

    @property
    def total_mass(self):
        return (self.pelvis.mass + self.trunk.mass
                + self.thigh_r.mass + self.shank_r.mass + self.foot_r.mass
                + self.thigh_l.mass + self.shank_l.mass + self.foot_l.mass)

    @property
    def weight(self):
        return self.total_mass * self.gravity

    def body(self, name) -> BodyParams:
        return getattr(self, name)

    def heel_local(self, side):
        return np.array([-self.heel_back, -self.ankle_height])

    def toe_local(self, side):
        foot = self.body(f"foot_{side[0]}")
        return np.array([foot.length - self.heel_back, -self.ankle_height])

    def foot_cog_local(self, side):
        """Foot CoG at com_distance along the ankle-to-toe line."""
        foot = self.body(f"foot_{side[0]}")
        toe = self.toe_local(side)
        return foot.com_distance * toe / np.linalg.norm(toe)

    def cog_local(self, name):
        """Link CoG in link-local coordinates (origin at the proximal joint)."""
        body = self.body(name)
        if name == "pelvis":
            return np.array([body.com_distance - 0.5 * body.length, 0.0])
        if name == "trunk":
            return np.array([0.0, body.com_distance])
        if name.startswith("foot"):
            return self.foot_cog_local("right" if name.endswith("r") else "left")
        return np.array([0.0, -body.com_distance])  # thighs and shanks hang down


def _default_bodies():
    # masses [kg] and lengths [m]: foot 1.56/0.25, shank 3.7/0.40,
    # thigh 9.3/0.40, pelvis 11.78/0.17, trunk 34.24/0.60
    return {
        "pelvis": BodyParams.rod(11.78, 0.17),
        "trunk": BodyParams.rod(34.24, 0.60),
        "thigh": BodyParams.rod(9.3, 0.40),
        "shank": BodyParams.rod(3.7, 0.40),
        "foot": BodyParams.rod(1.56, 0.25),
    }


def build_default_human() -> HumanModel:
    """Standard adult model (75.14 kg total) with symmetric legs."""
    b = _default_bodies()
    return HumanModel(
        pelvis=b["pelvis"], trunk=b["trunk"],
        thigh_r=b["thigh"], shank_r=b["shank"], foot_r=b["foot"],
        thigh_l=b["thigh"], shank_l=b["shank"], foot_l=b["foot"])


_CONFIG_BODIES = ("pelvis", "trunk", "thigh", "shank", "foot")
_CONFIG_SCALARS = ("gravity", "ankle_height", "hip_offset", "heel_back")


def human_from_config(path) -> HumanModel:
    """Build a model from a key=value file; unset keys fall back to defaults.

    Recognized keys: `{body}_mass|_length|_com|_inertia` for body in
    pelvis/trunk/thigh/shank/foot (legs stay symmetric), plus gravity,
    ankle_height, hip_offset and heel_back.
    """
    cfg = read_config(path)
    known = set(_CONFIG_SCALARS)
    bodies = {}
    for name in _CONFIG_BODIES:
        base = _default_bodies()[name]
        mass = cfg.get(f"{name}_mass", base.mass)
        length = cfg.get(f"{name}_length", base.length)
        com = cfg.get(f"{name}_com", None)
        inertia = cfg.get(f"{name}_inertia", None)
        bodies[name] = BodyParams.rod(mass, length, com, inertia)
        known |= {f"{name}_mass", f"{name}_length", f"{name}_com", f"{name}_inertia"}
    unknown = set(cfg) - known
    if unknown:
        raise ModelError(f"unknown human config keys: {sorted(unknown)}")
    model = HumanModel(
        pelvis=bodies["pelvis"], trunk=bodies["trunk"],
        thigh_r=bodies["thigh"], shank_r=bodies["shank"], foot_r=bodies["foot"],
        thigh_l=bodies["thigh"], shank_l=bodies["shank"], foot_l=bodies["foot"])
    overrides = {k: cfg[k] for k in _CONFIG_SCALARS if k in cfg}
    return replace(model, **overrides) if overrides else model


def standing_state(model: HumanModel, x_p=0.0) -> GeneralizedState:
    """Zero-angle standing posture with both soles on the ground."""
    z_p = model.thigh_r.length + model.shank_r.length + model.ankle_height
    return GeneralizedState.static(
        GeneralizedCoordinates.from_named(x_p=x_p, z_p=z_p))


# ---------------------------------------------------------------------------
# forward kinematics


@dataclass(frozen=True)
class LinkKin:
    """Pose and motion of one link: proximal-joint origin, absolute angle,
    and CoG kinematics."""

    origin: np.ndarray
    origin_vel: np.ndarray
    origin_acc: np.ndarray
    angle: float
    omega: float
    alpha: float
    cog: np.ndarray
    cog_vel: np.ndarray
    cog_acc: np.ndarray

    def point(self, local):
        """World position/velocity/acceleration of a link-fixed point."""
        local = np.asarray(local, dtype=float)
        off = rot(self.angle) @ local
        d_off = rot_d(self.angle) @ local
        pos = self.origin + off
        vel = self.origin_vel + self.omega * d_off
        acc = self.origin_acc + self.alpha * d_off - self.omega ** 2 * off
        return pos, vel, acc

    def world_point(self, local):
        return self.origin + rot(self.angle) @ np.asarray(local, dtype=float)


@dataclass(frozen=True)
class LinkStates:
    links: dict

    def __getitem__(self, name) -> LinkKin:
        return self.links[name]

    def __iter__(self):
        return iter(self.links)

    def items(self):
        return self.links.items()


def _make_link(origin_kin, angle, omega, alpha, cog_local):
    origin, origin_vel, origin_acc = origin_kin
    stub = LinkKin(origin, origin_vel, origin_acc, angle, omega, alpha,
                   origin, origin_vel, origin_acc)
    cog, cog_vel, cog_acc = stub.point(cog_local)
    return LinkKin(origin, origin_vel, origin_acc, angle, omega, alpha,
                   cog, cog_vel, cog_acc)


def forward_kinematics(model: HumanModel, state: GeneralizedState) -> LinkStates:
    """Poses, CoG positions and their first two derivatives for all 8 links."""
    q, qd, qdd = state.q.values, state.qdot, state.qddot
    links = {}

    pelvis_kin = (q[0:2].copy(), qd[0:2].copy(), qdd[0:2].copy())
    links["pelvis"] = _make_link(pelvis_kin, q[2], qd[2], qdd[2],
                                 model.cog_local("pelvis"))
    pelvis = links["pelvis"]

    links["trunk"] = _make_link(pelvis.point(np.zeros(2)),
                                q[2] + q[3], qd[2] + qd[3], qdd[2] + qdd[3],
                                model.cog_local("trunk"))

    for side, sgn, (ih, ik, ia) in (("r", +1.0, (4, 5, 6)),
                                    ("l", -1.0, (7, 8, 9))):
        hip_kin = pelvis.point(np.array([sgn * model.hip_offset, 0.0]))
        thigh = _make_link(hip_kin,
                           q[2] + q[ih], qd[2] + qd[ih], qdd[2] + qdd[ih],
                           model.cog_local(f"thigh_{side}"))
        knee_kin = thigh.point(np.array([0.0, -model.body(f"thigh_{side}").length]))
        shank = _make_link(knee_kin,
                           thigh.angle + q[ik], thigh.omega + qd[ik],
                           thigh.alpha + qdd[ik],
                           model.cog_local(f"shank_{side}"))
        ankle_kin = shank.point(np.array([0.0, -model.body(f"shank_{side}").length]))
        foot = _make_link(ankle_kin,
                          shank.angle + q[ia], shank.omega + qd[ia],
                          shank.alpha + qdd[ia],
                          model.cog_local(f"foot_{side}"))
        links[f"thigh_{side}"] = thigh
        links[f"shank_{side}"] = shank
        links[f"foot_{side}"] = foot

    return LinkStates(links)


# ---------------------------------------------------------------------------
# contact detection


class Phase(enum.Enum):
    SSP_LEFT = "SSP_LEFT"
    SSP_RIGHT = "SSP_RIGHT"
    DSP = "DSP"


@dataclass(frozen=True)
class FootContact:
    side: str                 # "left" | "right"
    point: np.ndarray         # world (x, z)
    point_local: np.ndarray   # foot-frame (x, z)
    l_contact: float          # distance ankle -> contact point
    theta_contact: float      # polar offset so that the point sits at
                              # ankle + l * dir(foot_angle - theta_contact)


@dataclass(frozen=True)
class ContactState:
    phase: Phase
    contacts: tuple

    @property
    def stance_side(self):
        if self.phase is Phase.DSP:
            raise ModelError("stance_side undefined in DSP")
        return self.contacts[0].side

    def contact_for(self, side) -> FootContact:
        for c in self.contacts:
            if c.side == side:
                return c
        raise KeyError(side)


def _foot_candidate(model, links, side):
    """Lower of heel/toe for one foot (heel wins ties)."""
    foot = links[f"foot_{side[0]}"]
    heel_local, toe_local = model.heel_local(side), model.toe_local(side)
    heel = foot.world_point(heel_local)
    toe = foot.world_point(toe_local)
    if toe[1] < heel[1]:
        local, point = toe_local, toe
    else:
        local, point = heel_local, heel
    l_contact = float(np.linalg.norm(local))
    theta_contact = float(np.arctan2(-local[0], -local[1]))
    return FootContact(side, point, np.asarray(local, dtype=float),
                       l_contact, theta_contact)


def detect_contact(model: HumanModel, q: GeneralizedCoordinates,
                   eps_dsp=DSP_TOLERANCE) -> ContactState:
    """Pick the grounded foot (or both) from the heel/toe height candidates."""
    links = forward_kinematics(model, GeneralizedState.static(q))
    left = _foot_candidate(model, links, "left")
    right = _foot_candidate(model, links, "right")
    gap = left.point[1] - right.point[1]
    if abs(gap) <= eps_dsp:
        return ContactState(Phase.DSP, (left, right))
    if gap < 0:
        return ContactState(Phase.SSP_LEFT, (left,))
    return ContactState(Phase.SSP_RIGHT, (right,))


# ---------------------------------------------------------------------------
# jacobians

# chain of (coordinate index, link whose origin anchors that rotation)
_CHAINS = {
    "pelvis": (("q_p", "pelvis"),),
    "trunk": (("q_p", "pelvis"), ("q_t", "trunk")),
    "thigh_r": (("q_p", "pelvis"), ("q_hR", "thigh_r")),
    "shank_r": (("q_p", "pelvis"), ("q_hR", "thigh_r"), ("q_kR", "shank_r")),
    "foot_r": (("q_p", "pelvis"), ("q_hR", "thigh_r"), ("q_kR", "shank_r"),
               ("q_aR", "foot_r")),
    "thigh_l": (("q_p", "pelvis"), ("q_hL", "thigh_l")),
    "shank_l": (("q_p", "pelvis"), ("q_hL", "thigh_l"), ("q_kL", "shank_l")),
    "foot_l": (("q_p", "pelvis"), ("q_hL", "thigh_l"), ("q_kL", "shank_l"),
               ("q_aL", "foot_l")),
}


def _point_jacobian_from_links(links, body, local):
    """3x10 map from qdot to (xdot, zdot, thetadot) of a body-fixed point."""
    p = links[body].world_point(local)
    jac = np.zeros((3, NDOF))
    jac[0, 0] = 1.0
    jac[1, 1] = 1.0
    for coord, anchor_link in _CHAINS[body]:
        idx = COORD_INDEX[coord]
        jac[0:2, idx] = perp(p - links[anchor_link].origin)
        jac[2, idx] = 1.0
    return jac


def point_jacobian(model: HumanModel, q: GeneralizedCoordinates, body, point,
                   qdot=None):
    """Jacobian of a body-fixed point; with qdot also its time derivative.

    The transpose maps a planar wrench (F_x, F_z, M) applied at the point
    into generalized forces.
    """
    if body not in _CHAINS:
        raise ModelError(f"unknown body {body!r}")
    local = np.asarray(point, dtype=float).reshape(2)
    state = GeneralizedState(q, np.zeros(NDOF) if qdot is None else qdot,
                             np.zeros(NDOF))
    links = forward_kinematics(model, state)
    jac = _point_jacobian_from_links(links, body, local)
    if qdot is None:
        return jac
    _, pv, _ = links[body].point(local)
    jdot = np.zeros((3, NDOF))
    for coord, anchor_link in _CHAINS[body]:
        idx = COORD_INDEX[coord]
        jdot[0:2, idx] = perp(pv - links[anchor_link].origin_vel)
    return jac, jdot


@dataclass(frozen=True)
class CogState:
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    jacobian: np.ndarray  # 2 x 10


def cog(model: HumanModel, state: GeneralizedState) -> CogState:
    """Whole-body CoG kinematics and its mass-weighted Jacobian."""
    links = forward_kinematics(model, state)
    total = model.total_mass
    pos = np.zeros(2)
    vel = np.zeros(2)
    acc = np.zeros(2)
    jac = np.zeros((2, NDOF))
    for name in LINK_NAMES:
        m = model.body(name).mass
        kin = links[name]
        pos += m * kin.cog
        vel += m * kin.cog_vel
        acc += m * kin.cog_acc
        jac += m * _point_jacobian_from_links(links, name,
                                              model.cog_local(name))[0:2]
    return CogState(pos / total, vel / total, acc / total, jac / total)
