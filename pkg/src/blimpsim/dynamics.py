"""Six-DoF rigid-body dynamics of the buoyant glider with a moving mass.

Frames: inertial x-forward / y-right / z-down; body frame at the center of
buoyancy with the same axis convention. Attitude is roll-pitch-yaw Euler
angles, rotation matrices map body to inertial. All quantities SI.

The same discrete-time step is used by the ground-truth simulator, the
moving-horizon estimator and the predictive controller; a numba-compiled
twin of this module lives in kernels.py and is cross-checked in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .continuum import ContinuumGeometry, DeflectionParams, mass_position_components
from .units import GF_TO_N, G_STANDARD

# Euler kinematics are singular at |pitch| = pi/2; keep this margin [rad].
PITCH_MARGIN = 1e-3

# Below this airspeed [m/s] the aerodynamic wrench is zeroed ("no flow").
EPS_AIRSPEED = 1e-3

E_X = np.array([1.0, 0.0, 0.0])
E_Y = np.array([0.0, 1.0, 0.0])
E_Z = np.array([0.0, 0.0, 1.0])


class EulerSingularity(ValueError):
    """Pitch too close to +-pi/2 for the Euler kinematic map."""


@dataclass
class State:
    """Pose, attitude and body-frame velocities."""

    p: np.ndarray  # inertial position [m]
    e: np.ndarray  # roll, pitch, yaw [rad]
    v_b: np.ndarray  # body-frame translational velocity [m/s]
    w_b: np.ndarray  # body-frame angular velocity [rad/s]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.e, self.v_b, self.w_b])

    @staticmethod
    def from_vector(x: np.ndarray) -> "State":
        x = np.asarray(x, dtype=float)
        return State(x[0:3].copy(), x[3:6].copy(), x[6:9].copy(), x[9:12].copy())

    @staticmethod
    def zero() -> "State":
        return State(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))


@dataclass
class ControlInput:
    """Thrust [N] and moving-mass deflection parameters [m]."""

    thrust: float
    delta: DeflectionParams

    def as_vector(self) -> np.ndarray:
        return np.array([self.thrust, self.delta.dx, self.delta.dy])

    @staticmethod
    def from_vector(u: np.ndarray) -> "ControlInput":
        return ControlInput(float(u[0]), DeflectionParams(float(u[1]), float(u[2])))


@dataclass(frozen=True)
class InertialParams:
    """Masses, buoyancy, inertia and geometry of the rigid body."""

    m: float  # stationary mass [kg]
    m_bar: float  # moving mass [kg]
    buoyancy: float  # buoyant force [N]
    g: float  # gravitational acceleration [m/s^2]
    inertia: np.ndarray  # 3x3 stationary-body inertia about the CB [kg m^2]
    r_stat: np.ndarray  # stationary-body CoM offset from the CB [m]
    rho: float  # air density [kg/m^3]
    area: float  # aerodynamic reference area [m^2]

    def __post_init__(self):
        if self.m <= 0.0 or self.m_bar <= 0.0:
            raise ValueError("masses must be > 0")
        if self.buoyancy <= 0.0:
            raise ValueError("buoyancy must be > 0")
        I = np.asarray(self.inertia, dtype=float)
        if I.shape != (3, 3) or not np.allclose(I, I.T, atol=1e-12):
            raise ValueError("inertia must be a symmetric 3x3 matrix")
        if np.any(np.linalg.eigvalsh(I) <= 0.0):
            raise ValueError("inertia must be positive definite")

    @property
    def total_mass(self) -> float:
        return self.m + self.m_bar

    def net_weight_gf(self) -> float:
        """Net weight (weight minus buoyancy) expressed in gram-force."""
        return (self.total_mass * self.g - self.buoyancy) / GF_TO_N


@dataclass(frozen=True)
class AeroModel:
    """Aerodynamic coefficients as affine functions of flow angles.

    C_D = c_d0 + c_da2*alpha^2 + c_db2*beta^2      (drag, >= 0)
    C_S = c_s0 + c_sb*beta                          (side force)
    C_L = c_l0 + c_la*alpha                         (lift)
    C_Tx = c_txb*beta                               (roll moment)
    C_Ty = c_ty0 + c_tya*alpha                      (pitch moment)
    C_Tz = c_tz0 + c_tzb*beta                       (yaw moment)

    The constant side/yaw terms default to zero; nonzero values model the
    small machining asymmetries of a physical prototype. k_damp are
    angular-rate damping gains (negative for damping) applied in the body
    frame after the flow-to-body rotation.
    """

    c_d0: float = 0.8
    c_da2: float = 2.0
    c_db2: float = 1.5
    c_s0: float = 0.0
    c_sb: float = -0.15
    c_l0: float = 0.2
    c_la: float = 4.0
    c_txb: float = 0.0
    c_ty0: float = 0.17
    c_tya: float = -2.0
    c_tz0: float = 0.0
    c_tzb: float = 0.12
    k_damp: tuple = (-0.010, -0.030, -0.008)

    def coefficients(self, alpha: float, beta: float):
        c_d = self.c_d0 + self.c_da2 * alpha * alpha + self.c_db2 * beta * beta
        c_s = self.c_s0 + self.c_sb * beta
        c_l = self.c_l0 + self.c_la * alpha
        c_tx = self.c_txb * beta
        c_ty = self.c_ty0 + self.c_tya * alpha
        c_tz = self.c_tz0 + self.c_tzb * beta
        return c_d, c_s, c_l, c_tx, c_ty, c_tz


@dataclass(frozen=True)
class PlantModel:
    """Complete plant: inertial parameters, aero model and arm geometry."""

    inertial: InertialParams
    aero: AeroModel
    geometry: ContinuumGeometry

    def pack(self) -> np.ndarray:
        """Flatten to the parameter vector consumed by the numba kernels."""
        p = self.inertial
        a = self.aero
        g = self.geometry
        return np.array([
            p.m, p.m_bar, p.buoyancy, p.g,
            p.r_stat[0], p.r_stat[1], p.r_stat[2],
            *np.asarray(p.inertia, dtype=float).ravel(),
            p.rho, p.area,
            g.backbone_length, g.cable_offset, g.base_offset,
            a.c_d0, a.c_da2, a.c_db2, a.c_s0, a.c_sb, a.c_l0, a.c_la,
            a.c_txb, a.c_ty0, a.c_tya, a.c_tz0, a.c_tzb,
            a.k_damp[0], a.k_damp[1], a.k_damp[2],
        ], dtype=float)


def default_plant() -> PlantModel:
    """Plant with the prototype masses and documented assumption defaults."""
    inertial = InertialParams(
        m=0.1087,
        m_bar=0.0922,
        buoyancy=194.2 * GF_TO_N,
        g=G_STANDARD,
        inertia=np.diag([0.008, 0.009, 0.006]),
        r_stat=np.zeros(3),
        rho=1.225,
        area=0.2,
    )
    geometry = ContinuumGeometry(backbone_length=0.22, cable_offset=0.0406,
                                 base_offset=0.05)
    return PlantModel(inertial=inertial, aero=AeroModel(), geometry=geometry)


# ---------------------------------------------------------------------------
# Kinematics
# ---------------------------------------------------------------------------

def rotation_matrix(e: np.ndarray) -> np.ndarray:
    """Body-to-inertial rotation for roll-pitch-yaw (ZYX) Euler angles."""
    cph, sph = math.cos(e[0]), math.sin(e[0])
    cth, sth = math.cos(e[1]), math.sin(e[1])
    cps, sps = math.cos(e[2]), math.sin(e[2])
    return np.array([
        [cps * cth, cps * sth * sph - sps * cph, cps * sth * cph + sps * sph],
        [sps * cth, sps * sth * sph + cps * cph, sps * sth * cph - cps * sph],
        [-sth, cth * sph, cth * cph],
    ])


def euler_rate_matrix(e: np.ndarray) -> np.ndarray:
    """Map W(e) with e_dot = W(e) @ w_b; raises near the pitch singularity."""
    if abs(e[1]) >= math.pi / 2.0 - PITCH_MARGIN:
        raise EulerSingularity(f"pitch {e[1]:.4f} rad within margin of +-pi/2")
    cph, sph = math.cos(e[0]), math.sin(e[0])
    cth, tth = math.cos(e[1]), math.tan(e[1])
    return np.array([
        [1.0, sph * tth, cph * tth],
        [0.0, cph, -sph],
        [0.0, sph / cth, cph / cth],
    ])


def relative_velocity(state: State, wind: np.ndarray) -> np.ndarray:
    """Body-frame air-relative velocity v_b - R^T v_w."""
    R = rotation_matrix(state.e)
    return state.v_b - R.T @ np.asarray(wind, dtype=float)


def aero_angles(v_a: np.ndarray) -> tuple[float, float, float]:
    """Angle of attack, sideslip and airspeed from the relative velocity.

    Below EPS_AIRSPEED returns (0, 0, 0): the no-flow flag that makes the
    aerodynamic wrench vanish smoothly at hover.
    """
    V = float(np.linalg.norm(v_a))
    if V <= EPS_AIRSPEED:
        return 0.0, 0.0, 0.0
    alpha = math.atan2(v_a[2], v_a[0])
    beta = math.asin(min(1.0, max(-1.0, v_a[1] / V)))
    return alpha, beta, V


def flow_to_body(alpha: float, beta: float) -> np.ndarray:
    """Rotation R_y(-alpha) @ R_z(beta) from the flow frame to the body."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array([
        [ca * cb, -ca * sb, -sa],
        [sb, cb, 0.0],
        [sa * cb, -sa * sb, ca],
    ])


def aero_wrench(alpha: float, beta: float, V: float, w_b: np.ndarray,
                model: AeroModel, rho: float, area: float):
    """Aerodynamic force and torque in the body frame.

    Forces (-drag, side, -lift) and flow-frame moments scale with the
    dynamic pressure; the rate-damping term diag(k_damp) @ w_b is added in
    the body frame after the flow-to-body rotation.
    """
    damping = np.asarray(model.k_damp) * np.asarray(w_b, dtype=float)
    if V <= 0.0:
        return np.zeros(3), damping.copy()
    c_d, c_s, c_l, c_tx, c_ty, c_tz = model.coefficients(alpha, beta)
    q_dyn = 0.5 * rho * V * V * area
    R_vb = flow_to_body(alpha, beta)
    force = R_vb @ np.array([-q_dyn * c_d, q_dyn * c_s, -q_dyn * c_l])
    torque = R_vb @ np.array([q_dyn * c_tx, q_dyn * c_ty, q_dyn * c_tz]) + damping
    return force, torque


# ---------------------------------------------------------------------------
# Mass properties
# ---------------------------------------------------------------------------

def mass_position(q: DeflectionParams, geometry: ContinuumGeometry) -> np.ndarray:
    """Body-frame position of the moving mass (arc-angle unvalidated)."""
    return np.array(mass_position_components(
        q.dx, q.dy, geometry.backbone_length, geometry.cable_offset,
        geometry.base_offset))


def total_com(q: DeflectionParams, plant: PlantModel) -> np.ndarray:
    """First moment of mass l_g = m r_stat + m_bar r_bar(q)."""
    p = plant.inertial
    return p.m * p.r_stat + p.m_bar * mass_position(q, plant.geometry)


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def coupled_inertia(q: DeflectionParams, plant: PlantModel) -> np.ndarray:
    """Rotational block I - m_bar (r_bar x)^2 of the mass matrix."""
    p = plant.inertial
    r = mass_position(q, plant.geometry)
    S = _skew(r)
    return np.asarray(p.inertia, dtype=float) - p.m_bar * (S @ S)


def mass_matrix(q: DeflectionParams, plant: PlantModel) -> np.ndarray:
    """6x6 generalized mass matrix; symmetric by construction.

    Raises ValueError when not positive definite, which indicates invalid
    inertial parameters.
    """
    p = plant.inertial
    lg = total_com(q, plant)
    S = _skew(lg)
    M = np.zeros((6, 6))
    M[0:3, 0:3] = p.total_mass * np.eye(3)
    M[0:3, 3:6] = -S
    M[3:6, 0:3] = S
    M[3:6, 3:6] = coupled_inertia(q, plant)
    if np.any(np.linalg.eigvalsh(M) <= 0.0):
        raise ValueError("mass matrix is not positive definite")
    return M


# ---------------------------------------------------------------------------
# Forces and equations of motion
# ---------------------------------------------------------------------------

def generalized_forces(state: State, u: ControlInput, wind: np.ndarray,
                       plant: PlantModel):
    """Right-hand side force and torque of the momentum balance."""
    p = plant.inertial
    v, w = state.v_b, state.w_b
    R = rotation_matrix(state.e)
    down_b = R.T @ E_Z  # unit "down" expressed in the body frame

    r_bar = mass_position(u.delta, plant.geometry)
    lg = p.m * p.r_stat + p.m_bar * r_bar

    v_a = v - R.T @ np.asarray(wind, dtype=float)
    alpha, beta, V = aero_angles(v_a)
    f_aero, t_aero = aero_wrench(alpha, beta, V, w, plant.aero, p.rho, p.area)

    f = (p.total_mass * np.cross(v, w)
         + np.cross(np.cross(w, lg), w)
         + (p.total_mass * p.g - p.buoyancy) * down_b
         + f_aero
         + u.thrust * E_X)

    J = coupled_inertia(u.delta, plant)
    t = (np.cross(lg, np.cross(v, w))
         + np.cross(J @ w, w)
         + np.cross(lg, p.g * down_b)
         + t_aero
         + u.thrust * plant.geometry.base_offset * E_Y)
    return f, t


def continuous_dynamics(state: State, u: ControlInput, wind: np.ndarray,
                        plant: PlantModel) -> np.ndarray:
    """Time derivative of the 12-state vector."""
    R = rotation_matrix(state.e)
    W = euler_rate_matrix(state.e)
    f, t = generalized_forces(state, u, wind, plant)
    M = mass_matrix(u.delta, plant)
    acc = np.linalg.solve(M, np.concatenate([f, t]))
    return np.concatenate([R @ state.v_b, W @ state.w_b, acc])


def discrete_step(state: State, u: ControlInput, wind: np.ndarray,
                  plant: PlantModel, dt: float) -> State:
    """One explicit RK4 step with zero-order-hold input and wind."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    x = state.as_vector()

    def rhs(xv):
        return continuous_dynamics(State.from_vector(xv), u, wind, plant)

    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise FloatingPointError("non-finite state after integration step")
    return State.from_vector(x_next)


def total_energy(state: State, q: DeflectionParams, plant: PlantModel) -> float:
    """Kinetic plus gravity/buoyancy potential energy (aero excluded).

    With zero aerodynamic coefficients, zero thrust and no wind this is an
    invariant of the continuous dynamics for a fixed deflection.
    """
    p = plant.inertial
    M = mass_matrix(q, plant)
    z = np.concatenate([state.v_b, state.w_b])
    kinetic = 0.5 * z @ M @ z
    R = rotation_matrix(state.e)
    lg = total_com(q, plant)
    potential = -(p.total_mass * p.g - p.buoyancy) * state.p[2] - p.g * (R @ lg)[2]
    return kinetic + potential
