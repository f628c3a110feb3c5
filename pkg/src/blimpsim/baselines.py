"""Open-loop and PID comparison arms.

The PID is deliberately model-free: it reads only pose measurements and
the reference, never the wind estimate or plant parameters. Yaw error
drives the lateral mass deflection, altitude error the fore-aft one;
thrust is held constant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .continuum import DELTA_MAX, DeflectionParams
from .dynamics import ControlInput
from .mhe import Measurement
from .mpc import Reference
from .units import gf_to_newton, wrap_angle


def open_loop(t: float) -> ControlInput:
    """Constant launch input: 10 gf thrust, centered mass."""
    return ControlInput(thrust=gf_to_newton(10.0), delta=DeflectionParams(0.0, 0.0))


@dataclass(frozen=True)
class LoopGains:
    kp: float
    ki: float
    kd: float


@dataclass(frozen=True)
class PidGains:
    """Fixed gains, tuned once in calm air and then frozen.

    Outputs clamp to the actuation box; the integrator contribution clamps
    to integrator_limit to prevent windup. Derivatives act on the filtered
    measurement, not the error, to avoid setpoint kick.
    """

    yaw: LoopGains = LoopGains(kp=0.12, ki=0.02, kd=0.04)
    altitude: LoopGains = LoopGains(kp=0.06, ki=0.01, kd=0.08)
    thrust_gf: float = 10.0
    integrator_limit: float = 0.02  # [m] of deflection authority
    derivative_tau: float = 0.10  # [s] measurement-derivative filter

    def __post_init__(self):
        if self.integrator_limit > DELTA_MAX:
            raise ValueError("integrator limit exceeds the actuation box")


@dataclass
class PidState:
    yaw_integral: float = 0.0
    alt_integral: float = 0.0
    yaw_rate: float = 0.0  # filtered d(yaw)/dt
    alt_rate: float = 0.0  # filtered d(p_z)/dt
    last_yaw: float | None = None
    last_alt: float | None = None


def _clamp(x: float, lim: float) -> float:
    return max(-lim, min(lim, x))


def pid_step(measurement: Measurement, ref: Reference, dt: float,
             gains: PidGains, state: PidState) -> tuple[ControlInput, PidState]:
    """One PID update from a pose measurement; returns input and new state."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    yaw = float(measurement.y[5])
    alt = float(measurement.y[2])
    e_yaw = wrap_angle(ref.yaw - yaw)
    e_alt = ref.p_z - alt

    s = replace(state)
    a = dt / (gains.derivative_tau + dt)
    if s.last_yaw is not None:
        s.yaw_rate += a * (wrap_angle(yaw - s.last_yaw) / dt - s.yaw_rate)
        s.alt_rate += a * ((alt - s.last_alt) / dt - s.alt_rate)
    s.last_yaw, s.last_alt = yaw, alt

    s.yaw_integral = _clamp(s.yaw_integral + gains.yaw.ki * e_yaw * dt,
                            gains.integrator_limit)
    s.alt_integral = _clamp(s.alt_integral + gains.altitude.ki * e_alt * dt,
                            gains.integrator_limit)

    dy = _clamp(gains.yaw.kp * e_yaw + s.yaw_integral
                - gains.yaw.kd * s.yaw_rate, DELTA_MAX)
    dx = _clamp(gains.altitude.kp * e_alt + s.alt_integral
                - gains.altitude.kd * s.alt_rate, DELTA_MAX)

    u = ControlInput(thrust=gf_to_newton(gains.thrust_gf),
                     delta=DeflectionParams(dx, dy))
    return u, s
