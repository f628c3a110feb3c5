"""Constant-curvature kinematics of the cable-driven moving-mass arm.

The arm is an incompressible elastic backbone bent into a circular arc by
three uniformly spaced cables. The two deflection parameters (dx, dy) are
linear combinations of the cable lengths and fully determine the arc, and
hence the position of the tip mass in the body frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Actuation box half-width for each deflection parameter [m].
DELTA_MAX = 0.045

# Below this deflection norm [m] the tip position is evaluated by series
# expansion to avoid catastrophic cancellation in (1 - cos)/delta^2.
EPS_Q = 1e-6


@dataclass(frozen=True)
class CableLengths:
    """Lengths of the three drive cables [m]."""

    l1: float
    l2: float
    l3: float

    def __post_init__(self):
        for name in ("l1", "l2", "l3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"cable length {name}={v} must be finite and > 0")


@dataclass(frozen=True)
class DeflectionParams:
    """Deflection parameters (dx, dy) of the arm [m]."""

    dx: float
    dy: float

    @property
    def norm(self) -> float:
        return math.hypot(self.dx, self.dy)

    def __post_init__(self):
        if not (math.isfinite(self.dx) and math.isfinite(self.dy)):
            raise ValueError("deflection parameters must be finite")


@dataclass(frozen=True)
class ContinuumGeometry:
    """Geometry of the arm: backbone length L, cable offset d, base offset h.

    The base offset h is the vertical distance of the arm base below the
    center of buoyancy; it doubles as the thrust moment arm. Validation
    requires the arc angle delta/d to stay within [0, pi/2] everywhere in
    the actuation box |dx|,|dy| <= DELTA_MAX.
    """

    backbone_length: float  # L [m]
    cable_offset: float  # d [m]
    base_offset: float  # h [m]

    def __post_init__(self):
        if not self.backbone_length > 0.0:
            raise ValueError("backbone_length must be > 0")
        if not self.cable_offset > 0.0:
            raise ValueError("cable_offset must be > 0")
        if self.base_offset < 0.0:
            raise ValueError("base_offset must be >= 0")


def validate_actuation_box(geom: ContinuumGeometry):
    """Check the arc angle stays within [0, pi/2] over the whole actuation
    box; called when a plant configuration is loaded."""
    worst = math.sqrt(2.0) * DELTA_MAX / geom.cable_offset
    if worst > math.pi / 2.0 + 1e-12:
        raise ValueError(
            "cable_offset too small: arc angle reaches "
            f"{worst:.3f} rad > pi/2 at the actuation box corner")


def cable_to_q(lengths: CableLengths) -> DeflectionParams:
    """Map cable lengths to deflection parameters.

    Depends only on length differences: adding a common increment to all
    three cables leaves the result unchanged.
    """
    dx = (lengths.l2 + lengths.l3 - 2.0 * lengths.l1) / 3.0
    dy = (math.sqrt(3.0) / 3.0) * (lengths.l3 - lengths.l2)
    return DeflectionParams(dx, dy)


def q_to_arc(q: DeflectionParams, geom: ContinuumGeometry) -> tuple[float, float]:
    """Return (bending_direction, arc_angle) for a deflection.

    bending_direction is in [-pi, pi) and defined as 0 for the straight
    arm; arc_angle = |delta| / d.
    """
    delta = q.norm
    if delta == 0.0:
        return 0.0, 0.0
    return math.atan2(q.dy, q.dx), delta / geom.cable_offset


def q_to_mass_position(q: DeflectionParams, geom: ContinuumGeometry) -> np.ndarray:
    """Body-frame position of the tip mass for a deflection.

    Raises ValueError when the arc angle exceeds pi/2, outside the validity
    of the constant-curvature model.
    """
    arc = q.norm / geom.cable_offset
    if arc > math.pi / 2.0 + 1e-12:
        raise ValueError(f"arc angle {arc:.4f} rad exceeds pi/2")
    return np.array(mass_position_components(q.dx, q.dy, geom.backbone_length,
                                             geom.cable_offset, geom.base_offset))


def mass_position_components(dx: float, dy: float, L: float, d: float,
                             h: float) -> tuple[float, float, float]:
    """Scalar core of the tip-position map; no arc-angle validation."""
    delta = math.hypot(dx, dy)
    if delta < EPS_Q:
        # Second-order series: 1-cos(g) ~ g^2/2, sin(g) ~ g - g^3/6 with
        # g = delta/d. The straight-arm limit is exactly (0, 0, h + L).
        half = L / (2.0 * d)
        return (half * dx, half * dy,
                h + L * (1.0 - delta * delta / (6.0 * d * d)))
    g = delta / d
    c = L * d / (delta * delta)
    bend = c * (1.0 - math.cos(g))
    return (dx * bend, dy * bend, h + c * delta * math.sin(g))


def arc_integration_oracle(q: DeflectionParams, geom: ContinuumGeometry,
                           segments: int = 1000) -> np.ndarray:
    """Independent brute-force tip position via arc integration.

    Integrates the unit tangent of a constant-curvature arc of length L
    (total turn delta/d, bending plane set by atan2(dy, dx)) with the
    midpoint rule over the given number of segments. Used only as a test
    oracle for q_to_mass_position.
    """
    phi, gamma = q_to_arc(q, geom)
    L = geom.backbone_length
    ds = L / segments
    s_mid = (np.arange(segments) + 0.5) * ds
    turn = gamma * s_mid / L
    # Tangent starts along +z and tips toward (cos phi, sin phi, 0).
    tangent = np.stack([
        np.sin(turn) * math.cos(phi),
        np.sin(turn) * math.sin(phi),
        np.cos(turn),
    ], axis=1)
    tip = tangent.sum(axis=0) * ds
    return np.array([tip[0], tip[1], geom.base_offset + tip[2]])
