"""Unit conversions used at configuration and logging boundaries.

All internal computation is SI (kg, m, s, N, rad). Gram-force, millimeters
and degrees appear only when reading config files and writing logs.
"""

import math

# Conventional standard gravity defines the gram-force.
GF_TO_N = 9.80665e-3
G_STANDARD = 9.80665


def gf_to_newton(f_gf: float) -> float:
    return f_gf * GF_TO_N


def newton_to_gf(f_n: float) -> float:
    return f_n / GF_TO_N


def mm_to_m(x_mm: float) -> float:
    return x_mm * 1e-3


def m_to_mm(x_m: float) -> float:
    return x_m * 1e3


def deg_to_rad(a_deg: float) -> float:
    return a_deg * math.pi / 180.0


def rad_to_deg(a_rad: float) -> float:
    return a_rad * 180.0 / math.pi


def grams_to_kg(m_g: float) -> float:
    return m_g * 1e-3


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = (a + math.pi) % (2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi
