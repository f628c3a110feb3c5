"""Synthetic ground-truth wind: a fan jet plus filtered turbulence.

The mean field is a one-sided jet with exponential axial decay and a
Gaussian radial profile ("bar-shaped region that attenuates with
distance"). Turbulence is an Ornstein-Uhlenbeck process per axis whose
standard deviation is a fraction of the local mean speed and ramps up
with downstream distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class FanConfig:
    position: tuple  # inertial [m]
    axis: tuple  # unit direction of the jet
    core_speed: float  # speed at the fan mouth [m/s]
    decay_length: float  # axial e-folding distance [m]
    half_width: float  # radial Gaussian width [m]
    turbulence_intensity: float = 0.15  # fraction of local mean speed
    noise_correlation_time: float = 0.5  # [s]
    turbulence_ramp_length: float = 2.0  # downstream ramp to full intensity [m]
    seed: int = 0

    def __post_init__(self):
        if self.core_speed < 0.0:
            raise ValueError("core_speed must be >= 0")
        if self.decay_length <= 0.0 or self.half_width <= 0.0:
            raise ValueError("decay_length and half_width must be > 0")
        n = math.sqrt(sum(a * a for a in self.axis))
        if abs(n - 1.0) > 1e-9:
            raise ValueError("axis must be unit norm")


def mean_wind(fan: FanConfig | None, point) -> np.ndarray:
    """Mean wind velocity at a point; zero upstream of the fan."""
    if fan is None:
        return np.zeros(3)
    rel = np.asarray(point, dtype=float) - np.asarray(fan.position)
    axis = np.asarray(fan.axis)
    s = float(rel @ axis)
    if s < 0.0:
        return np.zeros(3)
    radial2 = float(rel @ rel) - s * s
    speed = fan.core_speed * math.exp(-s / fan.decay_length) \
        * math.exp(-max(radial2, 0.0) / (2.0 * fan.half_width ** 2))
    return speed * axis


def _local_sigma(fan: FanConfig, point) -> float:
    rel = np.asarray(point, dtype=float) - np.asarray(fan.position)
    s = float(rel @ np.asarray(fan.axis))
    ramp = min(1.0, max(0.0, s / fan.turbulence_ramp_length))
    speed = float(np.linalg.norm(mean_wind(fan, point)))
    return fan.turbulence_intensity * ramp * speed


class WindField:
    """A fan (or calm air) with a per-episode turbulence stream.

    sample() must be called with non-decreasing times; episodes own their
    noise state, so independent episodes can run concurrently with their
    own WindField instances.
    """

    def __init__(self, fan: FanConfig | None, seed=None):
        self.fan = fan
        if seed is None and fan is not None:
            seed = fan.seed
        self._rng = np.random.default_rng(seed)
        self._noise = self._rng.standard_normal(3)
        self._last_t = None

    def mean(self, point) -> np.ndarray:
        return mean_wind(self.fan, point)

    def sample(self, point, t: float) -> np.ndarray:
        """Mean wind plus low-pass-filtered Gaussian turbulence."""
        if self.fan is None:
            return np.zeros(3)
        if self._last_t is not None:
            if t < self._last_t:
                raise ValueError("wind samples must use non-decreasing time")
            dt = t - self._last_t
            if dt > 0.0:
                a = math.exp(-dt / self.fan.noise_correlation_time)
                self._noise = a * self._noise + math.sqrt(1.0 - a * a) \
                    * self._rng.standard_normal(3)
        self._last_t = t
        sigma = _local_sigma(self.fan, point)
        return self.mean(point) + sigma * self._noise


# Calibrated so the on-axis mean 2 m downstream is exactly 2/3 of the core
# speed, matching the reference anemometer point of the scenarios.
_DECAY = 2.0 / math.log(1.5)

_PRESETS = {
    "none": None,
    "headwind_light": FanConfig(position=(6.0, 0.0, 1.5), axis=(-1.0, 0.0, 0.0),
                                core_speed=0.75, decay_length=_DECAY,
                                half_width=0.5, turbulence_intensity=0.15),
    "headwind_strong": FanConfig(position=(6.0, 0.0, 1.5), axis=(-1.0, 0.0, 0.0),
                                 core_speed=1.5, decay_length=_DECAY,
                                 half_width=0.5, turbulence_intensity=0.35),
    "crosswind_light": FanConfig(position=(3.0, -2.0, 1.5), axis=(0.0, 1.0, 0.0),
                                 core_speed=0.75, decay_length=_DECAY,
                                 half_width=0.8, turbulence_intensity=0.15),
    "crosswind_strong": FanConfig(position=(3.0, -2.0, 1.5), axis=(0.0, 1.0, 0.0),
                                  core_speed=1.5, decay_length=_DECAY,
                                  half_width=0.8, turbulence_intensity=0.35),
}


def preset_names():
    return sorted(_PRESETS)


def preset(name: str, **overrides) -> FanConfig | None:
    """Named fan scenario, optionally with overridden fields."""
    if name not in _PRESETS:
        raise KeyError(f"unknown wind preset {name!r}; choose from {preset_names()}")
    fan = _PRESETS[name]
    if overrides:
        if fan is None:
            raise ValueError("cannot override fields of the calm-air preset")
        fan = replace(fan, **overrides)
    return fan
