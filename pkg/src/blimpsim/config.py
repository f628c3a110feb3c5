"""Plant and scenario configuration files.

Configuration is TOML. Plant files use bench units (grams, gram-force,
millimeters); everything is converted to SI here, at the boundary.
Scenario files name a wind preset, episode timing and the per-arm
controller settings, and may override plant parameters; asymmetry
overrides under [plant.truth] apply to the simulated truth only, leaving
the controller/estimator model nominal.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .baselines import LoopGains, PidGains
from .continuum import ContinuumGeometry, validate_actuation_box
from .dynamics import AeroModel, InertialParams, PlantModel, default_plant
from .mhe import MheConfig
from .mpc import MpcConfig, Reference
from .units import GF_TO_N, deg_to_rad, gf_to_newton, grams_to_kg, mm_to_m
from .wind import FanConfig, preset as wind_preset, preset_names

ARMS = ("mhe_mpc", "pid", "open_loop")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration content."""


@dataclass
class Scenario:
    """Fully resolved episode description."""

    name: str
    model_plant: PlantModel  # used by the estimator and controller
    truth_plant: PlantModel  # simulated reality (may carry asymmetries)
    fan: FanConfig | None
    duration: float
    seed: int
    control_dt: float
    truth_dt: float
    launch_duration: float
    launch_thrust: float  # [N]
    initial_state: np.ndarray  # (12,)
    reference: Reference
    arm: str
    pid_gains: PidGains
    mhe: MheConfig
    mpc: MpcConfig
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def truth_substeps(self) -> int:
        return max(1, round(self.control_dt / self.truth_dt))

    def config_hash(self) -> str:
        payload = json.dumps(self.raw, sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}")


def _preset_text(name: str) -> str | None:
    ref = resources.files("blimpsim").joinpath(f"presets/{name}.toml")
    if ref.is_file():
        return ref.read_text()
    return None


def resolve_scenario_path(spec: str) -> dict:
    """A scenario argument is a file path or a builtin preset name."""
    p = Path(spec)
    if p.suffix == ".toml" or p.exists():
        return _read_toml(p)
    text = _preset_text(spec)
    if text is None:
        raise ConfigError(
            f"unknown scenario {spec!r}: not a file and not a builtin preset "
            f"({', '.join(builtin_scenarios())})")
    return tomllib.loads(text)


def builtin_scenarios() -> list[str]:
    ref = resources.files("blimpsim").joinpath("presets")
    return sorted(f.name[:-5] for f in ref.iterdir()
                  if f.name.endswith(".toml") and f.name != "plant_default.toml")


# ---------------------------------------------------------------------------
# Plant files
# ---------------------------------------------------------------------------

def plant_from_dict(cfg: dict) -> PlantModel:
    """Build a plant from a parsed plant table (bench units)."""
    base = default_plant()
    mass = cfg.get("mass", {})
    inertia_tab = cfg.get("inertia", {})
    geom_tab = cfg.get("geometry", {})
    env = cfg.get("environment", {})
    aero_tab = cfg.get("aero", {})

    m = grams_to_kg(float(mass.get("stationary_g", 108.7)))
    m_bar = grams_to_kg(float(mass.get("moving_g", 92.2)))
    buoy = gf_to_newton(float(mass.get("buoyancy_gf", 194.2)))
    com_mm = mass.get("com_offset_mm", [0.0, 0.0, 0.0])
    _require(len(com_mm) == 3, "mass.com_offset_mm must have 3 entries")

    I = np.diag([float(inertia_tab.get("ixx", base.inertial.inertia[0, 0])),
                 float(inertia_tab.get("iyy", base.inertial.inertia[1, 1])),
                 float(inertia_tab.get("izz", base.inertial.inertia[2, 2]))])
    for key, (i, j) in (("ixy", (0, 1)), ("ixz", (0, 2)), ("iyz", (1, 2))):
        v = float(inertia_tab.get(key, 0.0))
        I[i, j] = I[j, i] = v

    try:
        inertial = InertialParams(
            m=m, m_bar=m_bar, buoyancy=buoy,
            g=float(env.get("gravity", 9.80665)),
            inertia=I,
            r_stat=np.array([mm_to_m(float(v)) for v in com_mm]),
            rho=float(env.get("air_density", 1.225)),
            area=float(aero_tab.get("area_m2", base.inertial.area)),
        )
        geometry = ContinuumGeometry(
            backbone_length=mm_to_m(float(geom_tab.get("backbone_mm", 220.0))),
            cable_offset=mm_to_m(float(geom_tab.get("cable_offset_mm", 40.6))),
            base_offset=mm_to_m(float(geom_tab.get("base_offset_mm", 50.0))),
        )
        validate_actuation_box(geometry)
    except ValueError as exc:
        raise ConfigError(str(exc))

    aero_kwargs = {}
    for name in ("c_d0", "c_da2", "c_db2", "c_s0", "c_sb", "c_l0", "c_la",
                 "c_txb", "c_ty0", "c_tya", "c_tz0", "c_tzb"):
        if name in aero_tab:
            aero_kwargs[name] = float(aero_tab[name])
    if "k_damp" in aero_tab:
        kd = aero_tab["k_damp"]
        _require(len(kd) == 3, "aero.k_damp must have 3 entries")
        aero_kwargs["k_damp"] = tuple(float(v) for v in kd)
    aero = replace(base.aero, **aero_kwargs)
    if any(not math.isfinite(v) for v in
           (aero.c_d0, aero.c_da2, aero.c_db2, aero.c_sb, aero.c_la)):
        raise ConfigError("aero coefficients must be finite")
    return PlantModel(inertial=inertial, aero=aero, geometry=geometry)


def load_plant(path=None) -> PlantModel:
    if path is None:
        return plant_from_dict(tomllib.loads(_preset_text("plant_default")))
    return plant_from_dict(_read_toml(path))


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------

def _apply_aero_overrides(plant: PlantModel, table: dict) -> PlantModel:
    known = {"c_d0", "c_da2", "c_db2", "c_s0", "c_sb", "c_l0", "c_la",
             "c_txb", "c_ty0", "c_tya", "c_tz0", "c_tzb"}
    bad = set(table) - known
    _require(not bad, f"unknown aero override(s): {sorted(bad)}")
    return PlantModel(plant.inertial,
                      replace(plant.aero, **{k: float(v) for k, v in table.items()}),
                      plant.geometry)


def scenario_from_dict(cfg: dict, base_dir: Path | None = None,
                       arm=None, seed=None) -> Scenario:
    _require(isinstance(cfg, dict) and cfg, "scenario file is empty")
    name = cfg.get("name", "scenario")
    duration = float(cfg.get("duration", 10.0))
    _require(duration > 0.0, "duration must be > 0")
    control_dt = float(cfg.get("control_dt", 0.025))
    truth_dt = float(cfg.get("truth_dt", 0.005))
    _require(0 < truth_dt <= control_dt, "need 0 < truth_dt <= control_dt")
    launch_duration = float(cfg.get("launch_duration", 0.5))
    launch_thrust = gf_to_newton(float(cfg.get("launch_thrust_gf", 10.0)))
    cfg_seed = int(cfg.get("seed", 0))
    cfg_arm = cfg.get("arm", "mhe_mpc")
    if arm is not None:
        cfg_arm = arm
    _require(cfg_arm in ARMS, f"arm must be one of {ARMS}")
    if seed is not None:
        cfg_seed = int(seed)

    plant_tab = cfg.get("plant", {})
    plant_path = plant_tab.get("file")
    if plant_path is not None and base_dir is not None:
        plant_path = Path(base_dir) / plant_path
    model_plant = load_plant(plant_path)
    if "aero" in plant_tab:
        model_plant = _apply_aero_overrides(model_plant, plant_tab["aero"])
    truth_plant = model_plant
    if "truth" in plant_tab:
        truth_tab = dict(plant_tab["truth"])
        aero_over = truth_tab.pop("aero", {})
        _require(not truth_tab, f"unknown [plant.truth] keys: {sorted(truth_tab)}")
        truth_plant = _apply_aero_overrides(truth_plant, aero_over)

    wind_tab = dict(cfg.get("wind", {"preset": "none"}))
    preset_name = wind_tab.pop("preset", "none")
    _require(preset_name in preset_names(),
             f"wind.preset must be one of {preset_names()}")
    try:
        fan = wind_preset(preset_name, **wind_tab)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad wind override: {exc}")

    init_tab = cfg.get("initial_state", {})
    x0 = np.zeros(12)
    x0[0:3] = init_tab.get("position", [0.0, 0.0, 1.5])
    x0[3:6] = [deg_to_rad(float(a))
               for a in init_tab.get("attitude_deg", [0.0, 0.0, 0.0])]
    x0[6:9] = init_tab.get("velocity", [0.0, 0.0, 0.0])
    x0[9:12] = init_tab.get("angular_velocity", [0.0, 0.0, 0.0])

    ref_tab = cfg.get("reference", {})
    reference = Reference(p_y=float(ref_tab.get("lateral", 0.0)),
                          p_z=float(ref_tab.get("altitude_plane", 1.5)),
                          yaw=deg_to_rad(float(ref_tab.get("yaw_deg", 0.0))))

    pid_tab = cfg.get("pid", {})

    def loop(name, default):
        t = pid_tab.get(name, {})
        return LoopGains(kp=float(t.get("kp", default.kp)),
                         ki=float(t.get("ki", default.ki)),
                         kd=float(t.get("kd", default.kd)))

    defaults = PidGains()
    pid_gains = PidGains(
        yaw=loop("yaw", defaults.yaw),
        altitude=loop("altitude", defaults.altitude),
        thrust_gf=float(pid_tab.get("thrust_gf", defaults.thrust_gf)),
        integrator_limit=float(pid_tab.get("integrator_limit",
                                           defaults.integrator_limit)),
        derivative_tau=float(pid_tab.get("derivative_tau",
                                         defaults.derivative_tau)),
    )

    mhe_tab = cfg.get("mhe", {})
    mhe_cfg = MheConfig(
        horizon=int(mhe_tab.get("horizon", 20)),
        dt=control_dt,
        wind_bound=float(mhe_tab.get("wind_bound", 3.0)),
        max_iters=int(mhe_tab.get("max_iters", 5)),
        tol=float(mhe_tab.get("tol", 1e-8)),
    )
    mpc_tab = cfg.get("mpc", {})
    mpc_kwargs = dict(horizon=int(mpc_tab.get("horizon", 20)), dt=control_dt,
                      max_iters=int(mpc_tab.get("max_iters", 5)),
                      tol=float(mpc_tab.get("tol", 1e-8)))
    if "q_x" in mpc_tab:
        qx = mpc_tab["q_x"]
        _require(len(qx) == 12, "mpc.q_x must have 12 entries")
        mpc_kwargs["q_x"] = tuple(float(v) for v in qx)
    if "q_u" in mpc_tab:
        qu = mpc_tab["q_u"]
        _require(len(qu) == 3, "mpc.q_u must have 3 entries")
        mpc_kwargs["q_u"] = tuple(float(v) for v in qu)
    mpc_cfg = MpcConfig(**mpc_kwargs)
    _require(mhe_cfg.horizon >= 1 and mpc_cfg.horizon >= 1,
             "horizons must be >= 1")

    raw = dict(cfg)
    raw["__resolved_arm"] = cfg_arm
    raw["__resolved_seed"] = cfg_seed
    return Scenario(name=name, model_plant=model_plant, truth_plant=truth_plant,
                    fan=fan, duration=duration, seed=cfg_seed,
                    control_dt=control_dt, truth_dt=truth_dt,
                    launch_duration=launch_duration, launch_thrust=launch_thrust,
                    initial_state=x0, reference=reference, arm=cfg_arm,
                    pid_gains=pid_gains, mhe=mhe_cfg, mpc=mpc_cfg, raw=raw)


def load_scenario(spec: str, arm=None, seed=None) -> Scenario:
    cfg = resolve_scenario_path(spec)
    base_dir = Path(spec).parent if Path(spec).exists() else None
    return scenario_from_dict(cfg, base_dir=base_dir, arm=arm, seed=seed)


def validate_file(path: str) -> str:
    """Schema-check a plant or scenario file; returns a description."""
    cfg = _read_toml(path)
    if {"mass", "geometry", "aero", "inertia", "environment"} & set(cfg):
        plant_from_dict(cfg)
        return "plant configuration OK"
    scenario_from_dict(cfg, base_dir=Path(path).parent)
    return "scenario configuration OK"
