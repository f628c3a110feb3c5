"""Episode orchestration: launch, tick loop, termination, metrics, campaigns.

Information flow is measurement -> estimator -> controller only: the
control arms receive pose measurements and the inputs previously applied,
never the true state or the true wind. The harness owns the truth.
"""

from __future__ import annotations

import os
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .baselines import PidState, open_loop, pid_step
from .config import Scenario
from .dynamics import State
from .mhe import (MeasurementNoise, Measurement, MheConfig,
                  MovingHorizonEstimator, measure)
from .mpc import MpcController, Plan, Reference
from .units import m_to_mm, newton_to_gf, wrap_angle

LATERAL_LIMIT = 2.0  # |y| termination bound [m]
CORRIDOR_END = 6.0  # forward success bound [m]

EPISODE_COLUMNS = (
    ["t"]
    + [f"true_{n}" for n in ("px", "py", "pz", "roll", "pitch", "yaw",
                             "vbx", "vby", "vbz", "wbx", "wby", "wbz")]
    + [f"meas_{n}" for n in ("px", "py", "pz", "roll", "pitch", "yaw")]
    + [f"est_{n}" for n in ("px", "py", "pz", "roll", "pitch", "yaw",
                            "vbx", "vby", "vbz", "wbx", "wby", "wbz")]
    + ["wind_est_x", "wind_est_y", "wind_est_z"]
    + ["thrust_gf", "dx_mm", "dy_mm"]
    + ["wind_true_x", "wind_true_y", "wind_true_z"]
    + ["mhe_iters", "mhe_converged", "mpc_iters", "mpc_degraded"]
)


@dataclass
class EpisodeLog:
    """Fixed-schema per-tick record of one episode."""

    columns: tuple
    rows: np.ndarray  # (n_ticks, n_columns)
    meta: dict

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            for key in sorted(self.meta):
                fh.write(f"# {key}={self.meta[key]}\n")
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([repr(float(v)) for v in row])

    @staticmethod
    def from_csv(path) -> "EpisodeLog":
        meta = {}
        with open(path) as fh:
            lines = fh.readlines()
        body_start = 0
        for i, line in enumerate(lines):
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val
                body_start = i + 1
            else:
                break
        columns = tuple(lines[body_start].strip().split(","))
        rows = np.array([[float(v) for v in line.strip().split(",")]
                         for line in lines[body_start + 1:] if line.strip()])
        return EpisodeLog(columns=columns, rows=rows, meta=meta)


@dataclass
class Metrics:
    """Cumulative RMSE traces and episode summary quantities."""

    t: np.ndarray
    crmse_y: np.ndarray
    crmse_yaw: np.ndarray
    final_crmse_y: float
    final_crmse_yaw: float
    termination: str
    path_length: float
    final_y: float
    duration: float


def cumulative_rmse(t: np.ndarray, err: np.ndarray, t0: float) -> np.ndarray:
    """sqrt of the running time-average of err^2 from t0 onward.

    Only samples with t > t0 contribute; the interval of each sample
    reaches back to the previous sample (or t0 for the first).
    """
    t = np.asarray(t, dtype=float)
    err = np.asarray(err, dtype=float)
    keep = t > t0 + 1e-12
    t, err = t[keep], err[keep]
    if t.size == 0:
        return np.zeros(0)
    dts = np.diff(np.concatenate([[t0], t]))
    acc = np.cumsum(err * err * dts)
    return np.sqrt(acc / (t - t0))


# ---------------------------------------------------------------------------
# Control arms: each sees only measurements and previously applied inputs.
# ---------------------------------------------------------------------------

class OpenLoopArm:
    needs_estimator = False

    def observe(self, measurement, u_prev):
        pass

    def act(self, t, dt):
        return open_loop(t).as_vector(), {}


class PidArm:
    needs_estimator = False

    def __init__(self, gains, reference):
        self.gains = gains
        self.reference = reference
        self.state = PidState()
        self._meas = None

    def observe(self, measurement, u_prev):
        self._meas = measurement

    def act(self, t, dt):
        u, self.state = pid_step(self._meas, self.reference, dt,
                                 self.gains, self.state)
        return u.as_vector(), {}


class MheMpcArm:
    needs_estimator = True

    def __init__(self, scenario: Scenario, solver_trace=None):
        self.estimator = MovingHorizonEstimator(
            scenario.model_plant, scenario.mhe,
            x_prior=scenario.initial_state.copy())
        launch_u = np.array([scenario.launch_thrust, 0.0, 0.0])
        self.controller = MpcController(scenario.model_plant, scenario.mpc,
                                        launch_u)
        self.reference = scenario.reference
        self.plan: Plan | None = None
        self.last_estimate = None
        self.solver_trace = solver_trace

    def observe(self, measurement, u_prev):
        self.estimator.push(measurement, u_prev)

    def act(self, t, dt):
        mhe_trace = [] if self.solver_trace is not None else None
        est = self.estimator.estimate(trace=mhe_trace)
        self.last_estimate = est
        mpc_trace = [] if self.solver_trace is not None else None
        self.plan = self.controller.plan(est.state, est.wind, self.reference,
                                         warm_start=self.plan, trace=mpc_trace)
        u = self.controller.apply_first(self.plan)
        if self.solver_trace is not None:
            for it, cost, lam, step in mhe_trace:
                self.solver_trace.append(("mhe", t, it, cost, lam, step))
            for it, cost, lam, step in (mpc_trace or []):
                self.solver_trace.append(("mpc", t, it, cost, lam, step))
        diag = {
            "estimate": est.state.copy(),
            "wind": est.wind.copy(),
            "mhe_iters": est.report.iterations,
            "mhe_converged": float(est.converged),
            "mpc_iters": (self.plan.report.iterations
                          if self.plan.report is not None else 0),
            "mpc_degraded": float(self.plan.degraded),
        }
        return u.as_vector(), diag


def make_arm(scenario: Scenario, solver_trace=None):
    if scenario.arm == "open_loop":
        return OpenLoopArm()
    if scenario.arm == "pid":
        return PidArm(scenario.pid_gains, scenario.reference)
    return MheMpcArm(scenario, solver_trace=solver_trace)


# ---------------------------------------------------------------------------
# Episode
# ---------------------------------------------------------------------------

def run_episode(scenario: Scenario, solver_trace=None):
    """Simulate one episode; returns (EpisodeLog, Metrics)."""
    from .wind import WindField

    ss = np.random.SeedSequence(scenario.seed)
    meas_seed, wind_seed = ss.spawn(2)
    rng = np.random.default_rng(meas_seed)
    windfield = WindField(scenario.fan, seed=wind_seed)
    noise = MeasurementNoise()
    arm = make_arm(scenario, solver_trace=solver_trace)

    P_truth = scenario.truth_plant.pack()
    dt = scenario.control_dt
    n_sub = scenario.truth_substeps
    launch_u = np.array([scenario.launch_thrust, 0.0, 0.0])

    x = scenario.initial_state.copy()
    u_prev = launch_u.copy()
    next_state = np.empty(12)
    rows = []
    termination = "duration"
    k = 0
    while True:
        t = k * dt
        if t >= scenario.duration - 1e-12:
            termination = "duration"
            break
        if not np.all(np.isfinite(x)):
            termination = "nonfinite"
            break
        if abs(x[1]) >= LATERAL_LIMIT:
            termination = "lateral_limit"
            break
        if x[0] >= CORRIDOR_END:
            termination = "corridor_end"
            break

        m = measure(State.from_vector(x), t, noise, rng)
        arm.observe(m, None if k == 0 else u_prev)
        if t >= scenario.launch_duration - 1e-12:
            u, diag = arm.act(t, dt)
        else:
            u, diag = launch_u.copy(), {}

        est = diag.get("estimate", np.full(12, np.nan))
        wind_est = diag.get("wind", np.full(3, np.nan))
        wind_true = windfield.sample(x[0:3], t)
        rows.append(np.concatenate([
            [t], x, m.y, est, wind_est,
            [newton_to_gf(u[0]), m_to_mm(u[1]), m_to_mm(u[2])],
            wind_true,
            [diag.get("mhe_iters", 0), diag.get("mhe_converged", 0.0),
             diag.get("mpc_iters", 0), diag.get("mpc_degraded", 0.0)],
        ]))

        ok = kernels.substepped_step(x, u, wind_true, dt, n_sub,
                                     P_truth, next_state)
        if not ok:
            x = np.full(12, np.nan)
        else:
            x = next_state.copy()
        u_prev = u.copy()
        k += 1

    rows = np.array(rows) if rows else np.zeros((0, len(EPISODE_COLUMNS)))
    meta = {
        "scenario": scenario.name,
        "arm": scenario.arm,
        "seed": scenario.seed,
        "config_hash": scenario.config_hash(),
        "termination": termination,
    }
    log = EpisodeLog(columns=tuple(EPISODE_COLUMNS), rows=rows, meta=meta)
    metrics = compute_metrics(log, scenario.launch_duration, termination)
    return log, metrics


def compute_metrics(log: EpisodeLog, launch_duration: float,
                    termination: str) -> Metrics:
    t = log.column("t")
    y = log.column("true_py")
    yaw = np.array([wrap_angle(a) for a in log.column("true_yaw")])
    cy = cumulative_rmse(t, y, launch_duration)
    cp = cumulative_rmse(t, yaw, launch_duration)
    pos = log.rows[:, 1:4] if log.rows.size else np.zeros((0, 3))
    path = float(np.sum(np.linalg.norm(np.diff(pos, axis=0), axis=1))) \
        if len(pos) > 1 else 0.0
    return Metrics(
        t=t[t > launch_duration + 1e-12], crmse_y=cy, crmse_yaw=cp,
        final_crmse_y=float(cy[-1]) if cy.size else 0.0,
        final_crmse_yaw=float(cp[-1]) if cp.size else 0.0,
        termination=termination, path_length=path,
        final_y=float(y[-1]) if y.size else 0.0,
        duration=float(t[-1]) if t.size else 0.0)


# ---------------------------------------------------------------------------
# Campaign
# ---------------------------------------------------------------------------

def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("BLIMPSIM_WORKERS", "1")))
    except ValueError:
        return 1


def derived_seed(master_seed: int, cell_index: int, trial: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), int(cell_index), int(trial)])
    return int(ss.generate_state(1)[0])


def _episode_job(args):
    from .config import load_scenario

    spec, arm, seed, out_path = args
    try:
        scenario = load_scenario(spec, arm=arm, seed=seed)
        log, metrics = run_episode(scenario)
    except Exception as exc:  # recorded per cell, campaign continues
        return dict(arm=arm, spec=spec, seed=seed, error=str(exc))
    if out_path is not None:
        log.to_csv(out_path)
    return dict(arm=arm, spec=spec, seed=seed, error=None,
                final_crmse_y=metrics.final_crmse_y,
                final_crmse_yaw=metrics.final_crmse_yaw,
                termination=metrics.termination,
                path_length=metrics.path_length,
                final_y=metrics.final_y,
                duration=metrics.duration,
                log_path=str(out_path) if out_path else None)


@dataclass
class CampaignCell:
    scenario: str
    arm: str
    results: list

    def completed(self):
        return [r for r in self.results if r["error"] is None]

    def summary_row(self) -> dict:
        done = self.completed()
        cys = [r["final_crmse_y"] for r in done]
        cps = [r["final_crmse_yaw"] for r in done]
        terms = [r["termination"] for r in done]
        return {
            "scenario": self.scenario,
            "arm": self.arm,
            "trials": len(self.results),
            "completed": len(done),
            "failed": len(self.results) - len(done),
            "mean_crmse_y": float(np.mean(cys)) if cys else math.nan,
            "std_crmse_y": float(np.std(cys)) if cys else math.nan,
            "mean_crmse_yaw": float(np.mean(cps)) if cps else math.nan,
            "std_crmse_yaw": float(np.std(cps)) if cps else math.nan,
            "n_lateral_limit": terms.count("lateral_limit"),
            "n_corridor_end": terms.count("corridor_end"),
            "n_duration": terms.count("duration"),
            "n_nonfinite": terms.count("nonfinite"),
            "mean_path_length": float(np.mean([r["path_length"] for r in done]))
            if done else math.nan,
        }


def run_campaign(scenarios, arms, trials, master_seed=0, out_dir=None,
                 workers=None):
    """Cross product of scenarios x arms x trials with derived seeds.

    Returns the list of CampaignCell results; per-episode logs and the
    summary CSV land in out_dir when given. Partial failures are recorded
    per cell and do not abort the campaign.
    """
    out_dir = Path(out_dir) if out_dir is not None else None
    jobs = []
    cells = []
    for ci, (spec, arm) in enumerate([(s, a) for s in scenarios for a in arms]):
        cells.append(CampaignCell(scenario=spec, arm=arm, results=[]))
        for trial in range(trials):
            seed = derived_seed(master_seed, ci, trial)
            path = (out_dir / "episodes" /
                    f"{Path(str(spec)).stem}__{arm}__t{trial:02d}.csv"
                    if out_dir else None)
            jobs.append((ci, (str(spec), arm, seed, path)))

    n_workers = workers if workers is not None else worker_count()
    if n_workers > 1:
        import multiprocessing as mp

        with mp.Pool(n_workers) as pool:
            results = pool.map(_episode_job, [j for _, j in jobs])
    else:
        results = [_episode_job(j) for _, j in jobs]
    for (ci, _), res in zip(jobs, results):
        cells[ci].results.append(res)

    if out_dir is not None:
        write_summary(cells, out_dir / "summary.csv")
    return cells


def write_summary(cells, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [c.summary_row() for c in cells]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return rows
