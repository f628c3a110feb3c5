"""Joint state and wind estimation over a receding window.

The estimator treats the wind as constant over the window and decides only
the window's initial state and the wind vector; intermediate states come
from rolling the dynamics forward, so the dynamics constraints hold by
construction. Pose measurements stand in for the motion-capture system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, trajopt
from .dynamics import PITCH_MARGIN, PlantModel, State
from .units import deg_to_rad

MHE_LAYOUT = trajopt.VectorLayout((("state0", 12), ("wind", 3)))


@dataclass(frozen=True)
class MeasurementNoise:
    pos_std: float = 0.0008  # [m], mocap-grade positional accuracy
    att_std: float = deg_to_rad(0.2)  # [rad]


@dataclass
class Measurement:
    """Pose measurement [p (3); e (3)] with its timestamp."""

    y: np.ndarray
    t: float


def measure(true_state: State, t: float, noise: MeasurementNoise,
            rng: np.random.Generator) -> Measurement:
    """Noisy pose measurement of the true state."""
    y = np.concatenate([true_state.p, true_state.e])
    if noise.pos_std > 0.0:
        y[0:3] += noise.pos_std * rng.standard_normal(3)
    if noise.att_std > 0.0:
        y[3:6] += noise.att_std * rng.standard_normal(3)
    return Measurement(y=y, t=t)


@dataclass(frozen=True)
class MheConfig:
    """Window length, weights and residual scaling of the estimator.

    Weights follow the platform defaults: uniform moderate arrival weight,
    a strong wind-prior weight and diag(5) on the pose residuals. Pose
    residuals are expressed in millimeters and degrees so those weights
    are commensurate with the measurement noise; angles are wrapped before
    weighting.
    """

    horizon: int = 20
    dt: float = 0.025
    p_x: tuple = (10.0,) * 12
    p_w: tuple = (50.0, 50.0, 50.0)
    p_u: tuple = (5.0,) * 6
    pos_residual_scale: float = 1e3  # m -> mm
    ang_residual_scale: float = 180.0 / math.pi  # rad -> deg
    wind_bound: float = 3.0  # sanity box on each wind component [m/s]
    max_iters: int = 25
    tol: float = 1e-9


class MheWindow:
    """Sliding window of measurements and the inputs between them."""

    def __init__(self, horizon: int):
        self.horizon = horizon
        self.measurements: list[Measurement] = []
        self.inputs: list[np.ndarray] = []

    def __len__(self):
        return len(self.measurements)

    @property
    def full(self) -> bool:
        return len(self.measurements) == self.horizon + 1

    def push(self, measurement: Measurement, input_before=None) -> bool:
        """Append a measurement; returns True when the oldest was evicted.

        input_before is the input applied over the interval ending at this
        measurement; it is required except for the very first sample.
        """
        if self.measurements:
            if measurement.t <= self.measurements[-1].t:
                raise ValueError("measurement timestamps must be increasing")
            if input_before is None:
                raise ValueError("input_before required once the window is seeded")
            self.inputs.append(np.asarray(input_before, dtype=float).copy())
        self.measurements.append(measurement)
        if len(self.measurements) > self.horizon + 1:
            self.measurements.pop(0)
            self.inputs.pop(0)
            return True
        return False

    def arrays(self):
        Y = np.stack([m.y for m in self.measurements])
        U = (np.stack(self.inputs) if self.inputs
             else np.zeros((0, 3)))
        return Y, U


@dataclass
class MheEstimate:
    """Smoothed window trajectory, wind estimate and the solve report."""

    trajectory: np.ndarray  # (K+1, 12), consistent with the rolled dynamics
    wind: np.ndarray  # (3,)
    report: trajopt.SolveReport
    converged: bool

    @property
    def state(self) -> np.ndarray:
        """Estimate of the current (newest) state."""
        return self.trajectory[-1]


class MovingHorizonEstimator:
    """Receding-window estimator with filtering-style prior advancement."""

    def __init__(self, model: PlantModel, cfg: MheConfig,
                 x_prior: np.ndarray, w_prior=None):
        self.cfg = cfg
        self.params = model.pack()
        self.window = MheWindow(cfg.horizon)
        self.x_prior = np.asarray(x_prior, dtype=float).copy()
        self.w_prior = (np.zeros(3) if w_prior is None
                        else np.asarray(w_prior, dtype=float).copy())
        self.last_estimate: MheEstimate | None = None
        self._sqx = np.sqrt(np.asarray(cfg.p_x, dtype=float))
        self._sqw = np.sqrt(np.asarray(cfg.p_w, dtype=float))
        self._squ = np.sqrt(np.asarray(cfg.p_u, dtype=float))

    # -- window plumbing ----------------------------------------------------

    def push(self, measurement: Measurement, input_before=None):
        """Add a sample, advancing the priors when the window slides."""
        evicted = self.window.push(measurement, input_before)
        if evicted:
            self.x_prior, self.w_prior = advance_priors(self.last_estimate)

    # -- estimation ---------------------------------------------------------

    def _bounds(self):
        lower = np.full(15, -np.inf)
        upper = np.full(15, np.inf)
        pitch_lim = math.pi / 2.0 - 2.0 * PITCH_MARGIN
        lower[4], upper[4] = -pitch_lim, pitch_lim
        lower[12:15] = -self.cfg.wind_bound
        upper[12:15] = self.cfg.wind_bound
        return lower, upper

    def _make_problem(self, Y, U, z0) -> trajopt.ResidualProblem:
        cfg = self.cfg
        m = 15 + 6 * Y.shape[0]

        def residual_batch(Z):
            Z = np.ascontiguousarray(Z, dtype=float)
            out = np.empty((Z.shape[0], m))
            kernels.mhe_residual_batch(Z, Y, U, self.x_prior, self.w_prior,
                                       self._sqx, self._sqw, self._squ,
                                       cfg.pos_residual_scale,
                                       cfg.ang_residual_scale,
                                       cfg.dt, self.params, out)
            return out

        lower, upper = self._bounds()
        return trajopt.ResidualProblem(
            residual=lambda z: residual_batch(z[None, :])[0],
            x0=z0, lower=lower, upper=upper, residual_batch=residual_batch)

    def estimate(self, trace=None) -> MheEstimate:
        """Solve the window problem from the current priors.

        On solver non-convergence the best iterate is returned flagged;
        the caller decides whether to reuse it.
        """
        if len(self.window) < 2:
            raise ValueError("estimation needs at least two measurements")
        Y, U = self.window.arrays()
        z0 = MHE_LAYOUT.pack(state0=self.x_prior, wind=self.w_prior)
        problem = self._make_problem(Y, U, z0)
        report = trajopt.solve(problem, max_iters=self.cfg.max_iters,
                               tol=self.cfg.tol, trace=trace)
        x0 = report.x[MHE_LAYOUT.slice_of("state0")]
        wind = report.x[MHE_LAYOUT.slice_of("wind")]
        X = np.empty((U.shape[0] + 1, 12))
        kernels.rollout(x0, np.ascontiguousarray(U), wind, self.cfg.dt,
                        self.params, X)
        est = MheEstimate(trajectory=X, wind=wind.copy(), report=report,
                          converged=report.converged)
        self.last_estimate = est
        return est

    def cost_terms(self, estimate: MheEstimate):
        """Arrival, disturbance and measurement cost terms, recomputed
        independently of the solver's residual stack."""
        cfg = self.cfg
        Y, _ = self.window.arrays()
        x0 = estimate.trajectory[0]
        arrival = float(np.asarray(cfg.p_x) @ (x0 - self.x_prior) ** 2)
        disturbance = float(np.asarray(cfg.p_w) @ (estimate.wind - self.w_prior) ** 2)
        meas = 0.0
        wrap = np.vectorize(kernels.wrap_angle)
        for k in range(Y.shape[0]):
            dpos = (Y[k, 0:3] - estimate.trajectory[k, 0:3]) * cfg.pos_residual_scale
            dang = wrap(Y[k, 3:6] - estimate.trajectory[k, 3:6]) * cfg.ang_residual_scale
            meas += float(np.asarray(cfg.p_u[0:3]) @ dpos ** 2)
            meas += float(np.asarray(cfg.p_u[3:6]) @ dang ** 2)
        return arrival, disturbance, meas


def advance_priors(previous: MheEstimate):
    """Filtering-style shift: next priors from the previous solution."""
    if previous is None:
        raise ValueError("no previous estimate to advance from")
    return previous.trajectory[1].copy(), previous.wind.copy()
