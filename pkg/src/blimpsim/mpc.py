"""Receding-horizon controller tracking heading, lateral offset and altitude.

The decision variables are the input sequence; predicted states come from
rolling the dynamics under the current wind estimate. Input boxes are
enforced exactly by the solver, state boxes as smooth hinge penalties.
Only the first planned input is applied each tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, trajopt
from .continuum import DELTA_MAX
from .dynamics import ControlInput, PlantModel
from .units import gf_to_newton

THRUST_MIN = gf_to_newton(1.0)
THRUST_MAX = gf_to_newton(15.0)


@dataclass(frozen=True)
class Reference:
    """Desired lateral position, altitude plane, heading and body rates.

    p_x is carried only for completeness: forward position is unweighted
    by default, so it does not influence the plan."""

    p_y: float = 0.0
    p_z: float = 1.5
    yaw: float = 0.0
    w_b: tuple = (0.0, 0.0, 0.0)
    p_x: float = 0.0

    def desired_state(self) -> np.ndarray:
        x = np.zeros(12)
        x[0] = self.p_x
        x[1] = self.p_y
        x[2] = self.p_z
        x[5] = self.yaw
        x[9:12] = self.w_b
        return x


@dataclass(frozen=True)
class MpcConfig:
    """Horizon, weights and constraint handling of the controller.

    q_x leaves forward position, roll/pitch and translational velocity
    unweighted; q_u penalizes input changes between consecutive steps,
    including the step from the previously applied input.
    """

    horizon: int = 20
    dt: float = 0.025
    q_x: tuple = (0.0, 10.0, 10.0, 0.0, 0.0, 100.0,
                  0.0, 0.0, 0.0, 5.0, 5.0, 5.0)
    q_u: tuple = (200.0, 300.0, 300.0)
    thrust_bounds: tuple = (THRUST_MIN, THRUST_MAX)
    delta_bound: float = DELTA_MAX
    state_penalty_weight: float = 1e3
    attitude_limit: float = math.pi / 2.0
    v_forward_bounds: tuple = (0.0, 1.5)
    v_lateral_limit: float = 1.5
    max_iters: int = 25
    tol: float = 1e-9


@dataclass
class Plan:
    """Planned input sequence with the predicted states that produced it."""

    inputs: np.ndarray  # (M, 3)
    states: np.ndarray  # (M+1, 12)
    report: trajopt.SolveReport | None
    degraded: bool = False

    def shifted(self) -> np.ndarray:
        """Warm start for the next tick: shift one step, repeat the last."""
        return np.vstack([self.inputs[1:], self.inputs[-1:]])


class MpcController:
    """Plans over a receding horizon and applies the first input."""

    def __init__(self, model: PlantModel, cfg: MpcConfig, initial_input):
        self.cfg = cfg
        self.params = model.pack()
        self.u_prev = np.asarray(initial_input, dtype=float).copy()
        self._sqx = np.sqrt(np.asarray(cfg.q_x, dtype=float))
        self._squ = np.sqrt(np.asarray(cfg.q_u, dtype=float))
        self._pen = math.sqrt(cfg.state_penalty_weight)
        self._lims = np.array([cfg.attitude_limit, cfg.v_forward_bounds[0],
                               cfg.v_forward_bounds[1], cfg.v_lateral_limit])
        lo = np.array([cfg.thrust_bounds[0], -cfg.delta_bound, -cfg.delta_bound])
        hi = np.array([cfg.thrust_bounds[1], cfg.delta_bound, cfg.delta_bound])
        self._lower = np.tile(lo, cfg.horizon)
        self._upper = np.tile(hi, cfg.horizon)

    def _make_problem(self, x_hat, wind_hat, x_des, z0) -> trajopt.ResidualProblem:
        cfg = self.cfg
        m = 21 * cfg.horizon
        u_prev = self.u_prev

        def residual_batch(Z):
            Z = np.ascontiguousarray(Z, dtype=float)
            out = np.empty((Z.shape[0], m))
            kernels.mpc_residual_batch(Z, x_hat, wind_hat, u_prev, x_des,
                                       self._sqx, self._squ, self._pen,
                                       self._lims, cfg.dt, self.params, out)
            return out

        return trajopt.ResidualProblem(
            residual=lambda z: residual_batch(z[None, :])[0],
            x0=z0, lower=self._lower, upper=self._upper,
            residual_batch=residual_batch)

    def plan(self, x_hat, wind_hat, ref: Reference,
             warm_start: Plan | None = None, trace=None) -> Plan:
        """Plan an input sequence from the current estimates.

        When the problem cannot be evaluated at the warm start, the warm
        start shifted by one step is returned flagged degraded.
        """
        cfg = self.cfg
        x_hat = np.ascontiguousarray(x_hat, dtype=float)
        wind_hat = np.ascontiguousarray(wind_hat, dtype=float)
        x_des = ref.desired_state()
        if warm_start is not None and not warm_start.degraded:
            z0 = warm_start.shifted().ravel()
        else:
            z0 = np.tile(self.u_prev, cfg.horizon)
        problem = self._make_problem(x_hat, wind_hat, x_des, z0)
        try:
            report = trajopt.solve(problem, max_iters=cfg.max_iters,
                                   tol=cfg.tol, trace=trace)
        except ValueError:
            inputs = z0.reshape(cfg.horizon, 3)
            states = np.full((cfg.horizon + 1, 12), np.nan)
            return Plan(inputs=inputs, states=states, report=None, degraded=True)
        inputs = report.x.reshape(cfg.horizon, 3)
        states = np.empty((cfg.horizon + 1, 12))
        kernels.rollout(x_hat, np.ascontiguousarray(inputs), wind_hat,
                        cfg.dt, self.params, states)
        return Plan(inputs=inputs, states=states, report=report)

    def apply_first(self, plan: Plan) -> ControlInput:
        """First input of the plan, clamped to the boxes and recorded as the
        previous input for the next tick's rate penalty.

        A degraded plan holds the previously applied input."""
        if plan.degraded:
            u = self.u_prev.copy()
        else:
            u = np.clip(plan.inputs[0], self._lower[0:3], self._upper[0:3])
        self.u_prev = u.copy()
        return ControlInput.from_vector(u)

    def cost_breakdown(self, plan: Plan, x_hat, wind_hat, ref: Reference):
        """State-tracking vs input-rate cost shares of a plan (penalties
        excluded), recomputed independently of the solver."""
        cfg = self.cfg
        x_des = ref.desired_state()
        qx = np.asarray(cfg.q_x)
        qu = np.asarray(cfg.q_u)
        state_cost = 0.0
        for k in range(1, plan.states.shape[0]):
            d = plan.states[k] - x_des
            d[3:6] = [kernels.wrap_angle(a) for a in d[3:6]]
            state_cost += float(qx @ d ** 2)
        rate_cost = 0.0
        prev = self.u_prev
        for k in range(plan.inputs.shape[0]):
            du = plan.inputs[k] - prev
            rate_cost += float(qu @ du ** 2)
            prev = plan.inputs[k]
        return state_cost, rate_cost
