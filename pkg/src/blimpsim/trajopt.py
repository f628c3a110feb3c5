"""Damped Gauss-Newton least squares with box constraints.

Both receding-horizon problems (estimation and control) are condensed
single-shooting transcriptions: the decision vector is small, intermediate
states come from rolling the dynamics forward inside the residual
function, and the dynamics constraints hold by construction. The solver
below handles the resulting box-constrained nonlinear least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

ARMIJO_C1 = 1e-4
LAMBDA_MAX = 1e8
STEP_FRACTIONS = (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125)


@dataclass(frozen=True)
class VectorLayout:
    """Named segments of a flat decision vector."""

    segments: tuple  # of (name, length)

    def __post_init__(self):
        names = [n for n, _ in self.segments]
        if len(set(names)) != len(names):
            raise ValueError("duplicate segment names")

    @property
    def size(self) -> int:
        return sum(n for _, n in self.segments)

    def slice_of(self, name: str) -> slice:
        start = 0
        for seg_name, length in self.segments:
            if seg_name == name:
                return slice(start, start + length)
            start += length
        raise KeyError(name)

    def pack(self, **parts) -> np.ndarray:
        out = np.empty(self.size)
        for name, value in parts.items():
            out[self.slice_of(name)] = value
        return out


@dataclass
class ResidualProblem:
    """Weighted residual stack with box bounds on the decision vector."""

    residual: Callable[[np.ndarray], np.ndarray]
    x0: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    # Optional vectorized evaluation over a (B, n) stack of points; used by
    # finite differencing and the line search. Falls back to a loop.
    residual_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        n = self.x0.size
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    def eval_batch(self, points: np.ndarray) -> np.ndarray:
        if self.residual_batch is not None:
            return np.asarray(self.residual_batch(points), dtype=float)
        return np.stack([np.asarray(self.residual(p), dtype=float) for p in points])


@dataclass
class SolveReport:
    x: np.ndarray
    cost: float
    iterations: int
    converged: bool
    optimality: float
    message: str = ""
    trace: list = field(default_factory=list)


def weighted_residual(z: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sqrt(diag(weights)) @ z with zero-weight rows dropped.

    The squared norm of the result equals z^T diag(weights) z; negative
    weights are rejected.
    """
    z = np.asarray(z, dtype=float)
    w = np.broadcast_to(np.asarray(weights, dtype=float), z.shape)
    if np.any(w < 0.0):
        raise ValueError("weights must be non-negative")
    keep = w > 0.0
    return np.sqrt(w[keep]) * z[keep]


def fd_step_sizes(x: np.ndarray) -> np.ndarray:
    return 1e-6 * (1.0 + np.abs(x))


def jacobian(problem: ResidualProblem, point: np.ndarray,
             r0: Optional[np.ndarray] = None) -> np.ndarray:
    """Forward finite-difference Jacobian of the residual.

    Columns where the perturbed residual is non-finite are zeroed (the
    solver then relies on damping to make progress elsewhere).
    """
    x = np.asarray(point, dtype=float)
    if r0 is None:
        r0 = np.asarray(problem.residual(x), dtype=float)
    if not np.all(np.isfinite(r0)):
        raise ValueError("residual not finite at the linearization point")
    h = fd_step_sizes(x)
    pts = np.repeat(x[None, :], x.size, axis=0)
    pts[np.arange(x.size), np.arange(x.size)] += h
    R = problem.eval_batch(pts)
    J = (R - r0[None, :]) / h[:, None]
    bad = ~np.all(np.isfinite(J), axis=1)
    if np.any(bad):
        J[bad] = 0.0
    return J.T


def solve(problem: ResidualProblem, max_iters: int = 50, tol: float = 1e-10,
          lam0: float = 1e-3, trace: Optional[list] = None) -> SolveReport:
    """Damped Gauss-Newton iteration projected onto the box bounds.

    Steps solve (J^T J + lam I) d = -J^T r, are clipped to the box and
    accepted by Armijo backtracking on the true cost; lam grows by 10 on
    rejection and shrinks by 3 on acceptance. Terminates on step norm or
    cost decrease below tol, or after max_iters. A report is always
    returned and the iterate never leaves the box.
    """
    x = np.clip(problem.x0, problem.lower, problem.upper)
    r = np.asarray(problem.residual(x), dtype=float)
    cost = float(r @ r)
    if not np.isfinite(cost):
        raise ValueError("non-finite cost at the initial guess")

    lam = lam0
    iterations = 0
    converged = False
    optimality = np.inf
    message = "max iterations reached"
    n = x.size

    for it in range(max_iters):
        J = jacobian(problem, x, r0=r)
        g = 2.0 * (J.T @ r)
        optimality = float(np.max(np.abs(x - np.clip(x - g, problem.lower,
                                                     problem.upper)), initial=0.0))
        JtJ = J.T @ J
        Jtr = J.T @ r

        accepted = False
        while lam <= LAMBDA_MAX:
            try:
                d = np.linalg.solve(JtJ + lam * np.eye(n), -Jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if not np.all(np.isfinite(d)):
                lam *= 10.0
                continue
            if np.linalg.norm(d) < tol:
                # Stationary (typically the guess is already optimal).
                iterations = it + 1
                converged = True
                message = "negligible step"
                accepted = False
                break
            candidates = np.clip(x[None, :] + np.outer(STEP_FRACTIONS, d),
                                 problem.lower, problem.upper)
            R = problem.eval_batch(candidates)
            costs = np.einsum("ij,ij->i", R, R)
            chosen = -1
            for i in range(len(STEP_FRACTIONS)):
                predicted = g @ (candidates[i] - x)
                if np.isfinite(costs[i]) and costs[i] <= cost + ARMIJO_C1 * predicted:
                    chosen = i
                    break
            if chosen < 0:
                lam *= 10.0
                continue
            x_new = candidates[chosen]
            r_new = R[chosen]
            cost_new = float(costs[chosen])
            accepted = True
            break

        if not accepted:
            if not converged:
                message = "no acceptable step (lambda limit reached)"
            break

        step_norm = float(np.linalg.norm(x_new - x))
        dcost = cost - cost_new
        lam = max(lam / 3.0, 1e-12)
        x, r, cost = x_new, r_new, cost_new
        iterations = it + 1
        if trace is not None:
            trace.append((iterations, cost, lam, step_norm))
        if step_norm < tol or dcost < tol:
            converged = True
            message = "step/cost tolerance reached"
            break

    return SolveReport(x=x, cost=cost, iterations=iterations,
                       converged=converged, optimality=optimality,
                       message=message, trace=trace if trace is not None else [])
