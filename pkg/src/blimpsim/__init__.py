"""blimpsim: desk-scale buoyant-glider simulator with wind-aware control.

A 6-DoF dynamics model of a helium glider steered by a 2-DoF internal
moving mass, a moving-horizon estimator that infers the ambient wind
jointly with the state, a wind-compensating receding-horizon controller,
open-loop and PID baselines, and a deterministic episode/campaign harness
with CSV logs and rendered figures.
"""

from .baselines import PidGains, PidState, open_loop, pid_step
from .config import ConfigError, Scenario, load_plant, load_scenario
from .continuum import (CableLengths, ContinuumGeometry, DeflectionParams,
                        cable_to_q, q_to_arc, q_to_mass_position)
from .dynamics import (AeroModel, ControlInput, InertialParams, PlantModel,
                       State, aero_angles, aero_wrench, continuous_dynamics,
                       default_plant, discrete_step, euler_rate_matrix,
                       generalized_forces, mass_matrix, mass_position,
                       relative_velocity, rotation_matrix, total_com)
from .harness import (EpisodeLog, Metrics, cumulative_rmse, run_campaign,
                      run_episode)
from .mhe import (Measurement, MeasurementNoise, MheConfig, MheEstimate,
                  MheWindow, MovingHorizonEstimator, advance_priors, measure)
from .mpc import MpcConfig, MpcController, Plan, Reference
from .trajopt import ResidualProblem, SolveReport, VectorLayout, jacobian, solve, weighted_residual
from .wind import FanConfig, WindField, mean_wind, preset

__version__ = "0.1.0"
