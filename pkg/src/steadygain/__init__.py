"""Steady-state filter gains for linear Gaussian time-invariant systems.

Two routes to the same gain: a classical Riccati fixed-point oracle
(:func:`solve_dare`) and an actor-critic policy-iteration learner
(:func:`train`) operating on the estimation-error process, plus a Monte
Carlo harness to compare gains on simulated trajectories.
"""

from .errors import DivergenceError, NumericalError
from .models import (
    LinearGaussianModel,
    VehicleParams,
    build_bicycle_model,
    discretize,
    equivalent_moment_arm,
    sigma_from_bound,
)
from .kalman import (
    SteadyStateSolution,
    closed_form_one_step_gain,
    finite_horizon_gains,
    gain_from_predicted_cov,
    kalman_recursion,
    riccati_iterate,
    solve_dare,
    spectral_radius,
    symmetrize,
)
from .error_mdp import (
    FIXED_INITIAL_ERROR,
    UNIFORM_BOX_BOUNDS,
    NoiseDraw,
    draw_noise,
    refresh_pool,
    sample_initial_error,
    save_pool_csv,
    step,
)
from .training import (
    AdamState,
    TrainerConfig,
    TrainHistory,
    actor_loss_and_grad,
    adam_update,
    critic_loss_and_grad,
    critic_value,
    train,
    train_average,
)
from .evaluation import (
    EvalConfig,
    EvalReport,
    control_signal,
    detect_critical_time,
    evaluate_gains,
    gain_metrics,
    losses,
    run_trajectories,
    run_trajectory,
)
from .cli import RunConfig

__version__ = "0.1.0"

__all__ = [
    "DivergenceError",
    "NumericalError",
    "LinearGaussianModel",
    "VehicleParams",
    "build_bicycle_model",
    "discretize",
    "equivalent_moment_arm",
    "sigma_from_bound",
    "SteadyStateSolution",
    "closed_form_one_step_gain",
    "finite_horizon_gains",
    "gain_from_predicted_cov",
    "kalman_recursion",
    "riccati_iterate",
    "solve_dare",
    "spectral_radius",
    "symmetrize",
    "FIXED_INITIAL_ERROR",
    "UNIFORM_BOX_BOUNDS",
    "NoiseDraw",
    "draw_noise",
    "refresh_pool",
    "sample_initial_error",
    "save_pool_csv",
    "step",
    "AdamState",
    "TrainerConfig",
    "TrainHistory",
    "actor_loss_and_grad",
    "adam_update",
    "critic_loss_and_grad",
    "critic_value",
    "train",
    "train_average",
    "EvalConfig",
    "EvalReport",
    "control_signal",
    "detect_critical_time",
    "evaluate_gains",
    "gain_metrics",
    "losses",
    "run_trajectories",
    "run_trajectory",
    "RunConfig",
    "__version__",
]
