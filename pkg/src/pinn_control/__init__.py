"""Physics-informed neural networks for open-loop control of 1-D PDEs with
online identification of an unknown diffusion coefficient, together with a
classical finite-difference adjoint-gradient reference solver."""

__version__ = "0.1.0"

from .autodiff import (
    DerivativeBundle,
    GradientSet,
    Jet,
    Recording,
    Tape,
    Variable,
    eval_with_input_jets,
    grad_scalar,
)
from .loss import LossBreakdown, LossWeights, total_loss
from .metrics import ErrorReport, error_report, relative_l2
from .network import ModelParams, NetworkConfig, NetworkParams, forward, init_params
from .problems import Domain, ProblemSpec, make_problem
from .reference import (
    Grid,
    GridField,
    ReferenceSolution,
    SolverConfig,
    evaluate_cost,
    gradient_method,
    solve_adjoint,
    solve_state,
)
from .sampling import TrainingDataset, sample_dataset
from .train import TrainConfig, TrainHistory, adam_step, train

__all__ = [
    "DerivativeBundle",
    "Domain",
    "ErrorReport",
    "GradientSet",
    "Grid",
    "GridField",
    "Jet",
    "LossBreakdown",
    "LossWeights",
    "ModelParams",
    "NetworkConfig",
    "NetworkParams",
    "ProblemSpec",
    "Recording",
    "ReferenceSolution",
    "SolverConfig",
    "Tape",
    "TrainConfig",
    "TrainHistory",
    "TrainingDataset",
    "Variable",
    "adam_step",
    "error_report",
    "eval_with_input_jets",
    "evaluate_cost",
    "forward",
    "grad_scalar",
    "gradient_method",
    "init_params",
    "make_problem",
    "relative_l2",
    "sample_dataset",
    "solve_adjoint",
    "solve_state",
    "total_loss",
    "train",
]
