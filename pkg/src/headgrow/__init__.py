"""Headgrow: Self-growing prototype heads for transformer layers."""

try:
    from ._about import __version__
except ImportError:
    __version__ = "0.0.0"

from _headgrow import palette
from _headgrow.baseline import DominanceReport
from _headgrow.baseline import DominanceTrial
from _headgrow.baseline import RandomMlpBasis
from _headgrow.baseline import compare_info_loss
from _headgrow.baseline import mlp_alignment
from _headgrow.baseline import mlp_captured_subspace
from _headgrow.dynamics import ArchitectureState
from _headgrow.dynamics import Birth
from _headgrow.dynamics import ConditionResult
from _headgrow.dynamics import EventRecord
from _headgrow.dynamics import HeadClasses
from _headgrow.dynamics import RunTrace
from _headgrow.dynamics import StepMetrics
from _headgrow.dynamics import StepSizeReport
from _headgrow.dynamics import StepSizes
from _headgrow.dynamics import classify_heads
from _headgrow.dynamics import coverage
from _headgrow.dynamics import gate_steps
from _headgrow.dynamics import growth_event
from _headgrow.dynamics import head_view
from _headgrow.dynamics import pruning_event
from _headgrow.dynamics import run
from _headgrow.dynamics import s_star
from _headgrow.dynamics import train_step
from _headgrow.dynamics import validate_step_sizes
from _headgrow.growth import CapturedSubspace
from _headgrow.growth import DirectionalSignal
from _headgrow.growth import ResidualReport
from _headgrow.growth import block_magnitudes
from _headgrow.growth import directional_info_loss
from _headgrow.growth import gamma_h
from _headgrow.growth import gate_alignment
from _headgrow.growth import gate_update
from _headgrow.growth import greedy_capture
from _headgrow.growth import greedy_direction_capture
from _headgrow.growth import growth_trigger
from _headgrow.growth import prune_check
from _headgrow.growth import residual_matrix
from _headgrow.growth import spawn_head
from _headgrow.harness import CheckResult
from _headgrow.harness import ExperimentReport
from _headgrow.harness import RunConfig
from _headgrow.harness import TOKEN_SCALINGS
from _headgrow.harness import Table
from _headgrow.harness import block_spectrum
from _headgrow.harness import force_order
from _headgrow.harness import gen_synthetic
from _headgrow.harness import load_config
from _headgrow.harness import main
from _headgrow.harness import parse_config
from _headgrow.harness import rotation_signal
from _headgrow.harness import run_checks
from _headgrow.harness import run_exp1
from _headgrow.harness import run_exp2
from _headgrow.harness import run_exp3
from _headgrow.harness import run_exp4
from _headgrow.harness import run_gradcheck
from _headgrow.harness import time_to_floor
from _headgrow.harness import to_builtin
from _headgrow.harness import token_scales
from _headgrow.harness import write_report
from _headgrow.harness import write_summary
from _headgrow.harness import write_table
from _headgrow.lyapunov import AuditReport
from _headgrow.lyapunov import FreeEnergyBreakdown
from _headgrow.lyapunov import HeadEnergy
from _headgrow.lyapunov import audit_monotone
from _headgrow.lyapunov import barrier
from _headgrow.lyapunov import barrier_gradient
from _headgrow.lyapunov import f1_bound
from _headgrow.lyapunov import free_energy
from _headgrow.lyapunov import head_energy
from _headgrow.lyapunov import temperature_potential
from _headgrow.numerics import Matrix
from _headgrow.numerics import Rng
from _headgrow.numerics import antisym_dominant_plane
from _headgrow.numerics import as_matrix
from _headgrow.numerics import canonical_signs
from _headgrow.numerics import central_differences
from _headgrow.numerics import finite_diff
from _headgrow.numerics import gram_schmidt_extend
from _headgrow.numerics import make_rng
from _headgrow.numerics import orthonormality_error
from _headgrow.numerics import random_orthonormal
from _headgrow.numerics import spawn_rngs
from _headgrow.numerics import spearman
from _headgrow.numerics import sqrt_psd
from _headgrow.numerics import sym_eig
from _headgrow.prototypes import LossDecomposition
from _headgrow.prototypes import PhiCurve
from _headgrow.prototypes import PrototypeBank
from _headgrow.prototypes import assignment_entropy
from _headgrow.prototypes import assignment_first_variation
from _headgrow.prototypes import assignment_second_variation
from _headgrow.prototypes import effective_scale
from _headgrow.prototypes import expand_tokens
from _headgrow.prototypes import gini_trace
from _headgrow.prototypes import grad_prototypes
from _headgrow.prototypes import grad_temperature
from _headgrow.prototypes import grad_v
from _headgrow.prototypes import loss_decomposition
from _headgrow.prototypes import loss_lq
from _headgrow.prototypes import phi_curve
from _headgrow.prototypes import phi_second_lower_bound
from _headgrow.prototypes import prototype_spread
from _headgrow.prototypes import residual_covariance_ck
from _headgrow.prototypes import separation_force
from _headgrow.prototypes import sigma_q
from _headgrow.prototypes import soft_assign
from _headgrow.prototypes import soft_centroids
from _headgrow.prototypes import squared_distances
from _headgrow.utils import CollapseError
from _headgrow.utils import ConfigError
from _headgrow.utils import DegenerateDirectionError
from _headgrow.utils import FileHandler
from _headgrow.utils import Formatter
from _headgrow.utils import HeadgrowError
from _headgrow.utils import InvariantError
from _headgrow.utils import Logger
from _headgrow.utils import NumericError
from _headgrow.utils import ParameterError
from _headgrow.utils import PruneRefusalError
from _headgrow.utils import ShapeError
from _headgrow.utils import StreamHandler
from _headgrow.utils import TTYPalette
from _headgrow.utils import create_logger
from _headgrow.utils import fmt_real
from _headgrow.utils import get_logger
from _headgrow.utils import strict_checks
from _headgrow.utils import strict_mode

__all__ = [
    "palette",
    "DominanceReport",
    "DominanceTrial",
    "RandomMlpBasis",
    "compare_info_loss",
    "mlp_alignment",
    "mlp_captured_subspace",
    "ArchitectureState",
    "Birth",
    "ConditionResult",
    "EventRecord",
    "HeadClasses",
    "RunTrace",
    "StepMetrics",
    "StepSizeReport",
    "StepSizes",
    "classify_heads",
    "coverage",
    "gate_steps",
    "growth_event",
    "head_view",
    "pruning_event",
    "run",
    "s_star",
    "train_step",
    "validate_step_sizes",
    "CapturedSubspace",
    "DirectionalSignal",
    "ResidualReport",
    "block_magnitudes",
    "directional_info_loss",
    "gamma_h",
    "gate_alignment",
    "gate_update",
    "greedy_capture",
    "greedy_direction_capture",
    "growth_trigger",
    "prune_check",
    "residual_matrix",
    "spawn_head",
    "CheckResult",
    "ExperimentReport",
    "RunConfig",
    "TOKEN_SCALINGS",
    "Table",
    "block_spectrum",
    "force_order",
    "gen_synthetic",
    "load_config",
    "main",
    "parse_config",
    "rotation_signal",
    "run_checks",
    "run_exp1",
    "run_exp2",
    "run_exp3",
    "run_exp4",
    "run_gradcheck",
    "time_to_floor",
    "to_builtin",
    "token_scales",
    "write_report",
    "write_summary",
    "write_table",
    "AuditReport",
    "FreeEnergyBreakdown",
    "HeadEnergy",
    "audit_monotone",
    "barrier",
    "barrier_gradient",
    "f1_bound",
    "free_energy",
    "head_energy",
    "temperature_potential",
    "Matrix",
    "Rng",
    "antisym_dominant_plane",
    "as_matrix",
    "canonical_signs",
    "central_differences",
    "finite_diff",
    "gram_schmidt_extend",
    "make_rng",
    "orthonormality_error",
    "random_orthonormal",
    "spawn_rngs",
    "spearman",
    "sqrt_psd",
    "sym_eig",
    "LossDecomposition",
    "PhiCurve",
    "PrototypeBank",
    "assignment_entropy",
    "assignment_first_variation",
    "assignment_second_variation",
    "effective_scale",
    "expand_tokens",
    "gini_trace",
    "grad_prototypes",
    "grad_temperature",
    "grad_v",
    "loss_decomposition",
    "loss_lq",
    "phi_curve",
    "phi_second_lower_bound",
    "prototype_spread",
    "residual_covariance_ck",
    "separation_force",
    "sigma_q",
    "soft_assign",
    "soft_centroids",
    "squared_distances",
    "CollapseError",
    "ConfigError",
    "DegenerateDirectionError",
    "FileHandler",
    "Formatter",
    "HeadgrowError",
    "InvariantError",
    "Logger",
    "NumericError",
    "ParameterError",
    "PruneRefusalError",
    "ShapeError",
    "StreamHandler",
    "TTYPalette",
    "create_logger",
    "fmt_real",
    "get_logger",
    "strict_checks",
    "strict_mode",
]
