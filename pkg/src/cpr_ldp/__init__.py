"""Cycle and phase recovery for periodic time series under w-event LDP.

Devices normalize and perturb each sample with the square-wave randomizer
at a per-event budget eps0 = epsilon / w; the server recovers the dominant
period from the privatized stream via multi-scale spectral probing with
time-domain validation and cross-scale consensus, then rebuilds the cycle
template by phase pooling, EM decoding and KDE-mode summarization.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .baselines import (
    BaselineConfig,
    baseline_laplace_smooth,
    baseline_lbd,
    baseline_sw_direct,
    baseline_sw_filter,
    baseline_sw_moving,
)
from .detection import (
    DetectionConfig,
    ScaleEstimate,
    WindowEstimate,
    consensus_vote,
    default_detection_config,
    detect_period,
)
from .exceptions import IngestionError, PeriodDetectionError
from .experiments import (
    ExperimentConfig,
    StreamSpec,
    TrialReport,
    build_periodic_stream,
    emit_report,
    load_csv_column,
    load_experiment_config,
    run_detection_trials,
    run_experiment,
    run_reconstruction_sweep,
)
from .mechanisms import (
    BudgetSplit,
    SwParams,
    laplace_perturb_series,
    split_budget,
    sw_density,
    sw_params,
    sw_perturb,
    sw_perturb_series,
)
from .recovery import (
    EmConfig,
    EmResult,
    PhaseGroups,
    cpr_reconstruct,
    cpr_recover,
    em_sw_decode,
    kde_density,
    kde_mode,
    phase_groups,
    reconstruct_template,
)
from .signal import (
    cosine_distance,
    mirror_pad,
    normalize,
    period_loss,
    resample_linear,
    tile_crop,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "__version__",
    "BaselineConfig",
    "BudgetSplit",
    "DetectionConfig",
    "EmConfig",
    "EmResult",
    "ExperimentConfig",
    "IngestionError",
    "PeriodDetectionError",
    "PhaseGroups",
    "ScaleEstimate",
    "StreamSpec",
    "SwParams",
    "TrialReport",
    "WindowEstimate",
    "baseline_laplace_smooth",
    "baseline_lbd",
    "baseline_sw_direct",
    "baseline_sw_filter",
    "baseline_sw_moving",
    "build_periodic_stream",
    "consensus_vote",
    "cosine_distance",
    "cpr_reconstruct",
    "cpr_recover",
    "default_detection_config",
    "detect_period",
    "em_sw_decode",
    "emit_report",
    "kde_density",
    "kde_mode",
    "laplace_perturb_series",
    "load_csv_column",
    "load_experiment_config",
    "mirror_pad",
    "normalize",
    "period_loss",
    "phase_groups",
    "reconstruct_template",
    "resample_linear",
    "run_detection_trials",
    "run_experiment",
    "run_reconstruction_sweep",
    "split_budget",
    "sw_density",
    "sw_params",
    "sw_perturb",
    "sw_perturb_series",
    "tile_crop",
]
