"""Label regularization toolkit.

Smoothed-label construction (uniform, distillation-style, and the
closed-form optimum of a bi-level label-regularization objective), the
unified objective and its gradients, an independent simplex solver for
verifying the closed form, and a small seeded training harness for
comparing regularizers.
"""

from .numerics import entropy, kl_div, log_softmax, softmax, tempered_softmax
from .smoothing import (
    SmoothedLabel,
    SmoothingConfig,
    adaptive_alpha,
    build_label,
    labo_from_logits,
    labo_optimal_smoothing,
    mix_label,
    uniform_smooth,
)
from .objectives import (
    ObjectiveBreakdown,
    cp_loss,
    grad_wrt_logits,
    kd_decomposition_residual,
    kd_loss,
    smoothed_ce,
    unified_objective,
)
from .oracle import SimplexSolverReport, hessian_check, solve_inner_numeric, verify_closed_form
from .model import MlpModel, SgdOptimizer, load_checkpoint, save_checkpoint
from .data import Dataset, gaussian_blobs, load_csv, load_idx
from .train import ConfidenceHistogram, EpochReport, TrainConfig, evaluate, run_training, train_teacher

__version__ = "0.1.0"
