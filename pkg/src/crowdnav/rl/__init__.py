from .adam import AdamState, adam_step, clip_grad_norm
from .buffer import RolloutBuffer
from .gae import compute_advantages
from .losses import PpoLossResult, gaussian_entropy, gaussian_logp, ppo_loss
from .trainer import METRICS_COLUMNS, Trainer, UpdateMetrics

__all__ = [
    "AdamState",
    "METRICS_COLUMNS",
    "PpoLossResult",
    "RolloutBuffer",
    "Trainer",
    "UpdateMetrics",
    "adam_step",
    "clip_grad_norm",
    "compute_advantages",
    "gaussian_entropy",
    "gaussian_logp",
    "ppo_loss",
]
