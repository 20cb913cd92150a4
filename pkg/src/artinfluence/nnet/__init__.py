"""Miniature convolutional style classifier with manual backpropagation."""

from .checkpoint import CheckpointError
from .checkpoint import load as load_checkpoint
from .checkpoint import save as save_checkpoint
from .explain import (GradCamMap, ObjectiveError, filter_objective, filter_visualization,
                      grad_cam, gradcam_from)
from .gradcheck import LINEAR_CONFIG, TINY_CONFIG, gradient_check
from .network import (FEATURE_WIDTH, Cache, NetworkConfig, NetworkParams, ShapeError,
                      StaleCacheError, backprop, backward, cross_entropy, extract_features,
                      extract_features_batch, forward, init_params, loss_and_grads,
                      predict_proba, softmax)
from .train import (EpochRecord, TrainConfig, TrainingDivergedError, TrainResult, history_to_csv,
                    train)

__all__ = [
    "FEATURE_WIDTH", "LINEAR_CONFIG", "TINY_CONFIG", "Cache", "CheckpointError", "EpochRecord",
    "GradCamMap", "NetworkConfig", "NetworkParams", "ObjectiveError", "ShapeError",
    "StaleCacheError", "TrainConfig", "TrainResult", "TrainingDivergedError", "backprop",
    "backward", "cross_entropy", "extract_features", "extract_features_batch",
    "filter_objective", "filter_visualization", "forward", "grad_cam", "gradcam_from",
    "gradient_check", "history_to_csv", "init_params", "load_checkpoint", "loss_and_grads", "predict_proba",
    "save_checkpoint", "softmax", "train",
]
