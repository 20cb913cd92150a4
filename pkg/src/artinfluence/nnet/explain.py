"""Grad-CAM saliency maps and filter visualization by gradient ascent."""

import logging
from dataclasses import dataclass

import numpy as np

from ..core import NUM_CLASSES
from .layers import bilinear_resize
from .network import backprop, forward

log = logging.getLogger(__name__)


class ObjectiveError(RuntimeError):
    """Non-finite objective during filter visualization; ``image`` is the last good one."""

    def __init__(self, message, image):
        super().__init__(message)
        self.image = image


@dataclass
class GradCamMap:
    values: np.ndarray
    layer_id: str
    class_index: int
    upsampled: np.ndarray | None = None


def _check_layer(params, layer_id):
    if layer_id not in params.config.conv_layers:
        raise ValueError(f"unknown convolution layer {layer_id!r}; "
                         f"choose from {list(params.config.conv_layers)}")


def gradcam_from(activations, gradients):
    """Combine (H, W, C) activations and their gradients into a Grad-CAM map.

    Channel weights are the spatial means of the gradients; the map is the
    ReLU of the weighted channel sum.
    """
    activations = np.asarray(activations, dtype=np.float64)
    gradients = np.asarray(gradients, dtype=np.float64)
    weights = gradients.mean(axis=(0, 1))
    return np.maximum(activations @ weights, 0.0)


def grad_cam(params, image, class_index, layer_id=None, upsample=True):
    """Grad-CAM for one (H, W, 3) image. Defaults to the last conv layer."""
    if not 0 <= int(class_index) < NUM_CLASSES:
        raise ValueError(f"class_index {class_index} outside 0..{NUM_CLASSES - 1}")
    layer_id = layer_id or params.config.conv_layers[-1]
    _check_layer(params, layer_id)
    logits, cache = forward(params, np.asarray(image)[None])
    upstream = np.zeros_like(logits)
    upstream[0, int(class_index)] = 1.0
    at = cache.op_index("relu", layer_id)
    _, _, captured = backprop(params, cache, upstream, capture=(at,))
    values = gradcam_from(cache.outputs[at][0], captured[at][0])
    up = None
    if upsample:
        h, w, _ = params.config.input_size
        up = np.maximum(bilinear_resize(values, h, w), 0.0)
    return GradCamMap(values, layer_id, int(class_index), up)


def _filter_objective(params, x, at, filter_index, want_grad):
    _, cache = forward(params, x[None])
    act = cache.outputs[at]
    value = float(act[..., filter_index].mean())
    if not want_grad:
        return value, None
    upstream = np.zeros_like(act)
    upstream[..., filter_index] = 1.0 / (act.shape[1] * act.shape[2])
    _, dx, _ = backprop(params, cache, upstream, top=at)
    return value, dx[0]


def filter_objective(params, image, layer_id, filter_index):
    """Mean post-ReLU activation of one filter for one image."""
    _check_layer(params, layer_id)
    at = params.config.ops().index(("relu", layer_id))
    return _filter_objective(params, np.asarray(image, dtype=params.dtype), at,
                             filter_index, False)[0]


def normalize_image(x):
    lo, hi = float(x.min()), float(x.max())
    if hi - lo <= 0:
        return np.zeros_like(x, dtype=np.float64)
    return (x - lo) / (hi - lo)


def filter_visualization(params, layer_id, filter_index, iterations, step_size=0.05,
                         seed=0, return_trace=False):
    """Projected gradient ascent on the input to excite one filter.

    Starts from uniform noise in [0, 1]. Steps follow the RMS-normalized
    gradient and the image is clipped to [0, 1]; a step that lowers the
    objective is undone and the step size halved, so the objective never
    decreases. The result is min-max normalized to [0, 1]. With
    ``return_trace`` the objective per iteration and the raw image are
    returned as well.
    """
    _check_layer(params, layer_id)
    n_filters = params.config.conv_blocks[params.config.conv_layers.index(layer_id)]
    if not 0 <= filter_index < n_filters:
        raise ValueError(f"filter_index {filter_index} outside 0..{n_filters - 1}")
    if iterations < 0 or not step_size > 0:
        raise ValueError("iterations must be >= 0 and step_size > 0")
    at = params.config.ops().index(("relu", layer_id))
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=params.config.input_size).astype(params.dtype)
    value, grad = _filter_objective(params, x, at, filter_index, True)
    if not np.isfinite(value):
        raise ObjectiveError("non-finite objective at the initial image", normalize_image(x))
    trace = [value]
    step = float(step_size)
    for it in range(iterations):
        rms = float(np.sqrt(np.mean(grad ** 2)))
        if rms == 0.0:
            # dead filter at this point: nothing to climb
            trace.append(value)
            continue
        candidate = np.clip(x + step * grad / rms, 0.0, 1.0).astype(params.dtype)
        new_value, new_grad = _filter_objective(params, candidate, at, filter_index, True)
        if not np.isfinite(new_value):
            raise ObjectiveError(f"non-finite objective at iteration {it}", normalize_image(x))
        if new_value >= value:
            x, value, grad = candidate, new_value, new_grad
        else:
            step *= 0.5
        trace.append(value)
    out = normalize_image(x)
    if return_trace:
        return out, np.asarray(trace), x
    return out
