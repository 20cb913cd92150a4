"""The miniature style classifier: conv blocks, a 512-wide ReLU head, 9 logits."""

from dataclasses import dataclass, field

import numpy as np

from ..core import NUM_CLASSES
from . import layers

FEATURE_WIDTH = 512
KERNEL = 3
POOL = 2


class ShapeError(ValueError):
    pass


class StaleCacheError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkConfig:
    input_size: tuple = (32, 32, 3)
    conv_blocks: tuple = (8, 16, 32)
    feature_width: int = FEATURE_WIDTH
    num_classes: int = NUM_CLASSES

    def __post_init__(self):
        object.__setattr__(self, "input_size", tuple(int(v) for v in self.input_size))
        object.__setattr__(self, "conv_blocks", tuple(int(v) for v in self.conv_blocks))
        h, w, c = self.input_size
        if c != 3:
            raise ValueError("inputs must have 3 channels")
        if h <= 0 or w <= 0 or any(f <= 0 for f in self.conv_blocks):
            raise ValueError("zero-sized layer in network config")
        scale = POOL ** len(self.conv_blocks)
        if h % scale or w % scale:
            raise ValueError(f"input {h}x{w} not divisible by {scale} for "
                             f"{len(self.conv_blocks)} pooling stages")
        if self.feature_width != FEATURE_WIDTH:
            raise ValueError(f"feature_width is fixed at {FEATURE_WIDTH}")
        if self.num_classes != NUM_CLASSES:
            raise ValueError(f"num_classes is fixed at {NUM_CLASSES}")

    @property
    def conv_layers(self):
        return tuple(f"conv{i}" for i in range(1, len(self.conv_blocks) + 1))

    @property
    def flat_size(self):
        h, w, _ = self.input_size
        scale = POOL ** len(self.conv_blocks)
        channels = self.conv_blocks[-1] if self.conv_blocks else 3
        return (h // scale) * (w // scale) * channels

    def param_shapes(self):
        shapes = {}
        cin = 3
        for name, cout in zip(self.conv_layers, self.conv_blocks):
            shapes[f"{name}.weight"] = (KERNEL, KERNEL, cin, cout)
            shapes[f"{name}.bias"] = (cout,)
            cin = cout
        shapes["fc1.weight"] = (self.flat_size, self.feature_width)
        shapes["fc1.bias"] = (self.feature_width,)
        shapes["fc2.weight"] = (self.feature_width, self.num_classes)
        shapes["fc2.bias"] = (self.num_classes,)
        return shapes

    def ops(self):
        """The layer sequence as (kind, layer name) pairs."""
        out = []
        for name in self.conv_layers:
            out += [("conv", name), ("relu", name), ("pool", name)]
        out += [("flatten", None), ("fc", "fc1"), ("relu", "fc1"), ("fc", "fc2")]
        return out


@dataclass
class NetworkParams:
    config: NetworkConfig
    tensors: dict
    rng_seed: int | None = None

    def __getitem__(self, name):
        return self.tensors[name]

    @property
    def dtype(self):
        return next(iter(self.tensors.values())).dtype

    def copy(self):
        return NetworkParams(self.config, {k: v.copy() for k, v in self.tensors.items()},
                             self.rng_seed)

    def astype(self, dtype):
        return NetworkParams(self.config, {k: v.astype(dtype) for k, v in self.tensors.items()},
                             self.rng_seed)

    def num_parameters(self):
        return sum(v.size for v in self.tensors.values())

    def flat(self):
        return np.concatenate([v.ravel() for v in self.tensors.values()])


def init_params(config, seed, dtype=np.float64):
    """He-uniform weights (limit sqrt(6 / fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in config.param_shapes().items():
        if any(d <= 0 for d in shape):
            raise ValueError(f"zero-sized tensor {name} {shape}")
        if name.endswith(".bias"):
            tensors[name] = np.zeros(shape, dtype=dtype)
        else:
            fan_in = int(np.prod(shape[:-1]))
            limit = np.sqrt(6.0 / fan_in)
            tensors[name] = rng.uniform(-limit, limit, size=shape).astype(dtype)
    return NetworkParams(config, tensors, seed)


@dataclass
class Cache:
    """Per-op inputs and saved state from one forward pass."""

    params: NetworkParams
    ops: list
    inputs: list = field(default_factory=list)
    saved: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    def op_index(self, kind, name):
        return self.ops.index((kind, name))

    def activation(self, layer_id):
        """Post-ReLU output of a conv or fc1 layer."""
        return self.outputs[self.op_index("relu", layer_id)]

    @property
    def features(self):
        return self.activation("fc1")

    @property
    def logits(self):
        return self.outputs[-1]


def _check_images(config, images):
    images = np.asarray(images)
    if images.ndim == 3:
        images = images[None]
    if images.ndim != 4 or images.shape[1:] != config.input_size:
        raise ShapeError(f"expected images of shape (N, {', '.join(map(str, config.input_size))}), "
                         f"got {images.shape}")
    return images


def forward(params, images):
    """Run the network on (N, H, W, 3) images in [0, 1]; returns (logits, cache)."""
    config = params.config
    x = _check_images(config, images).astype(params.dtype, copy=False)
    cache = Cache(params, config.ops())
    return _run(params, cache, x, 0)


def forward_from(params, cache, start):
    """Recompute ops ``start..`` reusing the inputs ``cache`` holds for earlier ops."""
    fresh = Cache(params, cache.ops, cache.inputs[:start], cache.saved[:start],
                  cache.outputs[:start])
    return _run(params, fresh, cache.inputs[start], start)


def _run(params, cache, x, start):
    for kind, name in cache.ops[start:]:
        cache.inputs.append(x)
        saved = None
        if kind == "conv":
            x, saved = layers.conv_forward(x, params[f"{name}.weight"], params[f"{name}.bias"])
        elif kind == "relu":
            x = np.maximum(x, 0)
        elif kind == "pool":
            x, saved = layers.maxpool_forward(x)
        elif kind == "flatten":
            x = x.reshape(x.shape[0], -1)
        elif kind == "fc":
            x = x @ params[f"{name}.weight"] + params[f"{name}.bias"]
        cache.saved.append(saved)
        cache.outputs.append(x)
    return x, cache


def backprop(params, cache, upstream, top=None, capture=()):
    """Reverse pass from the output of op ``top`` (default: the logits).

    ``upstream`` is the gradient with respect to that op's output. Returns
    (param_grads, input_grad, captured) where ``captured`` maps each op index
    in ``capture`` to the gradient of its output.
    """
    if cache.params is not params:
        raise StaleCacheError("cache was produced by a different parameter set")
    for name, t in params.tensors.items():
        if t.shape != params.config.param_shapes()[name]:
            raise StaleCacheError(f"parameter {name} changed shape since the forward pass")
    top = len(cache.ops) - 1 if top is None else top
    if np.shape(upstream) != cache.outputs[top].shape:
        raise ShapeError(f"upstream gradient shape {np.shape(upstream)} does not match "
                         f"{cache.outputs[top].shape}")
    grads = {k: np.zeros_like(v) for k, v in params.tensors.items()}
    captured = {}
    g = np.asarray(upstream, dtype=params.dtype)
    for i in range(top, -1, -1):
        if i in capture:
            captured[i] = g
        kind, name = cache.ops[i]
        x = cache.inputs[i]
        if kind == "conv":
            g, grads[f"{name}.weight"], grads[f"{name}.bias"] = layers.conv_backward(
                g, cache.saved[i], x.shape, params[f"{name}.weight"])
        elif kind == "relu":
            g = g * (x > 0)
        elif kind == "pool":
            g = layers.maxpool_backward(g, cache.saved[i], x.shape)
        elif kind == "flatten":
            g = g.reshape(x.shape)
        elif kind == "fc":
            grads[f"{name}.weight"] = x.T @ g
            grads[f"{name}.bias"] = g.sum(axis=0)
            g = g @ params[f"{name}.weight"].T
    return grads, g, captured


def softmax(logits):
    """Row-wise softmax with max subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_labels(labels, n_classes=NUM_CLASSES):
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels must lie in 0..{n_classes - 1}")
    return labels.astype(np.intp)


def cross_entropy(probs, labels):
    """Mean negative log-likelihood, probabilities clamped at 1e-12."""
    probs = np.asarray(probs)
    labels = _check_labels(labels, probs.shape[-1])
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, 1e-12))))


def loss_and_grads(params, images, labels):
    logits, cache = forward(params, images)
    probs = softmax(logits)
    loss = cross_entropy(probs, labels)
    return loss, backward(params, cache, labels), probs


def backward(params, cache, labels):
    """Gradients of mean cross-entropy, keyed like ``params.tensors``."""
    logits = cache.logits
    labels = _check_labels(labels, logits.shape[-1])
    if len(labels) != logits.shape[0]:
        raise StaleCacheError(f"{len(labels)} labels for a batch of {logits.shape[0]}")
    dlogits = softmax(logits)
    dlogits[np.arange(len(labels)), labels] -= 1.0
    dlogits /= len(labels)
    grads, _, _ = backprop(params, cache, dlogits.astype(params.dtype))
    return grads


def predict_proba(params, images, batch_size=256):
    images = _check_images(params.config, images)
    out = [softmax(forward(params, images[i:i + batch_size])[0])
           for i in range(0, len(images), batch_size)]
    if not out:
        return np.zeros((0, params.config.num_classes))
    return np.concatenate(out)


def extract_features(params, image):
    """512-d post-ReLU activations of the penultimate layer for one image."""
    image = np.asarray(image)
    if image.shape != params.config.input_size:
        raise ShapeError(f"expected image of shape {params.config.input_size}, got {image.shape}")
    _, cache = forward(params, image[None])
    return cache.features[0].astype(np.float64)


def extract_features_batch(params, images, batch_size=256):
    images = _check_images(params.config, images)
    out = []
    for i in range(0, len(images), batch_size):
        _, cache = forward(params, images[i:i + batch_size])
        out.append(cache.features.astype(np.float64))
    if not out:
        return np.zeros((0, FEATURE_WIDTH))
    return np.concatenate(out)
