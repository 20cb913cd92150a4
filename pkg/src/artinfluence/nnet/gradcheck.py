"""Finite-difference verification of the analytic backward pass."""

import logging

import numpy as np

from .network import (NetworkConfig, backward, cross_entropy, forward, forward_from,
                      init_params, softmax)

log = logging.getLogger(__name__)

TINY_CONFIG = NetworkConfig(input_size=(4, 4, 3), conv_blocks=(2,))
LINEAR_CONFIG = NetworkConfig(input_size=(2, 2, 3), conv_blocks=())


def _loss(params, images, labels, base=None, start=0):
    if base is None:
        logits, cache = forward(params, images)
    else:
        logits, cache = forward_from(params, base, start)
    return cross_entropy(softmax(logits), labels), cache


def _kink_signature(cache):
    """ReLU masks and pool argmaxes: the piece of the piecewise-smooth graph we are on."""
    parts = []
    for i, (kind, _) in enumerate(cache.ops):
        if kind == "relu":
            parts.append(np.packbits(cache.inputs[i] > 0).tobytes())
        elif kind == "pool":
            parts.append(cache.saved[i].tobytes())
    return b"".join(parts)


def relative_error(analytic, numeric, floor):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def gradient_check(config=TINY_CONFIG, seed=0, eps=1e-5, batch=3, return_details=False):
    """Largest relative error between backward and central differences.

    Checks every parameter at a random point (random weights and biases,
    random images and labels) in double precision. A coordinate whose
    perturbation moves a ReLU or max-pool switch is skipped, since the
    difference quotient there spans a kink. Gradients are compared relative to
    ``max(|analytic|, |numeric|, 1e-3 * max|analytic|)`` so entries that are
    tiny next to the rest of the gradient are held to an absolute standard.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    rng = np.random.default_rng(seed)
    params = init_params(config, seed, dtype=np.float64)
    for name, t in params.tensors.items():
        if name.endswith(".bias"):
            t[...] = rng.normal(0.0, 0.1, size=t.shape)
    images = rng.uniform(0.0, 1.0, size=(batch,) + config.input_size)
    labels = rng.integers(0, config.num_classes, size=batch)

    _, cache = _loss(params, images, labels)
    base_sig = _kink_signature(cache)
    grads = backward(params, cache, labels)
    scale = max(float(np.max(np.abs(g))) for g in grads.values())
    floor = max(1e-3 * scale, 1e-12)

    worst = 0.0
    skipped = 0
    checked = 0
    for name, t in params.tensors.items():
        g = grads[name]
        # ops before the one owning this tensor are unaffected by perturbing it
        start = cache.ops.index(("conv" if name.startswith("conv") else "fc", name.split(".")[0]))
        for idx in np.ndindex(t.shape):
            orig = t[idx]
            t[idx] = orig + eps
            lp, cp = _loss(params, images, labels, cache, start)
            t[idx] = orig - eps
            lm, cm = _loss(params, images, labels, cache, start)
            t[idx] = orig
            if _kink_signature(cp) != base_sig or _kink_signature(cm) != base_sig:
                skipped += 1
                continue
            numeric = (lp - lm) / (2 * eps)
            worst = max(worst, relative_error(float(g[idx]), numeric, floor))
            checked += 1
    log.debug("gradient check seed=%d: %d coordinates checked, %d skipped at kinks",
              seed, checked, skipped)
    if return_details:
        return worst, {"checked": checked, "skipped": skipped, "floor": floor}
    return worst
