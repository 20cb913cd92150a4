"""Forward and backward kernels for NHWC arrays."""

import numpy as np


def im2col(x, k=3):
    """Same-padded k x k patches: (N, H, W, C) -> (N, H, W, k*k*C)."""
    n, h, w, c = x.shape
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
    # win: (N, H, W, C, k, k) -> (N, H, W, k, k, C)
    return np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(n, h, w, k * k * c)


def col2im(dcols, shape, k=3):
    """Adjoint of :func:`im2col`."""
    n, h, w, c = shape
    pad = k // 2
    d = dcols.reshape(n, h, w, k, k, c)
    dxp = np.zeros((n, h + 2 * pad, w + 2 * pad, c), dtype=dcols.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, i:i + h, j:j + w, :] += d[:, :, :, i, j, :]
    return dxp[:, pad:pad + h, pad:pad + w, :]


def conv_forward(x, weight, bias):
    k = weight.shape[0]
    cols = im2col(x, k)
    out = cols @ weight.reshape(-1, weight.shape[-1]) + bias
    return out, cols


def conv_backward(dout, cols, x_shape, weight):
    k = weight.shape[0]
    cout = weight.shape[-1]
    flat_cols = cols.reshape(-1, cols.shape[-1])
    flat_d = dout.reshape(-1, cout)
    dw = (flat_cols.T @ flat_d).reshape(weight.shape)
    db = flat_d.sum(axis=0)
    dcols = dout @ weight.reshape(-1, cout).T
    return col2im(dcols, x_shape, k), dw, db


def _pool_windows(x):
    n, h, w, c = x.shape
    return (x.reshape(n, h // 2, 2, w // 2, 2, c)
             .transpose(0, 1, 3, 5, 2, 4)
             .reshape(n, h // 2, w // 2, c, 4))


def maxpool_forward(x):
    """2x2 stride-2 max pool; ties route to the first window element."""
    win = _pool_windows(x)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx


def maxpool_backward(dout, idx, x_shape):
    n, h, w, c = x_shape
    dwin = np.zeros(dout.shape + (4,), dtype=dout.dtype)
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
    return (dwin.reshape(n, h // 2, w // 2, c, 2, 2)
                .transpose(0, 1, 4, 2, 5, 3)
                .reshape(n, h, w, c))


def bilinear_resize(image, out_h, out_w):
    """Half-pixel-centred bilinear resize of an (H, W) or (H, W, C) array."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]

    def axis_weights(n_in, n_out):
        pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0.0, n_in - 1)
        lo = np.floor(pos).astype(int)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    y0, y1, fy = axis_weights(h, out_h)
    x0, x1, fx = axis_weights(w, out_w)
    extra = (None,) * (image.ndim - 2)
    fy = fy[(slice(None), None) + extra]
    fx = fx[(None, slice(None)) + extra]
    top = image[y0][:, x0] * (1 - fx) + image[y0][:, x1] * fx
    bottom = image[y1][:, x0] * (1 - fx) + image[y1][:, x1] * fx
    return top * (1 - fy) + bottom * fy
