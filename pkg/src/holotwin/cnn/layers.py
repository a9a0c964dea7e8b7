"""Numpy layer kernels with explicit backward passes.

Activations are (channels, height, width) arrays; batch size is always 1.
"""

import numpy as np


def pad_edge(x, p):
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (p, p), (p, p)), mode="edge")


def unpad_edge_grad(dxp, p):
    """Adjoint of ``pad_edge``: fold the gradient of replicated samples onto the edges."""
    if p == 0:
        return dxp
    g = dxp.copy()
    W = g.shape[2] - 2 * p
    H = g.shape[1] - 2 * p
    g[:, :, p] += g[:, :, :p].sum(axis=2)
    g[:, :, p + W - 1] += g[:, :, p + W:].sum(axis=2)
    g = g[:, :, p:p + W]
    g[:, p, :] += g[:, :p, :].sum(axis=1)
    g[:, p + H - 1, :] += g[:, p + H:, :].sum(axis=1)
    return np.ascontiguousarray(g[:, p:p + H, :])


# im2col buffers are built per band of output rows to bound memory on large tiles
_COL_BUDGET = 1 << 24


def _bands(C, K, H, W):
    rows = max(1, _COL_BUDGET // (C * K * K * W))
    for r0 in range(0, H, rows):
        yield r0, min(H, r0 + rows)


def _im2col(xp, K, r0, r1, W):
    C = xp.shape[0]
    cols = np.empty((C, K, K, r1 - r0, W), dtype=xp.dtype)
    for ky in range(K):
        for kx in range(K):
            cols[:, ky, kx] = xp[:, r0 + ky:r1 + ky, kx:kx + W]
    return cols.reshape(C * K * K, (r1 - r0) * W)


def conv2d(x, w, b):
    """'Same' cross-correlation with replicate boundary. w: (out, in, k, k)."""
    C, H, W = x.shape
    F, Cw, K, _ = w.shape
    assert C == Cw, (C, Cw)
    xp = pad_edge(x, K // 2)
    w2 = w.reshape(F, C * K * K)
    y = np.empty((F, H, W), dtype=x.dtype)
    for r0, r1 in _bands(C, K, H, W):
        y[:, r0:r1] = (w2 @ _im2col(xp, K, r0, r1, W)).reshape(F, r1 - r0, W)
    y += b[:, None, None]
    return y


def conv2d_backward(dy, x, w):
    C, H, W = x.shape
    F, _, K, _ = w.shape
    p = K // 2
    xp = pad_edge(x, p)
    w2 = w.reshape(F, C * K * K)
    dw = np.zeros((F, C * K * K), dtype=w.dtype)
    dxp = np.zeros_like(xp)
    for r0, r1 in _bands(C, K, H, W):
        dyb = dy[:, r0:r1].reshape(F, -1)
        dw += dyb @ _im2col(xp, K, r0, r1, W).T
        dcols = (w2.T @ dyb).reshape(C, K, K, r1 - r0, W)
        for ky in range(K):
            for kx in range(K):
                dxp[:, r0 + ky:r1 + ky, kx:kx + W] += dcols[:, ky, kx]
    db = dy.reshape(F, -1).sum(axis=1)
    return unpad_edge_grad(dxp, p), dw.reshape(w.shape), db


def relu(x):
    return np.maximum(x, 0)


def relu_backward(dy, y):
    return dy * (y > 0)


def _windows(x):
    C, H, W = x.shape
    return x.reshape(C, H // 2, 2, W // 2, 2).transpose(0, 1, 3, 2, 4).reshape(C, H // 2, W // 2, 4)


def _unwindows(g, shape):
    C, H, W = shape
    return g.reshape(C, H // 2, W // 2, 2, 2).transpose(0, 1, 3, 2, 4).reshape(C, H, W)


def maxpool2(x):
    win = _windows(x)
    idx = win.argmax(axis=-1)
    return np.take_along_axis(win, idx[..., None], axis=-1)[..., 0], idx


def maxpool2_backward(dy, idx, shape):
    g = np.zeros(dy.shape + (4,), dtype=dy.dtype)
    np.put_along_axis(g, idx[..., None], dy[..., None], axis=-1)
    return _unwindows(g, shape)


def avgpool2(x):
    return _windows(x).mean(axis=-1)


def avgpool2_backward(dy, shape):
    g = np.repeat(dy[..., None] * 0.25, 4, axis=-1)
    return _unwindows(g, shape)


def _upsample_axis(x, axis):
    # Half-pixel aligned 2x linear interpolation, edges clamped.
    x = np.moveaxis(x, axis, -1)
    prev = np.concatenate([x[..., :1], x[..., :-1]], axis=-1)
    nxt = np.concatenate([x[..., 1:], x[..., -1:]], axis=-1)
    out = np.empty(x.shape[:-1] + (2 * x.shape[-1],), dtype=x.dtype)
    out[..., 0::2] = 0.75 * x + 0.25 * prev
    out[..., 1::2] = 0.75 * x + 0.25 * nxt
    return np.moveaxis(out, -1, axis)


def _upsample_axis_backward(dy, axis):
    dy = np.moveaxis(dy, axis, -1)
    even = dy[..., 0::2]
    odd = dy[..., 1::2]
    dx = 0.75 * (even + odd)
    dx[..., :-1] += 0.25 * even[..., 1:]
    dx[..., 0] += 0.25 * even[..., 0]
    dx[..., 1:] += 0.25 * odd[..., :-1]
    dx[..., -1] += 0.25 * odd[..., -1]
    return np.moveaxis(dx, -1, axis)


def upsample2_bilinear(x):
    return _upsample_axis(_upsample_axis(x, 1), 2)


def upsample2_bilinear_backward(dy):
    return _upsample_axis_backward(_upsample_axis_backward(dy, 2), 1)


def upsample2_nearest(x):
    return x.repeat(2, axis=1).repeat(2, axis=2)


def upsample2_nearest_backward(dy):
    C, H, W = dy.shape
    return dy.reshape(C, H // 2, 2, W // 2, 2).sum(axis=(2, 4))
