"""Forward/backward kernels for every layer type.

All ops take batched arrays: grid signals are (batch, channels, rows, cols).
Each ``*_forward`` returns ``(out, cache)``; the matching ``*_backward``
takes the upstream gradient and that cache.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..lattice import KernelSupport


class NonFiniteError(FloatingPointError):
    pass


def check_finite(a: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"non-finite values in {what}")
    return a


# --------------------------------------------------------------------------
# lattice convolutions


def _lattice_index(size: int, coords, kind: str) -> np.ndarray:
    """(len(coords), size) table of x ^ a (meet) or x v a (join)."""
    grid = np.arange(size)[None, :]
    coords = np.asarray(coords)[:, None]
    if kind == "meet":
        return np.minimum(grid, coords)
    if kind == "join":
        return np.maximum(grid, coords)
    raise ValueError(f"unknown lattice operation {kind!r}")


def _one_hot(index: np.ndarray, size: int) -> np.ndarray:
    # P[k, x, p] = 1 where p == index[k, x]
    return (index[:, :, None] == np.arange(size)[None, None, :]).astype(np.float64)


def lattice_conv_forward(f, weight, support: KernelSupport, bias=None, kind: str = "meet"):
    """out[b,j,x,y] = bias[j] + sum_i sum_(a,b) f[b,i,x op a, y op b] * weight[j,i,ka,kb]

    where (a, b) = (support.xs[ka], support.ys[kb]) and op is min for the
    meet convolution, max for the join convolution.
    """
    B, C, H, W = f.shape
    if weight.shape[1] != C or weight.shape[2:] != support.shape:
        raise ValueError(
            f"kernel shape {weight.shape} does not match input channels {C} and support {support.shape}"
        )
    if max(support.xs) >= H or max(support.ys) >= W:
        raise ValueError(f"kernel support {support} lies outside the {H}x{W} lattice")
    ix = _lattice_index(H, support.xs, kind)
    iy = _lattice_index(W, support.ys, kind)
    gathered = f[:, :, ix[:, None, :, None], iy[None, :, None, :]]  # (B,C,sx,sy,H,W)
    out = np.tensordot(gathered, weight, axes=([1, 2, 3], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias[None, :, None, None]
    return out, (gathered, weight, ix, iy, (H, W))


def lattice_conv_backward(dout, cache):
    gathered, weight, ix, iy, (H, W) = cache
    dweight = np.tensordot(dout, gathered, axes=([0, 2, 3], [0, 4, 5]))
    dbias = dout.sum(axis=(0, 2, 3))
    # every weight site reads f at (x op a, y op b); scatter back through
    # one-hot selection matrices along each axis
    dg = np.tensordot(weight, dout, axes=([0], [1]))  # (C,sx,sy,B,H,W)
    t = np.tensordot(dg, _one_hot(iy, W), axes=([2, 5], [0, 1]))  # (C,sx,B,H,Wq)
    df = np.tensordot(t, _one_hot(ix, H), axes=([1, 3], [0, 1]))  # (C,B,Wq,Hp)
    return df.transpose(1, 0, 3, 2), dweight, dbias


def meet_conv(f, weight, support, bias=None):
    """Single-sample or batched meet convolution (forward only)."""
    single = f.ndim == 3
    out, _ = lattice_conv_forward(f[None] if single else f, weight, support, bias, "meet")
    return out[0] if single else out


def join_conv(f, weight, support, bias=None):
    single = f.ndim == 3
    out, _ = lattice_conv_forward(f[None] if single else f, weight, support, bias, "join")
    return out[0] if single else out


def mixed_lattice_forward(f, w_meet, w_join, support, bias, alpha):
    """alpha * MeetConv + (1 - alpha) * JoinConv, one shared bias."""
    m, cm = lattice_conv_forward(f, w_meet, support, None, "meet")
    j, cj = lattice_conv_forward(f, w_join, support, None, "join")
    out = alpha * m + (1 - alpha) * j + bias[None, :, None, None]
    return out, (cm, cj, alpha)


def mixed_lattice_backward(dout, cache):
    cm, cj, alpha = cache
    df_m, dw_m, _ = lattice_conv_backward(alpha * dout, cm)
    df_j, dw_j, _ = lattice_conv_backward((1 - alpha) * dout, cj)
    return df_m + df_j, dw_m, dw_j, dout.sum(axis=(0, 2, 3))


def mixed_lattice_layer(f, w_meet, w_join, support, bias, alpha):
    single = f.ndim == 3
    out, _ = mixed_lattice_forward(f[None] if single else f, w_meet, w_join, support, bias, alpha)
    return out[0] if single else out


# --------------------------------------------------------------------------
# standard convolution (cross-correlation, same-size zero padding)


def same_padding(k: int) -> tuple[int, int]:
    """Padding (before, after); for an even kernel the extra cell goes before."""
    return k // 2, k - 1 - k // 2


def conv2d_forward(x, weight, bias=None):
    B, C, H, W = x.shape
    if weight.shape[1] != C:
        raise ValueError(f"kernel expects {weight.shape[1]} input channels, got {C}")
    kh, kw = weight.shape[2:]
    ph, pw = same_padding(kh), same_padding(kw)
    xp = np.pad(x, ((0, 0), (0, 0), ph, pw))
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))  # (B,C,H,W,kh,kw)
    out = np.tensordot(windows, weight, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias[None, :, None, None]
    return out, (windows, weight, x.shape, ph, pw)


def conv2d_backward(dout, cache):
    windows, weight, (B, C, H, W), ph, pw = cache
    kh, kw = weight.shape[2:]
    dweight = np.tensordot(dout, windows, axes=([0, 2, 3], [0, 2, 3]))
    dbias = dout.sum(axis=(0, 2, 3))
    dwin = np.tensordot(dout, weight, axes=([1], [0]))  # (B,H,W,C,kh,kw)
    dxp = np.zeros((B, C, H + sum(ph), W + sum(pw)))
    for a in range(kh):
        for b in range(kw):
            dxp[:, :, a : a + H, b : b + W] += dwin[:, :, :, :, a, b].transpose(0, 3, 1, 2)
    return dxp[:, :, ph[0] : ph[0] + H, pw[0] : pw[0] + W], dweight, dbias


def standard_conv(f, weight, bias=None):
    single = f.ndim == 3
    out, _ = conv2d_forward(f[None] if single else f, weight, bias)
    return out[0] if single else out


# --------------------------------------------------------------------------
# pooling, dense, activation, loss


def max_pool_forward(x):
    B, C, H, W = x.shape
    if H % 2 or W % 2:
        raise ValueError(f"2x2 max-pool needs even spatial dims, got {H}x{W}")
    blocks = x.reshape(B, C, H // 2, 2, W // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    blocks = blocks.reshape(B, C, H // 2, W // 2, 4)
    # argmax returns the first maximum, i.e. row-major tie-breaking
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]
    return out, (arg, x.shape)


def max_pool_backward(dout, cache):
    arg, (B, C, H, W) = cache
    blocks = np.zeros(arg.shape + (4,))
    np.put_along_axis(blocks, arg[..., None], dout[..., None], axis=-1)
    blocks = blocks.reshape(B, C, H // 2, W // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return blocks.reshape(B, C, H, W)


def max_pool_2x2(f):
    single = f.ndim == 3
    out, _ = max_pool_forward(f[None] if single else f)
    return out[0] if single else out


def linear_forward(x, weight, bias):
    if x.shape[-1] != weight.shape[1]:
        raise ValueError(f"input width {x.shape[-1]} does not match weight {weight.shape}")
    return x @ weight.T + bias, x


def linear_backward(dout, x, weight):
    return dout @ weight, dout.T @ x, dout.sum(axis=0)


def fully_connected(x, weight, bias):
    single = x.ndim == 1
    out, _ = linear_forward(x[None] if single else x, weight, bias)
    return out[0] if single else out


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask


def log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits):
    return np.exp(log_softmax(logits))


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy of softmax(logits) and its gradient w.r.t. logits.

    Accepts a single logit vector with an int label, or a (batch, classes)
    array with a label vector.
    """
    single = np.ndim(logits) == 1
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = np.atleast_1d(np.asarray(labels))
    n, c = z.shape
    if c < 2:
        raise ValueError("need at least two classes")
    if y.shape != (n,) or np.any(y < 0) or np.any(y >= c):
        raise ValueError(f"labels out of range for {c} classes")
    logp = log_softmax(z)
    rows = np.arange(n)
    loss = -logp[rows, y].mean()
    grad = np.exp(logp)
    grad[rows, y] -= 1.0
    grad /= n
    return float(loss), (grad[0] if single else grad)
