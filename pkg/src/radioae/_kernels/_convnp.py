"""NumPy implementation of the depthwise 1-D convolution kernels.

Pure-array fallback for the compiled extension. Both backends share the
same contract: cross-correlation (no kernel flip), every filter applied to
every channel independently, zero padding of `pad` samples on each side.

Shapes:
    x      (B, C, T)        input rows
    w      (F, K)           filter taps
    out    (B, F, C, T_out) with T_out = T + 2*pad - K + 1
    d_out  (B, F, C, T_out) upstream gradient
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_fwd(x, w, pad):
    B, C, T = x.shape
    F, K = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    win = sliding_window_view(xp, K, axis=2)  # (B, C, T_out, K)
    return np.einsum("bctk,fk->bfct", win, w, optimize=True)


def conv1d_bwd(x, w, pad, d_out):
    B, C, T = x.shape
    F, K = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    win = sliding_window_view(xp, K, axis=2)
    d_w = np.einsum("bfct,bctk->fk", d_out, win, optimize=True)

    # d_xpad[b,c,i] = sum_{f,k} d_out[b,f,c,i-k] * w[f,k]: full convolution
    # of d_out with the flipped taps, summed over filters.
    dp = np.pad(d_out, ((0, 0), (0, 0), (0, 0), (K - 1, K - 1)))
    dwin = sliding_window_view(dp, K, axis=3)  # (B, F, C, T+2*pad, K)
    d_xp = np.einsum("bfcik,fk->bci", dwin[..., ::-1], w, optimize=True)
    d_x = np.ascontiguousarray(d_xp[:, :, pad:pad + T])
    return d_x, d_w
