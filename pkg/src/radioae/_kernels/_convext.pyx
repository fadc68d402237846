# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled depthwise 1-D convolution kernels.

Same contract as radioae._kernels._convnp; see that module for the shape
conventions. Padding is handled by index arithmetic so no padded copies
are allocated.
"""

import numpy as np

cimport cython


ctypedef fused real:
    float
    double


def conv1d_fwd(real[:, :, ::1] x, real[:, ::1] w, int pad):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], T = x.shape[2]
    cdef Py_ssize_t F = w.shape[0], K = w.shape[1]
    cdef Py_ssize_t T_out = T + 2 * pad - K + 1
    cdef Py_ssize_t b, f, c, t, k, k_lo, k_hi, base
    cdef real acc

    if real is float:
        out_np = np.empty((B, F, C, T_out), dtype=np.float32)
    else:
        out_np = np.empty((B, F, C, T_out), dtype=np.float64)
    cdef real[:, :, :, ::1] out = out_np

    for b in range(B):
        for f in range(F):
            for c in range(C):
                for t in range(T_out):
                    base = t - pad
                    k_lo = -base if base < 0 else 0
                    k_hi = K if base + K <= T else T - base
                    acc = 0
                    for k in range(k_lo, k_hi):
                        acc += x[b, c, base + k] * w[f, k]
                    out[b, f, c, t] = acc
    return out_np


def conv1d_bwd(real[:, :, ::1] x, real[:, ::1] w, int pad,
               real[:, :, :, ::1] d_out):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], T = x.shape[2]
    cdef Py_ssize_t F = w.shape[0], K = w.shape[1]
    cdef Py_ssize_t T_out = T + 2 * pad - K + 1
    cdef Py_ssize_t b, f, c, t, k, i, k_lo, k_hi, base
    cdef real acc

    if real is float:
        d_x_np = np.zeros((B, C, T), dtype=np.float32)
        d_w_np = np.zeros((F, K), dtype=np.float32)
    else:
        d_x_np = np.zeros((B, C, T), dtype=np.float64)
        d_w_np = np.zeros((F, K), dtype=np.float64)
    cdef real[:, :, ::1] d_x = d_x_np
    cdef real[:, ::1] d_w = d_w_np

    # d_w[f,k] = sum_{b,c,t} d_out[b,f,c,t] * x[b,c,t+k-pad]
    for b in range(B):
        for f in range(F):
            for c in range(C):
                for t in range(T_out):
                    base = t - pad
                    k_lo = -base if base < 0 else 0
                    k_hi = K if base + K <= T else T - base
                    acc = d_out[b, f, c, t]
                    for k in range(k_lo, k_hi):
                        d_w[f, k] += acc * x[b, c, base + k]

    # d_x[b,c,i] = sum_{f,k} d_out[b,f,c,(i+pad)-k] * w[f,k]
    for b in range(B):
        for c in range(C):
            for i in range(T):
                base = i + pad
                k_lo = base - T_out + 1 if base - T_out + 1 > 0 else 0
                k_hi = (base if base < K - 1 else K - 1) + 1
                acc = 0
                for f in range(F):
                    for k in range(k_lo, k_hi):
                        acc += d_out[b, f, c, base - k] * w[f, k]
                d_x[b, c, i] = acc
    return d_x_np, d_w_np
