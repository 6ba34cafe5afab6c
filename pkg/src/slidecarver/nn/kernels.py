"""Compiled inner loops for valid stride-1 cross-correlation.

Accumulation order inside each output element is fixed (channel, then
kernel row, then kernel column), so results are identical no matter how
the surrounding code batches or tiles the input.  The weight-gradient
kernel allows reassociation for vectorized reductions; it is still
deterministic run to run.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def conv2d_forward(x, w, bias, y):
    """y[b,o,p,q] = bias[o] + sum_{c,i,j} x[b,c,p+i,q+j] * w[o,c,i,j]."""
    B, C, H, W = x.shape
    O, _, k, _ = w.shape
    Ho, Wo = H - k + 1, W - k + 1
    for bi in range(B):
        for o in range(O):
            for p in range(Ho):
                row = y[bi, o, p]
                row[:] = bias[o]
                for c in range(C):
                    for i in range(k):
                        xr = x[bi, c, p + i]
                        for j in range(k):
                            wv = w[o, c, i, j]
                            for q in range(Wo):
                                row[q] += xr[q + j] * wv


@njit(cache=True, nogil=True)
def conv2d_input_grad(dy, w, dx):
    """Scatter form of the adjoint: dx[b,c,p+i,q+j] += dy[b,o,p,q] * w[o,c,i,j]."""
    B, O, Ho, Wo = dy.shape
    _, C, k, _ = w.shape
    dx[:] = 0.0
    for bi in range(B):
        for o in range(O):
            for p in range(Ho):
                dyr = dy[bi, o, p]
                for c in range(C):
                    for i in range(k):
                        xr = dx[bi, c, p + i]
                        for j in range(k):
                            wv = w[o, c, i, j]
                            for q in range(Wo):
                                xr[q + j] += dyr[q] * wv


@njit(cache=True, nogil=True, fastmath={"reassoc", "contract", "nsz"})
def conv2d_weight_grad(x, dy, dw):
    """dw[o,c,i,j] = sum_{b,p,q} x[b,c,p+i,q+j] * dy[b,o,p,q]."""
    B, C, H, W = x.shape
    O, _, k, _ = dw.shape
    Ho, Wo = H - k + 1, W - k + 1
    dw[:] = 0.0
    for bi in range(B):
        for o in range(O):
            dyb = dy[bi, o]
            for c in range(C):
                for i in range(k):
                    for j in range(k):
                        acc = 0.0
                        for p in range(Ho):
                            xr = x[bi, c, p + i]
                            dr = dyb[p]
                            for q in range(Wo):
                                acc += xr[q + j] * dr[q]
                        dw[o, c, i, j] += acc


def warmup(dtype=np.float32) -> None:
    """Force compilation of all kernels for one dtype."""
    x = np.zeros((1, 1, 3, 3), dtype)
    w = np.zeros((1, 1, 2, 2), dtype)
    b = np.zeros(1, dtype)
    y = np.zeros((1, 1, 2, 2), dtype)
    conv2d_forward(x, w, b, y)
    conv2d_input_grad(y, w, x)
    conv2d_weight_grad(x, y, w)
