"""Two-class softmax cross entropy with per-cell weights and optional L2."""

from __future__ import annotations

import numpy as np


def softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over the channel axis of (batch, ch, h, w) logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def weighted_softmax_xent(logits, labels, weights, l2_lambda=0.0, l2_params=()):
    """Weighted cross entropy plus l2_lambda * sum of squared entries of
    ``l2_params``.

    Returns (loss, dlogits).  The data term is normalized by the total cell
    weight; zero-weight cells contribute neither loss nor gradient, and a
    batch with zero total weight has data term 0 and zero gradients.
    ``l2_params`` gradients (2 * lambda * w) are the caller's concern.
    """
    labels = np.asarray(labels)
    weights = np.asarray(weights, logits.dtype)
    if labels.shape != (logits.shape[0], *logits.shape[2:]) or weights.shape != labels.shape:
        raise ValueError("labels/weights shape does not match logits")
    wsum = weights.sum(dtype=np.float64)
    if wsum > 0:
        lp = log_softmax(logits)
        picked = np.take_along_axis(lp, labels[:, None].astype(np.int64), axis=1)[:, 0]
        data = -(weights * picked).sum(dtype=np.float64) / wsum
        p = softmax(logits)
        onehot = np.zeros_like(p)
        np.put_along_axis(onehot, labels[:, None].astype(np.int64), 1.0, axis=1)
        dlogits = (p - onehot) * (weights / logits.dtype.type(wsum))[:, None]
    else:
        data = 0.0
        dlogits = np.zeros_like(logits)
    loss = data + l2_lambda * sum(float((w.astype(np.float64) ** 2).sum()) for w in l2_params)
    return float(loss), dlogits
