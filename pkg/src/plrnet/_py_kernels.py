"""Pure-numpy training and evaluation kernels.

Fallback used when the compiled extension is unavailable.  Semantics match
``plrnet._kernels`` exactly (same initialization, same mini-batch index
stream, same update rule); floating-point results can differ in the last
ulps because numpy sums in a different order than the C loops.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def _unpack(flat: np.ndarray, dims: np.ndarray):
    """Views (weights, biases) per layer into the flat vector."""
    weights, biases = [], []
    off = 0
    for i in range(len(dims) - 1):
        fan_in, fan_out = int(dims[i]), int(dims[i + 1])
        weights.append(flat[off : off + fan_in * fan_out].reshape(fan_out, fan_in))
        off += fan_in * fan_out
        biases.append(flat[off : off + fan_out])
        off += fan_out
    return weights, biases


def batch_forward(
    flat: np.ndarray, dims: np.ndarray, bound: float, x: np.ndarray
) -> np.ndarray:
    """Clamped network output for every row of ``x`` (shape (n, d))."""
    weights, biases = _unpack(np.asarray(flat, dtype=np.float64), dims)
    h = np.asarray(x, dtype=np.float64)
    for w, b in zip(weights[:-1], biases[:-1]):
        h = np.maximum(h @ w.T + b, 0.0)
    raw = h @ weights[-1].T + biases[-1]
    return np.clip(raw[:, 0], -bound, bound)


def _batch_grad(weights, biases, bound, xb, yb, gw, gb):
    """Mean-squared-error gradient over one mini-batch, accumulated into gw/gb.

    Returns nothing; gw/gb are overwritten.  Clamped samples (|raw| >= bound)
    contribute zero gradient; the ReLU subgradient at 0 is 0.
    """
    m = xb.shape[0]
    acts = [xb]
    h = xb
    for w, b in zip(weights[:-1], biases[:-1]):
        h = np.maximum(h @ w.T + b, 0.0)
        acts.append(h)
    raw = (h @ weights[-1].T + biases[-1])[:, 0]
    out = np.clip(raw, -bound, bound)
    # d(loss)/d(raw), with the clamp's flat region zeroed
    delta = (2.0 / m) * (out - yb) * (np.abs(raw) < bound)
    delta = delta[:, None]
    for layer in range(len(weights) - 1, -1, -1):
        gw[layer][...] = delta.T @ acts[layer]
        gb[layer][...] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer]) * (acts[layer] > 0.0)


def train_mlp(
    flat0: np.ndarray,
    dims: np.ndarray,
    bound: float,
    x: np.ndarray,
    y: np.ndarray,
    batch_idx: np.ndarray,
    step_size: float,
    beta1: float,
    beta2: float,
    eps: float,
    stop_tol: float,
    stop_patience: int,
):
    """Adam on the mean-squared error, mini-batches given by ``batch_idx``.

    batch_idx has shape (max_epochs, n_batches, batch_size) and fixes the
    sample draws up front so compiled and fallback backends consume the
    same stream.  Training stops early once the full-sample MSE has not
    improved by at least ``stop_tol`` for ``stop_patience`` consecutive
    epochs.

    Returns (trained flat params, final full-sample MSE, epochs run).
    """
    flat = np.array(flat0, dtype=np.float64, copy=True)
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    weights, biases = _unpack(flat, dims)
    gw = [np.zeros_like(w) for w in weights]
    gb = [np.zeros_like(b) for b in biases]
    gflat = np.zeros_like(flat)
    gweights, gbiases = _unpack(gflat, dims)

    m1 = np.zeros_like(flat)
    m2 = np.zeros_like(flat)
    t = 0

    max_epochs = batch_idx.shape[0]
    best = np.inf
    stall = 0
    epochs_run = 0
    mse = float(np.mean((batch_forward(flat, dims, bound, x) - y) ** 2))

    for epoch in range(max_epochs):
        for b in range(batch_idx.shape[1]):
            rows = batch_idx[epoch, b]
            _batch_grad(weights, biases, bound, x[rows], y[rows], gw, gb)
            for layer in range(len(weights)):
                gweights[layer][...] = gw[layer]
                gbiases[layer][...] = gb[layer]
            t += 1
            m1 += (1.0 - beta1) * (gflat - m1)
            m2 += (1.0 - beta2) * (gflat * gflat - m2)
            mhat = m1 / (1.0 - beta1**t)
            vhat = m2 / (1.0 - beta2**t)
            flat -= step_size * mhat / (np.sqrt(vhat) + eps)
        epochs_run = epoch + 1
        mse = float(np.mean((batch_forward(flat, dims, bound, x) - y) ** 2))
        if mse < best - stop_tol:
            best = mse
            stall = 0
        else:
            stall += 1
            if stall >= stop_patience:
                break
    return flat, mse, epochs_run
