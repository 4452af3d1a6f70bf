"""NumPy implementation of the network kernels.

Shapes: X is (n, d_in); Ws[i] is (d_i, d_{i+1}); bs[i] is (d_{i+1},).
Hidden layers use the rectifier, the output layer is linear.  Gradients
are with respect to every weight matrix and bias vector.
"""
from __future__ import annotations

import numpy as np


def forward(Ws, bs, X):
    A = np.asarray(X, dtype=np.float64)
    last = len(Ws) - 1
    for i, (W, b) in enumerate(zip(Ws, bs)):
        A = A @ W + b
        if i < last:
            np.maximum(A, 0.0, out=A)
    return A


def _forward_acts(Ws, bs, X):
    acts = [np.asarray(X, dtype=np.float64)]
    last = len(Ws) - 1
    for i, (W, b) in enumerate(zip(Ws, bs)):
        A = acts[-1] @ W + b
        if i < last:
            np.maximum(A, 0.0, out=A)
        acts.append(A)
    return acts


def _backprop(Ws, acts, dY):
    dWs = [None] * len(Ws)
    dbs = [None] * len(Ws)
    for layer in range(len(Ws) - 1, -1, -1):
        dWs[layer] = acts[layer].T @ dY
        dbs[layer] = dY.sum(axis=0)
        if layer > 0:
            dY = (dY @ Ws[layer].T) * (acts[layer] > 0.0)
    return dWs, dbs


def qsel_loss_grad(Ws, bs, X, actions, targets):
    """Mean squared error between the selected action-values and targets."""
    acts = _forward_acts(Ws, bs, X)
    Y = acts[-1]
    n = Y.shape[0]
    idx = np.arange(n)
    actions = np.asarray(actions, dtype=np.intp)
    diff = Y[idx, actions] - np.asarray(targets, dtype=np.float64)
    loss = float(np.mean(diff * diff))
    dY = np.zeros_like(Y)
    dY[idx, actions] = 2.0 * diff / n
    dWs, dbs = _backprop(Ws, acts, dY)
    return loss, dWs, dbs


def ce_loss_grad(Ws, bs, X, labels):
    """Mean cross-entropy of the softmax of the outputs against labels."""
    acts = _forward_acts(Ws, bs, X)
    Y = acts[-1]
    n = Y.shape[0]
    idx = np.arange(n)
    labels = np.asarray(labels, dtype=np.intp)
    shifted = Y - Y.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    sums = expv.sum(axis=1)
    loss = float(np.mean(np.log(sums) - shifted[idx, labels]))
    dY = expv / sums[:, None]
    dY[idx, labels] -= 1.0
    dY /= n
    dWs, dbs = _backprop(Ws, acts, dY)
    return loss, dWs, dbs
