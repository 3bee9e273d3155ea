"""Logistic regression pieces shared by the lexical and tree backends."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return -np.logaddexp(0.0, -z)


def logistic_loss_grad(w, X, y, l2: float, bias_index: int | None = -1):
    """Mean binary cross-entropy of ``sigmoid(X @ w)`` plus ``l2/2 * |w|^2``.

    The coordinate at ``bias_index`` is excluded from the penalty. Returns
    ``(loss, gradient)``.
    """
    w = np.asarray(w, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = X @ w
    n = len(y)
    loss = -np.sum(y * log_sigmoid(z) + (1 - y) * log_sigmoid(-z)) / n
    grad = X.T @ (sigmoid(z) - y) / n
    penalized = w.copy()
    if bias_index is not None:
        penalized[bias_index] = 0.0
    loss += 0.5 * l2 * float(penalized @ penalized)
    grad = np.asarray(grad).ravel() + l2 * penalized
    return float(loss), grad


def fit_edges(
    X: sp.csr_matrix,
    Y: np.ndarray,
    l2: float,
    learning_rate: float,
    iterations: int,
) -> tuple[sp.csc_matrix, np.ndarray]:
    """Fit one L2-regularized logistic classifier per column of ``Y``.

    Full-batch gradient descent with Nesterov momentum from a zero start.
    Rows of ``X`` are unit-norm TF-IDF vectors, which keeps the loss
    smooth enough for the fixed step size. Columns are independent
    problems solved together, so their order does not matter.

    Returns a sparse (n_features x n_columns) weight matrix and the biases.
    """
    n, n_features = X.shape
    Y = np.asarray(Y, dtype=np.float64)
    k = Y.shape[1]
    W = np.zeros((n_features, k))
    b = np.zeros(k)
    W_prev, b_prev = W.copy(), b.copy()
    XT = X.T.tocsr()
    for t in range(1, iterations + 1):
        mom = (t - 1) / (t + 2)
        W_look = W + mom * (W - W_prev)
        b_look = b + mom * (b - b_prev)
        R = (sigmoid(X @ W_look + b_look) - Y) / n
        gW = XT @ R + l2 * W_look
        gb = R.sum(axis=0)
        W_prev, b_prev = W, b
        W = W_look - learning_rate * gW
        b = b_look - learning_rate * gb
    # features absent from every routed document keep exactly zero weight
    return sp.csc_matrix(W), b
