"""Soft-margin linear classifier trained by batch subgradient descent."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearSVM:
    """Linear decision function ``x -> (x - mean) / scale . w + b``.

    Inputs are standardized with the training statistics before the weights
    apply. Positive decision values predict the minority class.
    """

    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    C: float = 1.0
    n_iter: int = 0
    constant: bool = False

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights.shape[0]:
            raise ValueError(f"expected {self.weights.shape[0]} features, got {X.shape[1]}")
        return ((X - self.mean) / self.scale) @ self.weights + self.bias

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)


def hinge_objective(w, b, Z, s, C=1.0):
    """Primal objective 0.5|w|^2 + C * sum(max(0, 1 - s (Zw + b)))."""
    margins = 1.0 - s * (Z @ w + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(margins, 0.0).sum())


def standardize_stats(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < 1e-12] = 1.0
    return mean, scale


def train_base(X, y, C=1.0, n_iter=600, step=1.0, seed=0):
    """Minimise the soft-margin hinge objective on standardized inputs.

    Full-batch subgradient steps with a fixed ``step / sqrt(t)`` schedule,
    scaled by the sample count; the best iterate seen is returned. ``seed``
    is accepted for interface symmetry: the procedure is deterministic.
    A single-class input yields a constant classifier.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    mean, scale = standardize_stats(X)
    d = X.shape[1]
    classes = np.unique(y)
    if classes.size < 2:
        bias = 1.0 if classes.size and classes[0] == 1 else -1.0
        return LinearSVM(weights=np.zeros(d), bias=bias, mean=mean, scale=scale,
                         C=C, constant=True)
    Z = (X - mean) / scale
    s = np.where(y == 1, 1.0, -1.0)
    n = Z.shape[0]
    w = np.zeros(d)
    b = 0.0
    best = (hinge_objective(w, b, Z, s, C), w.copy(), b)
    for t in range(1, n_iter + 1):
        active = s * (Z @ w + b) < 1.0
        gw = w - C * (s[active, None] * Z[active]).sum(axis=0)
        gb = -C * s[active].sum()
        eta = step / (n * np.sqrt(t))
        w = w - eta * gw
        b = b - eta * gb
        obj = hinge_objective(w, b, Z, s, C)
        if obj < best[0]:
            best = (obj, w.copy(), b)
    _, w, b = best
    return LinearSVM(weights=w, bias=float(b), mean=mean, scale=scale, C=C, n_iter=n_iter)
