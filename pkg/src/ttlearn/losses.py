"""Differentiable data-fit terms: masked least squares and logistic regression."""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .tensor_ops import as_tensor3


class CompletionLoss:
    """Masked least squares ``(1/2p)·||P_Ω(x - y)||_F²``.

    ``p`` is the sampling fraction |Ω|/(n1·n2·n3); the 1/p scaling makes the
    loss an unbiased estimate of the full squared error. Off-mask values of
    ``y_obs`` are ignored (stored as zeros).
    """

    def __init__(self, y_obs: np.ndarray, mask: np.ndarray):
        y = as_tensor3(y_obs)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != y.shape:
            raise ValueError(f"mask shape {mask.shape} does not match tensor {y.shape}")
        n_obs = int(mask.sum())
        if n_obs == 0:
            raise ValueError("mask has no observed entries")
        self.mask = mask
        self.y_obs = np.where(mask, y, 0.0)
        self.p = n_obs / mask.size
        self.shape = y.shape

    def _residual(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.shape:
            raise ValueError(f"shape mismatch: {x.shape} vs {self.shape}")
        return np.where(self.mask, x - self.y_obs, 0.0)

    def value(self, x: np.ndarray) -> float:
        r = self._residual(x)
        return float(np.sum(r * r) / (2 * self.p))

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self._residual(x) / self.p

    def lipschitz_constant(self) -> float:
        return 1.0 / self.p


class LogisticLoss:
    """Binary logistic loss ``(1/n)·Σ [log(1 + exp<Z_i, x>) - y_i <Z_i, x>]``.

    ``samples`` is a stack of n tensors sharing one shape; ``labels`` take
    values in {0, 1}. Evaluation is overflow-safe for large inner products
    (log-sum-exp form).
    """

    def __init__(self, samples, labels):
        stack = np.stack([np.asarray(z, dtype=float) for z in samples])
        if stack.ndim != 4:
            raise ValueError("samples must be a collection of third-order tensors")
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.shape[0] != stack.shape[0]:
            raise ValueError("labels must be one value per sample")
        if not np.all(np.isin(labels, (0, 1))):
            raise ValueError("labels must be 0 or 1")
        if not np.all(np.isfinite(stack)):
            raise ValueError("samples contain non-finite entries")
        self.samples = stack
        self.labels = labels.astype(float)
        self.n = stack.shape[0]
        self.shape = stack.shape[1:]
        self._design = stack.reshape(self.n, -1)
        self._sum_sq = float(np.sum(stack * stack))

    def margins(self, x: np.ndarray) -> np.ndarray:
        """Inner products <Z_i, x> for every sample."""
        x = np.asarray(x, dtype=float)
        if x.shape != self.shape:
            raise ValueError(f"shape mismatch: {x.shape} vs {self.shape}")
        return self._design @ x.ravel()

    def value(self, x: np.ndarray) -> float:
        m = self.margins(x)
        return float(np.mean(np.logaddexp(0.0, m) - self.labels * m))

    def grad(self, x: np.ndarray) -> np.ndarray:
        weights = expit(self.margins(x)) - self.labels
        return (weights @ self._design).reshape(self.shape) / self.n

    def lipschitz_constant(self) -> float:
        return self._sum_sq / (4 * self.n)
