"""Differentiable regression models over flat parameter vectors.

Two model kinds are supported:

* ``linear``: y = w.x + b, parameters laid out as [w (d), b].
* ``small_mlp``: one tanh hidden layer, y = w2.tanh(W1 x + b1) + b2,
  parameters laid out as [W1 row-major (h*d), b1 (h), w2 (h), b2].

Loss is mean squared error; gradients are analytic and full-batch
(``loss_and_grad``). The per-epoch SGD kernels in ``_kernels``/``_pykernels``
implement the same arithmetic batch-wise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .seeds import rng_for


class ModelKind(str, enum.Enum):
    LINEAR = "linear"
    SMALL_MLP = "small_mlp"

    @classmethod
    def parse(cls, text: str) -> "ModelKind":
        normalized = text.strip().lower()
        aliases = {"linear": cls.LINEAR, "small_mlp": cls.SMALL_MLP, "mlp": cls.SMALL_MLP}
        if normalized not in aliases:
            raise ValueError(f"unknown model_kind: {text!r} (expected 'linear' or 'small_mlp')")
        return aliases[normalized]


@dataclass(frozen=True)
class Predictor:
    """Model structure: kind and dimensions. Parameters are passed explicitly,
    so ``predict(params, X)`` is a pure function of its arguments."""

    kind: ModelKind
    input_dim: int
    hidden_dim: int = 0

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.kind is ModelKind.SMALL_MLP and self.hidden_dim < 1:
            raise ValueError("small_mlp requires hidden_dim >= 1")

    @property
    def output_dim(self) -> int:
        return 1

    @property
    def param_count(self) -> int:
        d, h = self.input_dim, self.hidden_dim
        if self.kind is ModelKind.LINEAR:
            return d + 1
        return h * d + 2 * h + 1

    def init_params(self, seed: int) -> np.ndarray:
        """Uniform [-0.5, 0.5] entries scaled by 1/sqrt(fan-in) per segment."""
        rng = rng_for(seed, "init")
        raw = rng.uniform(-0.5, 0.5, size=self.param_count)
        d, h = self.input_dim, self.hidden_dim
        if self.kind is ModelKind.LINEAR:
            return raw / np.sqrt(d)
        split = h * d + h  # W1 and b1 feed from the input layer
        raw[:split] /= np.sqrt(d)
        raw[split:] /= np.sqrt(h)
        return raw

    def _unpack_mlp(self, params: np.ndarray):
        d, h = self.input_dim, self.hidden_dim
        w1 = params[: h * d].reshape(h, d)
        b1 = params[h * d : h * d + h]
        w2 = params[h * d + h : h * d + 2 * h]
        b2 = params[-1]
        return w1, b1, w2, b2

    def predict(self, params: np.ndarray, X: np.ndarray) -> np.ndarray:
        params = np.asarray(params, dtype=np.float64)
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if params.shape[0] != self.param_count:
            raise ValueError(
                f"parameter length {params.shape[0]} does not match "
                f"{self.kind.value} model ({self.param_count} expected)"
            )
        if self.kind is ModelKind.LINEAR:
            return X @ params[:-1] + params[-1]
        w1, b1, w2, b2 = self._unpack_mlp(params)
        hidden = np.tanh(X @ w1.T + b1)
        return hidden @ w2 + b2

    def loss_and_grad(self, params: np.ndarray, X: np.ndarray, y: np.ndarray):
        """Mean-squared-error loss and its analytic gradient over the full batch."""
        params = np.asarray(params, dtype=np.float64)
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        n = X.shape[0]
        if self.kind is ModelKind.LINEAR:
            err = X @ params[:-1] + params[-1] - y
            loss = float(err @ err) / n
            grad = np.empty_like(params)
            grad[:-1] = (2.0 / n) * (X.T @ err)
            grad[-1] = (2.0 / n) * err.sum()
            return loss, grad
        w1, b1, w2, b2 = self._unpack_mlp(params)
        act = np.tanh(X @ w1.T + b1)  # (n, h)
        err = act @ w2 + b2 - y
        loss = float(err @ err) / n
        # backprop through the tanh layer
        dz = (err[:, None] * w2) * (1.0 - act * act)  # (n, h)
        grad = np.empty_like(params)
        d, h = self.input_dim, self.hidden_dim
        grad[: h * d] = (2.0 / n) * (dz.T @ X).reshape(-1)
        grad[h * d : h * d + h] = (2.0 / n) * dz.sum(axis=0)
        grad[h * d + h : h * d + 2 * h] = (2.0 / n) * (act.T @ err)
        grad[-1] = (2.0 / n) * err.sum()
        return loss, grad
