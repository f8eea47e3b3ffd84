"""Synthetic regression data standing in for the sensor measurements.

Targets follow a noisy linear ground truth drawn from the seed; the target
plays the role of the measured train speed.
"""

from __future__ import annotations

import numpy as np


def ground_truth(seed: int, input_dim: int) -> tuple[np.ndarray, float]:
    """Ground-truth weights and bias as the given seed would draw them."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1.0, 1.0, size=input_dim)
    b = float(rng.uniform(-1.0, 1.0))
    return w, b


def generate_dataset(
    seed: int,
    num_samples: int,
    input_dim: int,
    noise_std: float,
    truth: tuple[np.ndarray, float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (X, y) with y = w*.x + b* + N(0, noise_std^2).

    When ``truth`` is omitted it is drawn from the same seed first, so equal
    seeds give identical datasets. Passing ``truth`` lets several datasets
    (client shards, holdout) share one underlying signal.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    rng = np.random.default_rng(seed)
    if truth is None:
        w = rng.uniform(-1.0, 1.0, size=input_dim)
        b = float(rng.uniform(-1.0, 1.0))
    else:
        w, b = truth
        w = np.asarray(w, dtype=np.float64)
    X = rng.standard_normal((num_samples, input_dim))
    y = X @ w + b
    if noise_std > 0.0:
        y = y + noise_std * rng.standard_normal(num_samples)
    return X, y
