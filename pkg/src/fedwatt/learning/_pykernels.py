"""Numpy fallback for the per-epoch SGD kernels.

Same contract as the compiled ``_kernels`` extension: run one epoch of
mini-batch SGD in place over ``params``, visiting samples in ``order``,
and return the summed squared error measured at each batch's forward pass.
Overflow warnings are suppressed; divergence is detected by the caller via
the returned loss, as with the compiled kernels.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def linear_sgd_epoch(params, X, y, order, batch_size, lr):
    n = order.shape[0]
    w = params[:-1]
    sq_err = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            xb = X[idx]
            err = xb @ w + params[-1] - y[idx]
            sq_err += float(err @ err)
            scale = 2.0 * lr / idx.shape[0]
            w -= scale * (xb.T @ err)
            params[-1] -= scale * err.sum()
    return sq_err


def mlp_sgd_epoch(params, X, y, order, batch_size, lr, hidden):
    n = order.shape[0]
    d = X.shape[1]
    h = hidden
    sq_err = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            xb = X[idx]
            w1 = params[: h * d].reshape(h, d)
            b1 = params[h * d : h * d + h]
            w2 = params[h * d + h : h * d + 2 * h]
            act = np.tanh(xb @ w1.T + b1)
            err = act @ w2 + params[-1] - y[idx]
            sq_err += float(err @ err)
            scale = 2.0 * lr / idx.shape[0]
            dz = (err[:, None] * w2) * (1.0 - act * act)
            grad_w2 = act.T @ err
            grad_b2 = err.sum()
            # apply updates only after every gradient uses the pre-step values
            params[: h * d] -= scale * (dz.T @ xb).reshape(-1)
            params[h * d : h * d + h] -= scale * dz.sum(axis=0)
            params[h * d + h : h * d + 2 * h] -= scale * grad_w2
            params[-1] -= scale * grad_b2
    return sq_err
