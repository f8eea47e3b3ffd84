"""Mini-batch SGD training, client selection and FedAvg aggregation.

Shuffle streams are keyed by (seed, epoch index). ``epoch_offset`` lets a
federated client at round t consume the same stream positions a centralized
run would at global epochs t*E .. t*E+E-1, which is what makes one-client
federated training reproduce centralized SGD exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from ._backend import kernels
from .models import ModelKind, Predictor
from .params import ParamVector
from .seeds import child_seed, epoch_permutation, rng_for


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, learning_rate: float):
        self.epoch = epoch
        self.learning_rate = learning_rate
        super().__init__(
            f"non-finite training loss at epoch {epoch} "
            f"(learning_rate={learning_rate}); reduce the learning rate"
        )


class LedgerEntry(NamedTuple):
    compute_kwh: float
    uplink_kwh: float
    downlink_kwh: float


@dataclass
class ClientState:
    """One edge node: its local data shard, last local model and energy ledger."""

    id: int
    X: np.ndarray
    y: np.ndarray
    dataset_bits: float
    local_params: np.ndarray | None = None
    energy_ledger: list[LedgerEntry] = field(default_factory=list)

    @property
    def n_k(self) -> int:
        return self.y.shape[0]

    def charge(self, compute_kwh: float, uplink_kwh: float, downlink_kwh: float) -> None:
        if min(compute_kwh, uplink_kwh, downlink_kwh) < 0:
            raise ValueError("ledger entries must be non-negative")
        self.energy_ledger.append(LedgerEntry(compute_kwh, uplink_kwh, downlink_kwh))


@dataclass(frozen=True)
class TrainReport:
    final_params: ParamVector
    per_epoch_loss: tuple[float, ...]
    epochs_run: int


def sgd_train(
    model: Predictor,
    params: np.ndarray,
    data: tuple[np.ndarray, np.ndarray],
    epochs: int,
    batch_size: int,
    learning_rate: float,
    seed: int,
    epoch_offset: int = 0,
) -> TrainReport:
    """Run mini-batch SGD for ``epochs`` epochs and report per-epoch mean loss.

    Each epoch shuffles by its own seed-derived stream, partitions into
    batches of ``batch_size`` (final partial batch included) and applies
    one MSE gradient step per batch.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    X, y = data
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    if n == 0:
        raise ValueError("training data is empty")
    if X.shape != (n, model.input_dim):
        raise ValueError(f"X has shape {X.shape}, expected ({n}, {model.input_dim})")
    if params.shape[0] != model.param_count:
        raise ValueError(
            f"parameter length {params.shape[0]} does not match "
            f"{model.kind.value} model ({model.param_count} expected)"
        )

    theta = np.array(params, dtype=np.float64, copy=True)
    losses = []
    for epoch in range(epochs):
        order = epoch_permutation(seed, epoch_offset + epoch, n)
        if model.kind is ModelKind.LINEAR:
            sq_err = kernels.linear_sgd_epoch(theta, X, y, order, batch_size, learning_rate)
        else:
            sq_err = kernels.mlp_sgd_epoch(
                theta, X, y, order, batch_size, learning_rate, model.hidden_dim
            )
        loss = sq_err / n
        if not math.isfinite(loss):
            raise DivergenceError(epoch=epoch, learning_rate=learning_rate)
        losses.append(loss)
    # the loss is measured before each step, so the very last update can
    # still overflow without tripping the in-loop check
    if not np.all(np.isfinite(theta)):
        raise DivergenceError(epoch=epochs - 1, learning_rate=learning_rate)
    return TrainReport(
        final_params=ParamVector(theta),
        per_epoch_loss=tuple(losses),
        epochs_run=epochs,
    )


def select_clients(num_clients: int, fraction: float, round_index: int, seed: int) -> frozenset[int]:
    """Sample max(ceil(C*K), 1) client ids without replacement, deterministically
    per (seed, round_index)."""
    if num_clients < 1:
        raise ValueError("num_clients must be >= 1")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    # tolerant ceiling: 0.2 * 5 must count as exactly 1.0
    m = max(math.ceil(fraction * num_clients - 1e-9), 1)
    m = min(m, num_clients)
    rng = rng_for(seed, "select", round_index)
    return frozenset(int(i) for i in rng.choice(num_clients, size=m, replace=False))


@lru_cache(maxsize=1 << 16)
def local_train_seed(seed: int, client_id: int) -> int:
    """Stream seed for a client's local shuffles; combined with the round's
    epoch offset this fully determines its randomness."""
    return child_seed(seed, "train", client_id)


def fedavg_round(
    model: Predictor,
    global_params: np.ndarray,
    clients: list[ClientState],
    selected: frozenset[int],
    learning,
    seed: int,
    round_index: int,
    workers: int | None = None,
) -> np.ndarray:
    """One FedAvg round: selected clients copy the global model, train locally,
    and the server returns their n_k-weighted parameter average.

    ``learning`` provides local_epochs, batch_size and learning_rate. Local
    training may run on ``workers`` threads; results are aggregated in
    ascending client-id order either way, so the output is identical.
    """
    if not selected:
        raise ValueError("selected client set is empty")
    by_id = {c.id: c for c in clients}
    unknown = selected - by_id.keys()
    if unknown:
        raise ValueError(f"selected ids not present in client list: {sorted(unknown)}")

    ordered = sorted(selected)
    epoch_offset = round_index * learning.local_epochs

    def train_one(cid: int) -> np.ndarray:
        client = by_id[cid]
        report = sgd_train(
            model,
            global_params,
            (client.X, client.y),
            epochs=learning.local_epochs,
            batch_size=learning.batch_size,
            learning_rate=learning.learning_rate,
            seed=local_train_seed(seed, cid),
            epoch_offset=epoch_offset,
        )
        return report.final_params.values

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(ordered, pool.map(train_one, ordered)))
    else:
        results = {cid: train_one(cid) for cid in ordered}

    length = global_params.shape[0]
    for cid in ordered:
        if results[cid].shape[0] != length:
            raise ValueError(
                f"client {cid} returned {results[cid].shape[0]} parameters, "
                f"expected {length}; model kinds are misconfigured"
            )
        by_id[cid].local_params = results[cid]

    return aggregate_weighted(results, {cid: by_id[cid].n_k for cid in ordered})


def aggregate_weighted(
    param_sets: dict[int, np.ndarray], counts: dict[int, int]
) -> np.ndarray:
    """n_k-weighted average of parameter vectors, accumulated in ascending
    client-id order (the concurrency contract's canonical order)."""
    ordered = sorted(param_sets)
    total = sum(counts[cid] for cid in ordered)
    aggregate = np.zeros(param_sets[ordered[0]].shape[0])
    for cid in ordered:
        aggregate += (counts[cid] / total) * param_sets[cid]
    return aggregate


def rmse(model: Predictor, params: np.ndarray, eval_data: tuple[np.ndarray, np.ndarray]) -> float:
    """Root mean squared prediction error on the evaluation set."""
    X, y = eval_data
    if y.shape[0] == 0:
        raise ValueError("evaluation data is empty")
    err = model.predict(params, X) - np.asarray(y, dtype=np.float64)
    return float(np.sqrt(np.mean(err * err)))
