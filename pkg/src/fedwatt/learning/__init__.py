"""Training engine: models, synthetic data, SGD and FedAvg."""

from ._backend import BACKEND_NAME, kernels
from .data import generate_dataset, ground_truth
from .models import ModelKind, Predictor
from .params import ParamVector
from .seeds import child_seed, epoch_permutation, rng_for
from .training import (
    ClientState,
    DivergenceError,
    LedgerEntry,
    TrainReport,
    aggregate_weighted,
    fedavg_round,
    local_train_seed,
    rmse,
    select_clients,
    sgd_train,
)

__all__ = [
    "BACKEND_NAME",
    "ClientState",
    "DivergenceError",
    "LedgerEntry",
    "ModelKind",
    "ParamVector",
    "Predictor",
    "TrainReport",
    "aggregate_weighted",
    "child_seed",
    "epoch_permutation",
    "fedavg_round",
    "generate_dataset",
    "ground_truth",
    "kernels",
    "local_train_seed",
    "rmse",
    "rng_for",
    "select_clients",
    "sgd_train",
]
