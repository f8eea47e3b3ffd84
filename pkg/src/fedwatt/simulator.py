"""Round loop coupling the training engine to the energy calculus.

Bookkeeping conventions:

* Centralized runs charge the one-time raw-data uplink at round 0 (the
  transmission term carries no per-round factor), then one PUE-scaled server
  epoch per round.
* Federated runs have no round-0 record; each round charges model downlink,
  local training, selected-client uplink and the server aggregation share.
* Cumulative totals are the running sums of the separately accumulated
  compute and transmission components, so the final breakdown matches the
  last record exactly.
* Evaluation RMSE is recorded every round and charged zero energy.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .energy import EnergyBreakdown, SelectionSchedule
from .learning.models import Predictor
from .learning.params import ParamVector
from .learning.training import fedavg_round, local_train_seed, rmse, select_clients, sgd_train
from .topology import (
    Architecture,
    Scenario,
    holdout_data,
    make_clients,
    scenario_to_dict,
    validate_scenario,
    with_overrides,
)


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    rmse: float
    compute_kwh: float
    transmission_kwh: float
    cumulative_total_kwh: float


@dataclass(frozen=True)
class SimulationResult:
    scenario_name: str
    architecture: Architecture
    records: tuple[RoundRecord, ...]
    final_breakdown: EnergyBreakdown
    final_rmse: float
    final_params: ParamVector | None = None
    schedule: SelectionSchedule | None = None
    model_bits: int = 0


def predictor_for(scenario: Scenario) -> Predictor:
    learn = scenario.learning
    return Predictor(
        kind=learn.model_kind, input_dim=learn.input_dim, hidden_dim=learn.hidden_dim
    )


def simulate_cl(scenario: Scenario) -> SimulationResult:
    """Centralized run: pool every client's data at the server and train."""
    validate_scenario(scenario)
    if scenario.architecture is not Architecture.CENTRALIZED:
        raise ValueError("simulate_cl requires a centralized scenario")
    clients = make_clients(scenario)
    eval_set = holdout_data(scenario)
    model = predictor_for(scenario)
    params = model.init_params(scenario.seed)
    pooled_x = np.vstack([c.X for c in clients])
    pooled_y = np.concatenate([c.y for c in clients])

    energy = scenario.energy
    cum_compute = 0.0
    cum_trans = 0.0
    records = []

    # one-time raw-data uplink, booked at round 0
    round0_trans = energy.alpha * sum(c.dataset_bits for c in clients) * energy.e_uplink_per_bit
    cum_trans += round0_trans
    records.append(
        RoundRecord(
            round_index=0,
            rmse=rmse(model, params, eval_set),
            compute_kwh=0.0,
            transmission_kwh=round0_trans,
            cumulative_total_kwh=cum_compute + cum_trans,
        )
    )

    train_seed = local_train_seed(scenario.seed, 0)
    epoch_energy = energy.gamma * energy.e0_compute
    for epoch in range(scenario.rounds):
        report = sgd_train(
            model,
            params,
            (pooled_x, pooled_y),
            epochs=1,
            batch_size=scenario.learning.batch_size,
            learning_rate=scenario.learning.learning_rate,
            seed=train_seed,
            epoch_offset=epoch,
        )
        params = report.final_params.values
        cum_compute += epoch_energy
        records.append(
            RoundRecord(
                round_index=epoch + 1,
                rmse=rmse(model, params, eval_set),
                compute_kwh=epoch_energy,
                transmission_kwh=0.0,
                cumulative_total_kwh=cum_compute + cum_trans,
            )
        )

    final_params = ParamVector(params, energy.bits_per_param)
    return SimulationResult(
        scenario_name=scenario.name,
        architecture=Architecture.CENTRALIZED,
        records=tuple(records),
        final_breakdown=EnergyBreakdown(compute_kwh=cum_compute, transmission_kwh=cum_trans),
        final_rmse=records[-1].rmse,
        final_params=final_params,
        model_bits=final_params.bit_size,
    )


def simulate_fl(
    scenario: Scenario,
    workers: int | None = None,
    clients: list | None = None,
) -> SimulationResult:
    """Federated run: per-round selection, local training and aggregation.

    ``clients`` may be passed in (fresh ``make_clients`` output) when the
    caller wants to inspect per-client energy ledgers afterwards.
    """
    validate_scenario(scenario)
    if scenario.architecture is not Architecture.FEDERATED:
        raise ValueError("simulate_fl requires a federated scenario")
    if clients is None:
        clients = make_clients(scenario)
    elif len(clients) != scenario.num_sensors:
        raise ValueError("client list does not match num_sensors")
    eval_set = holdout_data(scenario)
    model = predictor_for(scenario)
    learn = scenario.learning
    energy = scenario.energy
    num_clients = scenario.num_sensors

    global_params = model.init_params(scenario.seed)
    model_bits = ParamVector(global_params, energy.bits_per_param).bit_size
    ek = energy.ek_values(num_clients)

    cum_compute = 0.0
    cum_trans = 0.0
    records = []
    schedule_rounds = []
    server_round_kwh = energy.gamma * energy.beta * energy.e0_compute
    downlink_unit = model_bits * energy.gamma * energy.e_downlink_per_bit
    uplink_unit = model_bits * energy.e_uplink_per_bit

    for t in range(scenario.rounds):
        selected = select_clients(num_clients, learn.client_fraction, t, scenario.seed)
        schedule_rounds.append(selected)

        downlink_ids = selected if energy.downlink_selected_only else range(num_clients)
        compute_ids = selected if energy.compute_selected_only else range(num_clients)

        round_trans = 0.0
        round_compute = server_round_kwh
        per_client = {
            cid: [0.0, 0.0, 0.0] for cid in range(num_clients)
        }  # compute, uplink, downlink
        for cid in sorted(downlink_ids):
            round_trans += downlink_unit
            per_client[cid][2] += downlink_unit
        for cid in sorted(compute_ids):
            local_kwh = learn.local_epochs * float(ek[cid])
            round_compute += local_kwh
            per_client[cid][0] += local_kwh

        global_params = fedavg_round(
            model,
            global_params,
            clients,
            selected,
            learn,
            seed=scenario.seed,
            round_index=t,
            workers=workers,
        )

        for cid in sorted(selected):
            round_trans += uplink_unit
            per_client[cid][1] += uplink_unit
        for client in clients:
            entry = per_client[client.id]
            if any(entry):
                client.charge(*entry)

        cum_compute += round_compute
        cum_trans += round_trans
        records.append(
            RoundRecord(
                round_index=t + 1,
                rmse=rmse(model, global_params, eval_set),
                compute_kwh=round_compute,
                transmission_kwh=round_trans,
                cumulative_total_kwh=cum_compute + cum_trans,
            )
        )

    final_rmse = records[-1].rmse if records else rmse(model, global_params, eval_set)
    return SimulationResult(
        scenario_name=scenario.name,
        architecture=Architecture.FEDERATED,
        records=tuple(records),
        final_breakdown=EnergyBreakdown(compute_kwh=cum_compute, transmission_kwh=cum_trans),
        final_rmse=final_rmse,
        final_params=ParamVector(global_params, energy.bits_per_param),
        schedule=SelectionSchedule(per_round_selected=tuple(schedule_rounds)),
        model_bits=model_bits,
    )


def compare(
    scenario: Scenario, workers: int | None = None
) -> tuple[SimulationResult, SimulationResult, float]:
    """Run both architectures with the same seed and a normalized budget
    (centralized epochs = federated rounds); return their results and the
    fraction of centralized energy the federated run saves."""
    cl_result = simulate_cl(with_overrides(scenario, architecture=Architecture.CENTRALIZED))
    fl_result = simulate_fl(
        with_overrides(scenario, architecture=Architecture.FEDERATED), workers=workers
    )
    cl_total = cl_result.final_breakdown.total_kwh
    fl_total = fl_result.final_breakdown.total_kwh
    if cl_total > 0:
        savings = 1.0 - fl_total / cl_total
    else:
        savings = 0.0 if fl_total == 0 else float("nan")
    return cl_result, fl_result, savings


def fmt9(value: float) -> str:
    """Pinned numeric formatting for CSV output: 9 significant digits."""
    return format(float(value), ".9g")


ROUNDS_CSV_HEADER = "round,rmse,compute_kwh,transmission_kwh,cumulative_kwh"


def write_rounds_csv(result: SimulationResult, path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ROUNDS_CSV_HEADER.split(","))
        for rec in result.records:
            writer.writerow(
                [
                    rec.round_index,
                    fmt9(rec.rmse),
                    fmt9(rec.compute_kwh),
                    fmt9(rec.transmission_kwh),
                    fmt9(rec.cumulative_total_kwh),
                ]
            )


def write_summary_json(result: SimulationResult, scenario: Scenario, path) -> None:
    summary = {
        "scenario": scenario_to_dict(scenario),
        "architecture": result.architecture.value,
        "rounds_recorded": len(result.records),
        "model_bits": result.model_bits,
        "final_rmse": result.final_rmse,
        "final_breakdown": {
            "compute_kwh": result.final_breakdown.compute_kwh,
            "transmission_kwh": result.final_breakdown.transmission_kwh,
            "total_kwh": result.final_breakdown.total_kwh,
        },
    }
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
