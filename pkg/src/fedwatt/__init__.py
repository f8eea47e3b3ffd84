"""fedwatt: energy-cost simulation of centralized vs federated learning
in IoT sensor networks."""

__version__ = "0.1.0"

from .energy import (
    CalibrationResult,
    EnergyBreakdown,
    SelectionSchedule,
    SiteRecord,
    build_schedule,
    calibrate,
    calibrated_scenario,
    energy_cl,
    energy_fl_compute,
    energy_fl_total,
    energy_fl_trans,
    predict_site,
    read_sites_csv,
)
from .learning import (
    BACKEND_NAME,
    ClientState,
    DivergenceError,
    ModelKind,
    ParamVector,
    Predictor,
    TrainReport,
    fedavg_round,
    generate_dataset,
    rmse,
    select_clients,
    sgd_train,
)
from .simulator import (
    RoundRecord,
    SimulationResult,
    compare,
    simulate_cl,
    simulate_fl,
    write_rounds_csv,
    write_summary_json,
)
from .topology import (
    Architecture,
    EnergyParams,
    LearningParams,
    Scenario,
    ScenarioError,
    holdout_data,
    load_scenario,
    make_clients,
    save_scenario,
    scenario_digest,
    validate_scenario,
)

__all__ = [
    "Architecture",
    "BACKEND_NAME",
    "CalibrationResult",
    "ClientState",
    "DivergenceError",
    "EnergyBreakdown",
    "EnergyParams",
    "LearningParams",
    "ModelKind",
    "ParamVector",
    "Predictor",
    "RoundRecord",
    "Scenario",
    "ScenarioError",
    "SelectionSchedule",
    "SimulationResult",
    "SiteRecord",
    "TrainReport",
    "build_schedule",
    "calibrate",
    "calibrated_scenario",
    "compare",
    "energy_cl",
    "energy_fl_compute",
    "energy_fl_total",
    "energy_fl_trans",
    "fedavg_round",
    "generate_dataset",
    "holdout_data",
    "load_scenario",
    "make_clients",
    "predict_site",
    "read_sites_csv",
    "rmse",
    "save_scenario",
    "scenario_digest",
    "select_clients",
    "sgd_train",
    "simulate_cl",
    "simulate_fl",
    "validate_scenario",
    "write_rounds_csv",
    "write_summary_json",
]
