"""Network-under-study description: sensors, energy coefficients, learning
hyperparameters, and the scenario files that carry them.

A scenario file is TOML with sections ``[topology]``, ``[energy]`` and
``[learning]`` (see README for the schema), or the equivalent JSON when the
extension is ``.json``. Unknown keys are rejected rather than ignored.
"""

from __future__ import annotations

import enum
import hashlib
import json
import sys
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .learning.data import generate_dataset, ground_truth
from .learning.models import ModelKind
from .learning.seeds import child_seed
from .learning.training import ClientState


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate; message names the field."""


class Architecture(str, enum.Enum):
    CENTRALIZED = "centralized"
    FEDERATED = "federated"

    @classmethod
    def parse(cls, text: str) -> "Architecture":
        normalized = str(text).strip().lower()
        aliases = {
            "cl": cls.CENTRALIZED,
            "centralized": cls.CENTRALIZED,
            "fl": cls.FEDERATED,
            "federated": cls.FEDERATED,
        }
        if normalized not in aliases:
            raise ScenarioError(
                f"architecture: unknown value {text!r} (expected cl/centralized or fl/federated)"
            )
        return aliases[normalized]


@dataclass(frozen=True)
class EnergyParams:
    """Every coefficient of the energy-cost equations, all energies in kWh.

    ``gamma`` is the data-center PUE factor (default 0.8 matches the source
    deployment's convention even though physical PUE is usually >= 1; the
    [0, 2] range admits either reading). ``alpha`` is the expected number of
    raw-dataset transmissions. ``beta`` scales the server's per-round
    aggregation compute against a full training epoch.
    """

    gamma: float = 0.8
    alpha: float = 1.0
    beta: float = 0.1
    e0_compute: float = 2.0
    ek_compute: float | tuple[float, ...] = 0.05
    e_uplink_per_bit: float = 1e-6
    e_downlink_per_bit: float = 1e-6
    bits_per_param: int = 32
    dataset_bits_per_sensor: float = 1e6
    compute_selected_only: bool = False
    downlink_selected_only: bool = False

    def ek_values(self, num_clients: int) -> np.ndarray:
        """Per-client local-epoch compute energies, expanding a scalar default."""
        if isinstance(self.ek_compute, tuple):
            if len(self.ek_compute) != num_clients:
                raise ScenarioError(
                    f"energy.ek_compute: expected {num_clients} entries, got {len(self.ek_compute)}"
                )
            return np.asarray(self.ek_compute, dtype=np.float64)
        return np.full(num_clients, float(self.ek_compute))


@dataclass(frozen=True)
class LearningParams:
    """Training hyperparameters plus the synthetic-task shape knobs."""

    client_fraction: float = 1.0
    local_epochs: int = 1
    batch_size: int = 32
    learning_rate: float = 0.05
    model_kind: ModelKind = ModelKind.LINEAR
    samples_per_client: int | tuple[int, ...] = 128
    input_dim: int = 8
    hidden_dim: int = 8
    noise_std: float = 0.1
    eval_samples: int = 200

    def samples_list(self, num_clients: int) -> list[int]:
        if isinstance(self.samples_per_client, tuple):
            if len(self.samples_per_client) != num_clients:
                raise ScenarioError(
                    f"learning.samples_per_client: expected {num_clients} entries, "
                    f"got {len(self.samples_per_client)}"
                )
            return [int(v) for v in self.samples_per_client]
        return [int(self.samples_per_client)] * num_clients


@dataclass(frozen=True)
class Scenario:
    """Full experiment description; read-only once constructed."""

    name: str
    architecture: Architecture
    num_sensors: int
    rounds: int
    energy: EnergyParams = field(default_factory=EnergyParams)
    learning: LearningParams = field(default_factory=LearningParams)
    seed: int = 0


_TOPOLOGY_KEYS = {"name", "architecture", "num_sensors", "rounds", "seed"}
_ENERGY_KEYS = {
    "gamma",
    "alpha",
    "beta",
    "e0_compute",
    "ek_compute",
    "e_uplink_per_bit",
    "e_downlink_per_bit",
    "bits_per_param",
    "dataset_bits_per_sensor",
    "compute_selected_only",
    "downlink_selected_only",
}
_LEARNING_KEYS = {
    "client_fraction",
    "local_epochs",
    "batch_size",
    "learning_rate",
    "model_kind",
    "samples_per_client",
    "input_dim",
    "hidden_dim",
    "noise_std",
    "eval_samples",
}


def validate_scenario(scenario: Scenario) -> Scenario:
    """Check every invariant; raise ScenarioError naming the offending field."""

    def fail(fieldname: str, message: str):
        raise ScenarioError(f"{fieldname}: {message}")

    if scenario.num_sensors < 1:
        fail("topology.num_sensors", "must be >= 1")
    if scenario.rounds < 0:
        fail("topology.rounds", "must be >= 0")
    if not 0 <= scenario.seed < 2**64:
        fail("topology.seed", "must fit in an unsigned 64-bit integer")

    e = scenario.energy
    if not 0.0 <= e.gamma <= 2.0:
        fail("energy.gamma", f"must be in [0, 2], got {e.gamma}")
    if e.alpha < 0:
        fail("energy.alpha", "must be >= 0")
    if not 0.0 <= e.beta <= 1.0:
        fail("energy.beta", f"must be in [0, 1], got {e.beta}")
    if e.e0_compute < 0:
        fail("energy.e0_compute", "must be >= 0")
    ek = e.ek_compute if isinstance(e.ek_compute, tuple) else (e.ek_compute,)
    if any(v < 0 for v in ek):
        fail("energy.ek_compute", "entries must be >= 0")
    if isinstance(e.ek_compute, tuple) and len(e.ek_compute) != scenario.num_sensors:
        fail(
            "energy.ek_compute",
            f"list length {len(e.ek_compute)} does not match num_sensors={scenario.num_sensors}",
        )
    if e.e_uplink_per_bit < 0:
        fail("energy.e_uplink_per_bit", "must be >= 0")
    if e.e_downlink_per_bit < 0:
        fail("energy.e_downlink_per_bit", "must be >= 0")
    if not (isinstance(e.bits_per_param, int) and e.bits_per_param >= 1):
        fail("energy.bits_per_param", "must be a positive integer")
    if e.dataset_bits_per_sensor < 0:
        fail("energy.dataset_bits_per_sensor", "must be >= 0")

    l = scenario.learning
    if not 0.0 < l.client_fraction <= 1.0:
        fail("learning.client_fraction", f"must be in (0, 1], got {l.client_fraction}")
    if l.local_epochs < 1:
        fail("learning.local_epochs", "must be >= 1")
    if l.batch_size < 1:
        fail("learning.batch_size", "must be >= 1")
    if l.learning_rate <= 0:
        fail("learning.learning_rate", "must be > 0")
    samples = (
        l.samples_per_client if isinstance(l.samples_per_client, tuple) else (l.samples_per_client,)
    )
    if any(int(v) < 1 for v in samples):
        fail("learning.samples_per_client", "entries must be >= 1")
    if isinstance(l.samples_per_client, tuple) and len(l.samples_per_client) != scenario.num_sensors:
        fail(
            "learning.samples_per_client",
            f"list length {len(l.samples_per_client)} does not match "
            f"num_sensors={scenario.num_sensors}",
        )
    if l.input_dim < 1:
        fail("learning.input_dim", "must be >= 1")
    if l.model_kind is ModelKind.SMALL_MLP and l.hidden_dim < 1:
        fail("learning.hidden_dim", "must be >= 1 for small_mlp")
    if l.noise_std < 0:
        fail("learning.noise_std", "must be >= 0")
    if l.eval_samples < 1:
        fail("learning.eval_samples", "must be >= 1")
    return scenario


def _coerce_number(section: str, key: str, value, kind):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{section}.{key}: expected a number, got {value!r}")
    return kind(value)


def _coerce_int(section: str, key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{section}.{key}: expected an integer, got {value!r}")
    return value


def _coerce_scalar_or_list(section: str, key: str, value, kind):
    if isinstance(value, (list, tuple)):
        return tuple(_coerce_number(section, key, v, kind) for v in value)
    return _coerce_number(section, key, value, kind)


def scenario_from_dict(raw: dict, default_name: str = "scenario") -> Scenario:
    """Build and validate a Scenario from the parsed file structure."""
    if not isinstance(raw, dict):
        raise ScenarioError("top level must be a table of sections")
    unknown_sections = set(raw) - {"topology", "energy", "learning"}
    if unknown_sections:
        raise ScenarioError(f"unknown section(s): {', '.join(sorted(unknown_sections))}")

    topo = dict(raw.get("topology", {}))
    energy_raw = dict(raw.get("energy", {}))
    learn_raw = dict(raw.get("learning", {}))
    for section, table, allowed in (
        ("topology", topo, _TOPOLOGY_KEYS),
        ("energy", energy_raw, _ENERGY_KEYS),
        ("learning", learn_raw, _LEARNING_KEYS),
    ):
        bad = set(table) - allowed
        if bad:
            raise ScenarioError(f"unknown key(s) in [{section}]: {', '.join(sorted(bad))}")

    for required in ("architecture", "num_sensors", "rounds"):
        if required not in topo:
            raise ScenarioError(f"topology.{required}: required key is missing")

    energy_kwargs = {}
    for key, value in energy_raw.items():
        if key in ("compute_selected_only", "downlink_selected_only"):
            if not isinstance(value, bool):
                raise ScenarioError(f"energy.{key}: expected a boolean")
            energy_kwargs[key] = value
        elif key == "bits_per_param":
            energy_kwargs[key] = _coerce_int("energy", key, value)
        elif key == "ek_compute":
            energy_kwargs[key] = _coerce_scalar_or_list("energy", key, value, float)
        else:
            energy_kwargs[key] = _coerce_number("energy", key, value, float)

    learning_kwargs = {}
    for key, value in learn_raw.items():
        if key == "model_kind":
            try:
                learning_kwargs[key] = ModelKind.parse(str(value))
            except ValueError as exc:
                raise ScenarioError(f"learning.model_kind: {exc}") from exc
        elif key == "samples_per_client":
            learning_kwargs[key] = _coerce_scalar_or_list("learning", key, value, int)
        elif key in ("local_epochs", "batch_size", "input_dim", "hidden_dim", "eval_samples"):
            learning_kwargs[key] = _coerce_int("learning", key, value)
        else:
            learning_kwargs[key] = _coerce_number("learning", key, value, float)

    scenario = Scenario(
        name=str(topo.get("name", default_name)),
        architecture=Architecture.parse(topo["architecture"]),
        num_sensors=_coerce_int("topology", "num_sensors", topo["num_sensors"]),
        rounds=_coerce_int("topology", "rounds", topo["rounds"]),
        seed=_coerce_int("topology", "seed", topo.get("seed", 0)),
        energy=EnergyParams(**energy_kwargs),
        learning=LearningParams(**learning_kwargs),
    )
    return validate_scenario(scenario)


def scenario_to_dict(scenario: Scenario) -> dict:
    def plain(value):
        if isinstance(value, tuple):
            return list(value)
        return value

    return {
        "topology": {
            "name": scenario.name,
            "architecture": scenario.architecture.value,
            "num_sensors": scenario.num_sensors,
            "rounds": scenario.rounds,
            "seed": scenario.seed,
        },
        "energy": {
            "gamma": scenario.energy.gamma,
            "alpha": scenario.energy.alpha,
            "beta": scenario.energy.beta,
            "e0_compute": scenario.energy.e0_compute,
            "ek_compute": plain(scenario.energy.ek_compute),
            "e_uplink_per_bit": scenario.energy.e_uplink_per_bit,
            "e_downlink_per_bit": scenario.energy.e_downlink_per_bit,
            "bits_per_param": scenario.energy.bits_per_param,
            "dataset_bits_per_sensor": scenario.energy.dataset_bits_per_sensor,
            "compute_selected_only": scenario.energy.compute_selected_only,
            "downlink_selected_only": scenario.energy.downlink_selected_only,
        },
        "learning": {
            "client_fraction": scenario.learning.client_fraction,
            "local_epochs": scenario.learning.local_epochs,
            "batch_size": scenario.learning.batch_size,
            "learning_rate": scenario.learning.learning_rate,
            "model_kind": scenario.learning.model_kind.value,
            "samples_per_client": plain(scenario.learning.samples_per_client),
            "input_dim": scenario.learning.input_dim,
            "hidden_dim": scenario.learning.hidden_dim,
            "noise_std": scenario.learning.noise_std,
            "eval_samples": scenario.learning.eval_samples,
        },
    }


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r} to TOML")


def save_scenario(scenario: Scenario, path) -> None:
    """Write the scenario as TOML, or JSON when the path ends in .json."""
    path = Path(path)
    data = scenario_to_dict(scenario)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
        return
    lines = []
    for section in ("topology", "energy", "learning"):
        lines.append(f"[{section}]")
        for key, value in data[section].items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    path.write_text("\n".join(lines), encoding="utf-8")


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file (TOML, or JSON for .json paths)."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        if path.suffix.lower() == ".json":
            raw = json.loads(path.read_text(encoding="utf-8"))
        else:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioError(f"{path}: could not parse scenario file: {exc}") from exc
    return scenario_from_dict(raw, default_name=path.stem)


def scenario_digest(scenario: Scenario) -> str:
    """Content hash of the scenario: stable under reformatting, sensitive to
    any field change."""
    canonical = json.dumps(scenario_to_dict(scenario), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@lru_cache(maxsize=8)
def _client_shards(
    seed: int, counts: tuple[int, ...], input_dim: int, noise_std: float
) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Deterministic per-client (X, y) shards; cached because both halves of a
    comparison run build the same clients. Arrays are treated as read-only."""
    truth = ground_truth(child_seed(seed, "truth"), input_dim)
    shards = []
    for cid, n_k in enumerate(counts):
        X, y = generate_dataset(
            child_seed(seed, "data", cid), n_k, input_dim, noise_std, truth=truth
        )
        X.setflags(write=False)
        y.setflags(write=False)
        shards.append((X, y))
    return tuple(shards)


def make_clients(scenario: Scenario) -> list[ClientState]:
    """Build the K edge nodes with their deterministic synthetic shards.

    All shards share one ground-truth signal drawn from the scenario seed;
    client k's raw-dataset bit size is its n_k-proportional share of
    K * dataset_bits_per_sensor.
    """
    validate_scenario(scenario)
    k_total = scenario.num_sensors
    learn = scenario.learning
    counts = tuple(learn.samples_list(k_total))
    shards = _client_shards(scenario.seed, counts, learn.input_dim, learn.noise_std)
    total_samples = sum(counts)
    total_bits = k_total * scenario.energy.dataset_bits_per_sensor
    return [
        ClientState(id=cid, X=X, y=y, dataset_bits=total_bits * counts[cid] / total_samples)
        for cid, (X, y) in enumerate(shards)
    ]


def holdout_data(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Seed-derived global evaluation set, shared by both architectures."""
    learn = scenario.learning
    truth = ground_truth(child_seed(scenario.seed, "truth"), learn.input_dim)
    return generate_dataset(
        child_seed(scenario.seed, "eval"),
        learn.eval_samples,
        learn.input_dim,
        learn.noise_std,
        truth=truth,
    )


def with_overrides(
    scenario: Scenario,
    architecture: Architecture | None = None,
    rounds: int | None = None,
    seed: int | None = None,
) -> Scenario:
    """Scenario copy with CLI-style overrides applied."""
    updates = {}
    if architecture is not None:
        updates["architecture"] = architecture
    if rounds is not None:
        updates["rounds"] = rounds
    if seed is not None:
        updates["seed"] = seed
    return validate_scenario(replace(scenario, **updates)) if updates else scenario
