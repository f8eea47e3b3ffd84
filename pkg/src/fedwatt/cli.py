"""Command-line interface: simulate, calibrate, sweep, version.

Exit codes: 0 success, 1 configuration or input error, 2 numerical failure
(training divergence). The output directory defaults to ``./out`` and can be
overridden by ``--out`` or the ``FEDWATT_OUT`` environment variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .energy import TABLE1_CSV, calibrate, calibrated_scenario, read_sites_csv
from .learning import BACKEND_NAME
from .learning.training import DivergenceError
from .simulator import (
    compare,
    fmt9,
    simulate_cl,
    simulate_fl,
    write_rounds_csv,
    write_summary_json,
)
from .topology import (
    Architecture,
    Scenario,
    ScenarioError,
    load_scenario,
    save_scenario,
    scenario_digest,
    validate_scenario,
    with_overrides,
)

SWEEP_CSV_HEADER = "parameter,cl_total_kwh,fl_total_kwh,cl_rmse,fl_rmse,savings_fraction"

# swept parameter name -> (scenario section, value type)
SWEEP_PARAMS = {
    "rounds": ("topology", int),
    "num_sensors": ("topology", int),
    "seed": ("topology", int),
    "gamma": ("energy", float),
    "alpha": ("energy", float),
    "beta": ("energy", float),
    "e0_compute": ("energy", float),
    "ek_compute": ("energy", float),
    "e_uplink_per_bit": ("energy", float),
    "e_downlink_per_bit": ("energy", float),
    "bits_per_param": ("energy", int),
    "dataset_bits_per_sensor": ("energy", float),
    "client_fraction": ("learning", float),
    "local_epochs": ("learning", int),
    "batch_size": ("learning", int),
    "learning_rate": ("learning", float),
    "samples_per_client": ("learning", int),
    "input_dim": ("learning", int),
    "hidden_dim": ("learning", int),
    "noise_std": ("learning", float),
    "eval_samples": ("learning", int),
}


def _output_dir(arg: str | None) -> Path:
    path = Path(arg or os.environ.get("FEDWATT_OUT") or "out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(path: Path, argv: list[str], scenario: Scenario, outputs: list[Path]) -> None:
    manifest = {
        "command": "fedwatt " + " ".join(argv),
        "scenario_digest": scenario_digest(scenario),
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": [str(p) for p in outputs],
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def apply_sweep_value(scenario: Scenario, name: str, value) -> Scenario:
    if name not in SWEEP_PARAMS:
        raise ScenarioError(
            f"unknown sweep parameter: {name!r} (known: {', '.join(sorted(SWEEP_PARAMS))})"
        )
    section, _ = SWEEP_PARAMS[name]
    if section == "topology":
        updated = dataclasses.replace(scenario, **{name: value})
    elif section == "energy":
        updated = dataclasses.replace(
            scenario, energy=dataclasses.replace(scenario.energy, **{name: value})
        )
    else:
        updated = dataclasses.replace(
            scenario, learning=dataclasses.replace(scenario.learning, **{name: value})
        )
    return validate_scenario(updated)


def parse_values(spec: str, kind) -> list:
    """Parse a sweep value list: comma-separated values, with ``a:b`` and
    ``a:b:step`` inclusive integer ranges."""
    values = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            parts = token.split(":")
            if len(parts) not in (2, 3) or kind is not int:
                raise ScenarioError(f"bad range {token!r} (ranges are int-only, a:b or a:b:step)")
            start, stop = int(parts[0]), int(parts[1])
            step = int(parts[2]) if len(parts) == 3 else 1
            if step < 1 or stop < start:
                raise ScenarioError(f"bad range {token!r}")
            values.extend(range(start, stop + 1, step))
        else:
            values.append(kind(token))
    if not values:
        raise ScenarioError("no sweep values given")
    return values


def cmd_simulate(args, argv: list[str]) -> int:
    scenario = load_scenario(args.scenario)
    arch = Architecture.parse(args.arch) if args.arch else None
    scenario = with_overrides(scenario, architecture=arch, rounds=args.rounds, seed=args.seed)
    if scenario.architecture is Architecture.CENTRALIZED:
        result = simulate_cl(scenario)
    else:
        result = simulate_fl(scenario, workers=args.workers)
    outdir = _output_dir(args.out)
    csv_path = outdir / "rounds.csv"
    summary_path = outdir / "summary.json"
    write_rounds_csv(result, csv_path)
    write_summary_json(result, scenario, summary_path)
    _write_manifest(outdir / "manifest.json", argv, scenario, [csv_path, summary_path])
    print(
        f"{scenario.name} [{result.architecture.value}] "
        f"rounds={scenario.rounds} final_rmse={fmt9(result.final_rmse)} "
        f"total_kwh={fmt9(result.final_breakdown.total_kwh)} -> {csv_path}"
    )
    return 0


def cmd_calibrate(args, argv: list[str]) -> int:
    sites = read_sites_csv(args.csv if args.csv else TABLE1_CSV)
    result = calibrate(sites)
    outdir = _output_dir(args.out_dir) if args.out is None else None
    out_path = Path(args.out) if args.out else outdir / "calibration.json"
    payload = {
        "cl_kwh_per_sensor": result.cl_kwh_per_sensor,
        "fl_kwh_per_sensor": result.fl_kwh_per_sensor,
        "fl_cl_ratio": result.fl_cl_ratio,
        "savings_fraction": result.savings_fraction,
        "max_relative_error": result.max_relative_error,
        "per_site_residuals": [
            {"site": name, "cl_rel_err": cl_r, "fl_rel_err": fl_r}
            for name, cl_r, fl_r in result.per_site_residuals
        ],
    }
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    print(f"{'site':<12} {'sensors':>8} {'cl residual':>12} {'fl residual':>12}")
    for site, (name, cl_r, fl_r) in zip(sites, result.per_site_residuals):
        print(f"{name:<12} {site.sensors:>8} {cl_r:>11.4%} {fl_r:>11.4%}")
    print(
        f"cl={fmt9(result.cl_kwh_per_sensor)} kWh/sensor, "
        f"fl={fmt9(result.fl_kwh_per_sensor)} kWh/sensor, "
        f"fl/cl={fmt9(result.fl_cl_ratio)}, "
        f"max residual={result.max_relative_error:.4%}"
    )

    if args.emit_scenario:
        scenario = calibrated_scenario(
            result,
            num_sensors=args.scenario_sensors,
            rounds=args.scenario_rounds,
            seed=args.seed,
        )
        save_scenario(scenario, args.emit_scenario)
        print(f"calibrated scenario -> {args.emit_scenario}")
    return 0


def cmd_sweep(args, argv: list[str]) -> int:
    scenario = load_scenario(args.scenario)
    if args.param not in SWEEP_PARAMS:
        raise ScenarioError(
            f"unknown sweep parameter: {args.param!r} (known: {', '.join(sorted(SWEEP_PARAMS))})"
        )
    _, kind = SWEEP_PARAMS[args.param]
    values = parse_values(args.values, kind)
    outdir = _output_dir(args.out_dir) if args.out is None else None
    out_path = Path(args.out) if args.out else outdir / "sweep.csv"
    out_path.parent.mkdir(parents=True, exist_ok=True)

    lines = [SWEEP_CSV_HEADER]
    for value in values:
        variant = apply_sweep_value(scenario, args.param, value)
        cl_result, fl_result, savings = compare(variant, workers=args.workers)
        lines.append(
            ",".join(
                [
                    str(value),
                    fmt9(cl_result.final_breakdown.total_kwh),
                    fmt9(fl_result.final_breakdown.total_kwh),
                    fmt9(cl_result.final_rmse),
                    fmt9(fl_result.final_rmse),
                    fmt9(savings),
                ]
            )
        )
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out_path.parent / "manifest.json", argv, scenario, [out_path])
    print(f"swept {args.param} over {len(values)} value(s) -> {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedwatt",
        description="Energy-cost simulator for centralized vs federated learning in IoT networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario and emit round records")
    p_sim.add_argument("--scenario", required=True, help="scenario file (.toml or .json)")
    p_sim.add_argument("--arch", choices=["cl", "fl", "centralized", "federated"])
    p_sim.add_argument("--rounds", type=int)
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--out", help="output directory (default: $FEDWATT_OUT or ./out)")
    p_sim.add_argument("--workers", type=int, help="threads for within-round client training")

    p_cal = sub.add_parser("calibrate", help="fit per-sensor coefficients to site measurements")
    p_cal.add_argument("--csv", help="sites CSV (default: bundled deployment table)")
    p_cal.add_argument("--out", help="calibration JSON path (default: <outdir>/calibration.json)")
    p_cal.add_argument("--out-dir", dest="out_dir", help="output directory")
    p_cal.add_argument("--emit-scenario", help="also write a scenario with calibrated coefficients")
    p_cal.add_argument("--scenario-rounds", type=int, default=4)
    p_cal.add_argument("--scenario-sensors", type=int, default=208)
    p_cal.add_argument("--seed", type=int, default=0)

    p_sweep = sub.add_parser("sweep", help="run compare() over a list of parameter values")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--param", required=True, help="scenario key to vary")
    p_sweep.add_argument("--values", required=True, help="comma list; int ranges as a:b[:step]")
    p_sweep.add_argument("--out", help="sweep CSV path (default: <outdir>/sweep.csv)")
    p_sweep.add_argument("--out-dir", dest="out_dir", help="output directory")
    p_sweep.add_argument("--workers", type=int)

    sub.add_parser("version", help="print version and active kernel backend")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args, argv)
        if args.command == "calibrate":
            return cmd_calibrate(args, argv)
        if args.command == "sweep":
            return cmd_sweep(args, argv)
        if args.command == "version":
            print(f"fedwatt {__version__} (backend: {BACKEND_NAME})")
            return 0
        parser.error(f"unknown command {args.command!r}")
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
