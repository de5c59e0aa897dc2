"""Command-line front end.

Batch-style: every subcommand reads an INI config (all keys optional,
defaults reproduce the nominal simulation parameters), applies flag
overrides, runs, and writes tables or files.  Exit codes: 0 success,
2 validation or parse error, 3 solver non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys

import numpy as np

from .detector import detect_peaks
from .dictionary import (
    CorrelatorConfig,
    GridConfig,
    decimate_dictionary,
    export_dictionary_csv,
    make_dictionary,
)
from .lasso import NonConvergenceError, solve_iq_lasso, solve_multi_lasso
from .metrics import (
    DerScenario,
    SolverSettings,
    der_table_to_csv,
    pfa_curve_to_csv,
    psr_curve_to_csv,
    run_der_campaign,
    run_pfa_campaign,
    run_psr_sweep,
)
from .simulator import (
    PeakSpec,
    ReplicaBank,
    SnapshotFormatError,
    SnapshotParams,
    load_snapshot,
    save_snapshot,
    simulate_snapshot,
    trial_seed,
)

DEFAULTS = {
    "correlator": {
        "delta_el": "1.0",
        "d": "0.1",
        "fs_hz": "25e6",
        "integration_ms": "1.0",
        "prn": "1",
    },
    "grid": {"fp": "1"},
    "signal": {
        "cnr_dbhz": "50.0",
        "authentic_phase_chips": "0.0",
        "authentic_power_db": "0.0",
        "authentic_carrier_rad": "0.0",
        "spoofer_present": "true",
        "spoofer_phase_chips": "0.34",
        "spoofer_power_db": "-3.0",
        "spoofer_carrier_rad": "0.0",
        "noise": "true",
    },
    "solver": {
        "lambda": "0.3009",
        "tol": "1e-8",
        "max_sweeps": "200000",
        "whiten": "true",
    },
    "detector": {"threshold": "0.30", "normalize_input": "true"},
    "campaign": {
        "trials": "300",
        "master_seed": "1",
        "powers_db": "0,-3,-6",
        "lengths_ms": "1,5,10,15,20",
        "delay_policy": "random",
        "random_delay_lo": "0.01",
        "random_delay_hi": "0.5",
        "random_delay_step": "0.01",
        "grid_delays": "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
        "psr_tap": "0.3",
        "psr_power_db": "0.0",
        "psr_step": "0.01",
        "psr_level": "0.7",
        "psr_integration_ms": "20.0",
        "pfa_thresholds": "0.1,0.2,0.3,0.4,0.5",
        "pfa_worst_power_db": "-6.0",
        "pfa_worst_integration_ms": "1.0",
    },
}


class ConfigError(ValueError):
    pass


def load_config(path: str | None) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    parser.read_dict(DEFAULTS)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"bad config file {path}: {exc}") from exc
    return parser


def effective_config(args) -> configparser.ConfigParser:
    """Config file merged with flag overrides; optionally dumped so a rerun
    from the dumped file reproduces the same outputs without any flags."""
    cfg = load_config(args.config)
    if getattr(args, "fp", None) is not None:
        cfg["grid"]["fp"] = str(args.fp)
    if getattr(args, "threshold", None) is not None:
        cfg["detector"]["threshold"] = repr(args.threshold)
    if getattr(args, "lam", None) is not None:
        cfg["solver"]["lambda"] = repr(args.lam)
    if getattr(args, "seed", None) is not None:
        cfg["campaign"]["master_seed"] = str(args.seed)
    if getattr(args, "noiseless", False):
        cfg["signal"]["noise"] = "false"
    dump = getattr(args, "dump_config", None)
    if dump:
        with open(dump, "w", encoding="utf-8") as fh:
            cfg.write(fh)
    return cfg


def _floats(raw: str) -> list[float]:
    return [float(v) for v in raw.split(",") if v.strip()]


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def build_correlator(cfg: configparser.ConfigParser,
                     integration_ms: float | None = None) -> CorrelatorConfig:
    sec = cfg["correlator"]
    T_ms = float(sec["integration_ms"]) if integration_ms is None else integration_ms
    return CorrelatorConfig(
        delta_el=float(sec["delta_el"]),
        d=float(sec["d"]),
        fs=float(sec["fs_hz"]),
        T=T_ms * 1e-3,
        prn=int(sec["prn"]),
    )


def build_settings(cfg: configparser.ConfigParser) -> SolverSettings:
    sec = cfg["solver"]
    return SolverSettings(
        lam=float(sec["lambda"]),
        tol=float(sec["tol"]),
        max_sweeps=int(float(sec["max_sweeps"])),
        whiten=_bool(sec["whiten"]),
    )


def _grid(cfg: configparser.ConfigParser) -> GridConfig:
    return GridConfig(fp=int(cfg["grid"]["fp"]))


def _threshold(cfg: configparser.ConfigParser) -> float:
    return float(cfg["detector"]["threshold"])


def _master_seed(cfg: configparser.ConfigParser) -> int:
    return int(cfg["campaign"]["master_seed"])


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_simulate(args) -> int:
    cfg = effective_config(args)
    config = build_correlator(cfg)
    sig = cfg["signal"]
    spoofer = None
    if _bool(sig["spoofer_present"]):
        spoofer = PeakSpec(
            code_phase=float(sig["spoofer_phase_chips"]),
            power=10.0 ** (float(sig["spoofer_power_db"]) / 10.0),
            carrier_phase=float(sig["spoofer_carrier_rad"]),
        )
    params = SnapshotParams(
        authentic=PeakSpec(
            code_phase=float(sig["authentic_phase_chips"]),
            power=10.0 ** (float(sig["authentic_power_db"]) / 10.0),
            carrier_phase=float(sig["authentic_carrier_rad"]),
        ),
        spoofer=spoofer,
        cnr_dbhz=float(sig["cnr_dbhz"]),
        config=config,
        seed=trial_seed(_master_seed(cfg), 0),
        noise=_bool(sig["noise"]),
    )
    snapshot = simulate_snapshot(params, ReplicaBank(config))
    snapshot.label = args.label
    out = args.out or "snapshot.csv"
    save_snapshot(snapshot, out)
    return 0


def cmd_detect(args) -> int:
    cfg = effective_config(args)
    snapshot = load_snapshot(args.snapshot)
    grid = _grid(cfg)
    settings = build_settings(cfg)
    taps = snapshot.taps
    if _bool(cfg["detector"]["normalize_input"]):
        peak = float(np.max(np.abs(taps)))
        if peak == 0.0:
            raise ConfigError("snapshot has all-zero taps")
        taps = taps / peak
    bank = ReplicaBank(snapshot.config)
    dictionary = make_dictionary(snapshot.config, grid, code=bank.code, bank=bank.C)
    whitener = bank.whitener if settings.whiten else None
    if grid.fp == 1:
        selector = solve_iq_lasso(dictionary, taps, settings.lam, settings.tol,
                                  settings.max_sweeps, whitener=whitener)
    else:
        selector = solve_multi_lasso(decimate_dictionary(dictionary), taps,
                                     settings.lam, settings.tol,
                                     settings.max_sweeps, whitener=whitener)
    report = detect_peaks(selector, _threshold(cfg))
    payload = report.to_dict()
    payload["snapshot"] = {"path": args.snapshot, "label": snapshot.label}
    _write_text(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_psr(args) -> int:
    cfg = effective_config(args)
    camp = cfg["campaign"]
    config = build_correlator(cfg, integration_ms=float(camp["psr_integration_ms"]))
    curve = run_psr_sweep(
        config,
        _grid(cfg),
        observed_tap=float(camp["psr_tap"]),
        relative_power_db=float(camp["psr_power_db"]),
        cnr_dbhz=float(cfg["signal"]["cnr_dbhz"]),
        sweep_step=float(camp["psr_step"]),
        level=float(camp["psr_level"]),
        master_seed=_master_seed(cfg),
        settings=build_settings(cfg),
    )
    _write_text(args.out, psr_curve_to_csv(curve))
    return 0


def _der_scenarios(cfg: configparser.ConfigParser, fp: int) -> list[DerScenario]:
    camp = cfg["campaign"]
    powers = _floats(camp["powers_db"])
    lengths = _floats(camp["lengths_ms"])
    policy = camp["delay_policy"].strip().lower()
    if policy == "random":
        return [
            DerScenario(
                relative_power_db=p,
                integration_ms=length,
                fp=fp,
                delay_policy="random",
                random_lo=float(camp["random_delay_lo"]),
                random_hi=float(camp["random_delay_hi"]),
                random_step=float(camp["random_delay_step"]),
            )
            for p in powers
            for length in lengths
        ]
    if policy == "grid":
        delays = _floats(camp["grid_delays"])
        return [
            DerScenario(
                relative_power_db=p,
                integration_ms=lengths[0],
                fp=fp,
                delay_policy="fixed",
                fixed_delay=delay,
            )
            for p in powers
            for delay in delays
        ]
    raise ConfigError(f"delay_policy must be 'random' or 'grid', got {policy!r}")


def cmd_der(args) -> int:
    cfg = effective_config(args)
    camp = cfg["campaign"]
    trials = int(camp["trials"])
    if trials < 1:
        raise ConfigError(f"trials must be positive, got {trials}")
    config = build_correlator(cfg)
    grid = _grid(cfg)
    table = run_der_campaign(
        config,
        _der_scenarios(cfg, grid.fp),
        trials=trials,
        master_seed=_master_seed(cfg),
        threshold_frac=_threshold(cfg),
        settings=build_settings(cfg),
        jobs=args.jobs,
        cnr_dbhz=float(cfg["signal"]["cnr_dbhz"]),
    )
    _write_text(args.out, der_table_to_csv(table))
    return 0


def cmd_pfa(args) -> int:
    cfg = effective_config(args)
    camp = cfg["campaign"]
    trials = int(camp["trials"])
    if trials < 1:
        raise ConfigError(f"trials must be positive, got {trials}")
    config = build_correlator(cfg)
    curve = run_pfa_campaign(
        config,
        _grid(cfg),
        thresholds=_floats(camp["pfa_thresholds"]),
        trials=trials,
        master_seed=_master_seed(cfg),
        settings=build_settings(cfg),
        worst_power_db=float(camp["pfa_worst_power_db"]),
        worst_integration_ms=float(camp["pfa_worst_integration_ms"]),
        cnr_dbhz=float(cfg["signal"]["cnr_dbhz"]),
    )
    _write_text(args.out, pfa_curve_to_csv(curve))
    return 0


def cmd_dict_export(args) -> int:
    cfg = effective_config(args)
    config = build_correlator(cfg)
    dictionary = make_dictionary(config, _grid(cfg))
    out = args.out or "dictionary.csv"
    export_dictionary_csv(dictionary, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taplasso",
        description="Correlator-domain spoofing detection via sparse triangle decomposition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, jobs=False):
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output path (default: stdout or command default)")
        p.add_argument("--fp", type=int, default=None, help="grid p-factor override")
        p.add_argument("--threshold", type=float, default=None, help="detection threshold override")
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="regularization weight override")
        p.add_argument("--dump-config", default=None,
                       help="write the effective config (file + overrides) to this path")
        if jobs:
            p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                           help="worker processes for campaign scenarios")

    p = sub.add_parser("simulate", help="write a synthetic snapshot file")
    common(p)
    p.add_argument("--noiseless", action="store_true", help="disable noise injection")
    p.add_argument("--label", default="", help="snapshot label")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="classify a snapshot file")
    common(p)
    p.add_argument("snapshot", help="snapshot file to analyze")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("psr", help="peak-sensitivity response sweep")
    common(p)
    p.set_defaults(func=cmd_psr)

    p = sub.add_parser("der", help="Monte-Carlo detection-error-rate campaign")
    common(p, jobs=True)
    p.set_defaults(func=cmd_der)

    p = sub.add_parser("pfa", help="false-alarm threshold study")
    common(p)
    p.set_defaults(func=cmd_pfa)

    p = sub.add_parser("dict-export", help="export the dictionary as CSV")
    common(p)
    p.set_defaults(func=cmd_dict_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, SnapshotFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
