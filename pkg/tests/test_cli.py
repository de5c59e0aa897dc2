import json

import numpy as np
import pytest

from taplasso.cli import main
from taplasso.simulator import load_snapshot


def write_config(path, **overrides):
    """Minimal INI writer; overrides keyed as section.option."""
    sections: dict[str, dict[str, str]] = {}
    for key, value in overrides.items():
        section, option = key.split(".")
        sections.setdefault(section, {})[option] = str(value)
    lines = []
    for section, options in sections.items():
        lines.append(f"[{section}]")
        for option, value in options.items():
            lines.append(f"{option} = {value}")
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def test_simulate_writes_parseable_snapshot(tmp_path):
    out = tmp_path / "snap.csv"
    assert main(["simulate", "--out", str(out), "--seed", "3"]) == 0
    snap = load_snapshot(out)
    assert snap.taps.shape == (11,)


def test_simulate_noiseless_ignores_seed(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["simulate", "--out", str(a), "--seed", "1", "--noiseless"]) == 0
    assert main(["simulate", "--out", str(b), "--seed", "999", "--noiseless"]) == 0
    assert a.read_text() == b.read_text()


def test_simulate_seed_determinism(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["simulate", "--out", str(a), "--seed", "5"]) == 0
    assert main(["simulate", "--out", str(b), "--seed", "5"]) == 0
    assert a.read_text() == b.read_text()


def test_detect_flags_on_grid_spoofer(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "c.ini",
        **{
            "signal.spoofer_phase_chips": "0.3",
            "signal.spoofer_power_db": "-3.0",
            "signal.noise": "false",
            "correlator.integration_ms": "20.0",
        },
    )
    snap = tmp_path / "snap.csv"
    assert main(["simulate", "--config", cfg, "--out", str(snap)]) == 0
    assert main(["detect", str(snap), "--config", cfg, "--fp", "5", "--out", "-"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "spoofed"
    delays = sorted(c["coarse_delay"] for c in payload["candidates"])
    assert delays == pytest.approx([0.0, 0.3])


def test_detect_clean_snapshot(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "c.ini",
        **{"signal.spoofer_present": "false", "signal.noise": "false"},
    )
    snap = tmp_path / "snap.csv"
    assert main(["simulate", "--config", cfg, "--out", str(snap)]) == 0
    assert main(["detect", str(snap), "--config", cfg, "--out", "-"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "clean"
    assert len(payload["candidates"]) == 1


def test_detect_truncated_snapshot_exit_2(tmp_path, capsys):
    snap = tmp_path / "snap.csv"
    assert main(["simulate", "--out", str(snap), "--seed", "2"]) == 0
    lines = snap.read_text().splitlines()
    snap.write_text("\n".join(lines[:-2]) + "\n")
    assert main(["detect", str(snap)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_invalid_geometry_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.ini", **{"correlator.d": "0.3"})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2
    assert "integer tap count" in capsys.readouterr().err


def test_solver_budget_exhaustion_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.ini", **{"solver.max_sweeps": "1"})
    snap = tmp_path / "snap.csv"
    assert main(["simulate", "--out", str(snap), "--seed", "4"]) == 0
    assert main(["detect", str(snap), "--config", cfg]) == 3
    assert "sweeps" in capsys.readouterr().err


def test_unwritable_output_exit_4(tmp_path):
    assert main(["simulate", "--out", str(tmp_path / "missing" / "x.csv")]) == 4


def test_der_campaign_csv_structure_and_determinism(tmp_path):
    cfg = write_config(
        tmp_path / "c.ini",
        **{
            "campaign.trials": "6",
            "campaign.powers_db": "0,-6",
            "campaign.lengths_ms": "1",
            "campaign.master_seed": "17",
        },
    )
    out1 = tmp_path / "der1.csv"
    out2 = tmp_path / "der2.csv"
    assert main(["der", "--config", cfg, "--out", str(out1), "--jobs", "1"]) == 0
    assert main(["der", "--config", cfg, "--out", str(out2), "--jobs", "3"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    assert lines[0] == "power_db,length_ms,Fp,delay_policy,trials,misses,der"
    assert len(lines) == 3  # 2 powers x 1 length


def test_der_zero_trials_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.ini", **{"campaign.trials": "0"})
    assert main(["der", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2
    assert "trials" in capsys.readouterr().err


def test_pfa_csv_monotone(tmp_path):
    cfg = write_config(tmp_path / "c.ini", **{"campaign.trials": "10"})
    out = tmp_path / "pfa.csv"
    assert main(["pfa", "--config", cfg, "--out", str(out), "--seed", "23"]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    pfas = [float(r[3]) for r in rows]
    assert pfas == sorted(pfas, reverse=True)


def test_psr_csv_deterministic(tmp_path):
    cfg = write_config(
        tmp_path / "c.ini",
        **{"campaign.psr_step": "0.1", "campaign.psr_integration_ms": "1.0"},
    )
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["psr", "--config", cfg, "--out", str(a), "--seed", "9"]) == 0
    assert main(["psr", "--config", cfg, "--out", str(b), "--seed", "9"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_dict_export_roundtrip(tmp_path):
    from taplasso.dictionary import load_dictionary_csv

    out = tmp_path / "dict.csv"
    assert main(["dict-export", "--out", str(out), "--fp", "5"]) == 0
    loaded = load_dictionary_csv(out)
    assert loaded.M.shape == (11, 55)
    assert loaded.grid.fp == 5


def test_wide_correlator_ingestion_path(tmp_path, capsys):
    # 17 taps over 1.6 chips: the offline-analysis geometry for externally
    # recorded correlator dumps, exercised through file save -> load -> detect.
    cfg = write_config(
        tmp_path / "c.ini",
        **{
            "correlator.delta_el": "1.6",
            "correlator.d": "0.1",
            "correlator.integration_ms": "20.0",
            "signal.spoofer_phase_chips": "0.4",
            "signal.spoofer_power_db": "-3.0",
            "signal.noise": "false",
        },
    )
    snap = tmp_path / "snap.csv"
    assert main(["simulate", "--config", cfg, "--out", str(snap)]) == 0
    assert load_snapshot(snap).taps.shape == (17,)
    assert main(["detect", str(snap), "--config", cfg, "--fp", "5", "--out", "-"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "spoofed"
    aux = [c for c in payload["candidates"] if c["role"] == "auxiliary"][0]
    assert aux["coarse_delay"] == pytest.approx(0.4)
    assert aux["fine_delay"] == pytest.approx(0.38, abs=0.05)


def test_config_roundtrip_reproduces_outputs(tmp_path):
    base = write_config(
        tmp_path / "c.ini",
        **{"campaign.trials": "5", "campaign.powers_db": "-6",
           "campaign.lengths_ms": "1"},
    )
    dumped = tmp_path / "effective.ini"
    out1 = tmp_path / "der1.csv"
    out2 = tmp_path / "der2.csv"
    assert main(["der", "--config", base, "--fp", "5", "--seed", "31",
                 "--threshold", "0.25", "--out", str(out1),
                 "--dump-config", str(dumped), "--jobs", "1"]) == 0
    # Re-run from the dumped effective config with no flag overrides.
    assert main(["der", "--config", str(dumped), "--out", str(out2),
                 "--jobs", "1"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_lambda_and_threshold_overrides(tmp_path, capsys):
    snap = tmp_path / "snap.csv"
    cfg = write_config(
        tmp_path / "c.ini",
        **{
            "signal.spoofer_phase_chips": "0.3",
            "signal.noise": "false",
            "correlator.integration_ms": "20.0",
        },
    )
    assert main(["simulate", "--config", cfg, "--out", str(snap)]) == 0
    # A near-one threshold turns the same snapshot into a clean verdict.
    assert main(["detect", str(snap), "--config", cfg, "--threshold", "0.99",
                 "--out", "-"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "clean"
    # A giant lambda drives every coefficient to zero: degenerate input.
    assert main(["detect", str(snap), "--config", cfg, "--lambda", "50.0"]) == 2
