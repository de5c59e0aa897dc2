"""Evaluation campaigns: peak-sensitivity response sweeps, Monte-Carlo
detection-error-rate tables, and false-alarm threshold studies.

All randomness hangs off one master seed: every trial derives its own
stream from (master_seed, scenario index, trial index, purpose), so the
same seed gives byte-identical CSV output regardless of worker count or
scheduling.  Threshold studies re-threshold each trial's selector rather
than re-simulating, which makes the false-alarm rate exactly
non-increasing in the threshold and saves a solve per threshold level.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .detector import DetectionReport, classify_trial, detect_peaks
from .dictionary import (
    CorrelatorConfig,
    GridConfig,
    decimate_dictionary,
    make_dictionary,
)
from .lasso import solve_iq_lasso, solve_multi_lasso
from .simulator import (
    PeakSpec,
    ReplicaBank,
    SnapshotParams,
    simulate_snapshot,
    trial_seed,
)

DEFAULT_LAMBDA = 0.3009
DEFAULT_THRESHOLD = 0.30


@dataclass(frozen=True)
class SolverSettings:
    """Sparse-solve configuration shared by all campaigns.

    ``whiten`` selects the noise-whitened fit: dictionary and taps are
    left-multiplied by the bank's whitener so the least-squares term
    weighs the correlated tap noise correctly.  The plain unweighted fit
    is available for comparison but recovers peaks far less reliably on
    this strongly-overlapping dictionary.
    """

    lam: float = DEFAULT_LAMBDA
    tol: float = 1e-8
    max_sweeps: int = 200_000
    whiten: bool = True


class ScenePipeline:
    """Dictionary, replica bank, and solver plumbing for one scene."""

    def __init__(self, config: CorrelatorConfig, grid: GridConfig,
                 settings: SolverSettings | None = None):
        self.config = config
        self.grid = grid
        self.settings = settings or SolverSettings()
        self.bank = ReplicaBank(config)
        self.dictionary = make_dictionary(config, grid, code=self.bank.code,
                                          bank=self.bank.C)
        self.sub_dicts = decimate_dictionary(self.dictionary) if grid.fp > 1 else None
        self.whitener = self.bank.whitener if self.settings.whiten else None

    def solve(self, snapshot):
        s = self.settings
        if self.grid.fp == 1:
            return solve_iq_lasso(self.dictionary, snapshot, s.lam, s.tol,
                                  s.max_sweeps, whitener=self.whitener)
        return solve_multi_lasso(self.sub_dicts, snapshot, s.lam, s.tol,
                                 s.max_sweeps, whitener=self.whitener)

    def detect(self, snapshot, threshold_frac: float) -> DetectionReport:
        return detect_peaks(self.solve(snapshot), threshold_frac)


# ---------------------------------------------------------------------------
# Peak-sensitivity response


@dataclass
class PsrCurve:
    observed_tap: float
    sweep_delays: np.ndarray
    responses: np.ndarray
    level: float
    band_lo: float | None
    band_hi: float | None
    detection_bandwidth: float
    fp: int
    relative_power_db: float
    cnr_dbhz: float
    master_seed: int


def _level_band(sweeps: np.ndarray, responses: np.ndarray, center: float,
                level: float) -> tuple[float | None, float | None, float]:
    """Contiguous region of ``responses >= level`` containing the sweep
    point nearest ``center``; edges by linear interpolation."""
    i0 = int(np.argmin(np.abs(sweeps - center)))
    if responses[i0] < level:
        return None, None, 0.0
    lo = i0
    while lo > 0 and responses[lo - 1] >= level:
        lo -= 1
    hi = i0
    while hi < sweeps.size - 1 and responses[hi + 1] >= level:
        hi += 1
    if lo == 0:
        left = float(sweeps[0])
    else:
        left = float(np.interp(level, [responses[lo - 1], responses[lo]],
                               [sweeps[lo - 1], sweeps[lo]]))
    if hi == sweeps.size - 1:
        right = float(sweeps[-1])
    else:
        right = float(np.interp(level, [responses[hi + 1], responses[hi]],
                                [sweeps[hi + 1], sweeps[hi]]))
    return left, right, right - left


def run_psr_sweep(
    config: CorrelatorConfig,
    grid: GridConfig,
    observed_tap: float,
    relative_power_db: float = 0.0,
    cnr_dbhz: float = 50.0,
    sweep_step: float = 0.01,
    level: float = 0.7,
    master_seed: int = 0,
    settings: SolverSettings | None = None,
) -> PsrCurve:
    """Swing a spoofer peak across the delay span and record the selector
    magnitude at one fixed tap; the authentic peak stays at the center."""
    taps = config.tap_delays
    dist = np.abs(taps - observed_tap)
    if dist.min() > 1e-9:
        raise ValueError(f"observed tap {observed_tap} is not on the tap grid")
    tap_index = int(np.argmin(dist))

    pipeline = ScenePipeline(config, grid, settings)
    half = config.delta_el / 2
    count = int(round(2 * half / sweep_step))
    sweeps = np.round(-half + sweep_step * np.arange(count + 1), 12)
    power = 10.0 ** (relative_power_db / 10.0)

    responses = np.empty(sweeps.size)
    for k, delay in enumerate(sweeps):
        params = SnapshotParams(
            authentic=PeakSpec(0.0),
            spoofer=PeakSpec(float(delay), power),
            cnr_dbhz=cnr_dbhz,
            config=config,
            seed=trial_seed(master_seed, k),
        )
        selector = pipeline.solve(simulate_snapshot(params, pipeline.bank))
        responses[k] = float(selector.coeffs[tap_index])

    lo, hi, width = _level_band(sweeps, responses, observed_tap, level)
    return PsrCurve(
        observed_tap=float(taps[tap_index]),
        sweep_delays=sweeps,
        responses=responses,
        level=level,
        band_lo=lo,
        band_hi=hi,
        detection_bandwidth=width,
        fp=grid.fp,
        relative_power_db=relative_power_db,
        cnr_dbhz=cnr_dbhz,
        master_seed=master_seed,
    )


def psr_curve_to_csv(curve: PsrCurve) -> str:
    lines = ["sweep_delay,response"]
    for d, r in zip(curve.sweep_delays, curve.responses):
        lines.append(f"{float(d)!r},{float(r)!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Detection error rate


@dataclass(frozen=True)
class DerScenario:
    """One Monte-Carlo cell: power level, integration length, grid factor,
    and how the spoofer delay is placed per trial."""

    relative_power_db: float
    integration_ms: float
    fp: int
    delay_policy: str = "random"  # "random" | "fixed"
    fixed_delay: float | None = None
    random_lo: float = 0.01
    random_hi: float = 0.50
    random_step: float = 0.01

    def policy_label(self) -> str:
        if self.delay_policy == "fixed":
            return f"fixed:{self.fixed_delay!r}"
        return (
            f"random:{self.random_lo!r}:{self.random_hi!r}:{self.random_step!r}"
        )


@dataclass
class DerRow:
    relative_power_db: float
    integration_ms: float
    fp: int
    delay_policy: str
    trials: int
    misses: int

    @property
    def der(self) -> float:
        return self.misses / self.trials


@dataclass
class DerTable:
    rows: list[DerRow]
    master_seed: int
    threshold_frac: float


def _draw_delay(scenario: DerScenario, rng: np.random.Generator) -> float:
    if scenario.delay_policy == "fixed":
        if scenario.fixed_delay is None:
            raise ValueError("fixed delay policy needs fixed_delay")
        return float(scenario.fixed_delay)
    lo_k = int(round(scenario.random_lo / scenario.random_step))
    hi_k = int(round(scenario.random_hi / scenario.random_step))
    return float(rng.integers(lo_k, hi_k + 1) * scenario.random_step)


def _run_der_scenario(args) -> DerRow:
    (base_config, scenario, scenario_index, trials, master_seed,
     threshold_frac, settings, cnr_dbhz) = args
    config = replace(base_config, T=scenario.integration_ms * 1e-3)
    pipeline = ScenePipeline(config, GridConfig(fp=scenario.fp), settings)
    power = 10.0 ** (scenario.relative_power_db / 10.0)
    misses = 0
    for t in range(trials):
        delay_rng = np.random.default_rng(trial_seed(master_seed, scenario_index, t, 1))
        delay = _draw_delay(scenario, delay_rng)
        params = SnapshotParams(
            authentic=PeakSpec(0.0),
            spoofer=PeakSpec(delay, power),
            cnr_dbhz=cnr_dbhz,
            config=config,
            seed=trial_seed(master_seed, scenario_index, t, 0),
        )
        report = pipeline.detect(simulate_snapshot(params, pipeline.bank), threshold_frac)
        if not classify_trial(report, delay):
            misses += 1
    return DerRow(
        relative_power_db=scenario.relative_power_db,
        integration_ms=scenario.integration_ms,
        fp=scenario.fp,
        delay_policy=scenario.policy_label(),
        trials=trials,
        misses=misses,
    )


def run_der_campaign(
    config: CorrelatorConfig,
    scenarios: list[DerScenario],
    trials: int,
    master_seed: int,
    threshold_frac: float = DEFAULT_THRESHOLD,
    settings: SolverSettings | None = None,
    jobs: int = 1,
    cnr_dbhz: float = 50.0,
) -> DerTable:
    """Monte-Carlo DER over a list of scenarios.

    ``config.T`` is overridden per scenario; scenarios are independent and
    run on a process pool when ``jobs > 1``.  Row order and all trial
    seeds are fixed by (master_seed, scenario index, trial index), so the
    output is identical for any job count.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    settings = settings or SolverSettings()
    payloads = [
        (config, scenario, i, trials, master_seed, threshold_frac, settings, cnr_dbhz)
        for i, scenario in enumerate(scenarios)
    ]
    if jobs <= 1 or len(payloads) <= 1:
        rows = [_run_der_scenario(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(payloads))) as pool:
            rows = list(pool.map(_run_der_scenario, payloads))
    return DerTable(rows=rows, master_seed=master_seed, threshold_frac=threshold_frac)


def der_table_to_csv(table: DerTable) -> str:
    lines = ["power_db,length_ms,Fp,delay_policy,trials,misses,der"]
    for r in table.rows:
        lines.append(
            f"{float(r.relative_power_db)!r},{float(r.integration_ms)!r},"
            f"{r.fp},{r.delay_policy},{r.trials},{r.misses},{float(r.der)!r}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Probability of false alarm


@dataclass
class PfaCurve:
    fp: int
    thresholds: np.ndarray
    trials: int
    false_alarms: np.ndarray
    pfa: np.ndarray
    paired_der: np.ndarray
    master_seed: int


def run_pfa_campaign(
    config: CorrelatorConfig,
    grid: GridConfig,
    thresholds,
    trials: int,
    master_seed: int,
    settings: SolverSettings | None = None,
    worst_power_db: float = -6.0,
    worst_integration_ms: float = 1.0,
    cnr_dbhz: float | None = None,
) -> PfaCurve:
    """False-alarm rate vs threshold, paired with worst-case DER.

    Authentic-only trials give the false-alarm count per threshold; a
    second scene (weak spoofer, short integration, randomly placed delay)
    gives the paired DER.  Each trial is solved once and re-thresholded,
    so PFA is exactly non-increasing in the threshold.
    """
    thresholds = np.asarray(sorted(float(t) for t in thresholds))
    if thresholds.size == 0 or thresholds.min() <= 0 or thresholds.max() >= 1:
        raise ValueError("thresholds must lie strictly inside (0, 1)")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    cnr = 50.0 if cnr_dbhz is None else cnr_dbhz

    wc_config = replace(config, T=worst_integration_ms * 1e-3)
    pipeline = ScenePipeline(wc_config, grid, settings)
    power = 10.0 ** (worst_power_db / 10.0)
    scenario = DerScenario(
        relative_power_db=worst_power_db,
        integration_ms=worst_integration_ms,
        fp=grid.fp,
        random_hi=wc_config.delta_el / 2,
    )

    false_alarms = np.zeros(thresholds.size, dtype=np.int64)
    der_misses = np.zeros(thresholds.size, dtype=np.int64)
    for t in range(trials):
        clean_params = SnapshotParams(
            authentic=PeakSpec(0.0),
            spoofer=None,
            cnr_dbhz=cnr,
            config=wc_config,
            seed=trial_seed(master_seed, 0, t, 0),
        )
        clean_sel = pipeline.solve(simulate_snapshot(clean_params, pipeline.bank))

        delay_rng = np.random.default_rng(trial_seed(master_seed, 1, t, 1))
        delay = _draw_delay(scenario, delay_rng)
        spoofed_params = SnapshotParams(
            authentic=PeakSpec(0.0),
            spoofer=PeakSpec(delay, power),
            cnr_dbhz=cnr,
            config=wc_config,
            seed=trial_seed(master_seed, 1, t, 0),
        )
        spoofed_sel = pipeline.solve(simulate_snapshot(spoofed_params, pipeline.bank))

        for k, thr in enumerate(thresholds):
            if detect_peaks(clean_sel, float(thr)).verdict == "spoofed":
                false_alarms[k] += 1
            if not classify_trial(detect_peaks(spoofed_sel, float(thr)), delay):
                der_misses[k] += 1

    return PfaCurve(
        fp=grid.fp,
        thresholds=thresholds,
        trials=trials,
        false_alarms=false_alarms,
        pfa=false_alarms / trials,
        paired_der=der_misses / trials,
        master_seed=master_seed,
    )


def pfa_curve_to_csv(curve: PfaCurve) -> str:
    lines = ["threshold,trials,false_alarms,pfa,paired_der"]
    for k in range(curve.thresholds.size):
        lines.append(
            f"{float(curve.thresholds[k])!r},{curve.trials},"
            f"{int(curve.false_alarms[k])},{float(curve.pfa[k])!r},"
            f"{float(curve.paired_der[k])!r}"
        )
    return "\n".join(lines) + "\n"
