"""Synthesis and file ingestion of complex correlator-tap snapshots.

A snapshot is the n complex correlator outputs of one coherent
integration.  Simulation passes sampled +/-1 codes for every requested
peak through the replica bank, so the noiseless tap i of a peak at axis
position q is ~ sqrt(power) * max(0, 1 - |delta_i - q|) * e^{j*phase},
with the C/A sidelobe and quantization texture a real receiver sees.

Noise is carrier-to-noise calibrated: with unit authentic amplitude, the
per-sample complex noise variance is fs / 10^(CNR/10), split evenly
between I and Q, giving a per-component tap variance of
1 / (2 * 10^(CNR/10) * T) after correlation.  Two modes produce it:

* ``"sample"`` draws white noise at the sample level and correlates it
  through the bank (the literal model);
* ``"tap"`` (default) draws the correlated tap noise directly from the
  implied n x n covariance via its Cholesky factor - identical in
  distribution and far cheaper for long integrations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codegen import generate_ca_code, sample_code
from .dictionary import CorrelatorConfig, build_replica_bank


class SnapshotFormatError(ValueError):
    """A snapshot file that cannot be parsed; the message names the line."""


@dataclass(frozen=True)
class PeakSpec:
    """One correlation peak: delay on the tap axis, linear power relative
    to the authentic peak, and carrier phase in radians."""

    code_phase: float
    power: float = 1.0
    carrier_phase: float = 0.0

    def __post_init__(self) -> None:
        if self.power < 0:
            raise ValueError(f"peak power must be non-negative, got {self.power}")


@dataclass(frozen=True)
class SnapshotParams:
    """Everything needed to synthesize one snapshot deterministically."""

    authentic: PeakSpec
    spoofer: PeakSpec | None
    cnr_dbhz: float
    config: CorrelatorConfig
    seed: int
    noise: bool = True
    noise_mode: str = "tap"  # "tap" | "sample"

    def __post_init__(self) -> None:
        if not np.isfinite(self.cnr_dbhz):
            raise ValueError(f"CNR must be finite, got {self.cnr_dbhz}")
        if self.noise_mode not in ("tap", "sample"):
            raise ValueError(f"noise_mode must be 'tap' or 'sample', got {self.noise_mode!r}")


@dataclass
class CorrelatorSnapshot:
    """n complex correlator taps for one channel and integration epoch."""

    taps: np.ndarray
    config: CorrelatorConfig
    label: str = ""

    def __post_init__(self) -> None:
        self.taps = np.asarray(self.taps, dtype=np.complex128)
        if self.taps.shape != (self.config.n,):
            raise ValueError(
                f"snapshot has {self.taps.shape[0]} taps, config expects {self.config.n}"
            )


class ReplicaBank:
    """The n x N_c replica matrix plus cached per-delay tap profiles and
    the Cholesky factor used to shape correlated tap noise."""

    def __init__(self, config: CorrelatorConfig):
        self.config = config
        self.code = generate_ca_code(config.prn)
        self.C = build_replica_bank(config, self.code)
        self._profiles: dict[float, np.ndarray] = {}
        self._shaper: np.ndarray | None = None
        self._whitener: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return self.C.shape[1]

    def tap_profile(self, code_phase: float) -> np.ndarray:
        """Noiseless unit-amplitude tap response of a peak at ``code_phase``."""
        key = float(code_phase)
        prof = self._profiles.get(key)
        if prof is None:
            sig = sample_code(
                self.code, self.config.fs, self.config.T, code_phase=-key
            ).samples
            prof = (self.C @ sig) / self.n_samples
            self._profiles[key] = prof
        return prof

    @property
    def noise_shaper(self) -> np.ndarray:
        """Cholesky factor B with B B' = C C' / N_c^2."""
        if self._shaper is None:
            cov = (self.C @ self.C.T) / float(self.n_samples) ** 2
            self._shaper = np.linalg.cholesky(cov)
        return self._shaper

    @property
    def whitener(self) -> np.ndarray:
        """Inverse Cholesky factor of the unit-scaled tap-noise correlation
        (C C'/N_c).  Left-multiplying taps and dictionary by this matrix
        turns the correlated tap noise white without changing the meaning
        of the fitted coefficients."""
        if self._whitener is None:
            corr = (self.C @ self.C.T) / float(self.n_samples)
            self._whitener = np.linalg.inv(np.linalg.cholesky(corr))
        return self._whitener


def trial_seed(master_seed: int, *key: int) -> int:
    """Deterministic 64-bit child seed for (master_seed, key...).

    Campaigns derive one seed per trial this way, so results do not
    depend on scheduling or worker count.
    """
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, np.uint64)[0])


def simulate_snapshot(params: SnapshotParams, bank: ReplicaBank) -> CorrelatorSnapshot:
    """Synthesize one snapshot; identical params (incl. seed) give
    bit-identical taps."""
    if bank.config != params.config:
        raise ValueError("replica bank was built for a different configuration")
    cfg = params.config
    taps = np.zeros(cfg.n, dtype=np.complex128)
    peaks = [params.authentic] + ([params.spoofer] if params.spoofer is not None else [])
    for peak in peaks:
        if peak.power == 0.0:
            continue
        amp = np.sqrt(peak.power)
        taps = taps + amp * np.exp(1j * peak.carrier_phase) * bank.tap_profile(
            peak.code_phase
        )
    if params.noise:
        rng = np.random.default_rng(params.seed)
        sigma_sample = np.sqrt(cfg.fs * 10.0 ** (-params.cnr_dbhz / 10.0) / 2.0)
        if params.noise_mode == "sample":
            eta_i = rng.standard_normal(bank.n_samples)
            eta_q = rng.standard_normal(bank.n_samples)
            noise = (bank.C @ eta_i + 1j * (bank.C @ eta_q)) * (
                sigma_sample / bank.n_samples
            )
        else:
            z_i = rng.standard_normal(cfg.n)
            z_q = rng.standard_normal(cfg.n)
            shaper = bank.noise_shaper
            noise = sigma_sample * (shaper @ z_i + 1j * (shaper @ z_q))
        taps = taps + noise
    return CorrelatorSnapshot(taps=taps, config=cfg, label="")


def save_snapshot(snapshot: CorrelatorSnapshot, path) -> None:
    """Write a snapshot as text: one header line, then one
    ``tap_delay_chips,I,Q`` line per tap, full-precision decimal."""
    cfg = snapshot.config
    label = snapshot.label or ""
    if "," in label or "\n" in label:
        raise ValueError("snapshot label must not contain commas or newlines")
    lines = [
        ",".join(
            [
                str(cfg.n),
                repr(float(cfg.delta_el)),
                repr(float(cfg.d)),
                repr(float(cfg.fs)),
                repr(float(cfg.T)),
                str(cfg.prn),
                label,
            ]
        )
    ]
    for delay, tap in zip(cfg.tap_delays, snapshot.taps):
        lines.append(f"{float(delay)!r},{float(tap.real)!r},{float(tap.imag)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_snapshot(path) -> CorrelatorSnapshot:
    """Parse a snapshot file written by :func:`save_snapshot`.

    Raises :class:`SnapshotFormatError` naming the offending line for a
    malformed header, a tap-count mismatch, or non-numeric fields.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    lines = [(i + 1, line.strip()) for i, line in enumerate(raw) if line.strip()]
    if not lines:
        raise SnapshotFormatError(f"{path}: line 1: empty snapshot file")
    head_no, head = lines[0]
    fields = head.split(",")
    if len(fields) != 7:
        raise SnapshotFormatError(
            f"{path}: line {head_no}: header must have 7 fields, got {len(fields)}"
        )
    try:
        n = int(fields[0])
        delta_el, d, fs, T = (float(v) for v in fields[1:5])
        prn = int(fields[5])
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: line {head_no}: bad header value: {exc}") from exc
    label = fields[6]
    try:
        config = CorrelatorConfig(delta_el=delta_el, d=d, fs=fs, T=T, prn=prn)
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: line {head_no}: {exc}") from exc
    if config.n != n:
        raise SnapshotFormatError(
            f"{path}: line {head_no}: header n={n} inconsistent with delta_EL/d"
        )
    body = lines[1:]
    if len(body) != n:
        raise SnapshotFormatError(
            f"{path}: line {head_no}: header declares {n} taps but file has {len(body)}"
        )
    taps = np.empty(n, dtype=np.complex128)
    expected = config.tap_delays
    for row, (line_no, line) in enumerate(body):
        vals = line.split(",")
        if len(vals) != 3:
            raise SnapshotFormatError(
                f"{path}: line {line_no}: expected 'tap_delay_chips,I,Q', got {len(vals)} fields"
            )
        try:
            delay, re_part, im_part = (float(v) for v in vals)
        except ValueError as exc:
            raise SnapshotFormatError(
                f"{path}: line {line_no}: non-numeric field: {exc}"
            ) from exc
        if abs(delay - expected[row]) > 1e-6:
            raise SnapshotFormatError(
                f"{path}: line {line_no}: tap delay {delay} does not match "
                f"configured grid value {expected[row]}"
            )
        taps[row] = complex(re_part, im_part)
    return CorrelatorSnapshot(taps=taps, config=config, label=label)
