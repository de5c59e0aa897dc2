"""Correlator geometry and the shifted-triangle dictionary.

A channel observes n correlator taps at delays
``delta_i = (i-1)*d - delta_el/2`` around the prompt.  The dictionary M
holds, column by column, the ideal tap response of a unit peak placed on
a finer delay grid ``gamma_j = (j-1 - floor(Fp/2))*d/Fp - delta_el/2``:
entry (i, j) is the normalized correlation of replica i with ideal
signal j, which is the unit triangle ``max(0, 1 - |gamma_j - delta_i|)``
up to C/A sidelobes and sampling quantization.  M is scaled by 1/N_c so
an exactly aligned replica correlates to 1.0 (column peaks near 1, not
unit l2 norm); this keeps the percentage detection threshold and the
regularization weight on the same scale as the unit-peak tap data.

All delays here live on a single axis: a peak at axis position q is the
code sampled with ``code_phase = -q``, so replicas, grid signals, and
simulated peaks all compare consistently and a peak at q produces its
maximum response at the tap with ``delta_i = q``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codegen import CaCode, generate_ca_code, sample_code


def unit_triangle(x):
    """Ideal code autocorrelation shape: max(0, 1 - |x|)."""
    return np.maximum(0.0, 1.0 - np.abs(x))


@dataclass(frozen=True)
class CorrelatorConfig:
    """Receiver tap geometry plus the sampling setup behind it.

    ``delta_el`` is the early-to-late span in chips, ``d`` the tap spacing
    in chips; the tap count n = delta_el/d + 1 must come out an integer.
    """

    delta_el: float
    d: float
    fs: float
    T: float
    prn: int = 1

    def __post_init__(self) -> None:
        if self.d <= 0 or self.delta_el < self.d:
            raise ValueError(
                f"need delta_el >= d > 0, got delta_el={self.delta_el}, d={self.d}"
            )
        ratio = self.delta_el / self.d
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(
                f"delta_el/d must be an integer tap count, got {ratio}"
            )
        if not 1 <= self.prn <= 32:
            raise ValueError(f"PRN must be in 1..32, got {self.prn}")
        if self.fs <= 0 or self.T <= 0:
            raise ValueError("fs and T must be positive")

    @property
    def n(self) -> int:
        return int(round(self.delta_el / self.d)) + 1

    @property
    def n_samples(self) -> int:
        return int(round(self.fs * self.T))

    @property
    def tap_delays(self) -> np.ndarray:
        """delta_i = (i-1)*d - delta_el/2 for i = 1..n."""
        return np.arange(self.n) * self.d - self.delta_el / 2


@dataclass(frozen=True)
class GridConfig:
    """High-resolution factor Fp between tap spacing and signal spacing."""

    fp: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.fp, (int, np.integer)) or self.fp < 1:
            raise ValueError(f"Fp must be a positive integer, got {self.fp!r}")


def fine_delays(config: CorrelatorConfig, grid: GridConfig) -> np.ndarray:
    """gamma_j = (j-1 - floor(Fp/2))*d/Fp - delta_el/2 for j = 1..p."""
    p = config.n * grid.fp
    j = np.arange(p)
    return (j - np.floor(grid.fp / 2)) * (config.d / grid.fp) - config.delta_el / 2


@dataclass(frozen=True)
class Dictionary:
    """Normalized n x p matrix of shifted triangle responses."""

    M: np.ndarray
    config: CorrelatorConfig
    grid: GridConfig

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def p(self) -> int:
        return self.M.shape[1]

    @property
    def tap_delays(self) -> np.ndarray:
        return self.config.tap_delays

    @property
    def column_delays(self) -> np.ndarray:
        return fine_delays(self.config, self.grid)


@dataclass(frozen=True)
class SubDictionary:
    """One de-interleaved n x n block of a high-resolution dictionary."""

    k: int  # 1-based decimation index
    M: np.ndarray
    column_delays: np.ndarray
    tap_delays: np.ndarray


def build_replica_bank(config: CorrelatorConfig, code: CaCode | None = None) -> np.ndarray:
    """Bank of n shifted +/-1 replicas, one row per tap delay.

    Row i is the code sampled at code_phase -delta_i (prompt taken as
    phase 0), so correlating row i against a peak at axis position q
    yields ~ unit_triangle(delta_i - q).
    """
    if code is None:
        code = generate_ca_code(config.prn)
    bank = np.empty((config.n, config.n_samples), dtype=np.float64)
    for i, delay in enumerate(config.tap_delays):
        bank[i] = sample_code(code, config.fs, config.T, code_phase=-delay).samples
    return bank


def build_signal_grid(
    config: CorrelatorConfig, grid: GridConfig, code: CaCode | None = None
) -> np.ndarray:
    """N_c x p matrix of noiseless ideal signals on the fine delay grid."""
    if code is None:
        code = generate_ca_code(config.prn)
    gammas = fine_delays(config, grid)
    out = np.empty((config.n_samples, gammas.size), dtype=np.float64)
    for j, delay in enumerate(gammas):
        out[:, j] = sample_code(code, config.fs, config.T, code_phase=-delay).samples
    return out


def build_dictionary(
    C: np.ndarray, S: np.ndarray, config: CorrelatorConfig, grid: GridConfig
) -> Dictionary:
    """Dictionary M = (1/N_c) C S from an explicit bank and signal grid."""
    C = np.asarray(C, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    n, n_samples = C.shape
    if S.shape[0] != n_samples:
        raise ValueError(
            f"inner dimensions disagree: C is {C.shape}, S is {S.shape}"
        )
    if n != config.n or S.shape[1] != config.n * grid.fp:
        raise ValueError(
            f"matrix sizes {C.shape}x{S.shape} do not match n={config.n}, "
            f"p={config.n * grid.fp}"
        )
    M = (C @ S) / n_samples
    return Dictionary(M=M, config=config, grid=grid)


def make_dictionary(
    config: CorrelatorConfig,
    grid: GridConfig,
    code: CaCode | None = None,
    bank: np.ndarray | None = None,
) -> Dictionary:
    """Build the dictionary from actual sampled codes, streaming the signal
    columns so the full N_c x p grid is never materialized."""
    if code is None:
        code = generate_ca_code(config.prn)
    if bank is None:
        bank = build_replica_bank(config, code)
    gammas = fine_delays(config, grid)
    M = np.empty((config.n, gammas.size), dtype=np.float64)
    for j, delay in enumerate(gammas):
        col = sample_code(code, config.fs, config.T, code_phase=-delay).samples
        M[:, j] = bank @ col
    M /= config.n_samples
    return Dictionary(M=M, config=config, grid=grid)


def ideal_dictionary(config: CorrelatorConfig, grid: GridConfig) -> Dictionary:
    """Dictionary built from the exact unit-triangle formula.

    Only for tests: the production dictionary keeps the sidelobe and
    quantization texture of real sampled codes.
    """
    deltas = config.tap_delays
    gammas = fine_delays(config, grid)
    M = unit_triangle(gammas[None, :] - deltas[:, None])
    return Dictionary(M=M, config=config, grid=grid)


def de_interleave_columns(M: np.ndarray, fp: int) -> list[np.ndarray]:
    """Split M into fp blocks, block K taking columns K, K+fp, K+2fp, ..."""
    M = np.asarray(M)
    if M.shape[1] % fp != 0:
        raise ValueError(f"p={M.shape[1]} is not divisible by Fp={fp}")
    return [M[:, k::fp].copy() for k in range(fp)]


def re_interleave_columns(blocks: list[np.ndarray]) -> np.ndarray:
    """Inverse of :func:`de_interleave_columns`, exact."""
    fp = len(blocks)
    n, cols = blocks[0].shape
    out = np.empty((n, cols * fp), dtype=blocks[0].dtype)
    for k, block in enumerate(blocks):
        out[:, k::fp] = block
    return out


def decimate_dictionary(dictionary: Dictionary) -> list[SubDictionary]:
    """De-interleave a high-resolution dictionary into Fp square blocks.

    Block K holds columns K, K+Fp, ... (1-based), i.e. the Fp=1 delay grid
    offset by (K-1-floor(Fp/2))*d_p.
    """
    fp = dictionary.grid.fp
    if dictionary.p != dictionary.n * fp:
        raise ValueError(
            f"dictionary is {dictionary.n}x{dictionary.p}, not decimatable by Fp={fp}"
        )
    gammas = dictionary.column_delays
    taps = dictionary.tap_delays
    blocks = de_interleave_columns(dictionary.M, fp)
    return [
        SubDictionary(k=k + 1, M=block, column_delays=gammas[k::fp], tap_delays=taps)
        for k, block in enumerate(blocks)
    ]


def nearest_grid_index(delay: float, grid_values: np.ndarray) -> int:
    """Index of the grid value closest to ``delay``; exact midpoints round
    toward zero and out-of-span delays clip to the edge entries."""
    grid_values = np.asarray(grid_values, dtype=np.float64)
    dist = np.abs(grid_values - delay)
    best = float(dist.min())
    ties = np.flatnonzero(dist <= best + 1e-12)
    if ties.size == 1:
        return int(ties[0])
    return int(ties[np.argmin(np.abs(grid_values[ties]))])


def nearest_tap_index(delay: float, config: CorrelatorConfig) -> int:
    """Tap index the delay ``delay`` rounds to on the correlator grid."""
    return nearest_grid_index(delay, config.tap_delays)


def export_dictionary_csv(dictionary: Dictionary, path) -> None:
    """Write the dictionary and its geometry as CSV (full double precision)."""
    cfg = dictionary.config
    lines = [
        ",".join(
            [
                str(dictionary.n),
                str(dictionary.p),
                str(dictionary.grid.fp),
                repr(float(cfg.delta_el)),
                repr(float(cfg.d)),
                repr(float(cfg.fs)),
                repr(float(cfg.T)),
                str(cfg.prn),
            ]
        )
    ]
    for row in dictionary.M:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dictionary_csv(path) -> Dictionary:
    """Read a dictionary written by :func:`export_dictionary_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty dictionary file")
    head = lines[0].split(",")
    if len(head) != 8:
        raise ValueError(f"{path}: header must have 8 fields, got {len(head)}")
    try:
        n, p, fp = int(head[0]), int(head[1]), int(head[2])
        delta_el, d, fs, T = (float(v) for v in head[3:7])
        prn = int(head[7])
    except ValueError as exc:
        raise ValueError(f"{path}: bad header field: {exc}") from exc
    if len(lines) - 1 != n:
        raise ValueError(f"{path}: expected {n} matrix rows, found {len(lines) - 1}")
    M = np.empty((n, p), dtype=np.float64)
    for i, line in enumerate(lines[1:]):
        vals = line.split(",")
        if len(vals) != p:
            raise ValueError(f"{path}: row {i + 2} has {len(vals)} entries, expected {p}")
        M[i] = [float(v) for v in vals]
    config = CorrelatorConfig(delta_el=delta_el, d=d, fs=fs, T=T, prn=prn)
    if config.n != n:
        raise ValueError(f"{path}: header n={n} inconsistent with delta_el/d")
    return Dictionary(M=M, config=config, grid=GridConfig(fp=fp))
