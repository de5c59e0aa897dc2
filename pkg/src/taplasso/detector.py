"""Thresholding of sparse selector outputs into a clean/spoofed verdict.

Magnitudes are divided by their maximum, so the percentage threshold is
well-defined even when the counterfeit peak overpowers the tracked one.
Coefficients clearing the threshold become peak candidates; candidates
sharing a coarse tap are merged keeping the larger, small residuals
adjacent to the main peak are folded into it (receivers show such DLL
discriminator leftovers on real data), and at most the top two distinct
taps are reported.  Two surviving candidates mean a spoofed verdict.
The report does not claim which peak is the authentic one - the largest
is labeled "tracked", the other "auxiliary".
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dictionary import nearest_grid_index
from .lasso import SparseSelector

VERDICT_CLEAN = "clean"
VERDICT_SPOOFED = "spoofed"


class DegenerateInputError(ValueError):
    """Selector with no nonzero magnitude: nothing to normalize against."""


@dataclass(frozen=True)
class PeakCandidate:
    tap_index: int
    coarse_delay: float
    fine_delay: float | None
    magnitude: float  # relative to the largest selector magnitude
    role: str  # "tracked" | "auxiliary"


@dataclass
class DetectionReport:
    candidates: list[PeakCandidate]
    verdict: str
    threshold_frac: float
    normalization: float
    tap_grid: np.ndarray

    def to_dict(self) -> dict:
        return {
            "candidates": [
                {
                    "tap_index": c.tap_index,
                    "coarse_delay": c.coarse_delay,
                    "fine_delay": c.fine_delay,
                    "magnitude": c.magnitude,
                    "role": c.role,
                }
                for c in self.candidates
            ],
            "verdict": self.verdict,
            "threshold_frac": self.threshold_frac,
            "normalization": self.normalization,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _coarse_structure(selector: SparseSelector):
    """Tap indices, tap grid, and per-coefficient fine delays."""
    if selector.tap_indices is not None and selector.tap_grid is not None:
        return selector.tap_indices, selector.tap_grid, selector.fine_delays
    # Generic selector: treat each coefficient as its own tap.
    idx = np.arange(selector.coeffs.size, dtype=np.int64)
    return idx, selector.grid, selector.fine_delays


def detect_peaks(selector: SparseSelector, threshold_frac: float) -> DetectionReport:
    """Extract peak candidates above ``threshold_frac`` of the largest
    magnitude and render the verdict."""
    if not 0.0 < threshold_frac < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold_frac}")
    mags = np.abs(np.asarray(selector.coeffs, dtype=np.float64))
    if mags.size == 0:
        raise DegenerateInputError("empty selector")
    norm = float(mags.max())
    if norm == 0.0:
        raise DegenerateInputError("all selector magnitudes are zero; no peak present")
    rel = mags / norm

    tap_indices, tap_grid, fine = _coarse_structure(selector)

    # Strongest coefficient per coarse tap, thresholded.
    by_tap: dict[int, tuple[float, int]] = {}
    for coeff_idx in range(rel.size):
        value = float(rel[coeff_idx])
        if value < threshold_frac:
            continue
        tap = int(tap_indices[coeff_idx])
        if tap not in by_tap or value > by_tap[tap][0]:
            by_tap[tap] = (value, coeff_idx)

    entries = sorted(by_tap.items(), key=lambda kv: (-kv[1][0], kv[0]))
    if not entries:
        # The maximum itself always clears any threshold < 1, so this
        # cannot happen; guard anyway.
        raise DegenerateInputError("no candidate cleared the threshold")

    main_tap = entries[0][0]
    kept = [entries[0]]
    for tap, (value, coeff_idx) in entries[1:]:
        if abs(tap - main_tap) <= 1 and value < 0.5:
            continue  # near-prompt residual, fold into the main peak
        kept.append((tap, (value, coeff_idx)))
    kept = kept[:2]

    candidates = []
    for rank, (tap, (value, coeff_idx)) in enumerate(kept):
        candidates.append(
            PeakCandidate(
                tap_index=tap,
                coarse_delay=float(tap_grid[tap]),
                fine_delay=None if fine is None else float(fine[coeff_idx]),
                magnitude=value,
                role="tracked" if rank == 0 else "auxiliary",
            )
        )
    verdict = VERDICT_SPOOFED if len(candidates) >= 2 else VERDICT_CLEAN
    return DetectionReport(
        candidates=candidates,
        verdict=verdict,
        threshold_frac=float(threshold_frac),
        normalization=norm,
        tap_grid=np.asarray(tap_grid, dtype=np.float64),
    )


def classify_trial(report: DetectionReport, true_spoof_delay: float) -> bool:
    """True (hit) when some candidate sits at the tap the true spoofer
    delay rounds to (nearest tap, midpoint ties toward zero, out-of-span
    delays clipped to the edge taps); False (miss) otherwise."""
    target = nearest_grid_index(true_spoof_delay, report.tap_grid)
    return any(c.tap_index == target for c in report.candidates)
