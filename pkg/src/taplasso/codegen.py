"""GPS L1 C/A spreading codes and sampled, code-phase-shifted replicas.

The C/A codes are length-1023 Gold codes clocked at 1.023 Mchip/s.  Each
PRN combines two 10-stage LFSRs (G1, G2); the satellite identity selects
which pair of G2 stages is XORed into the output.  Chips are kept in
+/-1 form (binary 0 -> +1, binary 1 -> -1) so that every downstream use
is a plain dot product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHIP_RATE_HZ = 1.023e6
CODE_LENGTH = 1023

# G2 output phase selection per PRN: 1-based register stages whose XOR
# forms the G2 contribution (IS-GPS-200 assignment for SVs 1..32).
G2_PHASE_TAPS = {
    1: (2, 6), 2: (3, 7), 3: (4, 8), 4: (5, 9), 5: (1, 9), 6: (2, 10),
    7: (1, 8), 8: (2, 9), 9: (3, 10), 10: (2, 3), 11: (3, 4), 12: (5, 6),
    13: (6, 7), 14: (7, 8), 15: (8, 9), 16: (9, 10), 17: (1, 4), 18: (2, 5),
    19: (3, 6), 20: (4, 7), 21: (5, 8), 22: (6, 9), 23: (1, 3), 24: (4, 6),
    25: (5, 7), 26: (6, 8), 27: (7, 9), 28: (8, 10), 29: (1, 6), 30: (2, 7),
    31: (3, 8), 32: (4, 9),
}


@dataclass(frozen=True)
class CaCode:
    """One satellite's 1023-chip spreading sequence in +/-1 form."""

    prn: int
    chips: np.ndarray  # (1023,) int8, values +1/-1

    def __post_init__(self) -> None:
        if self.chips.shape != (CODE_LENGTH,):
            raise ValueError(
                f"C/A code must have {CODE_LENGTH} chips, got {self.chips.shape}"
            )


@dataclass(frozen=True)
class SampledCode:
    """A code replica sampled at ``fs`` over a coherent span ``T``.

    ``code_phase`` is the shift in chips applied to the chip lookup; it is
    stored reduced modulo the code period.
    """

    samples: np.ndarray  # (N_c,) float64 in {+1, -1}
    fs: float
    T: float
    code_phase: float


def generate_ca_code(prn: int) -> CaCode:
    """Generate the C/A Gold code for ``prn`` in 1..32.

    Two 10-stage shift registers are clocked together for 1023 chips:
    G1 feeds back stages 3 and 10, G2 feeds back stages 2, 3, 6, 8, 9, 10,
    and the output chip is G1's stage 10 XORed with the PRN-specific pair
    of G2 stages.
    """
    if not isinstance(prn, (int, np.integer)) or not 1 <= prn <= 32:
        raise ValueError(f"PRN must be an integer in 1..32, got {prn!r}")
    tap_a, tap_b = G2_PHASE_TAPS[int(prn)]
    g1 = [1] * 10
    g2 = [1] * 10
    bits = np.empty(CODE_LENGTH, dtype=np.int64)
    for k in range(CODE_LENGTH):
        bits[k] = g1[9] ^ g2[tap_a - 1] ^ g2[tap_b - 1]
        fb1 = g1[2] ^ g1[9]
        fb2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9]
        g1 = [fb1] + g1[:-1]
        g2 = [fb2] + g2[:-1]
    chips = np.where(bits == 0, 1, -1).astype(np.int8)
    return CaCode(prn=int(prn), chips=chips)


def sample_code(
    code: CaCode, fs: float, T: float, code_phase: float = 0.0
) -> SampledCode:
    """Sample ``code`` at rate ``fs`` over span ``T``, shifted by ``code_phase`` chips.

    Sample m holds the chip active at time m/fs for a code shifted by
    ``code_phase`` chips: chips[floor(m*chip_rate/fs - code_phase) mod 1023].
    The hard floor lookup (no interpolation) matches the +/-1 replicas a
    hardware correlator stores; at fs = 25 MHz one chip spans ~24.4
    samples, so the quantization is at most ~0.04 chip.
    """
    if fs <= CHIP_RATE_HZ:
        raise ValueError(f"fs must exceed the chip rate {CHIP_RATE_HZ} Hz, got {fs}")
    if T <= 0:
        raise ValueError(f"integration span T must be positive, got {T}")
    phase = float(code_phase) % CODE_LENGTH
    n_samples = int(round(fs * T))
    chip_idx = (
        np.floor(np.arange(n_samples) * (CHIP_RATE_HZ / fs) - phase).astype(np.int64)
        % CODE_LENGTH
    )
    samples = code.chips[chip_idx].astype(np.float64)
    return SampledCode(samples=samples, fs=float(fs), T=float(T), code_phase=phase)
