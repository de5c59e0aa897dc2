"""Sparse decomposition of correlator snapshots.

Three entry points, all backed by the same coordinate-descent kernel:

* :func:`solve_lasso` - the plain real problem
  min 0.5*||y - M b||^2 + lam*||b||_1 with a verifiable KKT certificate.
* :func:`solve_iq_lasso` - solves in-phase and quadrature components
  separately and combines them as sqrt(bI^2 + bQ^2) per column.
* :func:`solve_multi_lasso` - solves the I/Q problem against every
  de-interleaved square sub-dictionary and keeps, per tap, the largest
  magnitude across sub-dictionaries (ties go to the lowest block index).
  The joint objective over blocks separates per block and per component,
  so the per-block solves are exactly equivalent to the joint program.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import cd_lasso
from .dictionary import Dictionary, SubDictionary, nearest_tap_index

DEFAULT_TOL = 1e-8
# Triangle dictionaries have strongly correlated columns (Gram condition
# ~1e4-1e5), where cyclic descent converges geometrically but slowly;
# nominal problems need ~2e4 sweeps to certify KKT at 1e-8.
DEFAULT_MAX_SWEEPS = 200_000


class NonConvergenceError(RuntimeError):
    """Raised when the sweep budget runs out before the KKT tolerance."""

    def __init__(self, message, beta, kkt_residual, sweeps, component=None):
        super().__init__(message)
        self.beta = beta
        self.kkt_residual = kkt_residual
        self.sweeps = sweeps
        self.component = component


@dataclass(frozen=True)
class LassoProblem:
    M: np.ndarray
    y: np.ndarray
    lam: float

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        if self.M.shape[0] != np.shape(self.y)[0]:
            raise ValueError(
                f"dimension mismatch: M is {self.M.shape}, y has {np.shape(self.y)[0]} entries"
            )


@dataclass
class Diagnostics:
    sweeps: int
    kkt_residual: float
    objective_trace: np.ndarray


@dataclass
class SparseSelector:
    """Recovered coefficients over a delay grid.

    ``coeffs`` is signed for a single real solve and a non-negative
    magnitude after I/Q combining.  ``grid`` carries the delay of each
    coefficient; ``tap_indices``/``tap_grid`` map coefficients onto the
    coarse correlator taps, and for multi-LASSO output ``fine_delays``
    and ``winning_k`` record the winning column per tap.
    """

    coeffs: np.ndarray
    grid: np.ndarray
    diagnostics: Diagnostics
    tap_indices: np.ndarray | None = None
    tap_grid: np.ndarray | None = None
    fine_delays: np.ndarray | None = None
    winning_k: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def _run_kernel(M, y, lam, tol, max_sweeps, component=None):
    beta, sweeps, kkt, converged, trace = cd_lasso(M, y, lam, tol, max_sweeps)
    if not converged:
        which = f" ({component} component)" if component else ""
        raise NonConvergenceError(
            f"coordinate descent did not reach tol={tol} within "
            f"{max_sweeps} sweeps{which}; last KKT residual {kkt:.3e}",
            beta=beta,
            kkt_residual=kkt,
            sweeps=sweeps,
            component=component,
        )
    return beta, Diagnostics(sweeps=sweeps, kkt_residual=kkt, objective_trace=trace)


def solve_lasso(
    problem: LassoProblem,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    grid: np.ndarray | None = None,
) -> SparseSelector:
    """Solve the real LASSO with a KKT-certified result."""
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_sweeps < 1:
        raise ValueError(f"max_sweeps must be at least 1, got {max_sweeps}")
    beta, diag = _run_kernel(problem.M, problem.y, problem.lam, tol, max_sweeps)
    if grid is None:
        grid = np.arange(beta.size, dtype=np.float64)
    return SparseSelector(coeffs=beta, grid=np.asarray(grid, dtype=np.float64), diagnostics=diag)


def _dictionary_parts(dictionary):
    """Accept a Dictionary, SubDictionary, or bare matrix."""
    if isinstance(dictionary, Dictionary):
        return dictionary.M, dictionary.column_delays, dictionary.config
    if isinstance(dictionary, SubDictionary):
        return dictionary.M, dictionary.column_delays, None
    M = np.asarray(dictionary, dtype=np.float64)
    return M, np.arange(M.shape[1], dtype=np.float64), None


def _snapshot_taps(snapshot) -> np.ndarray:
    taps = getattr(snapshot, "taps", snapshot)
    return np.asarray(taps, dtype=np.complex128)


def solve_iq_lasso(
    dictionary,
    snapshot,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    whitener: np.ndarray | None = None,
) -> SparseSelector:
    """LASSO the I and Q tap components separately; combine magnitudes.

    Accepts a :class:`~taplasso.dictionary.Dictionary` (or sub-dictionary,
    or bare matrix) and a complex snapshot (or raw complex vector).

    ``whitener``, when given, left-multiplies both the dictionary and the
    taps before solving (use the replica bank's noise whitener so the fit
    weighs the correlated tap noise correctly).  Coefficients keep their
    unit-peak amplitude meaning either way.
    """
    M, grid, config = _dictionary_parts(dictionary)
    y = _snapshot_taps(snapshot)
    if M.shape[0] != y.shape[0]:
        raise ValueError(f"dictionary has {M.shape[0]} taps, snapshot has {y.shape[0]}")
    y_i, y_q = y.real, y.imag
    if whitener is not None:
        M = whitener @ M
        y_i = whitener @ y_i
        y_q = whitener @ y_q
    beta_i, diag_i = _run_kernel(M, y_i, lam, tol, max_sweeps, component="I")
    beta_q, diag_q = _run_kernel(M, y_q, lam, tol, max_sweeps, component="Q")
    coeffs = np.hypot(beta_i, beta_q)
    diag = Diagnostics(
        sweeps=diag_i.sweeps + diag_q.sweeps,
        kkt_residual=max(diag_i.kkt_residual, diag_q.kkt_residual),
        objective_trace=np.concatenate([diag_i.objective_trace, diag_q.objective_trace]),
    )
    selector = SparseSelector(coeffs=coeffs, grid=grid, diagnostics=diag)
    if config is not None:
        selector.tap_grid = config.tap_delays
        selector.tap_indices = np.array(
            [nearest_tap_index(g, config) for g in grid], dtype=np.int64
        )
        if grid.size != config.n:
            selector.fine_delays = grid.copy()
    selector.meta["beta_i"] = beta_i
    selector.meta["beta_q"] = beta_q
    return selector


def combine_max(magnitudes_per_block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-tap maximum across blocks; ties resolved to the lowest block.

    ``magnitudes_per_block`` has shape (Fp, n).  Returns (combined, winner)
    where ``winner`` holds 1-based block indices.
    """
    mags = np.asarray(magnitudes_per_block, dtype=np.float64)
    winner = np.argmax(mags, axis=0)  # argmax returns the first (lowest) max
    combined = mags[winner, np.arange(mags.shape[1])]
    return combined, winner + 1


def solve_multi_lasso(
    sub_dicts: list[SubDictionary],
    snapshot,
    lambdas,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    whitener: np.ndarray | None = None,
) -> SparseSelector:
    """I/Q LASSO against every sub-dictionary, max-combined per tap.

    ``lambdas`` may be a scalar (shared weight) or one value per block.
    The result has one coefficient per correlator tap; ``fine_delays``
    reports the winning block's column delay for each tap.  The joint
    objective separates per block, so per-block solves are exact.
    """
    if not sub_dicts:
        raise ValueError("need at least one sub-dictionary")
    fp = len(sub_dicts)
    n = sub_dicts[0].M.shape[0]
    lams = np.broadcast_to(np.asarray(lambdas, dtype=np.float64), (fp,))
    y = _snapshot_taps(snapshot)

    mags = np.empty((fp, n))
    sweeps = 0
    kkt = 0.0
    traces = []
    for block, lam in zip(sub_dicts, lams):
        if block.M.shape != (n, n):
            raise ValueError(
                f"sub-dictionary {block.k} is {block.M.shape}, expected ({n}, {n})"
            )
        try:
            sel = solve_iq_lasso(block, y, float(lam), tol, max_sweeps, whitener=whitener)
        except NonConvergenceError as exc:
            raise NonConvergenceError(
                f"sub-dictionary K={block.k}: {exc}",
                beta=exc.beta,
                kkt_residual=exc.kkt_residual,
                sweeps=exc.sweeps,
                component=exc.component,
            ) from exc
        mags[block.k - 1] = sel.coeffs
        sweeps += sel.diagnostics.sweeps
        kkt = max(kkt, sel.diagnostics.kkt_residual)
        traces.append(sel.diagnostics.objective_trace)

    combined, winner = combine_max(mags)
    tap_grid = sub_dicts[0].tap_delays
    fine = np.array(
        [sub_dicts[k - 1].column_delays[i] for i, k in enumerate(winner)]
    )
    diag = Diagnostics(
        sweeps=sweeps, kkt_residual=kkt, objective_trace=np.concatenate(traces)
    )
    return SparseSelector(
        coeffs=combined,
        grid=np.asarray(tap_grid, dtype=np.float64),
        diagnostics=diag,
        tap_indices=np.arange(n, dtype=np.int64),
        tap_grid=np.asarray(tap_grid, dtype=np.float64),
        fine_delays=fine,
        winning_k=winner,
        meta={"per_block_magnitudes": mags},
    )


def kkt_certificate(M: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """Worst-case violation of the optimality conditions, computed from
    scratch (independent of any solver state)."""
    M = np.asarray(M, dtype=np.float64)
    g = M.T @ (np.asarray(y, dtype=np.float64) - M @ beta)
    res = float(np.max(np.maximum(np.abs(g) - lam, 0.0), initial=0.0))
    nz = beta != 0
    if np.any(nz):
        res = max(res, float(np.max(np.abs(g[nz] - lam * np.sign(beta[nz])))))
    return res
