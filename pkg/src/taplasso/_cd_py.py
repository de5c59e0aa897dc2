"""Pure-numpy cyclic coordinate-descent kernel for the LASSO.

Fallback used when the compiled extension is unavailable; same contract
as ``taplasso._cd_fast.cd_lasso``.
"""

from __future__ import annotations

import numpy as np


def cd_lasso(M, y, lam, tol, max_sweeps):
    """Minimize 0.5*||y - M b||^2 + lam*||b||_1 by coordinate descent.

    Returns ``(beta, sweeps, kkt_residual, converged, objective_trace)``
    where the trace holds the objective value after each completed sweep.
    Convergence means the KKT residual reached ``tol``: |g_j| <= lam for
    all j and |g_j - lam*sign(b_j)| <= tol on the support, with
    g = M'(y - M b).
    """
    M = np.asarray(M, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = M.shape
    col_norms = np.einsum("ij,ij->j", M, M)
    beta = np.zeros(p)
    r = y.copy()
    trace = np.empty(max_sweeps)
    kkt = np.inf
    for sweep in range(1, max_sweeps + 1):
        for j in range(p):
            nj = col_norms[j]
            if nj == 0.0:
                continue
            mj = M[:, j]
            bj = beta[j]
            rho = mj @ r + nj * bj
            mag = abs(rho) - lam
            new = 0.0 if mag <= 0.0 else np.copysign(mag, rho) / nj
            if new != bj:
                r -= (new - bj) * mj
                beta[j] = new
        trace[sweep - 1] = 0.5 * float(r @ r) + lam * float(np.sum(np.abs(beta)))
        g = M.T @ r
        kkt = float(np.max(np.maximum(np.abs(g) - lam, 0.0), initial=0.0))
        nz = beta != 0
        if np.any(nz):
            kkt = max(kkt, float(np.max(np.abs(g[nz] - lam * np.sign(beta[nz])))))
        if kkt <= tol:
            return beta, sweep, kkt, True, trace[:sweep].copy()
    return beta, max_sweeps, kkt, False, trace.copy()
