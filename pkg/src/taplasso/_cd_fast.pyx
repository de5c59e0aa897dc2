# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled cyclic coordinate-descent kernel for the LASSO.

Same contract as taplasso._cd_py.cd_lasso; M must arrive Fortran-ordered
(the dispatch layer takes care of that) so column access is contiguous.
"""

from libc.math cimport fabs

import numpy as np


def cd_lasso(double[::1, :] M, double[::1] y, double lam, double tol, int max_sweeps):
    cdef Py_ssize_t n = M.shape[0]
    cdef Py_ssize_t p = M.shape[1]
    cdef double[::1] beta = np.zeros(p)
    cdef double[::1] r = np.array(y, dtype=np.float64, copy=True)
    cdef double[::1] col_norms = np.zeros(p)
    cdef double[::1] trace = np.empty(max_sweeps)
    cdef double[::1] g = np.empty(p)

    cdef Py_ssize_t i, j, sweep
    cdef double acc, nj, bj, rho, new, delta, kkt, viol, obj, l1
    cdef bint converged = False
    cdef Py_ssize_t sweeps_done = max_sweeps

    with nogil:
        for j in range(p):
            acc = 0.0
            for i in range(n):
                acc += M[i, j] * M[i, j]
            col_norms[j] = acc

        kkt = 0.0
        for sweep in range(1, max_sweeps + 1):
            for j in range(p):
                nj = col_norms[j]
                if nj == 0.0:
                    continue
                bj = beta[j]
                rho = nj * bj
                for i in range(n):
                    rho += M[i, j] * r[i]
                if rho > lam:
                    new = (rho - lam) / nj
                elif rho < -lam:
                    new = (rho + lam) / nj
                else:
                    new = 0.0
                if new != bj:
                    delta = new - bj
                    for i in range(n):
                        r[i] -= delta * M[i, j]
                    beta[j] = new

            obj = 0.0
            for i in range(n):
                obj += r[i] * r[i]
            obj *= 0.5
            l1 = 0.0
            for j in range(p):
                l1 += fabs(beta[j])
            trace[sweep - 1] = obj + lam * l1

            kkt = 0.0
            for j in range(p):
                acc = 0.0
                for i in range(n):
                    acc += M[i, j] * r[i]
                g[j] = acc
                viol = fabs(acc) - lam
                if viol > kkt:
                    kkt = viol
                if beta[j] > 0.0:
                    viol = fabs(acc - lam)
                    if viol > kkt:
                        kkt = viol
                elif beta[j] < 0.0:
                    viol = fabs(acc + lam)
                    if viol > kkt:
                        kkt = viol
            if kkt <= tol:
                converged = True
                sweeps_done = sweep
                break

    return (
        np.asarray(beta),
        int(sweeps_done),
        float(kkt),
        bool(converged),
        np.asarray(trace[:sweeps_done]).copy(),
    )
