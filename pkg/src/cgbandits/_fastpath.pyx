# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-round kernels (rank-one Gaussian conditioning and the
rare-switching selection loop).  Must stay numerically in lockstep with
cgbandits._slowpath: same operations in the same order."""

import numpy as np

cimport numpy as cnp
from libc.math cimport log, log1p, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline void _var_update(double[:, ::1] cov, double[::1] var,
                             double[::1] g, Py_ssize_t idx, double lam) nogil:
    cdef Py_ssize_t n = cov.shape[0]
    cdef Py_ssize_t i, j
    cdef double denom, gi
    for i in range(n):
        g[i] = cov[i, idx]
    denom = g[idx] + lam
    for i in range(n):
        gi = g[i]
        var[i] -= gi * gi / denom
        for j in range(n):
            cov[i, j] -= gi * g[j] / denom


def condition_update(double[:, ::1] cov, double[::1] var, double[::1] mean,
                     Py_ssize_t idx, double y, double lam):
    """Condition a finite-domain Gaussian on one noisy observation, in place."""
    cdef Py_ssize_t n = cov.shape[0]
    cdef double[::1] g = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double denom, scale
    with nogil:
        for i in range(n):
            g[i] = cov[i, idx]
        denom = g[idx] + lam
        scale = (y - mean[idx]) / denom
        for i in range(n):
            mean[i] += g[i] * scale
    _var_update(cov, var, g, idx, lam)
    return None


def variance_update(double[:, ::1] cov, double[::1] var, Py_ssize_t idx, double lam):
    """Covariance-only conditioning (the observation value is irrelevant)."""
    cdef Py_ssize_t n = cov.shape[0]
    cdef double[::1] g = np.empty(n, dtype=np.float64)
    _var_update(cov, var, g, idx, lam)
    return None


def select_epoch(K_active, double lam, double eta, Py_ssize_t l_h):
    """Rare-switching selection loop for one epoch (see _slowpath.select_epoch)."""
    cdef cnp.ndarray[double, ndim=2] cov_arr = np.array(K_active, dtype=np.float64, copy=True)
    cdef double[:, ::1] cov = cov_arr
    cdef Py_ssize_t n = cov.shape[0]
    cdef cnp.ndarray[double, ndim=1] var_arr = np.ascontiguousarray(np.diag(cov_arr)).copy()
    cdef double[::1] var = var_arr
    cdef cnp.ndarray[double, ndim=1] cached_arr = var_arr.copy()
    cdef double[::1] cached = cached_arr
    cdef double[::1] g = np.empty(n, dtype=np.float64)

    cdef cnp.ndarray[cnp.int64_t, ndim=1] sel = np.empty(l_h, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] sigma_at_pick = np.empty(l_h, dtype=np.float64)
    switches = []

    cdef double ln_eta = log(eta) + 1e-12  # roundoff guard, matches _slowpath
    cdef double logdet = 0.0
    cdef double anchor = 0.0
    cdef double s2, best
    cdef Py_ssize_t t, i, j

    for t in range(1, l_h + 1):
        j = 0
        best = cached[0]
        for i in range(1, n):
            if cached[i] > best:
                best = cached[i]
                j = i
        sel[t - 1] = j
        s2 = var[j] if var[j] > 0.0 else 0.0
        sigma_at_pick[t - 1] = sqrt(s2)
        logdet += log1p(s2 / lam)
        _var_update(cov, var, g, j, lam)
        if logdet > anchor + ln_eta:
            anchor = logdet
            switches.append(t)
            for i in range(n):
                cached[i] = var[i]
    return sel, np.asarray(switches, dtype=np.int64), sigma_at_pick, logdet
