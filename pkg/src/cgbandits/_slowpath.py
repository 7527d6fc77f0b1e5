"""Pure-numpy implementations of the hot per-round kernels.

Selected by cgbandits._backend when the compiled extension is missing (or
when CGB_BACKEND=python).  Operation order deliberately mirrors the
compiled code so both backends produce bit-identical traces.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"


def condition_update(cov, var, mean, idx, y, lam):
    """Condition a finite-domain Gaussian on one noisy observation, in place.

    cov is the current posterior covariance over the domain, var its diagonal
    (maintained separately to avoid a copy per round), mean the posterior
    mean.  The observation y at point index idx carries noise variance lam.
    """
    g = cov[:, idx].copy()
    denom = g[idx] + lam
    mean += g * ((y - mean[idx]) / denom)
    var -= g * g / denom
    cov -= np.outer(g, g) / denom


def variance_update(cov, var, idx, lam):
    """Covariance-only conditioning (the observation value is irrelevant)."""
    g = cov[:, idx].copy()
    denom = g[idx] + lam
    var -= g * g / denom
    cov -= np.outer(g, g) / denom


def select_epoch(K_active, lam, eta, l_h):
    """Rare-switching selection loop for one epoch.

    Runs l_h rounds over the active set whose prior Gram matrix is K_active.
    Each round picks the argmax of the variance cache frozen at the last
    switch time (first-max tie rule), then tests whether the running
    determinant of the selected multiset has grown past the anchor by a
    factor eta (strictly); if so, the cache is refreshed.

    Returns (sel, switch_rounds, sigma_at_pick, logdet):
      sel            (l_h,) indices into the active set
      switch_rounds  1-based rounds t at which the cache was refreshed
      sigma_at_pick  current (not cached) posterior std of each pick, taken
                     just before conditioning on it
      logdet         final logdet(I + K_sel / lam) of the selected multiset
    """
    cov = np.array(K_active, dtype=np.float64, copy=True)
    var = np.ascontiguousarray(np.diag(cov)).copy()
    cached = var.copy()
    ln_eta = math.log(eta) + 1e-12  # roundoff guard: exact-boundary growth never switches
    logdet = 0.0
    anchor = 0.0
    sel = np.empty(l_h, dtype=np.int64)
    sigma_at_pick = np.empty(l_h, dtype=np.float64)
    switches = []
    for t in range(1, l_h + 1):
        j = int(np.argmax(cached))
        sel[t - 1] = j
        s2 = var[j] if var[j] > 0.0 else 0.0
        sigma_at_pick[t - 1] = math.sqrt(s2)
        logdet += math.log1p(s2 / lam)
        variance_update(cov, var, j, lam)
        if logdet > anchor + ln_eta:
            anchor = logdet
            switches.append(t)
            cached[:] = var
    return sel, np.asarray(switches, dtype=np.int64), sigma_at_pick, logdet
