"""Invariant checks shared by the property tests and the acceptance suite."""

import numpy as np

from fluidcc.metrics import jain_fairness


def invariant_violations(trace, k=7.0):
    """Names of the invariants the trace violates (empty when all hold)."""
    bad = []
    if not (np.all(trace.q >= 0.0) and np.all(trace.q <= trace.buffers * (1 + 1e-12))):
        bad.append("queue bounds")
    if not (np.all(trace.p >= 0.0) and np.all(trace.p <= 1.0)):
        bad.append("loss range")
    if not (np.all(np.isfinite(trace.x)) and np.all(trace.x >= 0.0)):
        bad.append("finite rates")
    tau_ok = trace.meta["stats"]["tau_min_increases"] == 0
    for i, cca in enumerate(trace.ccas):
        if cca.startswith("bbr"):
            tau_ok &= bool(np.all(np.diff(trace.extra["tau_min"][:, i]) <= 0.0))
    if not tau_ok:
        bad.append("tau_min monotone")
    for i, cca in enumerate(trace.ccas):
        if cca == "bbr2" and np.any(trace.extra["m_dwn"][:, i] * trace.extra["m_crs"][:, i] != 0):
            bad.append("mode exclusivity")
            break
    if not trace.meta["stats"]["max_conservation_error"] < 1e-6:
        bad.append("delivery conservation")
    half = trace.t[-1] / 2
    rates = trace.x[trace.window(half, trace.t[-1] - half)].mean(axis=0)
    if rates.sum() > 0 and abs(jain_fairness(rates * k) - jain_fairness(rates)) >= 1e-9:
        bad.append("jain scale invariance")
    return bad
