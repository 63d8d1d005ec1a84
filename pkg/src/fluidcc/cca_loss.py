"""Reno and CUBIC window dynamics."""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "W_FLOOR",
    "CUBIC_C",
    "CUBIC_B",
    "reno_window_derivative",
    "reno_equilibrium_window",
    "cubic_aux_derivatives",
    "cubic_window",
    "cubic_inflection",
    "window_rate",
]

W_FLOOR = 1.0
CUBIC_C = 0.4
CUBIC_B = 0.7


@njit(cache=True)
def reno_window_derivative(w, x_delayed, p_delayed):
    """Additive increase of 1/w per acknowledged segment, halving per loss."""
    return x_delayed * (1.0 - p_delayed) / w - x_delayed * p_delayed * w / 2.0


def reno_equilibrium_window(p: float) -> float:
    """Window at which the Reno derivative vanishes for constant loss ``p``."""
    if not 0 < p <= 1:
        raise ValueError("loss probability must be in (0, 1]")
    return float(np.sqrt(2.0 * (1.0 - p) / p))


@njit(cache=True)
def cubic_aux_derivatives(s, w_max, w, x_delayed, p_delayed):
    """Rates of the time since last loss and of the window at last loss."""
    loss_events = x_delayed * p_delayed
    return 1.0 - s * loss_events, (w - w_max) * loss_events


@njit(cache=True)
def cubic_inflection(w_max, c=CUBIC_C, b=CUBIC_B):
    return np.cbrt(w_max * b / c)


@njit(cache=True)
def cubic_window(s, w_max, c=CUBIC_C, b=CUBIC_B, floor=W_FLOOR):
    w = c * (s - np.cbrt(w_max * b / c)) ** 3 + w_max
    return max(w, floor)


@njit(cache=True)
def window_rate(w, tau, floor=W_FLOOR):
    return max(w, floor) / tau
