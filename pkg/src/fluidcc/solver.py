"""Fixed-step method-of-steps integration for delay differential equations.

The integrator is explicit Euler.  Delayed terms are read from a
:class:`SignalHistory`, a ring buffer holding every recorded signal at
solver-step resolution, with linear interpolation between samples.
Discrete mode variables are advanced by additive update rules and snapped to
{0, 1} at 0.5 after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = ["NumericalError", "SignalHistory", "DdeSystem", "Solution", "integrate", "snap_modes"]


class NumericalError(ArithmeticError):
    """A state variable became NaN or infinite."""

    def __init__(self, signal: str, time: float):
        super().__init__(f"non-finite value in signal {signal!r} at t={time:.9g} s")
        self.signal = signal
        self.time = time


class SignalHistory:
    """Ring buffer of past signal values sampled every ``step`` seconds.

    Sample ``n`` holds the signals at time ``n * step``.  Times before zero
    resolve to ``initial`` (a constant vector or a callable of time).
    """

    def __init__(self, names: Sequence[str], step: float, horizon: float,
                 initial: np.ndarray | Callable[[float], np.ndarray] | None = None):
        if step <= 0:
            raise ValueError("step must be positive")
        self.names = list(names)
        self.index = {name: k for k, name in enumerate(self.names)}
        self.step = float(step)
        self.horizon = float(horizon)
        self.capacity = int(math.ceil(horizon / step)) + 3
        self._buf = np.zeros((self.capacity, len(self.names)))
        self._initial = initial
        self.last = -1

    @property
    def now(self) -> float:
        return self.last * self.step

    def record(self, values) -> None:
        self.last += 1
        self._buf[self.last % self.capacity] = values
        if self.last == 0 and self._initial is None:
            self._initial = np.array(values, dtype=float)

    def initial_value(self, t: float) -> np.ndarray:
        if callable(self._initial):
            return np.asarray(self._initial(t), dtype=float)
        return np.asarray(self._initial, dtype=float)

    def _column(self, signal) -> int:
        return self.index[signal] if isinstance(signal, str) else int(signal)

    def lookup(self, signal, t: float) -> float:
        """Value of ``signal`` at past time ``t`` (linear interpolation)."""
        col = self._column(signal)
        if self.last < 0:
            raise LookupError("history is empty")
        pos = t / self.step
        nearest = round(pos)
        if abs(pos - nearest) < 1e-9 * max(1.0, abs(pos)):
            pos = float(nearest)
        if pos > self.last:
            raise LookupError(f"lookup at t={t:g} s is ahead of recorded time {self.now:g} s")
        if pos < 0:
            return float(self.initial_value(t)[col])
        if self.last - pos > self.capacity - 2:
            raise LookupError(f"lookup at t={t:g} s is beyond the history horizon {self.horizon:g} s")
        k = int(math.floor(pos))
        frac = pos - k
        lo = self._buf[k % self.capacity, col]
        if frac == 0.0:
            return float(lo)
        hi = self._buf[(k + 1) % self.capacity, col]
        return float(lo + frac * (hi - lo))


def snap_modes(modes: np.ndarray) -> np.ndarray:
    """Threshold mode variables at 0.5 onto {0, 1}."""
    return (np.asarray(modes) >= 0.5).astype(float)


@dataclass
class DdeSystem:
    """A delay differential system with optional discrete mode variables.

    ``rhs(t, y, modes, history)`` returns dy/dt.  ``update_modes`` returns the
    additive mode update for the step; ``derived`` returns extra signals that
    are recorded into the history next to the state so other equations can
    read them with delay.
    """

    names: Sequence[str]
    y0: np.ndarray
    rhs: Callable
    max_delay: float = 0.0
    min_delay: float = math.inf
    mode_names: Sequence[str] = ()
    modes0: np.ndarray = field(default_factory=lambda: np.zeros(0))
    update_modes: Callable | None = None
    derived_names: Sequence[str] = ()
    derived: Callable | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    initial_history: np.ndarray | Callable | None = None

    def __post_init__(self):
        self.y0 = np.asarray(self.y0, dtype=float)
        self.modes0 = snap_modes(np.asarray(self.modes0, dtype=float))
        if len(self.names) != self.y0.size:
            raise ValueError("names and y0 differ in length")


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray
    modes: np.ndarray
    derived: np.ndarray
    names: Sequence[str]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.y[:, list(self.names).index(name)]


def integrate(system: DdeSystem, step: float, duration: float,
              sample_interval: float | None = None) -> Solution:
    """Advance ``system`` from 0 to ``duration`` with explicit Euler steps."""
    if step <= 0 or duration < 0:
        raise ValueError("step must be positive and duration non-negative")
    if math.isfinite(system.min_delay) and step > system.min_delay / 10 * (1 + 1e-12):
        raise ValueError(f"step {step:g} exceeds a tenth of the smallest delay {system.min_delay:g}")
    n_steps = int(round(duration / step))
    every = max(1, int(round((sample_interval or step) / step)))

    n_state, n_derived = system.y0.size, len(system.derived_names)
    hist_names = list(system.names) + list(system.derived_names)
    initial = system.initial_history
    if initial is not None and not callable(initial):
        initial = np.concatenate([np.asarray(initial, float), np.zeros(n_derived)])
    history = SignalHistory(hist_names, step, max(system.max_delay, step), initial)

    y = system.y0.copy()
    modes = system.modes0.copy()
    lower = None if system.lower is None else np.asarray(system.lower, float)
    upper = None if system.upper is None else np.asarray(system.upper, float)

    ts, ys, ms, ds = [], [], [], []
    for n in range(n_steps + 1):
        t = n * step
        extra = (np.asarray(system.derived(t, y, modes, history), float)
                 if system.derived is not None else np.zeros(0))
        history.record(np.concatenate([y, extra]) if n_derived else y)
        if n % every == 0:
            ts.append(t)
            ys.append(y.copy())
            ms.append(modes.copy())
            ds.append(extra)
        if n == n_steps:
            break
        dy = np.asarray(system.rhs(t, y, modes, history), float)
        if system.update_modes is not None:
            delta = np.asarray(system.update_modes(t, y, modes, history), float)
        y = y + step * dy
        if lower is not None:
            y = np.maximum(y, lower)
        if upper is not None:
            y = np.minimum(y, upper)
        if system.update_modes is not None:
            modes = snap_modes(np.clip(modes + delta, 0.0, 1.0))
        if not np.all(np.isfinite(y)):
            bad = int(np.flatnonzero(~np.isfinite(y))[0])
            raise NumericalError(system.names[bad], t + step)

    return Solution(np.array(ts), np.array(ys).reshape(len(ts), n_state),
                    np.array(ms).reshape(len(ts), modes.size),
                    np.array(ds).reshape(len(ts), n_derived), list(system.names))
