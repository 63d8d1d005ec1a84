"""Sampled traces and the aggregate performance metrics computed from them."""

from __future__ import annotations

import io
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = [
    "Trace",
    "MetricsReport",
    "jain_fairness",
    "loss_rate",
    "queue_share",
    "utilization",
    "jitter",
    "compute_metrics",
]


@dataclass
class Trace:
    """Uniformly sampled signals of one simulation run.

    Agent arrays have shape (samples, agents), link arrays (samples, links).
    ``extra`` holds model internals (x_btl, tau_min, mode variables, ...),
    ``meta`` the bookkeeping written alongside exports.
    """

    t: np.ndarray
    x: np.ndarray
    tau: np.ndarray
    w: np.ndarray
    v: np.ndarray
    x_dlv: np.ndarray
    q: np.ndarray
    p: np.ndarray
    y: np.ndarray
    link_ids: list[str]
    capacities: np.ndarray
    buffers: np.ndarray
    bottleneck: int = 0
    ccas: list[str] = field(default_factory=list)
    extra: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.t.size
        for name in ("x", "tau", "w", "v", "x_dlv", "q", "p", "y"):
            arr = getattr(self, name)
            if arr.shape[0] != n:
                raise ValueError(f"trace series {name} has {arr.shape[0]} samples, expected {n}")
        if n > 2:
            dt = np.diff(self.t)
            if not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-12):
                raise ValueError("trace samples are not uniformly spaced")

    @property
    def n_agents(self) -> int:
        return self.x.shape[1]

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def window(self, start: float, length: float) -> slice:
        """Sample slice covering [start, start + length)."""
        if start < self.t[0] - 1e-12 or start + length > self.t[-1] + self.dt + 1e-9:
            raise ValueError(f"window [{start}, {start + length}) outside trace "
                             f"[{self.t[0]}, {self.t[-1]}]")
        i0 = int(np.searchsorted(self.t, start - 1e-12))
        i1 = int(np.searchsorted(self.t, start + length - 1e-12))
        if i1 <= i0:
            raise ValueError("window contains no samples")
        return slice(i0, i1)

    def columns(self) -> tuple[list[str], np.ndarray]:
        names, cols = ["t"], [self.t[:, None]]
        for key in ("x", "tau", "w", "v", "x_dlv"):
            arr = getattr(self, key)
            names += [f"{key}_{i + 1}" for i in range(self.n_agents)]
            cols.append(arr)
        for key in ("q", "p", "y"):
            arr = getattr(self, key)
            names += [f"{key}_{ell}" for ell in self.link_ids]
            cols.append(arr)
        return names, np.hstack(cols)

    def to_csv(self, path=None) -> str:
        names, data = self.columns()
        buf = io.StringIO()
        buf.write(",".join(names) + "\n")
        for row in data:
            buf.write(",".join(format(float(v), ".9e") for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n", encoding="ascii") as fh:
                fh.write(text)
        return text


@dataclass
class MetricsReport:
    jain_fairness: float
    loss_rate: float
    mean_queue_share: float
    utilization: float
    jitter: float
    window: tuple[float, float]

    def __post_init__(self):
        for name in ("loss_rate", "mean_queue_share", "utilization"):
            value = getattr(self, name)
            if not -1e-12 <= value <= 1 + 1e-9:
                raise ValueError(f"{name}={value} outside [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def jain_fairness(rates) -> float:
    """(sum x)^2 / (N sum x^2) over mean per-agent rates."""
    x = np.asarray(rates, dtype=float)
    if x.size == 0:
        raise ValueError("need at least one rate")
    if np.any(x < 0):
        raise ValueError("rates must be non-negative")
    sq = np.sum(x * x)
    if sq == 0:
        raise ValueError("all rates are zero")
    return float(np.sum(x) ** 2 / (x.size * sq))


def _window(trace: Trace, window) -> slice:
    if window is None:
        return slice(0, trace.t.size)
    if isinstance(window, slice):
        return window
    start, length = window
    return trace.window(start, length)


def loss_rate(trace: Trace, window=None) -> float:
    """Dropped volume over sent volume in the window."""
    sl = _window(trace, window)
    dropped = np.sum(trace.p[sl] * trace.y[sl])
    sent = np.sum(trace.x[sl])
    if sent <= 0:
        raise ValueError("no traffic sent in window")
    return float(min(dropped / sent, 1.0))


def queue_share(trace: Trace, window=None, link: int | None = None) -> float:
    k = trace.bottleneck if link is None else link
    sl = _window(trace, window)
    return float(np.mean(trace.q[sl, k] / trace.buffers[k]))


def served_rate(trace: Trace, link: int | None = None) -> np.ndarray:
    k = trace.bottleneck if link is None else link
    cap = trace.capacities[k]
    arrivals = trace.y[:, k] * (1.0 - trace.p[:, k])
    return np.where(trace.q[:, k] > 0, cap, np.minimum(arrivals, cap))


def utilization(trace: Trace, window=None, link: int | None = None) -> float:
    k = trace.bottleneck if link is None else link
    sl = _window(trace, window)
    return float(np.mean(served_rate(trace, k)[sl]) / trace.capacities[k])


def jitter(trace: Trace, window=None, g: float = 1.0) -> float:
    """Mean absolute RTT change between virtual packets.

    RTTs are sampled every ``g * N / C`` seconds (``g`` in segments, ``C``
    the bottleneck capacity) by linear interpolation of the trace.
    """
    sl = _window(trace, window)
    t = trace.t[sl]
    interval = g * trace.n_agents / trace.capacities[trace.bottleneck]
    if interval < trace.dt * (1 - 1e-9):
        raise ValueError(f"virtual packet interval {interval:g} s is finer than the trace "
                         f"resolution {trace.dt:g} s")
    grid = np.arange(t[0], t[-1] + 1e-12, interval)
    if grid.size < 2:
        raise ValueError("fewer than two virtual packet samples")
    diffs = [np.mean(np.abs(np.diff(np.interp(grid, t, trace.tau[sl, i]))))
             for i in range(trace.n_agents)]
    return float(np.mean(diffs))


def compute_metrics(trace: Trace, start: float, length: float, g: float = 1.0) -> MetricsReport:
    sl = trace.window(start, length)
    rates = trace.x_dlv[sl].mean(axis=0)
    try:
        jit = jitter(trace, sl, g)
    except ValueError:
        jit = float("nan")
    return MetricsReport(
        jain_fairness=jain_fairness(rates),
        loss_rate=loss_rate(trace, sl),
        mean_queue_share=queue_share(trace, sl),
        utilization=utilization(trace, sl),
        jitter=jit,
        window=(float(start), float(length)),
    )
