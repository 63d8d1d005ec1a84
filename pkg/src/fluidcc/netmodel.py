"""Link arrival, queue, latency and loss equations.

The scalar functions are compiled with numba so the simulation kernel can
call them directly; they remain ordinary callables from Python.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .core import Link, Scenario
from .solver import SignalHistory

__all__ = [
    "sigmoid",
    "relu_smooth",
    "queue_derivative",
    "path_latency",
    "loss_droptail",
    "loss_red",
    "link_loss",
    "path_loss",
    "arrival_rate",
    "DROPTAIL",
    "RED",
]

DROPTAIL = 0
RED = 1


@njit(cache=True)
def sigmoid(v, k):
    """Logistic gate 1 / (1 + exp(-k v)), evaluated without overflow."""
    z = k * v
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def relu_smooth(v, k):
    """Smooth ReLU: v * sigmoid(v, k)."""
    return v * sigmoid(v, k)


@njit(cache=True)
def queue_derivative(y, p, q, capacity, buffer):
    dq = (1.0 - p) * y - capacity
    if q <= 0.0 and dq < 0.0:
        return 0.0
    if q >= buffer and dq > 0.0:
        return 0.0
    return dq


@njit(cache=True)
def loss_droptail(y, q, capacity, buffer, k_rate, L):
    """Relative excess rate, gated on a full buffer.

    Below capacity the excess factor is negative; the result is clipped to
    [0, 1] so the gate's leakage never produces a negative probability.
    """
    # at or below capacity the excess factor is non-positive and clips to zero;
    # returning early also avoids -inf * 0 for vanishing arrivals
    if y <= capacity:
        return 0.0
    fill = q / buffer
    if fill <= 0.0:
        return 0.0
    p = sigmoid(y - capacity, k_rate) * (1.0 - capacity / y) * fill ** L
    return min(max(p, 0.0), 1.0)


@njit(cache=True)
def loss_red(q, buffer):
    return min(max(q / buffer, 0.0), 1.0)


@njit(cache=True)
def link_loss(discipline, y, q, capacity, buffer, k_rate, L):
    if discipline == RED:
        return loss_red(q, buffer)
    return loss_droptail(y, q, capacity, buffer, k_rate, L)


def path_latency(queues, capacities, delays, return_delay: float = 0.0) -> float:
    """Propagation plus queuing delay summed over a path."""
    q = np.asarray(queues, float)
    return float(np.sum(np.asarray(delays, float) + q / np.asarray(capacities, float)) + return_delay)


def path_loss(link_losses) -> float:
    """Small-loss approximation: sum of per-link losses, capped at one."""
    return float(min(max(np.sum(link_losses), 0.0), 1.0))


def arrival_rate(link: Link | str, t: float, history: SignalHistory, scenario: Scenario) -> float:
    """Sum of sender rates delayed by their propagation time to ``link``.

    ``history`` must hold one signal per sender named ``x{i}``.
    """
    link_id = link if isinstance(link, str) else link.id
    total = 0.0
    for agent in scenario.agents:
        if link_id in agent.path.links:
            total += history.lookup(f"x{agent.id}", t - agent.path.forward_delay(link_id))
    return total
