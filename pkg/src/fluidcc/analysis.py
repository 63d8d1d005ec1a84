"""Reduced BBR fluid models, their equilibria and eigenvalue stability verdicts.

The reduced models drop ProbeRTT and replace the periodic bottleneck
bandwidth update by continuous assimilation ``x_btl' = x_max - x_btl``.  State
vectors are ``[x_btl_1, ..., x_btl_N, q]`` for a single bottleneck of
capacity ``C`` where agent ``i`` has round-trip propagation delay ``d_i``.
Time is in the equations' own unit; only fixed points and eigenvalue signs
carry meaning, not transient timescales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .solver import DdeSystem, NumericalError, integrate

__all__ = [
    "ConvergenceError",
    "EquilibriumReport",
    "DeepEquilibrium",
    "ConvergenceReport",
    "FixedPointResult",
    "window_factor",
    "reduced_bbr1_rhs",
    "reduced_bbr2_rhs",
    "equilibrium_bbr1_deep",
    "equilibrium_bbr1_shallow",
    "equilibrium_bbr2",
    "jacobian_bbr1",
    "jacobian_bbr1_shallow",
    "jacobian_bbr2",
    "eigenvalues_dense",
    "eigenpairs_dense",
    "convergence_check",
    "slaved_queue",
    "find_equilibrium",
    "analyze",
]

PULSE = 1.25
MAX_EIGEN_DIM = 64


class ConvergenceError(ArithmeticError):
    """An iterative method hit its iteration cap."""


def _split(state, d):
    state = np.asarray(state, dtype=float)
    x, q = state[:-1], float(state[-1])
    d = np.broadcast_to(np.asarray(d, dtype=float), x.shape)
    return x, q, d


def window_factor(d, q: float, C: float, scale: float = 2.0) -> np.ndarray:
    """Ratio of the window-limited rate to the estimate, ``scale d / (d + q/C)``.

    ``scale=2`` gives BBRv1's Delta (window of two estimated BDPs), ``scale=1``
    BBRv2's delta.
    """
    d = np.asarray(d, dtype=float)
    return scale * d / (d + q / C)


def _pulse_max(x, q, C, own, background):
    """Maximum delivery rate seen by each agent during its own pulse."""
    pulse = own * x
    if q > 0:
        rest = np.sum(background * x) - background * x
        return pulse * C / (pulse + rest)
    return pulse


def _queue_rate(q, arrival, C, buffer):
    dq = arrival - C
    if q <= 0 and dq < 0:
        return 0.0
    if q >= buffer and dq > 0:
        return 0.0
    return dq


def reduced_bbr1_rhs(state, C: float, d, buffer: float = math.inf) -> np.ndarray:
    """Derivatives of the reduced BBRv1 model.

    Each agent probes at ``min(5/4, Delta_i) x_btl_i`` against background
    traffic ``min(1, Delta_j) x_btl_j``; the queue integrates the
    window-limited arrival rate minus ``C`` and is held in ``[0, buffer]``.

    Parameters
    ----------
    state : array_like
        ``[x_btl_1, ..., x_btl_N, q]``.
    C : float
        Bottleneck capacity.
    d : float or array_like
        Round-trip propagation delay per agent.
    buffer : float
        Queue capacity; a small buffer keeps ``Delta > 5/4`` (shallow regime).
    """
    x, q, d = _split(state, d)
    delta = window_factor(d, q, C, 2.0)
    background = np.minimum(1.0, delta)
    x_max = _pulse_max(x, q, C, np.minimum(PULSE, delta), background)
    dq = _queue_rate(q, float(np.sum(background * x)), C, buffer)
    return np.append(x_max - x, dq)


def reduced_bbr2_rhs(state, C: float, d, buffer: float = math.inf) -> np.ndarray:
    """Derivatives of the reduced BBRv2 model (loss-free regime).

    The pulse rate is ``5/4 min(1, delta_i) x_btl_i`` and cruising agents send
    ``min(1, delta_j) x_btl_j``.
    """
    x, q, d = _split(state, d)
    delta = window_factor(d, q, C, 1.0)
    cruise = np.minimum(1.0, delta)
    x_max = _pulse_max(x, q, C, PULSE * cruise, cruise)
    dq = _queue_rate(q, float(np.sum(cruise * x)), C, buffer)
    return np.append(x_max - x, dq)


# --------------------------------------------------------------------------
# Eigenvalues
# --------------------------------------------------------------------------

def _hessenberg(a: np.ndarray) -> np.ndarray:
    """Upper Hessenberg form by Householder similarity transforms."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        col = h[k + 1:, k]
        alpha = np.linalg.norm(col)
        if alpha == 0.0:
            continue
        phase = col[0] / abs(col[0]) if col[0] != 0 else 1.0
        v = col.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h


def _givens(a: complex, b: complex) -> np.ndarray:
    r = math.hypot(abs(a), abs(b))
    if r == 0.0:
        return np.eye(2, dtype=complex)
    return np.array([[np.conj(a) / r, np.conj(b) / r], [-b / r, a / r]])


def _wilkinson_shift(block: np.ndarray) -> complex:
    a, b, c, d = block[-2, -2], block[-2, -1], block[-1, -2], block[-1, -1]
    half_trace = 0.5 * (a + d)
    disc = np.sqrt(half_trace * half_trace - (a * d - b * c))
    mu1, mu2 = half_trace + disc, half_trace - disc
    return mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2


def _qr_step(block: np.ndarray, mu: complex) -> np.ndarray:
    """One shifted QR step ``B - mu I = QR, B <- RQ + mu I`` on a Hessenberg block."""
    m = block.shape[0]
    r = block - mu * np.eye(m)
    rotations = []
    for k in range(m - 1):
        g = _givens(r[k, k], r[k + 1, k])
        r[k:k + 2, k:] = g @ r[k:k + 2, k:]
        r[k + 1, k] = 0.0
        rotations.append(g)
    for k, g in enumerate(rotations):
        hi = min(k + 2, m - 1) + 1
        r[:hi, k:k + 2] = r[:hi, k:k + 2] @ g.conj().T
    return r + mu * np.eye(m)


def _qr_eigenvalues(h: np.ndarray, max_iter: int) -> np.ndarray:
    h = h.copy()
    n = h.shape[0]
    eps = np.finfo(float).eps
    scale = max(np.max(np.abs(h)), np.finfo(float).tiny)
    values = np.zeros(n, dtype=complex)
    hi, its, total = n - 1, 0, 0
    while hi >= 0:
        if hi == 0:
            values[0] = h[0, 0]
            break
        lo = hi
        while lo > 0:
            tol = eps * (abs(h[lo - 1, lo - 1]) + abs(h[lo, lo]))
            if abs(h[lo, lo - 1]) <= max(tol, eps * scale):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            values[hi] = h[hi, hi]
            hi -= 1
            its = 0
            continue
        if total >= max_iter:
            raise ConvergenceError(f"QR iteration did not converge after {max_iter} steps "
                                   f"({hi + 1} eigenvalues outstanding)")
        block = h[lo:hi + 1, lo:hi + 1]
        if its > 0 and its % 11 == 0:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            mu = _wilkinson_shift(block)
        h[lo:hi + 1, lo:hi + 1] = _qr_step(block, mu)
        its += 1
        total += 1
    return values


def _lu_solve(a: np.ndarray, b: np.ndarray, floor: float) -> np.ndarray:
    """Gaussian elimination with partial pivoting; tiny pivots are lifted to ``floor``."""
    a = a.astype(complex).copy()
    b = b.astype(complex).copy()
    n = a.shape[0]
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        if abs(a[k, k]) < floor:
            a[k, k] = floor
        f = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(f, a[k, k:])
        b[k + 1:] -= f * b[k]
    x = np.zeros(n, dtype=complex)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def _eigenvector(a: np.ndarray, lam: complex, seed: int) -> np.ndarray:
    """Inverse iteration for the eigenvector of ``lam``."""
    n = a.shape[0]
    norm = max(np.linalg.norm(a), np.finfo(float).tiny)
    shifted = a - lam * np.eye(n)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(3):
        v = _lu_solve(shifted, v, 1e-14 * norm)
        v /= np.linalg.norm(v)
    return v


def eigenpairs_dense(matrix, max_iter: int | None = None, tol: float = 1e-9):
    """Eigenvalues, eigenvectors and relative residuals of a small dense matrix.

    Householder reduction to Hessenberg form, then single-shift complex QR
    with Wilkinson shifts and deflation.  Eigenvectors come from inverse
    iteration and every pair is checked against ``||Av - lv|| / ||A|| < tol``.

    Returns
    -------
    values : ndarray of complex, sorted by descending real part
    vectors : ndarray, columns are unit eigenvectors
    residuals : ndarray

    Raises
    ------
    ConvergenceError
        If QR needs more than ``max_iter`` steps or a residual exceeds ``tol``.
    """
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    if n == 0 or n > MAX_EIGEN_DIM:
        raise ValueError(f"matrix dimension must be in [1, {MAX_EIGEN_DIM}]")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if max_iter is None:
        max_iter = 60 * n
    values = _qr_eigenvalues(_hessenberg(a), max_iter)
    norm = np.linalg.norm(a)
    if np.isrealobj(a):
        values = np.where(np.abs(values.imag) <= 1e-13 * max(norm, 1.0), values.real + 0j, values)
    order = np.lexsort((values.imag, -values.real))
    values = values[order]
    vectors = np.zeros((n, n), dtype=complex)
    residuals = np.zeros(n)
    for k, lam in enumerate(values):
        v = _eigenvector(a, lam, k)
        vectors[:, k] = v
        residuals[k] = np.linalg.norm(a @ v - lam * v) / norm if norm > 0 else 0.0
    worst = float(np.max(residuals))
    if worst >= tol:
        raise ConvergenceError(f"eigenpair residual {worst:.3g} exceeds {tol:g}")
    return values, vectors, residuals


def eigenvalues_dense(matrix, max_iter: int | None = None) -> np.ndarray:
    """Full complex spectrum of a dense matrix (see :func:`eigenpairs_dense`)."""
    return eigenpairs_dense(matrix, max_iter)[0]


# --------------------------------------------------------------------------
# Equilibria and Jacobians
# --------------------------------------------------------------------------

def _clean(values: np.ndarray) -> list:
    return [[float(v.real), float(v.imag)] for v in values]


@dataclass
class EquilibriumReport:
    """Equilibrium point, its residuals and the local stability verdict."""

    model: str
    n_agents: int
    capacity: float
    delay: float
    x_btl: np.ndarray
    q: float
    residuals: dict
    jacobian: np.ndarray | None = None
    eigenvalues: np.ndarray | None = None
    closed_form: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def stable(self) -> bool:
        if self.eigenvalues is None:
            raise ValueError("no spectrum computed")
        return bool(np.all(self.eigenvalues.real < 0))

    @property
    def lambda_max(self) -> float:
        return float(np.max(self.eigenvalues.real))

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "n_agents": self.n_agents,
            "capacity": self.capacity,
            "delay": self.delay,
            "x_btl": [float(v) for v in self.x_btl],
            "q": float(self.q),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "jacobian": None if self.jacobian is None else self.jacobian.tolist(),
            "eigenvalues": None if self.eigenvalues is None else _clean(self.eigenvalues),
            "lambda_max": None if self.eigenvalues is None else self.lambda_max,
            "stable": None if self.eigenvalues is None else self.stable,
            "closed_form": self.closed_form,
            "notes": list(self.notes),
        }


def _check_common(N: int, C: float, d=None):
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    if d is not None and not np.all(np.asarray(d, dtype=float) > 0):
        raise ValueError("propagation delays must be positive")


def _common_delay(N: int, d) -> float:
    arr = np.broadcast_to(np.asarray(d, dtype=float), (N,))
    if np.ptp(arr) > 1e-12 * np.max(arr):
        raise ValueError("closed form requires equal propagation delay for all agents")
    return float(arr[0])


@dataclass
class DeepEquilibrium:
    """BBRv1 deep-buffer equilibrium set: fixed ``q*`` and ``sum x_btl = C``."""

    n_agents: int
    capacity: float
    delay: float
    q: float

    @property
    def rate_sum(self) -> float:
        return self.capacity

    def state(self, x_btl) -> np.ndarray:
        return np.append(np.asarray(x_btl, dtype=float), self.q)

    def residual(self, x_btl) -> float:
        """Max-norm of the reduced RHS relative to ``C`` at ``(x_btl, q*)``."""
        x = np.asarray(x_btl, dtype=float)
        if x.size != self.n_agents:
            raise ValueError("split length differs from agent count")
        rhs = reduced_bbr1_rhs(self.state(x), self.capacity, self.delay)
        return float(np.max(np.abs(rhs)) / self.capacity)


def equilibrium_bbr1_deep(N: int, C: float, d) -> DeepEquilibrium:
    """Deep-buffer BBRv1 equilibria: queuing delay equals propagation delay.

    Any split with ``sum x_btl = C`` is an equilibrium, so the result is a
    constraint rather than a point.
    """
    _check_common(N, C, d)
    dd = _common_delay(N, d)
    return DeepEquilibrium(int(N), float(C), dd, dd * C)


def equilibrium_bbr1_shallow(N: int, C: float) -> np.ndarray:
    """Shallow-buffer BBRv1 equilibrium ``x_i = 5C / (4N + 1)``."""
    _check_common(N, C)
    return np.full(int(N), 5.0 * C / (4 * N + 1))


def equilibrium_bbr2(N: int, C: float, d) -> tuple[np.ndarray, float]:
    """Fair BBRv2 equilibrium: rates ``5C/(4N+1)``, queue ``(N-1)/(4N+1) d C``."""
    _check_common(N, C, d)
    dd = _common_delay(N, d)
    return np.full(int(N), 5.0 * C / (4 * N + 1)), (N - 1) / (4 * N + 1) * dd * C


def jacobian_bbr1(C: float, d: float) -> tuple[np.ndarray, np.ndarray]:
    """Jacobian of the deep-buffer BBRv1 ``(y, q)`` dynamics at ``(C, dC)``.

    The entries do not depend on ``C``; it is validated only.
    """
    _check_common(1, C, d)
    k = 1.0 / (2.0 * d)
    jac = np.array([[-k - 1.0, -k], [1.0, 0.0]])
    return jac, eigenvalues_dense(jac)


def jacobian_bbr1_shallow(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Jacobian of the shallow-buffer BBRv1 ``x_btl`` dynamics at ``5C/(4N+1)``."""
    _check_common(N, 1.0)
    diag, off = -5.0 / (4 * N + 1), -4.0 / (4 * N + 1)
    jac = np.full((N, N), off)
    np.fill_diagonal(jac, diag)
    return jac, eigenvalues_dense(jac)


def jacobian_bbr2(N: int, C: float, d: float) -> tuple[np.ndarray, np.ndarray]:
    """Jacobian of the BBRv2 ``(x_1..x_N, q)`` dynamics at the fair equilibrium."""
    _check_common(N, C, d)
    k = (4 * N + 1) / (5.0 * N * N * d)
    jac = np.zeros((N + 1, N + 1))
    jac[:N, :N] = -k - 4.0 / (4 * N + 1)
    np.fill_diagonal(jac[:N, :N], -k - 5.0 / (4 * N + 1))
    jac[:N, N] = -k
    jac[N, :N] = 1.0
    return jac, eigenvalues_dense(jac)


# --------------------------------------------------------------------------
# Convergence and fixed points
# --------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    """Trajectory of the reduced ODE and its distance to a reference point."""

    t: np.ndarray
    states: np.ndarray
    distance: np.ndarray
    final_state: np.ndarray
    final_rhs_norm: float
    diverged: bool
    message: str = ""

    @property
    def final_distance(self) -> float:
        return float(self.distance[-1]) if self.distance.size else math.nan


def convergence_check(rhs: Callable[[np.ndarray], np.ndarray], state0, horizon: float,
                      step: float = 1e-3, reference=None, sample_interval: float | None = None,
                      blowup: float = 1e9) -> ConvergenceReport:
    """Integrate a reduced model (no delays) and track its distance to ``reference``.

    ``rhs`` maps a state vector to its derivative.  Queue and rates are held
    non-negative.  Blow-up beyond ``blowup`` times the initial scale, or a
    non-finite state, is reported as divergence rather than raised.
    """
    y0 = np.asarray(state0, dtype=float)
    if np.any(y0[:-1] <= 0) or y0[-1] < 0:
        raise ValueError("initial state must lie in the positive orthant")
    names = [f"x_btl_{i + 1}" for i in range(y0.size - 1)] + ["q"]
    limit = blowup * max(float(np.max(np.abs(y0))), 1.0)

    def wrapped(t, y, modes, history):
        dy = rhs(y)
        if np.max(np.abs(y)) > limit:
            return np.full_like(dy, np.nan)
        return dy

    system = DdeSystem(names=names, y0=y0, rhs=wrapped, lower=np.zeros(y0.size))
    diverged, message = False, ""
    try:
        sol = integrate(system, step, horizon, sample_interval)
        t, states = sol.t, sol.y
    except NumericalError as exc:
        diverged, message = True, str(exc)
        t, states = np.array([0.0]), y0[None, :]
    final = states[-1]
    ref = None if reference is None else np.asarray(reference, dtype=float)
    if ref is None:
        distance = np.full(t.size, math.nan)
    else:
        distance = np.max(np.abs(states - ref), axis=1)
    return ConvergenceReport(t, states, distance, final.copy(),
                             float(np.max(np.abs(rhs(final)))), diverged, message)


def slaved_queue(x_btl, C: float, d, scale: float) -> float:
    """Queue at which the window-limited aggregate rate equals ``C``.

    Returns 0 when even an empty queue leaves the aggregate below ``C``.
    """
    x = np.asarray(x_btl, dtype=float)
    d = np.broadcast_to(np.asarray(d, dtype=float), x.shape)

    def excess(q):
        return float(np.sum(np.minimum(1.0, window_factor(d, q, C, scale)) * x)) - C

    if excess(0.0) <= 0:
        return 0.0
    lo, hi = 0.0, float(np.max(d)) * C
    while excess(hi) > 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


@dataclass
class FixedPointResult:
    x_btl: np.ndarray
    q: float
    iterations: int
    residual: float
    converged: bool


def find_equilibrium(model: str, x0, C: float, d, damping: float = 0.5, tol: float = 1e-10,
                     max_iter: int = 100_000) -> FixedPointResult:
    """Damped fixed-point iteration for equilibria with heterogeneous delays.

    The queue is slaved to the rate condition (aggregate window-limited rate
    equals ``C``) and the estimates are relaxed towards the pulse maxima:
    ``x <- (1 - a) x + a x_max(x, q(x))``.  Convergence is declared when the
    estimate condition holds to ``tol`` relative to ``C``.  The iteration
    reports whichever fixed point it reaches; it does not enumerate all.
    """
    if model not in ("bbr1", "bbr2"):
        raise ValueError(f"unknown model {model!r}")
    if not 0 < damping <= 1:
        raise ValueError("damping must be in (0, 1]")
    scale = 2.0 if model == "bbr1" else 1.0
    rhs = reduced_bbr1_rhs if model == "bbr1" else reduced_bbr2_rhs
    x = np.asarray(x0, dtype=float).copy()
    if np.any(x <= 0):
        raise ValueError("initial estimates must be positive")
    residual = math.inf
    for it in range(1, max_iter + 1):
        q = slaved_queue(x, C, d, scale)
        step = rhs(np.append(x, q), C, d)[:-1]
        residual = float(np.max(np.abs(step)) / C)
        if residual <= tol:
            return FixedPointResult(x, q, it, residual, True)
        x = x + damping * step
    q = slaved_queue(x, C, d, scale)
    return FixedPointResult(x, q, max_iter, residual, False)


def analyze(model: str, N: int, C: float, d: float) -> EquilibriumReport:
    """Equilibrium, residuals, spectrum and closed-form references for one model.

    ``model`` is one of ``bbr1-deep``, ``bbr1-shallow`` or ``bbr2``.
    """
    _check_common(N, C, d)
    N = int(N)
    if model == "bbr1-deep":
        eq = equilibrium_bbr1_deep(N, C, d)
        x = np.full(N, C / N)
        jac, eig = jacobian_bbr1(C, d)
        lam = -1.0 if d <= 0.5 else -1.0 / (2.0 * d)
        rhs = reduced_bbr1_rhs(eq.state(x), C, d)
        return EquilibriumReport(
            model, N, C, d, x, eq.q,
            residuals={"estimate": float(np.max(np.abs(rhs[:-1])) / C),
                       "rate": float(abs(rhs[-1]) / C)},
            jacobian=jac, eigenvalues=eig,
            closed_form={"q": d * C, "rate_sum": C, "lambda_max": lam,
                         "eigenvalues": [-1.0, -1.0 / (2.0 * d)]},
            notes=["any split with sum(x_btl) = C is an equilibrium; x_btl shows the fair one",
                   "Jacobian in (aggregate rate, queue) coordinates"])
    if model == "bbr1-shallow":
        x = equilibrium_bbr1_shallow(N, C)
        q = 0.1 * d * C
        rhs = reduced_bbr1_rhs(np.append(x, q), C, d, buffer=q)
        jac, eig = jacobian_bbr1_shallow(N)
        return EquilibriumReport(
            model, N, C, d, x, q,
            residuals={"estimate": float(np.max(np.abs(rhs[:-1])) / C)},
            jacobian=jac, eigenvalues=eig,
            closed_form={"x_btl": 5.0 * C / (4 * N + 1), "lambda_max": -1.0 / (4 * N + 1),
                         "eigenvalues": [-1.0 / (4 * N + 1)] * (N - 1) + [-1.0],
                         "loss_fraction": (N - 1) / (5.0 * N)},
            notes=["queue held at a full shallow buffer of 0.1 d C so that Delta > 5/4"])
    if model == "bbr2":
        x, q = equilibrium_bbr2(N, C, d)
        rhs = reduced_bbr2_rhs(np.append(x, q), C, d)
        jac, eig = jacobian_bbr2(N, C, d)
        a = (4 * N + 1) / (5.0 * N * d)
        notes = ["spectrum is {-1/(4N+1)} x (N-1), -1 and -(4N+1)/(5Nd)",
                 "the fair equilibrium need not be the only one"]
        if N == 1:
            notes.append("q* = 0 puts the pulse maximum on its empty-queue branch, so the "
                         "estimate residual is nonzero; the fixed point holds only as q -> 0+")
        return EquilibriumReport(
            model, N, C, d, x, q,
            residuals={"estimate": float(np.max(np.abs(rhs[:-1])) / C),
                       "rate": float(abs(rhs[-1]) / C)},
            jacobian=jac, eigenvalues=eig,
            closed_form={"x_btl": 5.0 * C / (4 * N + 1), "q": q,
                         "delta": (4 * N + 1) / (5.0 * N),
                         "eigenvalues": [-1.0 / (4 * N + 1)] * (N - 1) + [-1.0, -a],
                         "lambda_max": max(-1.0 / (4 * N + 1) if N > 1 else -math.inf,
                                           -1.0, -a)},
            notes=notes)
    raise ValueError(f"unknown model {model!r}; expected bbr1-deep, bbr1-shallow or bbr2")
