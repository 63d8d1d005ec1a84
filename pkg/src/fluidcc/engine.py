"""Full-network simulation: links, loss-based and BBR senders in one kernel.

The per-step algorithm is the method of steps with explicit Euler updates:

1. latencies from the current queues, then sending rates from sender state;
2. arrivals, losses and per-sender service shares at every link, using the
   rate histories delayed by the forward propagation time;
3. feedback as observed by each sender (path loss, delivery rate, RTT),
   delayed by the propagation time from the link back to the sender;
4. derivatives and discrete mode updates from the pre-step state, then the
   Euler update, clamps and the 0.5 snap of the mode variables.

All delayed signals live in ring buffers at solver-step resolution that are
prefilled with the initial values, so lookups before ``t = 0`` return the
constant initial history.
"""

from __future__ import annotations

import math
import time as _time

import numpy as np
from numba import njit

from .cca_bbr import (
    PRT_PERIOD_OFF,
    PRT_PERIOD_ON,
    XMAX_RESET_WINDOW,
    bbr1_inflight_limits,
    bbr1_pacing,
    bbr1_period_length,
    bbr2_drain_target,
    bbr2_mode_updates,
    bbr2_pacing,
    bbr2_period_length,
    bbr2_whi_derivative,
    bbr2_windows,
    bbr_sending_rate,
    probebw_rate,
)
from .cca_loss import (
    CUBIC_B,
    CUBIC_C,
    W_FLOOR,
    cubic_aux_derivatives,
    cubic_inflection,
    cubic_window,
    reno_window_derivative,
)
from .core import Scenario
from .metrics import Trace
from .netmodel import RED, link_loss, queue_derivative, relu_smooth, sigmoid
from .solver import NumericalError

__all__ = ["simulate", "initial_state", "STATE_NAMES", "EXTRA_NAMES", "RunStats"]

RENO, CUBIC, BBR1, BBR2 = 0, 1, 2, 3
CCA_CODES = {"reno": RENO, "cubic": CUBIC, "bbr1": BBR1, "bbr2": BBR2}

# per-agent state columns
(S_W, S_S, S_WMAX, S_TAUMIN, S_TPRT, S_MPRT, S_TPBW, S_XMAX, S_XBTL, S_V,
 S_MDWN, S_MCRS, S_WHI, S_WLO) = range(14)
STATE_NAMES = ("w", "s", "w_max", "tau_min", "t_prt", "m_prt", "t_pbw", "x_max", "x_btl", "v",
               "m_dwn", "m_crs", "w_hi", "w_lo")
EXTRA_NAMES = ("x_btl", "tau_min", "x_max", "m_prt", "m_dwn", "m_crs", "w_hi", "w_lo",
               "t_pbw", "path_loss")
_EXTRA_COLS = (S_XBTL, S_TAUMIN, S_XMAX, S_MPRT, S_MDWN, S_MCRS, S_WHI, S_WLO, S_TPBW)

# stats slots
ST_STATUS, ST_BAD_SIGNAL, ST_BAD_TIME, ST_MODE_GUARD, ST_TAUMIN_UP, ST_CONSERVATION, ST_PRT_ENTRIES = range(7)
# NaN signal codes: 0..13 agent state columns, 100 queue, 101 rate
_BAD_QUEUE, _BAD_RATE = 100, 101

# float parameter slots
P_STEP, P_GAIN, P_MARGIN, P_KTIME, P_KVOL, P_KPROB, P_WLO_OFFSET, P_XMAX_SENDING, P_NAGENTS = range(9)


class RunStats(dict):
    """Counters collected by the kernel (mode-guard activations, ...)."""


@njit(cache=True)
def _ring(buf, size, col, pos):
    k = math.floor(pos)
    frac = pos - k
    a = buf[((k % size) + size) % size, col]
    if frac == 0.0:
        return a
    b = buf[(((k + 1) % size) + size) % size, col]
    return a + frac * (b - a)


@njit(cache=True)
def _kernel(n_steps, every, prm,
            cap, buf, disc, krate, lexp, q0,
            cca, phi, agent_ids, prop, ret_steps, rt_steps, bl,
            plink, pfwd, pfb, plen,
            x0, state0, hist_len, long_len, conserve_links):
    n_links = cap.size
    n_agents = cca.size
    h = prm[P_STEP]
    gain = prm[P_GAIN]
    margin = prm[P_MARGIN]
    k_time = prm[P_KTIME]
    k_vol = prm[P_KVOL]
    k_prob = prm[P_KPROB]
    wlo_offset = prm[P_WLO_OFFSET]
    xmax_sending = prm[P_XMAX_SENDING] > 0.5
    n_total = prm[P_NAGENTS]

    n_samples = n_steps // every + 1
    out_x = np.full((n_samples, n_agents), np.nan)
    out_tau = np.full((n_samples, n_agents), np.nan)
    out_w = np.full((n_samples, n_agents), np.nan)
    out_v = np.full((n_samples, n_agents), np.nan)
    out_dlv = np.full((n_samples, n_agents), np.nan)
    out_q = np.full((n_samples, n_links), np.nan)
    out_p = np.full((n_samples, n_links), np.nan)
    out_y = np.full((n_samples, n_links), np.nan)
    out_extra = np.full((n_samples, 10, n_agents), np.nan)
    stats = np.zeros(7)

    st = state0.copy()
    q = q0.copy()
    x = x0.copy()
    tau = np.empty(n_agents)
    y = np.zeros(n_links)
    p = np.zeros(n_links)
    served = np.zeros(n_links)
    share = np.zeros(n_agents)
    wcur = np.zeros(n_agents)

    # histories: rates, latencies, shares (per agent) and losses (per link)
    hx = np.empty((hist_len, n_agents))
    htau = np.empty((hist_len, n_agents))
    hsh = np.empty((hist_len, n_agents))
    hp = np.empty((hist_len, n_links))
    hxmax = np.empty((long_len, n_agents))

    for i in range(n_agents):
        t0 = prop[i]
        for k in range(plen[i]):
            ell = plink[i, k]
            t0 += q[ell] / cap[ell]
        tau[i] = t0
    # constant initial history from the initial state
    for ell in range(n_links):
        yy = 0.0
        for i in range(n_agents):
            for k in range(plen[i]):
                if plink[i, k] == ell:
                    yy += x[i]
        y[ell] = yy
        p[ell] = link_loss(disc[ell], yy, q[ell], cap[ell], buf[ell], krate[ell], lexp[ell])
        served[ell] = cap[ell] if q[ell] > 0.0 else min(yy, cap[ell])
    for i in range(n_agents):
        b = bl[i]
        share[i] = x[i] / y[b] * served[b] if y[b] > 0.0 else 0.0
    for r in range(hist_len):
        hx[r, :] = x
        htau[r, :] = tau
        hsh[r, :] = share
        hp[r, :] = p
    for r in range(long_len):
        hxmax[r, :] = st[:, S_XMAX]

    dstate = np.zeros(st.shape)
    dq = np.zeros(n_links)
    for n in range(n_steps + 1):
        t = n * h
        slot = n % hist_len
        # 1. latency and sending rates
        for i in range(n_agents):
            lat = prop[i]
            for k in range(plen[i]):
                ell = plink[i, k]
                lat += q[ell] / cap[ell]
            tau[i] = lat
            c = cca[i]
            if c == RENO:
                wcur[i] = max(st[i, S_W], W_FLOOR)
                x[i] = wcur[i] / lat
            elif c == CUBIC:
                wcur[i] = cubic_window(st[i, S_S], st[i, S_WMAX], CUBIC_C, CUBIC_B, W_FLOOR)
                x[i] = wcur[i] / lat
            else:
                tmin = st[i, S_TAUMIN]
                xb = st[i, S_XBTL]
                if c == BBR1:
                    w_prt, w_pbw = bbr1_inflight_limits(xb, tmin)
                    pcg = bbr1_pacing(xb, st[i, S_TPBW], phi[i], tmin, k_time)
                else:
                    w_bar = xb * tmin
                    w_pbw, w_prt = bbr2_windows(w_bar, st[i, S_WHI], st[i, S_WLO], st[i, S_MCRS])
                    pcg = bbr2_pacing(xb, st[i, S_TPBW], tmin, st[i, S_MDWN], k_time)
                wcur[i] = w_prt if st[i, S_MPRT] > 0.5 else w_pbw
                x[i] = bbr_sending_rate(st[i, S_MPRT], w_prt, lat, probebw_rate(w_pbw, lat, pcg))
            if not np.isfinite(x[i]):
                stats[ST_STATUS] = 1.0
                stats[ST_BAD_SIGNAL] = _BAD_RATE
                stats[ST_BAD_TIME] = t
                return out_x, out_tau, out_w, out_v, out_dlv, out_q, out_p, out_y, out_extra, stats
            hx[slot, i] = x[i]
            htau[slot, i] = lat

        # 2. link arrivals, losses, service shares
        for ell in range(n_links):
            y[ell] = 0.0
        for i in range(n_agents):
            for k in range(plen[i]):
                ell = plink[i, k]
                y[ell] += _ring(hx, hist_len, i, n - pfwd[i, k])
        for ell in range(n_links):
            p[ell] = link_loss(disc[ell], y[ell], q[ell], cap[ell], buf[ell], krate[ell], lexp[ell])
            served[ell] = cap[ell] if q[ell] > 0.0 else min(y[ell], cap[ell])
            hp[slot, ell] = p[ell]
        for i in range(n_agents):
            b = bl[i]
            kb = 0
            for k in range(plen[i]):
                if plink[i, k] == b:
                    kb = k
            if y[b] > 0.0:
                share[i] = _ring(hx, hist_len, i, n - pfwd[i, kb]) / y[b] * served[b]
            else:
                share[i] = 0.0
            hsh[slot, i] = share[i]
        for ell in range(n_links):
            if conserve_links[ell] and q[ell] > 0.0 and y[ell] > 0.0:
                tot = 0.0
                for i in range(n_agents):
                    if bl[i] == ell:
                        tot += share[i]
                err = abs(tot - served[ell]) / cap[ell]
                if err > stats[ST_CONSERVATION]:
                    stats[ST_CONSERVATION] = err

        # 3. sender-side feedback and 4. derivatives
        sample = n % every == 0
        row = n // every
        for i in range(n_agents):
            ploss = 0.0
            kb = 0
            for k in range(plen[i]):
                ploss += _ring(hp, hist_len, plink[i, k], n - pfb[i, k])
                if plink[i, k] == bl[i]:
                    kb = k
            ploss = min(max(ploss, 0.0), 1.0)
            x_dlv = _ring(hsh, hist_len, i, n - pfb[i, kb])
            c = cca[i]
            if sample:
                out_x[row, i] = x[i]
                out_tau[row, i] = tau[i]
                out_w[row, i] = wcur[i]
                out_dlv[row, i] = x_dlv
                out_extra[row, 9, i] = ploss
                if c >= BBR1:
                    out_v[row, i] = st[i, S_V]
                    for e in range(9):
                        out_extra[row, e, i] = st[i, _EXTRA_COLS[e]]
            if c == RENO or c == CUBIC:
                x_ack = _ring(hx, hist_len, i, n - rt_steps[i])
                if c == RENO:
                    dstate[i, S_W] = reno_window_derivative(wcur[i], x_ack, ploss)
                else:
                    ds, dwm = cubic_aux_derivatives(st[i, S_S], st[i, S_WMAX], wcur[i], x_ack, ploss)
                    dstate[i, S_S] = ds
                    dstate[i, S_WMAX] = dwm
                continue

            tmin = st[i, S_TAUMIN]
            tau_obs = _ring(htau, hist_len, i, n - ret_steps[i])
            b = bl[i]
            # positive part of the smooth ReLU: its leakage below zero, amplified by the gain,
            # would otherwise erase the recorded extremes
            dstate[i, S_TAUMIN] = -gain * max(relu_smooth(tmin - tau_obs, k_time), 0.0)
            dstate[i, S_TPRT] = 1.0
            dstate[i, S_TPBW] = 1.0
            measured = x[i] if xmax_sending else x_dlv
            t_pbw = st[i, S_TPBW]
            dstate[i, S_XMAX] = gain * (max(relu_smooth(measured - st[i, S_XMAX], krate[b]), 0.0)
                                        - sigmoid(XMAX_RESET_WINDOW - t_pbw, k_time) * st[i, S_XMAX])
            dstate[i, S_V] = x[i] - x_dlv
            xb = st[i, S_XBTL]
            if c == BBR1:
                period = bbr1_period_length(tmin)
                dstate[i, S_XBTL] = gain * sigmoid(t_pbw - period + XMAX_RESET_WINDOW, k_time) * (
                    st[i, S_XMAX] - xb)
            else:
                period = bbr2_period_length(agent_ids[i], n_total, tmin)
                w_bar = xb * tmin
                w_minus = bbr2_drain_target(w_bar, st[i, S_WHI])
                m_dwn = st[i, S_MDWN]
                m_crs = st[i, S_MCRS]
                d_dwn, d_crs = bbr2_mode_updates(m_dwn, m_crs, st[i, S_V], ploss, t_pbw, period,
                                                 tmin, w_bar, w_minus, k_time, k_vol, k_prob)
                dstate[i, S_MDWN] = d_dwn
                dstate[i, S_MCRS] = d_crs
                prev = _ring(hxmax, long_len, i, n - period / h)
                dstate[i, S_XBTL] = gain * m_dwn * (max(st[i, S_XMAX], prev) - xb)
                dstate[i, S_WHI] = bbr2_whi_derivative(st[i, S_WHI], st[i, S_V], ploss, t_pbw, tmin,
                                                       m_crs, k_time, k_vol, k_prob, 60.0)
                dstate[i, S_WLO] = (gain * (1.0 - m_crs) * (w_minus - st[i, S_WLO])
                                    - m_crs * sigmoid(ploss - wlo_offset, k_prob) * 0.3
                                    * st[i, S_WLO] / tmin)
            # ProbeRTT mode: the flip is the discrete update, the timer restarts with it
            gate = sigmoid(st[i, S_TPRT] - (PRT_PERIOD_ON if st[i, S_MPRT] > 0.5 else PRT_PERIOD_OFF),
                           k_time)
            dstate[i, S_MPRT] = gate * ((1.0 - st[i, S_MPRT]) - st[i, S_MPRT])
            # period timer restarts at the end of the period
            if t_pbw >= period:
                dstate[i, S_TPBW] = -t_pbw / h
            # new minimum RTT observed
            if tau_obs < tmin - margin:
                dstate[i, S_TPRT] = -st[i, S_TPRT] / h

        for ell in range(n_links):
            dq[ell] = queue_derivative(y[ell], p[ell], q[ell], cap[ell], buf[ell])
            if sample:
                out_q[row, ell] = q[ell]
                out_p[row, ell] = p[ell]
                out_y[row, ell] = y[ell]

        if n == n_steps:
            break

        # Euler update
        for ell in range(n_links):
            q[ell] = min(max(q[ell] + h * dq[ell], 0.0), buf[ell])
            if not np.isfinite(q[ell]):
                stats[ST_STATUS] = 1.0
                stats[ST_BAD_SIGNAL] = _BAD_QUEUE
                stats[ST_BAD_TIME] = t + h
                return out_x, out_tau, out_w, out_v, out_dlv, out_q, out_p, out_y, out_extra, stats
        for i in range(n_agents):
            c = cca[i]
            if c == RENO:
                st[i, S_W] = max(st[i, S_W] + h * dstate[i, S_W], W_FLOOR)
            elif c == CUBIC:
                st[i, S_S] = max(st[i, S_S] + h * dstate[i, S_S], 0.0)
                st[i, S_WMAX] = max(st[i, S_WMAX] + h * dstate[i, S_WMAX], W_FLOOR)
            else:
                old_tmin = st[i, S_TAUMIN]
                old_mprt = st[i, S_MPRT]
                for col in (S_TAUMIN, S_TPRT, S_TPBW, S_XMAX, S_XBTL, S_V):
                    st[i, col] += h * dstate[i, col]
                st[i, S_TPRT] = max(st[i, S_TPRT], 0.0)
                st[i, S_TPBW] = max(st[i, S_TPBW], 0.0)
                st[i, S_V] = max(st[i, S_V], 0.0)
                st[i, S_XMAX] = max(st[i, S_XMAX], 0.0)
                st[i, S_XBTL] = max(st[i, S_XBTL], 1e-9)
                if st[i, S_TAUMIN] > old_tmin:
                    stats[ST_TAUMIN_UP] += 1.0
                m_prt = 1.0 if min(max(old_mprt + dstate[i, S_MPRT], 0.0), 1.0) >= 0.5 else 0.0
                if m_prt != old_mprt:
                    st[i, S_TPRT] = 0.0
                    if m_prt > 0.5:
                        stats[ST_PRT_ENTRIES] += 1.0
                st[i, S_MPRT] = m_prt
                if c == BBR2:
                    st[i, S_WHI] = max(st[i, S_WHI] + h * dstate[i, S_WHI], 0.0)
                    st[i, S_WLO] = max(st[i, S_WLO] + h * dstate[i, S_WLO], 0.0)
                    m_dwn = 1.0 if min(max(st[i, S_MDWN] + dstate[i, S_MDWN], 0.0), 1.0) >= 0.5 else 0.0
                    m_crs = 1.0 if min(max(st[i, S_MCRS] + dstate[i, S_MCRS], 0.0), 1.0) >= 0.5 else 0.0
                    if m_dwn > 0.5 and m_crs > 0.5:
                        m_crs = 0.0
                        stats[ST_MODE_GUARD] += 1.0
                    st[i, S_MDWN] = m_dwn
                    st[i, S_MCRS] = m_crs
            for col in range(st.shape[1]):
                if not np.isfinite(st[i, col]):
                    stats[ST_STATUS] = 1.0
                    stats[ST_BAD_SIGNAL] = col
                    stats[ST_BAD_TIME] = t + h
                    return out_x, out_tau, out_w, out_v, out_dlv, out_q, out_p, out_y, out_extra, stats
        lslot = (n + 1) % long_len
        for i in range(n_agents):
            hxmax[lslot, i] = st[i, S_XMAX]

    return out_x, out_tau, out_w, out_v, out_dlv, out_q, out_p, out_y, out_extra, stats


def _steps(delay: float, h: float) -> float:
    s = delay / h
    r = round(s)
    return float(r) if abs(s - r) < 1e-9 * max(1.0, s) else s


def initial_state(scenario: Scenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Initial agent state matrix, initial sending rates and initial queues.

    Unless overridden in ``AgentConfig.initial``, every sender starts with a
    bottleneck estimate equal to its equal share of its bottleneck link, a
    matching window, and an inflight volume consistent with having sent at
    that rate for one round trip.
    """
    links = {l.id: k for k, l in enumerate(scenario.links)}
    q0 = np.zeros(len(scenario.links))
    for ell, val in scenario.initial_queues.items():
        q0[links[ell]] = val
    sharing = {l.id: 0 for l in scenario.links}
    for a in scenario.agents:
        sharing[scenario.bottleneck_of(a).id] += 1

    state = np.zeros((scenario.n_agents, len(STATE_NAMES)))
    x0 = np.zeros(scenario.n_agents)
    for a in sorted(scenario.agents, key=lambda a: a.id):
        i = a.id - 1
        init = dict(a.initial)
        btl = scenario.bottleneck_of(a)
        tau0 = a.path.total_propagation + sum(q0[links[ell]] / scenario.link(ell).capacity
                                              for ell in a.path.links)
        d = a.path.total_propagation
        x_share = btl.capacity / sharing[btl.id]
        s = state[i]
        if a.cca in ("reno", "cubic"):
            w0 = init.get("w0", init.get("x0", x_share) * tau0)
            s[S_W] = w0
            s[S_WMAX] = init.get("w_max0", w0)
            s[S_S] = init.get("s0", cubic_inflection(s[S_WMAX]))
            w_eff = max(w0, W_FLOOR) if a.cca == "reno" else cubic_window(s[S_S], s[S_WMAX])
            x0[i] = w_eff / tau0
            continue
        xb = init.get("x_btl0", init.get("x0", x_share))
        s[S_XBTL] = xb
        s[S_TAUMIN] = init.get("tau_min0", tau0)
        s[S_XMAX] = init.get("x_max0", xb)
        s[S_TPBW] = init.get("t_pbw0", 0.0)
        s[S_TPRT] = init.get("t_prt0", 0.0)
        tmin = s[S_TAUMIN]
        if a.cca == "bbr1":
            w_prt, w_pbw = bbr1_inflight_limits(xb, tmin)
            pcg = bbr1_pacing(xb, s[S_TPBW], float(a.id % 6), tmin, scenario.links[0].smoothing.k_time)
        else:
            w_bar = xb * tmin
            s[S_WHI] = init.get("w_hi0", 2.0 * xb * tau0)
            s[S_WLO] = init.get("w_lo0", bbr2_drain_target(w_bar, s[S_WHI]))
            w_pbw, w_prt = bbr2_windows(w_bar, s[S_WHI], s[S_WLO], 0.0)
            pcg = bbr2_pacing(xb, s[S_TPBW], tmin, 0.0, scenario.links[0].smoothing.k_time)
        x0[i] = min(w_pbw / tau0, pcg)
        s[S_V] = init.get("v0", x0[i] * d)
    return state, x0, q0


def simulate(scenario: Scenario) -> Trace:
    """Integrate ``scenario`` and return the sampled trace.

    Raises :class:`~fluidcc.solver.NumericalError` when a state variable
    becomes non-finite.
    """
    scenario.validate()
    h = scenario.step
    links = list(scenario.links)
    index = {l.id: k for k, l in enumerate(links)}
    agents = sorted(scenario.agents, key=lambda a: a.id)
    n_links, n_agents = len(links), len(agents)
    sm = links[0].smoothing

    cap = np.array([l.capacity for l in links], float)
    buf = np.array([l.buffer for l in links], float)
    disc = np.array([RED if l.discipline == "red" else 0 for l in links], np.int64)
    krate = np.array([l.k_rate for l in links], float)
    lexp = np.array([l.smoothing.L for l in links], float)

    max_len = max(len(a.path.links) for a in agents)
    plink = -np.ones((n_agents, max_len), np.int64)
    pfwd = np.zeros((n_agents, max_len))
    pfb = np.zeros((n_agents, max_len))
    plen = np.zeros(n_agents, np.int64)
    cca = np.array([CCA_CODES[a.cca] for a in agents], np.int64)
    phi = np.array([float(a.id % 6) for a in agents])
    ids = np.array([float(a.id) for a in agents])
    prop = np.array([a.path.total_propagation for a in agents])
    ret_steps = np.array([_steps(a.path.return_delay, h) for a in agents])
    rt_steps = np.array([_steps(a.path.total_propagation, h) for a in agents])
    bl = np.array([index[scenario.bottleneck_of(a).id] for a in agents], np.int64)
    max_delay = 0.0
    for i, a in enumerate(agents):
        plen[i] = len(a.path.links)
        for k, ell in enumerate(a.path.links):
            plink[i, k] = index[ell]
            pfwd[i, k] = _steps(a.path.forward_delay(ell), h)
            pfb[i, k] = _steps(a.path.feedback_delay(ell), h)
        max_delay = max(max_delay, a.path.total_propagation, a.path.return_delay)
    hist_len = int(math.ceil(max_delay / h)) + 3
    long_len = int(math.ceil(3.0 / h)) + 3 if np.any(cca == BBR2) else 1
    conserve = np.array([all(bl[i] == k for i, a in enumerate(agents) if l.id in a.path.links)
                         for k, l in enumerate(links)], np.bool_)

    state0, x0, q0 = initial_state(scenario)
    every = max(1, int(round(scenario.sample_interval / h)))
    n_steps = int(round(scenario.duration / h))
    prm = np.zeros(9)
    prm[P_STEP] = h
    prm[P_GAIN] = scenario.assimilation_rate
    prm[P_MARGIN] = scenario.rtt_reset_margin
    prm[P_KTIME] = sm.k_time
    prm[P_KVOL] = sm.k_vol
    prm[P_KPROB] = sm.k_prob
    prm[P_WLO_OFFSET] = scenario.wlo_loss_offset
    prm[P_XMAX_SENDING] = 1.0 if scenario.xmax_source == "sending" else 0.0
    prm[P_NAGENTS] = float(n_agents)

    started = _time.perf_counter()
    (ox, otau, ow, ov, odlv, oq, op, oy, oextra, stats) = _kernel(
        n_steps, every, prm, cap, buf, disc, krate, lexp, q0,
        cca, phi, ids, prop, ret_steps, rt_steps, bl, plink, pfwd, pfb, plen,
        x0, state0, hist_len, long_len, conserve)
    elapsed = _time.perf_counter() - started
    if stats[ST_STATUS] != 0:
        code = int(stats[ST_BAD_SIGNAL])
        name = {_BAD_QUEUE: "q", _BAD_RATE: "x"}.get(code) or STATE_NAMES[code]
        raise NumericalError(name, float(stats[ST_BAD_TIME]))

    t = np.arange(ox.shape[0]) * every * h
    run_stats = RunStats(
        mode_guard_activations=int(stats[ST_MODE_GUARD]),
        tau_min_increases=int(stats[ST_TAUMIN_UP]),
        max_conservation_error=float(stats[ST_CONSERVATION]),
        probertt_entries=int(stats[ST_PRT_ENTRIES]),
        wall_time=elapsed,
    )
    extra = {name: oextra[:, e, :].copy() for e, name in enumerate(EXTRA_NAMES)}
    return Trace(
        t=t, x=ox, tau=otau, w=ow, v=ov, x_dlv=odlv, q=oq, p=op, y=oy,
        link_ids=[l.id for l in links], capacities=cap, buffers=buf,
        bottleneck=index[scenario.shared_bottleneck.id],
        ccas=[a.cca for a in agents], extra=extra,
        meta={"scenario": scenario.digest(), "step": h, "stats": dict(run_stats),
              "units": {"rate": "segments/s", "time": "s", "volume": "segments",
                        "segment_bits": scenario.units.segment_size}},
    )
