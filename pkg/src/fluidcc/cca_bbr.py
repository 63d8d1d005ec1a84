"""BBR fluid dynamics: the shared skeleton plus the v1 and v2 specifics.

Every function is a scalar kernel.  Sharpness constants follow the signal
class of the gated quantity: ``k_time`` for timers and delays, ``k_rate``
for rates, ``k_vol`` for volumes and ``k_prob`` for loss probabilities.
"""

from __future__ import annotations

from numba import njit

from .netmodel import relu_smooth, sigmoid

__all__ = [
    "PRT_PERIOD_ON",
    "PRT_PERIOD_OFF",
    "XMAX_RESET_WINDOW",
    "LOSS_THRESHOLD",
    "prt_period",
    "rtprop_derivative",
    "probertt_update",
    "bbr_sending_rate",
    "probebw_rate",
    "delivery_rate",
    "xmax_derivative",
    "inflight_derivative",
    "bbr1_phase",
    "bbr1_period_length",
    "bbr1_phase_pulse",
    "bbr1_pacing",
    "bbr1_xbtl_derivative",
    "bbr1_inflight_limits",
    "bbr2_period_length",
    "bbr2_pacing",
    "bbr2_drain_target",
    "bbr2_mode_updates",
    "bbr2_xbtl_derivative",
    "bbr2_whi_derivative",
    "bbr2_wlo_derivative",
    "bbr2_windows",
]

PRT_PERIOD_ON = 0.2  # s spent in ProbeRTT
PRT_PERIOD_OFF = 10.0  # s without a new minimum before ProbeRTT
XMAX_RESET_WINDOW = 0.01  # s
LOSS_THRESHOLD = 0.02
K_TIME = 1e4
K_VOL = 10.0
K_PROB = 1e3


# -- shared skeleton ---------------------------------------------------------

@njit(cache=True)
def prt_period(m_prt):
    return m_prt * PRT_PERIOD_ON + (1.0 - m_prt) * PRT_PERIOD_OFF


@njit(cache=True)
def rtprop_derivative(tau_min, tau_delayed, k_time=K_TIME):
    return -relu_smooth(tau_min - tau_delayed, k_time)


@njit(cache=True)
def probertt_update(m_prt, t_prt, tau_min, tau_delayed, k_time=K_TIME):
    """Mode update, timer rate and the period that applies after the update.

    Returns ``(delta_m, dt_prt, next_period)``.
    """
    gate = sigmoid(t_prt - prt_period(m_prt), k_time)
    delta = gate * ((1.0 - m_prt) - m_prt)
    rate = 1.0 - gate * t_prt - sigmoid(tau_min - tau_delayed, k_time) * t_prt
    m_next = 1.0 if m_prt + delta >= 0.5 else 0.0
    return delta, rate, prt_period(m_next)


@njit(cache=True)
def bbr_sending_rate(m_prt, w_prt, tau, x_pbw):
    return m_prt * (w_prt / tau) + (1.0 - m_prt) * x_pbw


@njit(cache=True)
def probebw_rate(w_pbw, tau, x_pcg):
    return min(w_pbw / tau, x_pcg)


@njit(cache=True)
def delivery_rate(x_delayed, y_delayed, q_delayed, capacity):
    """Share of the bottleneck service a sender's cohort receives.

    A busy link serves at capacity, an idle one forwards its arrivals (never
    more than capacity).
    """
    if y_delayed <= 0.0:
        return 0.0
    served = capacity if q_delayed > 0.0 else min(y_delayed, capacity)
    return x_delayed / y_delayed * served


@njit(cache=True)
def xmax_derivative(x_max, x_measured, t_pbw, k_rate, k_time=K_TIME):
    return (relu_smooth(x_measured - x_max, k_rate)
            - sigmoid(XMAX_RESET_WINDOW - t_pbw, k_time) * x_max)


@njit(cache=True)
def inflight_derivative(x, x_dlv):
    return x - x_dlv


# -- BBRv1 -------------------------------------------------------------------

def bbr1_phase(agent_id: int) -> int:
    """Deterministic probing phase in {0, ..., 5}."""
    return agent_id % 6


@njit(cache=True)
def bbr1_period_length(tau_min):
    return 8.0 * tau_min


@njit(cache=True)
def bbr1_phase_pulse(t_pbw, phi, tau_min, k_time=K_TIME):
    return sigmoid(t_pbw - phi * tau_min, k_time) * sigmoid((phi + 1.0) * tau_min - t_pbw, k_time)


@njit(cache=True)
def bbr1_pacing(x_btl, t_pbw, phi, tau_min, k_time=K_TIME):
    probe = bbr1_phase_pulse(t_pbw, phi, tau_min, k_time)
    drain = bbr1_phase_pulse(t_pbw, phi + 1.0, tau_min, k_time)
    return x_btl * (1.0 + 0.25 * probe - 0.25 * drain)


@njit(cache=True)
def bbr1_xbtl_derivative(x_btl, x_max, t_pbw, period, k_time=K_TIME):
    return sigmoid(t_pbw - period + XMAX_RESET_WINDOW, k_time) * (x_max - x_btl)


@njit(cache=True)
def bbr1_inflight_limits(x_btl, tau_min):
    """(ProbeRTT window, ProbeBW window) in segments."""
    return 4.0, 2.0 * x_btl * tau_min


# -- BBRv2 -------------------------------------------------------------------

@njit(cache=True)
def bbr2_period_length(agent_id, n_agents, tau_min):
    return min(63.0 * tau_min, 2.0 + agent_id / n_agents)


@njit(cache=True)
def bbr2_pacing(x_btl, t_pbw, tau_min, m_dwn, k_time=K_TIME):
    up = 0.25 * sigmoid(t_pbw - tau_min, k_time) * (1.0 - m_dwn)
    return x_btl * (1.0 + up - 0.25 * m_dwn)


@njit(cache=True)
def bbr2_drain_target(w_bar, w_hi):
    return min(w_bar, 0.85 * w_hi)


@njit(cache=True)
def bbr2_mode_updates(m_dwn, m_crs, v, p_path, t_pbw, period, tau_min, w_bar, w_minus,
                      k_time=K_TIME, k_vol=K_VOL, k_prob=K_PROB):
    """Additive updates ``(delta_dwn, delta_crs)`` of the two BBRv2 modes."""
    trigger = min(sigmoid(v - 1.25 * w_bar, k_vol) + sigmoid(p_path - LOSS_THRESHOLD, k_prob), 1.0)
    delta_dwn = ((1.0 - m_crs) * (1.0 - m_dwn) * sigmoid(t_pbw - tau_min, k_time) * trigger
                 - m_dwn * sigmoid(w_minus - v, k_vol))
    delta_crs = -delta_dwn - sigmoid(t_pbw - period, k_time) * m_crs
    return delta_dwn, delta_crs


@njit(cache=True)
def bbr2_xbtl_derivative(x_btl, x_max_now, x_max_prev, m_dwn):
    return m_dwn * (max(x_max_now, x_max_prev) - x_btl)


@njit(cache=True)
def bbr2_whi_derivative(w_hi, v, p_path, t_pbw, tau_min, m_crs,
                        k_time=K_TIME, k_vol=K_VOL, k_prob=K_PROB, exponent_cap=60.0):
    growth = ((1.0 - m_crs) * sigmoid(t_pbw - tau_min, k_time) * sigmoid(v - w_hi, k_vol)
              * 2.0 ** min(t_pbw / tau_min, exponent_cap))
    cut = sigmoid(p_path - LOSS_THRESHOLD, k_prob) * 0.3 / tau_min * w_hi
    return growth - cut


@njit(cache=True)
def bbr2_wlo_derivative(w_lo, w_minus, p_path, tau_min, m_crs, k_prob=K_PROB, loss_offset=0.0):
    """Assimilation to the drain target outside cruising, loss decay inside.

    ``loss_offset`` shifts the loss gate; zero keeps the gate half open at
    zero loss.
    """
    return ((1.0 - m_crs) * (w_minus - w_lo)
            - m_crs * sigmoid(p_path - loss_offset, k_prob) * 0.3 * w_lo / tau_min)


@njit(cache=True)
def bbr2_windows(w_bar, w_hi, w_lo, m_crs):
    """(ProbeBW window, ProbeRTT window) in segments."""
    return min(2.0 * w_bar, (1.0 - m_crs) * w_hi + m_crs * w_lo), w_bar / 2.0

