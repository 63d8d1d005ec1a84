"""Full fluid simulation of a ten-sender dumbbell.

Run with ``python3 demos/02_dumbbell.py``.  Each congestion-control mix
shares a 100 Mbps bottleneck with a one-BDP drop-tail buffer for 20 s; the
metrics cover the last 5 s.  One run takes a few seconds.
"""

from fluidcc.core import validation_dumbbell
from fluidcc.engine import simulate
from fluidcc.metrics import compute_metrics

MIXES = {
    "BBRv1": "bbr1",
    "BBRv2": "bbr2",
    "CUBIC": "cubic",
    "BBRv1 + Reno": ["bbr1", "reno"] * 5,
    "BBRv2 + CUBIC": ["bbr2", "cubic"] * 5,
}

print(f"{'mix':<14} {'jain':>6} {'loss':>7} {'queue':>6} {'util':>6}")
for label, ccas in MIXES.items():
    scenario = validation_dumbbell(10, ccas=ccas, buffer_bdp=1.0, duration=20.0, window=5.0)
    trace = simulate(scenario)
    m = compute_metrics(trace, scenario.metric_start, scenario.window)
    print(f"{label:<14} {m.jain_fairness:6.3f} {m.loss_rate:7.4f} "
          f"{m.mean_queue_share:6.3f} {m.utilization:6.3f}")
