"""Equilibria and local stability of the reduced BBR models.

Run with ``python3 demos/01_reduced_models.py``.  The script walks through
the three reduced models, prints each closed-form equilibrium next to the
numerically computed spectrum, and then integrates each model from a
perturbed start to show where it settles.
"""

import numpy as np

from fluidcc.analysis import (
    analyze,
    convergence_check,
    equilibrium_bbr2,
    find_equilibrium,
    reduced_bbr1_rhs,
    reduced_bbr2_rhs,
)

C, D = 100.0, 1.0

# Deep buffers: the queue settles at one propagation delay's worth of data,
# and any split of the capacity is an equilibrium.
rep = analyze("bbr1-deep", 2, C, D)
print(f"BBRv1 deep:    q* = {rep.q:.1f}, eigenvalues {np.round(rep.eigenvalues.real, 4)}")
start = np.array([0.8 * 1.3 * C, 0.2 * 1.3 * C, 2 * D * C])
run = convergence_check(lambda s: reduced_bbr1_rhs(s, C, D), start, 30.0)
x = run.final_state[:-1]
print(f"  from an 80/20 start: rates {np.round(x, 2)}, q = {run.final_state[-1]:.2f}"
      " (the skew persists)")

# Shallow buffers: every flow converges to 5C/(4N+1), which oversubscribes the link.
for n in (2, 10):
    rep = analyze("bbr1-shallow", n, C, D)
    print(f"BBRv1 shallow: N={n:2d} x* = {rep.x_btl[0]:.3f}, aggregate {rep.x_btl.sum():.1f}, "
          f"implied loss {rep.closed_form['loss_fraction']:.2f}, lambda_max {rep.lambda_max:.4f}")

# BBRv2: a fair point with a much smaller standing queue.
for n in (1, 10, 100):
    x_eq, q_eq = equilibrium_bbr2(n, C, D)
    print(f"BBRv2:         N={n:3d} x* = {x_eq[0]:.3f}, q*/(dC) = {q_eq / (D * C):.3f}")
rep = analyze("bbr2", 10, C, D)
print(f"  N=10 lambda_max = {rep.lambda_max:.4f} (stable: {rep.stable})")
x0 = np.random.default_rng(0).uniform(0.05 * C, 0.2 * C, 10)
run = convergence_check(lambda s: reduced_bbr2_rhs(s, C, D), np.append(x0, 0.0), 600.0,
                        step=5e-3, sample_interval=1.0)
print(f"  random start -> q = {run.final_state[-1]:.4f}, "
      f"rate spread {np.ptp(run.final_state[:-1]):.2e}")

# Unequal propagation delays: no closed form, so iterate to a fixed point.
# The point reached here is far from fair; it is one equilibrium, not the only one.
res = find_equilibrium("bbr2", [30.0, 30.0, 30.0], C, np.array([0.5, 1.0, 1.5]))
print(f"BBRv2, delays 0.5/1/1.5: rates {np.array2string(res.x_btl, precision=3)}, "
      f"q = {res.q:.3f} after {res.iterations} iterations")
