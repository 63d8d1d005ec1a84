import math

import numpy as np
import pytest

from fluidcc.solver import DdeSystem, NumericalError, SignalHistory, integrate, snap_modes


def delayed_growth(step):
    """x'(t) = x(t - 1) with unit history; x(2) = 3.5 by the method of steps."""
    system = DdeSystem(
        names=["x"], y0=np.array([1.0]),
        rhs=lambda t, y, m, h: np.array([h.lookup("x", t - 1.0)]),
        max_delay=1.0, initial_history=np.array([1.0]))
    return integrate(system, step, 2.0, sample_interval=1.0)


def test_method_of_steps_oracle():
    sol = delayed_growth(1e-5)
    np.testing.assert_allclose(sol.t, [0.0, 1.0, 2.0])
    assert sol["x"][1] == pytest.approx(2.0, abs=1e-4)
    assert sol["x"][2] == pytest.approx(3.5, abs=1e-4)


def test_first_order_convergence():
    errors = [abs(delayed_growth(h)["x"][-1] - 3.5) for h in (4e-3, 2e-3, 1e-3)]
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    for r in ratios:
        assert 1.7 <= r <= 2.3


def test_constant_rhs_constant_trace():
    system = DdeSystem(["x"], np.array([3.0]), lambda t, y, m, h: np.zeros(1))
    sol = integrate(system, 0.01, 1.0)
    assert np.all(sol["x"] == 3.0)


def test_exponential_decay():
    system = DdeSystem(["x"], np.array([1.0]), lambda t, y, m, h: -y)
    sol = integrate(system, 1e-4, 1.0)
    assert sol["x"][-1] == pytest.approx(math.exp(-1.0), abs=1e-4)


def test_history_lookup_interpolation():
    hist = SignalHistory(["a"], 0.1, 1.0, initial=np.array([7.0]))
    for v in (0.0, 1.0, 2.0):
        hist.record([v])
    assert hist.lookup("a", 0.1) == 1.0
    assert hist.lookup("a", 0.15) == pytest.approx(1.5)
    assert hist.lookup("a", -0.005) == 7.0
    with pytest.raises(LookupError):
        hist.lookup("a", 0.5)


def test_history_horizon_enforced():
    hist = SignalHistory(["a"], 0.1, 0.3)
    for v in range(20):
        hist.record([float(v)])
    with pytest.raises(LookupError):
        hist.lookup("a", 0.2)


def test_step_precondition():
    system = DdeSystem(["x"], np.array([1.0]), lambda t, y, m, h: np.zeros(1), min_delay=0.01)
    with pytest.raises(ValueError, match="tenth"):
        integrate(system, 0.002, 1.0)


def test_nan_aborts_with_signal_and_time():
    system = DdeSystem(["a", "b"], np.array([1.0, 1.0]),
                       lambda t, y, m, h: np.array([0.0, np.nan if t >= 0.5 else 0.0]))
    with pytest.raises(NumericalError) as info:
        integrate(system, 0.1, 1.0)
    assert info.value.signal == "b"
    assert info.value.time == pytest.approx(0.6)


def test_modes_snap_after_additive_update():
    system = DdeSystem(["x"], np.array([0.0]), lambda t, y, m, h: np.zeros(1),
                       mode_names=["m"], modes0=np.array([0.0]),
                       update_modes=lambda t, y, m, h: np.array([0.6 if t >= 0.25 else 0.2]))
    sol = integrate(system, 0.1, 0.5)
    assert set(np.unique(sol.modes)) <= {0.0, 1.0}
    assert sol.modes[1, 0] == 0.0 and sol.modes[-1, 0] == 1.0
    np.testing.assert_array_equal(snap_modes([0.49, 0.5, 0.9]), [0.0, 1.0, 1.0])


def test_bounds_clamp_state():
    system = DdeSystem(["q"], np.array([0.5]), lambda t, y, m, h: np.array([-10.0]),
                       lower=np.array([0.0]))
    sol = integrate(system, 0.01, 1.0)
    assert np.min(sol["q"]) == 0.0
