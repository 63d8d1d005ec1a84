"""Property tests over randomized dumbbell scenarios."""

from hypothesis import HealthCheck, given, settings, strategies as st

from fluidcc.core import CCAS, validation_dumbbell
from fluidcc.engine import simulate

from invariant_checks import invariant_violations

scenarios = st.fixed_dictionaries({
    "n": st.integers(1, 4),
    "ccas": st.lists(st.sampled_from(CCAS), min_size=4, max_size=4),
    "buffer_bdp": st.floats(0.1, 8.0),
    "discipline": st.sampled_from(["droptail", "red"]),
    "capacity_mbps": st.floats(10.0, 200.0),
    "link_delay": st.floats(0.002, 0.02),
})


def run(spec):
    n = spec["n"]
    sc = validation_dumbbell(n, ccas=spec["ccas"][:n], buffer_bdp=spec["buffer_bdp"],
                             discipline=spec["discipline"], capacity_mbps=spec["capacity_mbps"],
                             link_delay=spec["link_delay"], duration=1.0, window=0.5,
                             step=5e-5, sample_interval=1e-3)
    return sc, simulate(sc)


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(scenarios, st.floats(1e-3, 1e3))
def test_invariants_hold(spec, k):
    _, tr = run(spec)
    assert invariant_violations(tr, k) == []
