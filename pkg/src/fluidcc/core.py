"""Units, topology and scenario containers shared by the whole package.

Internally everything is expressed in seconds, segments and segments per
second.  User-facing helpers convert from Mbps, milliseconds and
bandwidth-delay-product multiples.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "CCAS",
    "DISCIPLINES",
    "INITIAL_KEYS",
    "UnitConventions",
    "Smoothing",
    "Link",
    "Path",
    "AgentConfig",
    "Scenario",
    "ScenarioError",
    "convert_rate",
    "rate_to_mbps",
    "build_dumbbell",
    "validation_dumbbell",
    "link_bdp",
    "spread_delays",
]

CCAS = ("reno", "cubic", "bbr1", "bbr2")
DISCIPLINES = ("droptail", "red")
# per-agent initial conditions understood by the engine
INITIAL_KEYS = ("w0", "x0", "w_max0", "s0", "x_btl0", "tau_min0", "x_max0", "t_pbw0", "t_prt0",
                "w_hi0", "w_lo0", "v0")


class ScenarioError(ValueError):
    """Raised when a topology or scenario violates its invariants."""


@dataclass(frozen=True)
class UnitConventions:
    segment_size: float = 12000.0  # bits, i.e. 1500 bytes

    def __post_init__(self):
        if not self.segment_size > 0:
            raise ScenarioError("segment_size must be positive")

    def mbps_to_segments(self, mbps: float) -> float:
        return convert_rate(mbps, self)

    def segments_to_mbps(self, rate: float) -> float:
        return rate_to_mbps(rate, self)


def convert_rate(mbps: float, units: UnitConventions = UnitConventions()) -> float:
    """Convert a rate in Mbps to segments per second."""
    if mbps < 0:
        raise ScenarioError(f"rate must be non-negative, got {mbps} Mbps")
    return mbps * 1e6 / units.segment_size


def rate_to_mbps(rate: float, units: UnitConventions = UnitConventions()) -> float:
    if rate < 0:
        raise ScenarioError(f"rate must be non-negative, got {rate} seg/s")
    return rate * units.segment_size / 1e6


@dataclass(frozen=True)
class Smoothing:
    """Sharpness of the sigmoid gates, one constant per signal class.

    ``k_rate=None`` means ``100 / capacity`` of the link the gate belongs
    to, so the transition is about one percent of the capacity wide.
    """

    k_time: float = 1e4  # 1/s
    k_rate: float | None = None  # 1/(seg/s)
    k_vol: float = 10.0  # 1/seg
    k_prob: float = 1e3
    L: float = 20.0  # drop-tail exponent

    def __post_init__(self):
        for name in ("k_time", "k_vol", "k_prob"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"smoothing constant {name} must be positive")
        if self.k_rate is not None and not self.k_rate > 0:
            raise ScenarioError("smoothing constant k_rate must be positive")
        if not self.L >= 1:
            raise ScenarioError("drop-tail exponent L must be >= 1")

    def rate_sharpness(self, capacity: float) -> float:
        return self.k_rate if self.k_rate is not None else 100.0 / capacity


@dataclass(frozen=True)
class Link:
    id: str
    capacity: float  # seg/s
    buffer: float  # seg
    delay: float  # s
    discipline: str = "droptail"
    smoothing: Smoothing = field(default_factory=Smoothing)

    def __post_init__(self):
        if not self.capacity > 0:
            raise ScenarioError(f"link {self.id}: capacity must be positive")
        if not self.buffer > 0:
            raise ScenarioError(f"link {self.id}: buffer must be positive")
        if not self.delay >= 0:
            raise ScenarioError(f"link {self.id}: delay must be non-negative")
        if self.discipline not in DISCIPLINES:
            raise ScenarioError(
                f"link {self.id}: unknown discipline {self.discipline!r}, "
                f"expected one of {DISCIPLINES}")

    @property
    def k_rate(self) -> float:
        return self.smoothing.rate_sharpness(self.capacity)


@dataclass(frozen=True)
class Path:
    """Ordered links of one sender plus the delay split along them.

    ``forward_delays[k]`` is the propagation time from the sender to the
    entrance of ``links[k]``.  The return leg (receiver back to sender) is
    ``return_delay``; the round-trip propagation is the sum of the link
    delays plus the return leg.
    """

    agent: int
    links: tuple[str, ...]
    forward_delays: tuple[float, ...]
    return_delay: float
    link_delays: tuple[float, ...]

    def __post_init__(self):
        if not self.links:
            raise ScenarioError(f"agent {self.agent}: empty path")
        if not (len(self.links) == len(self.forward_delays) == len(self.link_delays)):
            raise ScenarioError(f"agent {self.agent}: path arrays differ in length")
        if any(f < 0 for f in self.forward_delays) or self.return_delay < 0:
            raise ScenarioError(f"agent {self.agent}: negative path delay")
        if not self.total_propagation > 0:
            raise ScenarioError(f"agent {self.agent}: round-trip propagation must be positive")
        for ell in self.links:
            if self.feedback_delay(ell) < -1e-15:
                raise ScenarioError(f"agent {self.agent}: forward delay to {ell} exceeds round trip")

    @classmethod
    def through(cls, agent: int, links: Sequence[Link], return_delay: float = 0.0) -> "Path":
        """Path through ``links`` in order, forward delays accumulated."""
        fwd, acc = [], 0.0
        for link in links:
            fwd.append(acc)
            acc += link.delay
        return cls(agent, tuple(l.id for l in links), tuple(fwd), float(return_delay),
                   tuple(l.delay for l in links))

    @property
    def total_propagation(self) -> float:
        return float(sum(self.link_delays) + self.return_delay)

    def forward_delay(self, link_id: str) -> float:
        return self.forward_delays[self.links.index(link_id)]

    def feedback_delay(self, link_id: str) -> float:
        return self.total_propagation - self.forward_delay(link_id)


@dataclass(frozen=True)
class AgentConfig:
    id: int
    cca: str
    path: Path
    initial: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.cca not in CCAS:
            raise ScenarioError(f"agent {self.id}: unknown cca {self.cca!r}, expected one of {CCAS}")
        if self.path.agent != self.id:
            raise ScenarioError(f"agent {self.id}: path belongs to agent {self.path.agent}")
        for key, value in self.initial.items():
            if key not in INITIAL_KEYS:
                raise ScenarioError(f"agent {self.id}: unknown initial condition {key!r}")
            if not value > 0 and key not in ("t_pbw0", "t_prt0", "v0"):
                raise ScenarioError(f"agent {self.id}: initial {key} must be positive")


@dataclass(frozen=True)
class Scenario:
    links: tuple[Link, ...]
    agents: tuple[AgentConfig, ...]
    step: float = 1e-5
    duration: float = 20.0
    window: float = 5.0
    warmup: float | None = None
    sample_interval: float = 1e-3
    units: UnitConventions = field(default_factory=UnitConventions)
    # rate (1/s) applied to the assimilation terms of the BBR estimators
    assimilation_rate: float = 1e3
    # margin (s) by which a delayed RTT must undercut RTprop to count as new
    rtt_reset_margin: float = 1e-5
    # x_max follows the delivery rate ("delivery") or the sending rate ("sending")
    xmax_source: str = "delivery"
    # shift of the loss gate that decays w_lo while cruising (0 keeps it half open at zero loss)
    wlo_loss_offset: float = 0.005
    initial_queues: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @property
    def metric_start(self) -> float:
        return self.duration - self.window if self.warmup is None else self.warmup

    def validate(self) -> None:
        if not self.links:
            raise ScenarioError("scenario has no links")
        if not self.agents:
            raise ScenarioError("scenario has no agents")
        if not self.step > 0:
            raise ScenarioError("solver step must be positive")
        if not self.sample_interval >= self.step:
            raise ScenarioError("sample interval must be at least one solver step")
        if not self.window > 0:
            raise ScenarioError("metric window must be positive")
        if not self.duration >= self.metric_start + self.window - 1e-12 or self.metric_start < 0:
            raise ScenarioError("duration must cover warmup plus metric window")
        if not self.assimilation_rate > 0:
            raise ScenarioError("assimilation_rate must be positive")
        if self.xmax_source not in ("delivery", "sending"):
            raise ScenarioError(f"unknown xmax_source {self.xmax_source!r}")
        ids = [l.id for l in self.links]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate link ids")
        known = set(ids)
        agent_ids = sorted(a.id for a in self.agents)
        if agent_ids != list(range(1, len(self.agents) + 1)):
            raise ScenarioError("agent ids must be unique and contiguous 1..N")
        for agent in self.agents:
            for ell in agent.path.links:
                if ell not in known:
                    raise ScenarioError(f"agent {agent.id}: path references unknown link {ell!r}")
        for ell, q0 in self.initial_queues.items():
            link = self.link(ell)
            if not 0 <= q0 <= link.buffer:
                raise ScenarioError(f"initial queue of {ell} outside [0, buffer]")
        delays = self.positive_delays()
        if delays and self.step > min(delays) / 10 * (1 + 1e-12):
            raise ScenarioError(
                f"solver step {self.step:g} s exceeds a tenth of the smallest delay "
                f"{min(delays):g} s")

    def positive_delays(self) -> list[float]:
        out = []
        for a in self.agents:
            out.append(a.path.total_propagation)
            for ell in a.path.links:
                out.extend(d for d in (a.path.forward_delay(ell), a.path.feedback_delay(ell)) if d > 0)
        return out

    def link(self, link_id: str) -> Link:
        for link in self.links:
            if link.id == link_id:
                return link
        raise KeyError(link_id)

    def bottleneck_of(self, agent: AgentConfig) -> Link:
        """Smallest-capacity link on the agent's path (first one on ties)."""
        return min((self.link(l) for l in agent.path.links), key=lambda l: l.capacity)

    @property
    def shared_bottleneck(self) -> Link:
        """Link used by most agents, smallest capacity first; the metric link."""
        counts = {l.id: 0 for l in self.links}
        for a in self.agents:
            for ell in a.path.links:
                counts[ell] += 1
        return min(self.links, key=lambda l: (-counts[l.id], l.capacity))

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def with_changes(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["warmup"] = self.metric_start
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_dumbbell(
    n_senders: int,
    bottleneck: Link,
    access_delays: Sequence[float],
    ccas: str | Sequence[str] = "bbr1",
    initial: Mapping[str, float] | Sequence[Mapping[str, float]] | None = None,
    **scenario_kwargs,
) -> Scenario:
    """Dumbbell with one shared bottleneck and one access link per sender.

    Access links get ten times the bottleneck capacity and a buffer that is
    never reached.  The return leg mirrors the forward leg, so every sender
    sees a round-trip propagation of ``2 * (access_delay + bottleneck.delay)``.
    """
    if n_senders < 1:
        raise ScenarioError("dumbbell needs at least one sender")
    access_delays = list(access_delays)
    if len(access_delays) != n_senders:
        raise ScenarioError(f"expected {n_senders} access delays, got {len(access_delays)}")
    if any(not a > 0 for a in access_delays):
        raise ScenarioError("access delays must be positive")
    if bottleneck.delay <= 0:
        raise ScenarioError("bottleneck delay must be positive")
    if isinstance(ccas, str):
        ccas = [ccas] * n_senders
    if len(ccas) != n_senders:
        raise ScenarioError(f"expected {n_senders} ccas, got {len(ccas)}")
    if initial is None or isinstance(initial, Mapping):
        initial = [dict(initial or {})] * n_senders

    links = [bottleneck]
    agents = []
    for i, (a, cca) in enumerate(zip(access_delays, ccas), start=1):
        access = Link(f"access{i}", capacity=10 * bottleneck.capacity, buffer=1e9,
                      delay=float(a), discipline="droptail", smoothing=bottleneck.smoothing)
        links.append(access)
        path = Path.through(i, [access, bottleneck], return_delay=bottleneck.delay + a)
        agents.append(AgentConfig(i, cca, path, dict(initial[i - 1])))
    return Scenario(tuple(links), tuple(agents), **scenario_kwargs)


def spread_delays(n: int, low: float, high: float) -> np.ndarray:
    """Deterministic stand-in for delays drawn uniformly from [low, high]."""
    if n == 1:
        return np.array([(low + high) / 2])
    return np.linspace(low, high, n)


def link_bdp(link: Link) -> float:
    """Bandwidth-delay product of a link: capacity times its round-trip delay."""
    return link.capacity * 2.0 * link.delay


def validation_dumbbell(
    n_senders: int = 10,
    ccas: str | Sequence[str] = "bbr1",
    buffer_bdp: float = 1.0,
    discipline: str = "droptail",
    capacity_mbps: float = 100.0,
    link_delay: float = 0.010,
    access_range: tuple[float, float] = (0.005, 0.010),
    whi_per_buffer: float | None = None,
    initial: Mapping[str, float] | None = None,
    **scenario_kwargs,
) -> Scenario:
    """Dumbbell with a buffer sized in bottleneck BDPs.

    Access delays are spread evenly over ``access_range``.  With
    ``whi_per_buffer`` set, every BBRv2 sender starts with
    ``w_hi = whi_per_buffer * B / N`` instead of twice its initial BDP
    estimate.
    """
    units = scenario_kwargs.get("units", UnitConventions())
    capacity = convert_rate(capacity_mbps, units)
    probe = Link("btl", capacity, 1.0, link_delay, discipline)
    buffer = buffer_bdp * link_bdp(probe)
    bottleneck = Link("btl", capacity, buffer, link_delay, discipline)
    init = dict(initial or {})
    if whi_per_buffer is not None:
        init["w_hi0"] = whi_per_buffer * buffer / n_senders
    access = spread_delays(n_senders, *access_range)
    return build_dumbbell(n_senders, bottleneck, access, ccas, initial=init, **scenario_kwargs)
