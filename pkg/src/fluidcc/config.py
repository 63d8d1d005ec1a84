"""TOML scenario and sweep-grid loading with line-precise error messages.

A scenario file either describes a dumbbell::

    [simulation]
    duration = 20.0

    [dumbbell]
    senders = 10
    ccas = "bbr1"            # or a list, or "bbr1+reno" for an alternating mix
    buffer_bdp = 1.0
    capacity_mbps = 100.0
    link_delay = 0.010
    access_delay_range = [0.005, 0.010]

or a general topology with ``[[links]]`` and ``[[agents]]`` tables.  A grid
file holds a ``[base]`` dumbbell scenario and an ``[axes]`` table whose lists
are crossed.
"""

from __future__ import annotations

import itertools
import math
import re
import sys
from dataclasses import dataclass, field
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import (
    CCAS,
    INITIAL_KEYS,
    AgentConfig,
    Link,
    Path,
    Scenario,
    ScenarioError,
    Smoothing,
    UnitConventions,
    build_dumbbell,
    convert_rate,
    link_bdp,
    spread_delays,
)

__all__ = [
    "ConfigError",
    "SweepGrid",
    "GridPoint",
    "AXES",
    "DEFAULT_AXES",
    "parse_ccas",
    "scenario_from_dict",
    "load_scenario",
    "load_grid",
    "grid_from_dict",
]

SIMULATION_KEYS = {
    "step": float, "duration": float, "window": float, "warmup": float,
    "sample_interval": float, "assimilation_rate": float, "rtt_reset_margin": float,
    "xmax_source": str, "wlo_loss_offset": float,
}
SMOOTHING_KEYS = {"k_time": float, "k_rate": float, "k_vol": float, "k_prob": float, "L": float}
DUMBBELL_KEYS = {
    "senders": int, "ccas": object, "buffer_bdp": float, "buffer": float, "discipline": str,
    "capacity_mbps": float, "link_delay": float, "access_delay_range": list,
    "access_delays": list, "whi_per_buffer": float,
}
LINK_KEYS = {"id": str, "capacity_mbps": float, "buffer": float, "buffer_bdp": float,
             "delay": float, "discipline": str}
AGENT_KEYS = {"cca": str, "links": list, "return_delay": float, "initial": dict}
TOP_KEYS = {"simulation", "smoothing", "units", "dumbbell", "initial", "initial_queues",
            "links", "agents"}

# sweep axes in output column order
AXES = ("buffer_bdp", "senders", "link_delay", "ccas", "discipline")
# numeric axes are normalized so summary columns format uniformly


def _whole(value) -> int:
    if isinstance(value, bool) or float(value) != int(value):
        raise ValueError(f"{value!r} is not a whole number")
    return int(value)


AXIS_TYPES = {"buffer_bdp": float, "senders": _whole, "link_delay": float}
DEFAULT_AXES = {
    "buffer_bdp": [0.5, 1.0, 2.0, 4.0, 7.0],
    "senders": [2, 6, 10],
    "link_delay": [0.0025, 0.0075, 0.0125],
}


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        self.source = source
        self.line = line
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {message}")
        self.detail = message


class _Locator:
    """Map (table, key) to the source line for error messages."""

    _header = re.compile(r"^\s*\[\[?\s*([A-Za-z0-9_.\-]+)\s*\]\]?")
    _key = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")

    def __init__(self, text: str, source: str):
        self.source = source
        self.tables: dict[str, int] = {}
        self.keys: dict[tuple[str, str], int] = {}
        table = ""
        for lineno, raw in enumerate(text.splitlines(), start=1):
            head = self._header.match(raw)
            if head:
                table = head.group(1)
                self.tables.setdefault(table, lineno)
                continue
            key = self._key.match(raw)
            if key:
                self.keys.setdefault((table, key.group(1)), lineno)

    def line(self, table: str, key: str | None = None) -> int | None:
        if key is not None and (table, key) in self.keys:
            return self.keys[(table, key)]
        return self.tables.get(table)

    def error(self, message: str, table: str = "", key: str | None = None) -> ConfigError:
        return ConfigError(message, self.source, self.line(table, key))


def _parse_toml(text: str, source: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", source,
                          int(match.group(1)) if match else None) from exc


def _typed(value, kind, loc: _Locator, table: str, key: str):
    if kind is object:
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise loc.error(f"key {key!r} in [{table}] must be a number", table, key)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise loc.error(f"key {key!r} in [{table}] must be an integer", table, key)
        return value
    if not isinstance(value, kind):
        raise loc.error(f"key {key!r} in [{table}] must be of type {kind.__name__}", table, key)
    return value


def _section(raw: Mapping, table: str, schema: Mapping, loc: _Locator) -> dict:
    if not isinstance(raw, Mapping):
        raise loc.error(f"[{table}] must be a table", table)
    out = {}
    for key, value in raw.items():
        if key not in schema:
            raise loc.error(f"unknown key {key!r} in [{table}]", table, key)
        out[key] = _typed(value, schema[key], loc, table, key)
    return out


def parse_ccas(spec, n: int) -> list[str]:
    """CCA assignment for ``n`` senders.

    ``"bbr1"`` is homogeneous, ``"bbr1+reno"`` alternates round-robin and an
    explicit list must have ``n`` entries.
    """
    if isinstance(spec, str):
        parts = [p.strip() for p in spec.split("+")]
        names = [parts[i % len(parts)] for i in range(n)]
    elif isinstance(spec, (list, tuple)):
        if len(spec) != n:
            raise ValueError(f"expected {n} ccas, got {len(spec)}")
        names = [str(c) for c in spec]
    else:
        raise ValueError("ccas must be a string or a list of strings")
    for name in names:
        if name not in CCAS:
            raise ValueError(f"unknown cca {name!r}, expected one of {CCAS}")
    return names


def _dumbbell(raw: dict, smoothing: Smoothing, units: UnitConventions, initial: dict,
              sim: dict, loc: _Locator) -> Scenario:
    n = raw.get("senders", 10)
    if n < 1:
        raise loc.error("senders must be at least 1", "dumbbell", "senders")
    try:
        ccas = parse_ccas(raw.get("ccas", "bbr1"), n)
    except ValueError as exc:
        raise loc.error(str(exc), "dumbbell", "ccas") from exc
    capacity = convert_rate(raw.get("capacity_mbps", 100.0), units)
    delay = raw.get("link_delay", 0.010)
    discipline = raw.get("discipline", "droptail")
    if "buffer" in raw and "buffer_bdp" in raw:
        raise loc.error("give either buffer or buffer_bdp, not both", "dumbbell", "buffer")
    if "access_delays" in raw and "access_delay_range" in raw:
        raise loc.error("give either access_delays or access_delay_range, not both",
                        "dumbbell", "access_delays")
    try:
        probe = Link("btl", capacity, 1.0, delay, discipline, smoothing)
        buffer = raw["buffer"] if "buffer" in raw else raw.get("buffer_bdp", 1.0) * link_bdp(probe)
        bottleneck = Link("btl", capacity, buffer, delay, discipline, smoothing)
    except ScenarioError as exc:
        raise loc.error(str(exc), "dumbbell") from exc
    if "access_delays" in raw:
        access = [float(a) for a in raw["access_delays"]]
    else:
        rng = raw.get("access_delay_range", [0.005, 0.010])
        if len(rng) != 2:
            raise loc.error("access_delay_range needs [low, high]", "dumbbell", "access_delay_range")
        access = list(spread_delays(n, float(rng[0]), float(rng[1])))
    init = dict(initial)
    if "whi_per_buffer" in raw:
        init["w_hi0"] = raw["whi_per_buffer"] * buffer / n
    try:
        return build_dumbbell(n, bottleneck, access, ccas, initial=init, units=units, **sim)
    except ScenarioError as exc:
        raise loc.error(str(exc), "dumbbell") from exc


def _topology(links_raw, agents_raw, smoothing: Smoothing, units: UnitConventions,
              initial: dict, sim: dict, loc: _Locator) -> Scenario:
    if not isinstance(links_raw, list) or not isinstance(agents_raw, list):
        raise loc.error("[[links]] and [[agents]] must be arrays of tables", "links")
    links = []
    for raw in links_raw:
        spec = _section(raw, "links", LINK_KEYS, loc)
        for key in ("id", "capacity_mbps", "delay"):
            if key not in spec:
                raise loc.error(f"link is missing {key!r}", "links")
        try:
            capacity = convert_rate(spec["capacity_mbps"], units)
            probe = Link(spec["id"], capacity, 1.0, spec["delay"],
                         spec.get("discipline", "droptail"), smoothing)
            if "buffer" in spec:
                buffer = spec["buffer"]
            elif "buffer_bdp" in spec:
                buffer = spec["buffer_bdp"] * link_bdp(probe)
            else:
                raise loc.error(f"link {spec['id']!r} needs buffer or buffer_bdp", "links", "id")
            links.append(Link(spec["id"], capacity, buffer, spec["delay"],
                              spec.get("discipline", "droptail"), smoothing))
        except ScenarioError as exc:
            raise loc.error(str(exc), "links") from exc
    by_id = {l.id: l for l in links}
    agents = []
    for i, raw in enumerate(agents_raw, start=1):
        spec = _section(raw, "agents", AGENT_KEYS, loc)
        if "cca" not in spec or "links" not in spec:
            raise loc.error("agent needs cca and links", "agents")
        try:
            path_links = [by_id[str(ell)] for ell in spec["links"]]
        except KeyError as exc:
            raise loc.error(f"agent {i} references unknown link {exc.args[0]!r}",
                            "agents", "links") from exc
        ret = spec.get("return_delay", sum(l.delay for l in path_links))
        init = dict(initial)
        init.update({k: float(v) for k, v in spec.get("initial", {}).items()})
        try:
            agents.append(AgentConfig(i, spec["cca"], Path.through(i, path_links, ret), init))
        except ScenarioError as exc:
            raise loc.error(str(exc), "agents") from exc
    try:
        return Scenario(tuple(links), tuple(agents), units=units, **sim)
    except ScenarioError as exc:
        raise loc.error(str(exc), "simulation") from exc


def scenario_from_dict(data: Mapping, source: str = "<config>", text: str = "",
                       overrides: Mapping[str, Any] | None = None) -> Scenario:
    """Build a :class:`Scenario` from parsed TOML data.

    ``overrides`` replaces keys of the ``[simulation]`` table (CLI flags).
    """
    loc = _Locator(text, source)
    for key in data:
        if key not in TOP_KEYS:
            raise loc.error(f"unknown table or key {key!r}", key, key)
    sim = _section(data.get("simulation", {}), "simulation", SIMULATION_KEYS, loc)
    sim.update({k: v for k, v in (overrides or {}).items() if v is not None})
    smoothing_raw = _section(data.get("smoothing", {}), "smoothing", SMOOTHING_KEYS, loc)
    units_raw = _section(data.get("units", {}), "units", {"segment_size": float}, loc)
    initial = _section(data.get("initial", {}), "initial",
                       {k: float for k in INITIAL_KEYS}, loc)
    queues = data.get("initial_queues", {})
    try:
        smoothing = Smoothing(**smoothing_raw)
        units = UnitConventions(**units_raw)
    except ScenarioError as exc:
        raise loc.error(str(exc), "smoothing") from exc
    if queues:
        sim["initial_queues"] = {str(k): float(v) for k, v in queues.items()}
    has_dumbbell = "dumbbell" in data
    has_topology = "links" in data or "agents" in data
    if has_dumbbell == has_topology:
        raise loc.error("scenario needs exactly one of [dumbbell] or [[links]]/[[agents]]")
    try:
        if has_dumbbell:
            raw = _section(data["dumbbell"], "dumbbell", DUMBBELL_KEYS, loc)
            return _dumbbell(raw, smoothing, units, initial, sim, loc)
        return _topology(data.get("links", []), data.get("agents", []), smoothing, units,
                         initial, sim, loc)
    except ScenarioError as exc:
        raise loc.error(str(exc), "simulation") from exc
    except TypeError as exc:
        raise loc.error(str(exc)) from exc


def _read(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read file: {exc.strerror}", str(path)) from exc


def load_scenario(path, overrides: Mapping[str, Any] | None = None) -> tuple[Scenario, dict]:
    """Read a scenario TOML file; returns the scenario and the raw table."""
    text = _read(path)
    data = _parse_toml(text, str(path))
    return scenario_from_dict(data, str(path), text, overrides), data


@dataclass(frozen=True)
class GridPoint:
    index: int
    values: dict
    scenario_data: dict


@dataclass
class SweepGrid:
    """Cross product of axis values applied to a base dumbbell scenario."""

    base: dict
    axes: dict = field(default_factory=dict)
    source: str = "<grid>"

    def __post_init__(self):
        for name, values in self.axes.items():
            if name not in AXES:
                raise ConfigError(f"unknown sweep axis {name!r}", self.source)
            if not isinstance(values, list):
                raise ConfigError(f"axis {name!r} must be a list", self.source)

    @property
    def names(self) -> list[str]:
        return [a for a in AXES if a in self.axes]

    def __len__(self) -> int:
        return math.prod(len(self.axes[a]) for a in self.names) if self.names else 0

    def points(self) -> list[GridPoint]:
        names = self.names
        out = []
        for k, combo in enumerate(itertools.product(*(self.axes[a] for a in names))):
            data = {key: (dict(val) if isinstance(val, dict) else val)
                    for key, val in self.base.items()}
            bell = dict(data.get("dumbbell", {}))
            values = dict(zip(names, combo))
            bell.update(values)
            if "buffer_bdp" in values:
                bell.pop("buffer", None)
            data["dumbbell"] = bell
            out.append(GridPoint(k, values, data))
        return out


def grid_from_dict(data: Mapping, source: str = "<grid>", text: str = "") -> SweepGrid:
    loc = _Locator(text, source)
    for key in data:
        if key not in ("base", "axes"):
            raise loc.error(f"unknown table {key!r} in grid file", key, key)
    base = data.get("base", {"dumbbell": {}})
    if not isinstance(base, Mapping) or "links" in base or "agents" in base:
        raise loc.error("grid [base] must describe a dumbbell", "base")
    base = dict(base)
    base.setdefault("dumbbell", {})
    axes = data.get("axes", DEFAULT_AXES)
    if not isinstance(axes, Mapping):
        raise loc.error("[axes] must be a table", "axes")
    for name, values in axes.items():
        if name not in AXES:
            raise loc.error(f"unknown sweep axis {name!r}; expected one of {AXES}", "axes", name)
        if not isinstance(values, list):
            raise loc.error(f"axis {name!r} must be a list", "axes", name)
    typed = {}
    for name, values in axes.items():
        kind = AXIS_TYPES.get(name)
        if kind is None:
            typed[name] = list(values)
            continue
        try:
            typed[name] = [kind(v) for v in values]
        except (TypeError, ValueError) as exc:
            raise loc.error(f"axis {name!r}: {exc}", "axes", name) from exc
    grid = SweepGrid(base, typed, source)
    if len(grid) == 0:
        raise loc.error("sweep grid is empty", "axes")
    return grid


def load_grid(path) -> SweepGrid:
    text = _read(path)
    data = _parse_toml(text, str(path))
    return grid_from_dict(data, str(path), text)
