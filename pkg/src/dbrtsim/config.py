"""Scenario configuration: flat ``section.key = value`` text.

An empty file yields the reference environment: 1000 m x 800 m area,
0.28 W transmitters with a 250 m range, 2 Mb/s channel, 512-byte data
packets and a 250 s run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .link import LinkConfig
from .mobility import MobilityConfig
from .radio import RadioModel


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class DsdvConfig:
    update_interval: float = 15.0
    trigger_jitter: float = 0.01
    buffer_size: int = 5
    data_ttl: int = 32

    def __post_init__(self):
        if self.update_interval <= 0:
            raise ValueError("update_interval must be positive")
        if self.trigger_jitter < 0:
            raise ValueError("trigger_jitter must be >= 0")
        if self.buffer_size < 0 or self.data_ttl < 1:
            raise ValueError("buffer_size must be >= 0 and data_ttl >= 1")


@dataclass(frozen=True)
class DbrtConfig:
    enabled: bool = False
    query_depth: int = 1
    rebuild_interval: float = 10.0
    reply_timeout: float = 0.05
    round_jitter: float = 0.01
    active_timeout: float = 20.0
    all_pairs: bool = False

    def __post_init__(self):
        if self.query_depth < 0:
            raise ValueError("query_depth must be >= 0")
        if self.rebuild_interval <= 0 or self.reply_timeout <= 0 or self.active_timeout <= 0:
            raise ValueError("dbrt intervals must be positive")
        if self.round_jitter < 0:
            raise ValueError("round_jitter must be >= 0")


@dataclass(frozen=True)
class TrafficConfig:
    flows: int = 4
    rate: float = 4.0          # packets per second per flow
    packet_size: int = 512
    start: float = 10.0
    stop: float = 0.0          # 0 means "until the end of the run"
    pairs: str = ""            # explicit "src>dst,src>dst"

    def __post_init__(self):
        if self.flows < 0:
            raise ValueError("flows must be >= 0")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.packet_size <= 0:
            raise ValueError("packet_size must be positive")
        if self.start < 0 or self.stop < 0:
            raise ValueError("traffic start/stop must be >= 0")
        parse_pairs(self.pairs)


@dataclass(frozen=True)
class TopologyConfig:
    positions: str = ""        # explicit "x:y;x:y;..." for every node
    min_degree: int = 0        # resample initial placement until satisfied

    def __post_init__(self):
        if self.min_degree < 0:
            raise ValueError("min_degree must be >= 0")
        parse_positions(self.positions)


@dataclass(frozen=True)
class FailureConfig:
    events: str = ""           # "node:7@100,flow:0@120"

    def __post_init__(self):
        parse_failures(self.events)


@dataclass(frozen=True)
class ScenarioConfig:
    node_count: int = 50
    duration: float = 250.0
    seed: int = 1
    radio: RadioModel = field(default_factory=RadioModel)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    link: LinkConfig = field(default_factory=LinkConfig)
    dsdv: DsdvConfig = field(default_factory=DsdvConfig)
    dbrt: DbrtConfig = field(default_factory=DbrtConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    failure: FailureConfig = field(default_factory=FailureConfig)

    def __post_init__(self):
        if self.node_count < 2:
            raise ValueError("node_count must be >= 2")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        pos = parse_positions(self.topology.positions)
        if pos and len(pos) != self.node_count:
            raise ValueError(f"{len(pos)} positions given for {self.node_count} nodes")
        for x, y in pos:
            if not (0 <= x <= self.mobility.area_width and 0 <= y <= self.mobility.area_height):
                raise ValueError(f"position ({x}, {y}) lies outside the area")
        for s, d in parse_pairs(self.traffic.pairs):
            if not (0 <= s < self.node_count and 0 <= d < self.node_count):
                raise ValueError(f"flow {s}>{d} references an unknown node")
        if self.traffic.flows and not self.traffic.pairs and self.node_count < 2:
            raise ValueError("random flows need at least 2 nodes")
        if self.traffic.flows or self.traffic.pairs:
            if self.traffic.start >= self.traffic_stop:
                raise ValueError("traffic start must precede traffic stop")
            if self.traffic_stop > self.duration:
                raise ValueError("traffic stop exceeds the run duration")
        for what, ident, t in parse_failures(self.failure.events):
            if what == "node" and not 0 <= ident < self.node_count:
                raise ValueError(f"failure references unknown node {ident}")
            if t > self.duration:
                raise ValueError("failure scheduled after the end of the run")

    @property
    def traffic_stop(self) -> float:
        return self.traffic.stop or self.duration

    @property
    def variant(self) -> str:
        return "dbrt" if self.dbrt.enabled else "dsdv"


def parse_pairs(text: str) -> list[tuple[int, int]]:
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            s, d = (int(v) for v in item.split(">"))
        except ValueError:
            raise ValueError(f"bad flow pair {item!r}, expected src>dst") from None
        if s == d:
            raise ValueError(f"flow pair {item!r} has src == dst")
        out.append((s, d))
    return out


def parse_positions(text: str) -> list[tuple[float, float]]:
    out = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        try:
            x, y = (float(v) for v in item.split(":"))
        except ValueError:
            raise ValueError(f"bad position {item!r}, expected x:y") from None
        out.append((x, y))
    return out


def format_positions(points) -> str:
    return ";".join(f"{float(x)!r}:{float(y)!r}" for x, y in points)


def parse_failures(text: str) -> list[tuple[str, int, float]]:
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            what_id, t = item.split("@")
            what, ident = what_id.split(":")
            ev = (what.strip(), int(ident), float(t))
        except ValueError:
            raise ValueError(f"bad failure {item!r}, expected node:<id>@<t> or flow:<k>@<t>") from None
        if ev[0] not in ("node", "flow"):
            raise ValueError(f"bad failure target kind {ev[0]!r}")
        if ev[2] < 0:
            raise ValueError("failure time must be >= 0")
        out.append(ev)
    return out


_TOP = ("node_count", "duration", "seed")


def _sections(cfg_cls=ScenarioConfig):
    return {f.name: f for f in dataclasses.fields(cfg_cls) if f.name not in _TOP}


def _section_type(name):
    return {"radio": RadioModel, "mobility": MobilityConfig, "link": LinkConfig,
            "dsdv": DsdvConfig, "dbrt": DbrtConfig, "traffic": TrafficConfig,
            "topology": TopologyConfig, "failure": FailureConfig}[name]


def _field_types(cls) -> dict[str, type]:
    defaults = cls()
    return {f.name: type(getattr(defaults, f.name)) for f in dataclasses.fields(cls)}


def _convert(raw: str, typ: type):
    raw = raw.strip()
    if typ is bool:
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if typ is int:
        return int(raw)
    if typ is float:
        return float(raw)
    return raw


_TOP_TYPES = {"node_count": int, "duration": float, "seed": int}


def _split_key(key: str):
    if "." not in key:
        if key not in _TOP_TYPES:
            raise KeyError(key)
        return None, key, _TOP_TYPES[key]
    section, name = key.split(".", 1)
    if section not in _sections():
        raise KeyError(key)
    types = _field_types(_section_type(section))
    if name not in types:
        raise KeyError(key)
    return section, name, types[name]


def build_config(values: dict) -> ScenarioConfig:
    """Construct a config from ``{"section.key": value}`` with defaults applied."""
    top = {}
    sections: dict[str, dict] = {}
    for key, value in values.items():
        section, name, _ = _split_key(key)
        if section is None:
            top[name] = value
        else:
            sections.setdefault(section, {})[name] = value
    kwargs = dict(top)
    for section, vals in sections.items():
        kwargs[section] = _section_type(section)(**vals)
    return ScenarioConfig(**kwargs)


def parse_config(text: str) -> ScenarioConfig:
    values = {}
    lineno_of = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected key = value", line=lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        try:
            _, _, typ = _split_key(key)
        except KeyError:
            raise ConfigError("unknown key", key=key, line=lineno) from None
        if key in values:
            raise ConfigError("duplicate key", key=key, line=lineno)
        try:
            values[key] = _convert(raw, typ)
        except ValueError as exc:
            raise ConfigError(str(exc), key=key, line=lineno) from None
        lineno_of[key] = lineno
    try:
        return build_config(values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def flatten(cfg: ScenarioConfig) -> dict:
    out = {k: getattr(cfg, k) for k in _TOP}
    for section in _sections():
        sub = getattr(cfg, section)
        for f in dataclasses.fields(sub):
            out[f"{section}.{f.name}"] = getattr(sub, f.name)
    return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(cfg: ScenarioConfig) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in flatten(cfg).items())


def override(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    """Copy of ``cfg`` with dotted keys replaced, e.g. ``override(cfg, **{"dbrt.enabled": True})``.

    Plain keyword names (``seed=3``) address top-level fields.
    """
    values = flatten(cfg)
    for key, value in changes.items():
        try:
            _split_key(key)
        except KeyError:
            raise ConfigError("unknown key", key=key) from None
        values[key] = value
    return build_config(values)
