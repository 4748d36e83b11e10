"""Scenario files: ``[global]``, ``[pan]`` and ``[node.<id>]`` sections of ``key = value`` lines.

Comments start with ``#`` or ``;``.  Every error names the offending line.
Node keys ``pib.<attribute>`` override MAC/PHY PIB attributes, and
``traffic.<name>.<field>`` keys describe traffic sources.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from ..adapters import TrafficConfig
from ..enums import GtsDirection, Status
from ..pib import MacPib, PhyPib, PibAttribute


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass
class GlobalConfig:
    seed: int = 1
    duration_ms: float = 10_000.0
    path_loss_exponent: float = 2.0
    reference_loss_db: float = 40.2
    cca_threshold_dbm: float | None = None


@dataclass
class PanConfig:
    pan_id: int = 0x1234
    channel: int = 11
    beacon_order: int = 15
    superframe_order: int = 15


@dataclass
class ScanSpec:
    kind: str  # ed | active | passive
    duration: int
    channels: int


@dataclass
class GtsSpec:
    direction: GtsDirection
    length: int
    at_ms: float = 0.0


@dataclass
class NodeConfig:
    node_id: str
    role: str = "device"
    position: tuple[float, float] = (0.0, 0.0)
    tx_power_dbm: int = 0
    sensitivity_dbm: float = -85.0
    short_address: int | None = None
    ext_address: int | None = None
    associate: bool = False
    associate_ms: float = 0.0
    scan: ScanSpec | None = None
    rx_on_when_idle: bool = True
    channel: int | None = None
    gts: GtsSpec | None = None
    poll_ms: float | None = None
    silence_ms: float | None = None
    pib: dict[str, Any] = field(default_factory=dict)
    traffic: list[TrafficConfig] = field(default_factory=list)
    line: int = 0

    @property
    def is_coordinator(self) -> bool:
        return self.role == "coordinator"


@dataclass
class Scenario:
    global_: GlobalConfig = field(default_factory=GlobalConfig)
    pan: PanConfig = field(default_factory=PanConfig)
    nodes: list[NodeConfig] = field(default_factory=list)

    @property
    def coordinator(self) -> NodeConfig:
        return next(n for n in self.nodes if n.is_coordinator)

    def node(self, node_id: str) -> NodeConfig:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)


# -- value parsers ----------------------------------------------------------------------

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _bool(text: str) -> bool:
    low = text.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    return int(text, 0)


def _float(text: str) -> float:
    return float(text)


def _position(text: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'x, y', got {text!r}")
    return float(parts[0]), float(parts[1])


def _scan(text: str) -> ScanSpec:
    # kind:duration[:channel-mask]
    parts = text.split(":")
    if len(parts) not in (2, 3) or parts[0] not in ("ed", "active", "passive"):
        raise ValueError(f"expected 'ed|active|passive:<n>[:<mask>]', got {text!r}")
    duration = int(parts[1])
    if not 0 <= duration <= 14:
        raise ValueError("scan duration must be 0..14")
    mask = int(parts[2], 0) if len(parts) == 3 else 0x07FFF800
    return ScanSpec(parts[0], duration, mask)


def _gts(text: str) -> GtsSpec:
    # direction:length[@ms]
    at = 0.0
    if "@" in text:
        text, when = text.split("@", 1)
        at = float(when)
    parts = text.split(":")
    if len(parts) != 2 or parts[0] not in ("transmit", "receive"):
        raise ValueError(f"expected 'transmit|receive:<slots>[@ms]', got {text!r}")
    length = int(parts[1])
    if not 1 <= length <= 15:
        raise ValueError("GTS length must be 1..15 slots")
    return GtsSpec(GtsDirection.TRANSMIT if parts[0] == "transmit" else GtsDirection.RECEIVE, length, at)


def _role(text: str) -> str:
    if text not in ("coordinator", "device"):
        raise ValueError(f"role must be coordinator or device, got {text!r}")
    return text


_GLOBAL_KEYS: dict[str, tuple[str, Callable[[str], Any]]] = {
    "seed": ("seed", _int),
    "duration_ms": ("duration_ms", _float),
    "path_loss_exponent": ("path_loss_exponent", _float),
    "reference_loss_db": ("reference_loss_db", _float),
    "cca_threshold_dbm": ("cca_threshold_dbm", _float),
}
_PAN_KEYS = {
    "pan_id": ("pan_id", _int),
    "channel": ("channel", _int),
    "beacon_order": ("beacon_order", _int),
    "superframe_order": ("superframe_order", _int),
}
_NODE_KEYS = {
    "role": ("role", _role),
    "position": ("position", _position),
    "tx_power_dbm": ("tx_power_dbm", _int),
    "sensitivity_dbm": ("sensitivity_dbm", _float),
    "short_address": ("short_address", _int),
    "ext_address": ("ext_address", _int),
    "associate": ("associate", _bool),
    "associate_ms": ("associate_ms", _float),
    "scan": ("scan", _scan),
    "rx_on_when_idle": ("rx_on_when_idle", _bool),
    "channel": ("channel", _int),
    "gts": ("gts", _gts),
    "poll_ms": ("poll_ms", _float),
    "silence_ms": ("silence_ms", _float),
}
_TRAFFIC_KEYS = {
    "pattern": ("pattern", str),
    "period_ms": ("interval_us", lambda t: round(float(t) * 1000)),
    "mean_ms": ("interval_us", lambda t: round(float(t) * 1000)),
    "size": ("size", _int),
    "dst": ("dst", str),
    "start_ms": ("start_us", lambda t: round(float(t) * 1000)),
    "stop_ms": ("stop_us", lambda t: round(float(t) * 1000)),
    "mode": ("mode", str),
    "ack": ("ack", _bool),
    "adapter": ("adapter", str),
}


def _pib_value(name: str, text: str) -> Any:
    spec = (MacPib.ATTRIBUTES.get(name) or PhyPib.ATTRIBUTES.get(name))
    if spec.kind == "bool":
        return _bool(text)
    if spec.kind == "bytes":
        return bytes.fromhex(text)
    return _int(text)


def _scratch_pibs() -> tuple[PhyPib, MacPib]:
    phy = PhyPib()
    return phy, MacPib(phy)


def load_scenario(text: str) -> Scenario:
    scen = Scenario()
    section: str | None = None
    node: NodeConfig | None = None
    traffic: dict[str, dict[str, Any]] = {}
    traffic_lines: dict[str, int] = {}
    pan_lines: dict[str, int] = {}
    seen_sections: set[str] = set()
    # per-node scratch PIBs so an override is range-checked against the same defaults at its own line
    scratch: dict[str, tuple[PhyPib, MacPib]] = {}

    def finish_node() -> None:
        if node is None:
            return
        for name, fields in traffic.items():
            try:
                node.traffic.append(TrafficConfig(name=name, **fields))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"traffic {name!r}: {exc}", traffic_lines[name]) from None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            name = line[1:-1].strip()
            finish_node()
            node, traffic, traffic_lines = None, {}, {}
            if name in ("global", "pan"):
                if name in seen_sections:
                    raise ConfigError(f"duplicate section [{name}]", lineno)
            elif name.startswith("node.") and len(name) > 5:
                node_id = name[5:]
                if any(n.node_id == node_id for n in scen.nodes):
                    raise ConfigError(f"duplicate node id {node_id!r}", lineno)
                node = NodeConfig(node_id, line=lineno)
                scen.nodes.append(node)
            else:
                raise ConfigError(f"unknown section [{name}]", lineno)
            seen_sections.add(name)
            section = name
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if section is None:
            raise ConfigError(f"key {key!r} outside any section", lineno)
        try:
            if section == "global":
                _assign(scen.global_, _GLOBAL_KEYS, key, value, lineno)
            elif section == "pan":
                _assign(scen.pan, _PAN_KEYS, key, value, lineno)
                pan_lines[key] = lineno
            elif key.startswith("pib."):
                attr = key[4:]
                if attr not in PibAttribute.__members__:
                    raise ConfigError(f"unknown PIB attribute {attr!r}", lineno)
                parsed = _pib_value(attr, value)
                phy_pib, mac_pib = scratch.setdefault(node.node_id, _scratch_pibs())
                status = (phy_pib if attr.startswith("phy") else mac_pib).set_attribute(attr, parsed)
                if status != Status.SUCCESS:
                    raise ConfigError(f"cannot set {attr} = {value} ({status})", lineno)
                node.pib[attr] = parsed
            elif key.startswith("traffic."):
                parts = key.split(".")
                if len(parts) != 3 or parts[2] not in _TRAFFIC_KEYS:
                    raise ConfigError(f"unknown key {key!r}", lineno)
                dest, conv = _TRAFFIC_KEYS[parts[2]]
                traffic.setdefault(parts[1], {})[dest] = conv(value)
                traffic_lines.setdefault(parts[1], lineno)
            else:
                _assign(node, _NODE_KEYS, key, value, lineno)
        except ConfigError:
            raise
        except (ValueError, TypeError, AttributeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
    finish_node()
    _validate(scen, pan_lines)
    return scen


def _assign(target: Any, table: dict, key: str, value: str, lineno: int) -> None:
    if key not in table:
        raise ConfigError(f"unknown key {key!r}", lineno)
    attr, conv = table[key]
    setattr(target, attr, conv(value))


def _validate(scen: Scenario, pan_lines: dict[str, int]) -> None:
    pan = scen.pan
    line = pan_lines.get("superframe_order") or pan_lines.get("beacon_order")
    if not 0 <= pan.beacon_order <= 15 or not 0 <= pan.superframe_order <= 15:
        raise ConfigError("beacon/superframe order must be 0..15", line)
    if pan.beacon_order < 15 and pan.superframe_order > pan.beacon_order:
        raise ConfigError(f"superframe_order {pan.superframe_order} exceeds beacon_order {pan.beacon_order}", line)
    if not 0 <= pan.channel <= 26:
        raise ConfigError("channel must be 0..26", pan_lines.get("channel"))
    if not 0 <= pan.pan_id < 0xFFFF:
        raise ConfigError("pan_id must be 0x0000..0xfffe", pan_lines.get("pan_id"))
    coords = [n for n in scen.nodes if n.is_coordinator]
    if len(coords) != 1:
        raise ConfigError(f"exactly one coordinator required, found {len(coords)}")
    if scen.global_.duration_ms <= 0:
        raise ConfigError("duration_ms must be positive")
    ids = {n.node_id for n in scen.nodes}
    for n in scen.nodes:
        for t in n.traffic:
            if t.dst not in ids and t.dst not in ("coordinator", "broadcast") and not t.dst.startswith("0x"):
                raise ConfigError(f"traffic {t.name!r} on node {n.node_id!r}: unknown destination {t.dst!r}",
                                  n.line)
        if n.is_coordinator and n.associate:
            raise ConfigError(f"coordinator {n.node_id!r} cannot associate", n.line)
