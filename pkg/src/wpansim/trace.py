"""Ordered event trace: one record per protocol event, ``<time_us> <node> <layer> <event> <details>``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator


@dataclass(frozen=True)
class TraceRecord:
    time: int
    node: str
    layer: str
    event: str
    details: tuple[tuple[str, Any], ...] = ()

    def get(self, key: str, default: Any = None) -> Any:
        for k, v in self.details:
            if k == key:
                return v
        return default

    def format(self) -> str:
        head = f"{self.time} {self.node} {self.layer} {self.event}"
        if not self.details:
            return head
        return head + " " + " ".join(f"{k}={_fmt(v)}" for k, v in self.details)


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.2f}"
    if isinstance(v, (bytes, bytearray)):
        return v.hex()
    return str(v)


class Trace:
    def __init__(self) -> None:
        self.records: list[TraceRecord] = []

    def emit(self, time: int, node: str, layer: str, event: str, **details: Any) -> None:
        self.records.append(TraceRecord(time, node, layer, event, tuple(details.items())))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def select(self, node: str | None = None, layer: str | None = None,
               event: str | None = None) -> list[TraceRecord]:
        return [r for r in self.records
                if (node is None or r.node == node)
                and (layer is None or r.layer == layer)
                and (event is None or r.event == event)]

    def lines(self) -> Iterator[str]:
        for r in self.records:
            yield r.format()


class Layer:
    """Base for per-node protocol entities that write to a shared trace."""

    LAYER = "?"

    def __init__(self, sim, node_id: str, tracer: Trace | None = None):
        self.sim = sim
        self.node_id = node_id
        self.tracer = tracer

    def trace(self, event: str, **details: Any) -> None:
        if self.tracer is not None:
            self.tracer.emit(self.sim.now, self.node_id, self.LAYER, event, **details)
