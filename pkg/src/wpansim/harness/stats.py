"""Run statistics: per node, per link and aggregate."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .run import Simulation


@dataclass
class NodeStats:
    frames_sent: int = 0
    frames_received: int = 0
    collided: int = 0
    below_sensitivity: int = 0
    missed: int = 0
    acks_sent: int = 0
    acks_received: int = 0
    retries: int = 0
    csma_failures: int = 0
    no_ack: int = 0
    msdu_generated: int = 0
    msdu_submitted: int = 0
    msdu_confirmed: int = 0
    msdu_delivered: int = 0
    delivery_ratio: float = 0.0
    latency_min_us: int = 0
    latency_mean_us: float = 0.0
    latency_max_us: int = 0
    beacons_sent: int = 0
    beacons_received: int = 0
    beacons_missed: int = 0
    gts_frames: int = 0
    gts_utilization: float = 0.0


@dataclass
class LinkStats:
    observed: int = 0
    delivered: int = 0
    collided: int = 0
    below_sensitivity: int = 0
    missed: int = 0
    in_flight: int = 0  # reception still under way when the run stopped


@dataclass
class RunStats:
    seed: int
    duration_us: int
    events: int
    nodes: dict[str, NodeStats] = field(default_factory=dict)
    links: dict[tuple[str, str], LinkStats] = field(default_factory=dict)
    total: NodeStats = field(default_factory=NodeStats)

    def flat(self) -> list[tuple[str, Any]]:
        out: list[tuple[str, Any]] = [("seed", self.seed), ("duration_us", self.duration_us),
                                      ("events", self.events)]
        out += [(f"total.{k}", v) for k, v in asdict(self.total).items()]
        for nid, ns in self.nodes.items():
            out += [(f"node.{nid}.{k}", v) for k, v in asdict(ns).items()]
        for (src, dst), ls in sorted(self.links.items()):
            out += [(f"link.{src}.{dst}.{k}", v) for k, v in asdict(ls).items()]
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "duration_us": self.duration_us,
            "events": self.events,
            "total": asdict(self.total),
            "nodes": {nid: asdict(ns) for nid, ns in self.nodes.items()},
            "links": [{"src": s, "dst": d, **asdict(ls)} for (s, d), ls in sorted(self.links.items())],
        }


def _latency(ns: NodeStats, samples: list[int]) -> None:
    if samples:
        ns.latency_min_us = min(samples)
        ns.latency_max_us = max(samples)
        ns.latency_mean_us = sum(samples) / len(samples)


def collect_stats(simu: Simulation) -> RunStats:
    stats = RunStats(simu.seed, simu.duration_us, simu.sim.delivered)
    all_latency: list[int] = []
    delivered_by_src: dict[str, int] = {}
    for src, _counter in simu.delivered:
        delivered_by_src[src] = delivered_by_src.get(src, 0) + 1
    for node in simu.nodes:
        phy, mac, app = node.phy, node.mac.stats, node.app
        ns = NodeStats(frames_sent=phy.frames_sent)
        for src, counters in phy.link_stats.items():
            ns.frames_received += counters.delivered
            ns.collided += counters.collided
            ns.below_sensitivity += counters.below_sensitivity
            ns.missed += counters.missed
            stats.links[(src, node.node_id)] = LinkStats(counters.observed, counters.delivered, counters.collided,
                                                         counters.below_sensitivity, counters.missed)
        if phy.current_rx is not None:
            stats.links[(phy.current_rx.source, node.node_id)].in_flight += 1
        ns.acks_sent, ns.acks_received = mac.acks_sent, mac.acks_received
        ns.retries, ns.csma_failures, ns.no_ack = mac.retries, mac.csma_failures, mac.no_ack
        ns.msdu_generated, ns.msdu_submitted = app.generated, app.submitted
        ns.msdu_confirmed = app.confirmed.get("SUCCESS", 0)
        ns.msdu_delivered = delivered_by_src.get(node.node_id, 0)
        tracked = sum(1 for (src, _c) in simu.sent_at if src == node.node_id)
        ns.delivery_ratio = ns.msdu_delivered / tracked if tracked else 0.0
        _latency(ns, app.latencies)
        all_latency += app.latencies
        ns.beacons_sent, ns.beacons_received, ns.beacons_missed = (mac.beacons_sent, mac.beacons_received,
                                                                   mac.beacons_missed)
        ns.gts_frames = mac.gts_frames
        if mac.gts_allocated_ticks:
            ns.gts_utilization = mac.gts_busy_ticks / mac.gts_allocated_ticks
        stats.nodes[node.node_id] = ns
    total = stats.total
    for f in fields(NodeStats):
        if f.type in ("int", int):
            setattr(total, f.name, sum(getattr(ns, f.name) for ns in stats.nodes.values()))
    _latency(total, all_latency)
    tracked = len(simu.sent_at)
    total.delivery_ratio = len(simu.delivered) / tracked if tracked else 0.0
    busy = sum(n.mac.stats.gts_busy_ticks for n in simu.nodes)
    alloc = sum(n.mac.stats.gts_allocated_ticks for n in simu.nodes)
    total.gts_utilization = busy / alloc if alloc else 0.0
    return stats
