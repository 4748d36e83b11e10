"""Post-run invariant checks over statistics and the trace (the CLI's ``--check``)."""

from __future__ import annotations

from bisect import bisect_right
from typing import TYPE_CHECKING

from ..enums import (
    A_BASE_SLOT_DURATION,
    A_MAX_GTS_DESCRIPTORS,
    A_MIN_CAP_LENGTH,
    A_UNIT_BACKOFF_PERIOD,
    timing_for_channel,
)

if TYPE_CHECKING:
    from .run import RunResult


def check_accounting(result: RunResult) -> list[str]:
    bad = []
    sent = {nid: ns.frames_sent for nid, ns in result.stats.nodes.items()}
    for (src, dst), link in result.stats.links.items():
        parts = link.delivered + link.collided + link.below_sensitivity + link.missed + link.in_flight
        if parts != link.observed:
            bad.append(f"link {src}->{dst}: outcomes {parts} != observed {link.observed}")
        if sent.get(src, 0) < link.delivered + link.collided + link.below_sensitivity:
            bad.append(f"link {src}->{dst}: sent {sent.get(src, 0)} < received + collided + below-sensitivity")
    return bad


def check_monotone(result: RunResult) -> list[str]:
    last = 0
    for i, rec in enumerate(result.trace.records):
        if rec.time < last:
            return [f"trace record {i} at {rec.time} precedes {last}"]
        last = rec.time
    return []


def check_attempts(result: RunResult) -> list[str]:
    bad = []
    simu = result.simulation
    for rec in result.trace.select(layer="MAC", event="TX"):
        attempt = rec.get("attempt")
        if attempt is None:
            continue
        limit = 1 + simu.node(rec.node).mac_pib.macMaxFrameRetries
        if attempt > limit:
            bad.append(f"{rec.time} {rec.node}: attempt {attempt} exceeds {limit}")
    return bad


def _beacons(result: RunResult) -> tuple[list[int], list[int]]:
    coord = result.simulation.coordinator.node_id
    recs = result.trace.select(node=coord, layer="MAC", event="BEACON.tx")
    return [r.time for r in recs], [r.get("fcs") for r in recs]


def check_slotted_alignment(result: RunResult) -> list[str]:
    simu = result.simulation
    if simu.scenario.pan.beacon_order >= 15:
        return []
    starts, _ = _beacons(result)
    if not starts:
        return []
    unit = A_UNIT_BACKOFF_PERIOD * timing_for_channel(simu.scenario.pan.channel).symbol_us
    bad = []
    for rec in result.trace.records:
        if rec.layer != "MAC" or not rec.get("slotted"):
            continue
        if rec.event not in ("TX", "CSMA.cca"):
            continue
        i = bisect_right(starts, rec.time) - 1
        if i < 0:
            bad.append(f"{rec.time} {rec.node}: slotted {rec.event} before the first beacon")
        elif (rec.time - starts[i]) % unit:
            bad.append(f"{rec.time} {rec.node}: {rec.event} off the backoff grid by {(rec.time - starts[i]) % unit}")
    return bad


def check_gts(result: RunResult) -> list[str]:
    simu = result.simulation
    pan = simu.scenario.pan
    bad = []
    if pan.beacon_order >= 15:
        return bad
    timing = timing_for_channel(pan.channel)
    slot = A_BASE_SLOT_DURATION * 2 ** pan.superframe_order * timing.symbol_us
    starts, fcs_list = _beacons(result)
    for rec in result.trace.select(layer="MAC", event="TX"):
        if rec.get("kind") != "GTS":
            continue
        begin, end = rec.get("slot_start"), rec.get("slot_end")
        finish = rec.time + timing.airtime(rec.get("len"))
        if not (begin <= rec.time and finish <= end):
            bad.append(f"{rec.time} {rec.node}: GTS frame [{rec.time}, {finish}) outside [{begin}, {end})")
        i = bisect_right(starts, rec.time) - 1
        if i >= 0 and begin < starts[i] + (fcs_list[i] + 1) * slot:
            bad.append(f"{rec.time} {rec.node}: GTS window starts inside the CAP")
    for rec in result.trace.select(layer="MAC", event="MLME-GTS.indication"):
        if rec.get("descriptors") > A_MAX_GTS_DESCRIPTORS:
            bad.append(f"{rec.time}: {rec.get('descriptors')} GTS descriptors allocated")
        cap_symbols = (rec.get("fcs") + 1) * A_BASE_SLOT_DURATION * 2 ** pan.superframe_order
        if cap_symbols < A_MIN_CAP_LENGTH:
            bad.append(f"{rec.time}: CAP shrank to {cap_symbols} symbols")
    return bad


CHECKS = {
    "accounting": check_accounting,
    "monotone": check_monotone,
    "attempts": check_attempts,
    "slotted-alignment": check_slotted_alignment,
    "gts": check_gts,
}


def run_checks(result: RunResult) -> dict[str, list[str]]:
    return {name: fn(result) for name, fn in CHECKS.items()}
