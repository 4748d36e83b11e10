import pytest

from wpansim.enums import Status
from helpers import Bench, StubRng, beacon_pan, build, run

SYM = 16


def beacon_times(result, node="coord"):
    return [r.time for r in result.trace.select(node=node, layer="MAC", event="BEACON.tx")]


@pytest.mark.parametrize("bo", [0, 3, 6])
def test_beacon_interval_exact(bo):
    bi = 960 * 2 ** bo * SYM
    res = run(beacon_pan(bo, duration_ms=11 * bi / 1000))
    times = beacon_times(res)
    assert len(times) >= 10
    assert {b - a for a, b in zip(times, times[1:])} == {bi}


def test_bo6_spacing_value():
    res = run(beacon_pan(6, duration_ms=3000))
    times = beacon_times(res)
    assert times[1] - times[0] == 983_040


def test_non_beacon_pan_sends_no_beacons():
    res = run(beacon_pan(15, duration_ms=3000))
    assert beacon_times(res) == []


def test_start_rejects_so_above_bo():
    b = Bench()
    m = b.node("c", short=0)
    assert m.mlme_start_request(0x1, 11, 6, 7) == Status.INVALID_PARAMETER
    m.pib.store("macShortAddress", 0xFFFF)
    assert m.mlme_start_request(0x1, 11, 6, 6) == Status.NO_SHORT_ADDRESS


DEVICE = """
[node.dev]
position = 10, 0
short_address = 0x0001
traffic.t.pattern = periodic
traffic.t.period_ms = 1000
traffic.t.size = 10
traffic.t.dst = coordinator
traffic.t.start_ms = 100
traffic.t.stop_ms = 101
"""


def test_slotted_idle_channel_two_ccas_then_transmit_on_boundaries():
    simu = build(beacon_pan(6, duration_ms=1000) + DEVICE)
    simu.node("dev").mac._rng = StubRng()
    res = simu.run()
    start = beacon_times(res)[0]
    ccas = res.trace.select(node="dev", layer="MAC", event="CSMA.cca")
    assert [c.get("cw") for c in ccas] == [2, 1]
    assert ccas[1].time - ccas[0].time == 20 * SYM
    tx = [t for t in res.trace.select(node="dev", layer="MAC", event="TX") if t.get("kind") == "data"][0]
    assert tx.time - ccas[1].time == 20 * SYM
    for t in (ccas[0].time, ccas[1].time, tx.time):
        assert (t - start) % (20 * SYM) == 0
    assert res.stats.nodes["dev"].msdu_delivered == 1


def test_device_tracks_beacons():
    res = run(beacon_pan(4, duration_ms=2000) + DEVICE)
    tx = beacon_times(res)
    rx = [r.get("start") for r in res.trace.select(node="dev", layer="MAC", event="BEACON.rx")]
    assert rx == tx[:len(rx)]
    assert len(rx) >= len(tx) - 1


def test_sync_loss_after_four_missed_beacons():
    bi = 960 * 2 ** 4 * SYM
    text = beacon_pan(4, duration_ms=3000, extra="silence_ms = 1000") + DEVICE
    res = run(text)
    last = beacon_times(res)[-1]
    misses = res.trace.select(node="dev", layer="MAC", event="BEACON.miss")
    loss = res.trace.select(node="dev", layer="MAC", event="MLME-SYNC-LOSS.indication")
    assert [m.get("count") for m in misses] == [1, 2, 3, 4]
    assert len(loss) == 1 and loss[0].get("reason") == Status.BEACON_LOSS
    # each miss is declared a fixed guard after an expected beacon time
    guard = misses[0].time - (last + bi)
    assert 0 < guard < 20 * SYM * 20
    assert [m.time for m in misses] == [last + k * bi + guard for k in range(1, 5)]
    assert loss[0].time == misses[-1].time


def test_beacon_without_pending_triggers_no_poll():
    res = run(beacon_pan(4, duration_ms=2000) + DEVICE)
    polls = [t for t in res.trace.select(node="dev", layer="MAC", event="TX") if t.get("kind") == "poll"]
    assert polls == []
