from wpansim.enums import GtsDirection, Status
from wpansim.frames import ShortAddress
from wpansim.harness import SCENARIO_DIR
from wpansim.harness.checks import check_gts
from wpansim.mac import McpsDataRequest, TxOptions
from wpansim.mac.superframe import GtsTable
from helpers import Bench, beacon_pan, build, run

TX = GtsDirection.TRANSMIT


def test_seven_descriptors_then_denied():
    table = GtsTable(4)
    for addr in range(1, 8):
        status, desc = table.allocate(addr, 1, TX)
        assert status == Status.SUCCESS
        assert desc.starting_slot == 16 - addr
    status, desc = table.allocate(8, 1, TX)
    assert status == Status.DENIED
    assert desc.starting_slot == 0
    assert len(table.allocated) == 7


def test_minimum_cap_is_protected_at_so0():
    table = GtsTable(0)
    status, _ = table.allocate(1, 8, TX)
    assert status == Status.SUCCESS
    assert table.final_cap_slot == 7
    assert table.cap_length_symbols() == 8 * 60 == 480
    # one more slot would leave 420 symbols, below aMinCAPLength
    status, _ = table.allocate(2, 1, TX)
    assert status == Status.DENIED
    assert table.final_cap_slot == 7


def test_same_device_and_direction_twice_is_denied():
    table = GtsTable(4)
    assert table.allocate(1, 2, TX)[0] == Status.SUCCESS
    assert table.allocate(1, 1, TX)[0] == Status.DENIED
    assert table.allocate(1, 1, GtsDirection.RECEIVE)[0] == Status.SUCCESS


def test_deallocation_repacks_toward_the_end():
    table = GtsTable(4)
    table.allocate(1, 2, TX)
    table.allocate(2, 3, TX)
    table.allocate(3, 1, TX)
    assert table.deallocate(1, TX)
    assert [(d.short_address, d.starting_slot, d.length) for d in table.allocated] == [(2, 13, 3), (3, 12, 1)]
    assert table.final_cap_slot == 11
    assert not table.deallocate(1, TX)


def test_descriptors_are_advertised_for_four_beacons():
    table = GtsTable(4)
    _, desc = table.allocate(1, 2, TX)
    seen = [table.beacon_descriptors() for _ in range(6)]
    assert seen == [(desc,)] * 4 + [()] * 2


EIGHT_DEVICES = "".join(f"""
[node.d{i}]
position = {3 + i}, 2
short_address = 0x{i:04x}
gts = transmit:1@{400 + 300 * i}
""" for i in range(1, 9))


def test_eighth_request_denied_end_to_end():
    res = run(beacon_pan(4, duration_ms=4000) + EIGHT_DEVICES)
    simu = res.simulation
    statuses = [simu.node(f"d{i}").gts_status for i in range(1, 9)]
    assert statuses == [Status.SUCCESS] * 7 + [Status.DENIED]
    ind = res.trace.select(node="coord", layer="MAC", event="MLME-GTS.indication")
    assert [r.get("descriptors") for r in ind] == list(range(1, 8)) + [7]
    assert ind[-1].get("status") == Status.DENIED
    assert check_gts(res) == []


CAP_FLOOR = """
[node.big]
position = 5, 0
short_address = 0x0001
gts = transmit:8@100

[node.small]
position = 0, 5
short_address = 0x0002
gts = transmit:1@300
"""


def test_cap_floor_end_to_end_at_so0():
    res = run(beacon_pan(0, duration_ms=600) + CAP_FLOOR)
    simu = res.simulation
    assert simu.node("big").gts_status == Status.SUCCESS
    assert simu.node("small").gts_status == Status.DENIED
    ind = res.trace.select(node="coord", layer="MAC", event="MLME-GTS.indication")
    assert [r.get("fcs") for r in ind] == [7, 7]


def test_shipped_gts_scenario_stays_inside_windows():
    res = build((SCENARIO_DIR / "gts.cfg").read_text()).run()
    gts_tx = [r for r in res.trace.select(layer="MAC", event="TX") if r.get("kind") == "GTS"]
    assert len(gts_tx) > 50
    assert {r.node for r in gts_tx} == {"dev1", "dev2"}
    assert check_gts(res) == []
    # no CSMA-CA precedes a GTS transmission
    for node in ("dev1", "dev2"):
        assert all(r.get("kind") != "data" for r in res.trace.select(node=node, layer="MAC", event="TX"))


def test_gts_send_without_allocation_is_invalid_gts():
    b = Bench()
    c = b.node("c", (0, 0), 0)
    assert c.mlme_start_request(0x1234, 11, 15, 15) == Status.SUCCESS
    a = b.node("a", (5, 0), 1)
    out = []
    a.mcps_data_request(McpsDataRequest(ShortAddress(0), b"g", TxOptions(gts=True))).add_callback(out.append)
    b.sim.run(100_000)
    assert out[0].status == Status.INVALID_GTS
