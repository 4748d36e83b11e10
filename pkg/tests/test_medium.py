import math

import pytest

from wpansim.engine import Simulator
from wpansim.enums import RxOutcome, TrxState
from wpansim.medium import NOISE_FLOOR_DBM, Medium, airtime, dbm_to_mw, mw_to_dbm
from helpers import Bench


def test_airtime_maximum_frame_at_2450():
    assert airtime(11, 127) == (6 + 127) * 2 * 16 == 4256


def test_airtime_other_bands():
    assert airtime(0, 10) == (6 + 10) * 8 * 50  # 868 MHz: 20 kb/s, 1 bit per 50 us symbol
    assert airtime(1, 10) == (6 + 10) * 8 * 25  # 915 MHz: 40 kb/s


def test_path_loss_formula():
    sim = Simulator()
    m = Medium(sim)
    m.register("a", (0, 0))
    m.register("b", (1, 0))
    m.register("c", (10, 0))
    m.register("d", (20, 0))
    m.register("e", (0, 0))
    tx = m.begin_transmission("a", 11, 0, b"\x00" * 5)
    assert m.received_power(tx, "b") == pytest.approx(-40.2)
    assert m.received_power(tx, "c") == pytest.approx(-60.2)
    assert m.received_power(tx, "c") - m.received_power(tx, "d") == pytest.approx(20 * math.log10(2))
    # distances below the 1 m reference are clamped to it
    assert m.received_power(tx, "e") == pytest.approx(-40.2)


def test_other_channel_hears_nothing():
    bench = Bench()
    a = bench.phy("a", (0, 0))
    b = bench.phy("b", (5, 0), channel=12)
    b.set_trx_state(TrxState.RX_ON)
    bench.medium.begin_transmission("a", 11, 0, b"\x00" * 10)
    assert b.state == TrxState.RX_ON
    assert "a" not in b.link_stats


def test_outcomes_on_a_line():
    sim = Simulator()
    m = Medium(sim)
    for nid, x in (("a", 0), ("r", 10), ("b", 20), ("far", 5000)):
        m.register(nid, (x, 0))
    lone = m.begin_transmission("a", 11, 0, b"\x00" * 10)
    sim.run(lone.end)
    assert m.receive_outcome("r", lone) == RxOutcome.DELIVERED
    assert m.receive_outcome("far", lone) == RxOutcome.BELOW_SENSITIVITY
    t1 = m.begin_transmission("a", 11, 0, b"\x00" * 10)
    sim.schedule(100, lambda: m.begin_transmission("b", 11, 0, b"\x00" * 10))
    sim.run(10_000)
    t2 = [t for t in m._history if t.source == "b"][0]
    assert m.receive_outcome("r", t1) == RxOutcome.COLLIDED
    assert m.receive_outcome("r", t2) == RxOutcome.COLLIDED


def test_back_to_back_frames_do_not_collide():
    sim = Simulator()
    m = Medium(sim)
    for nid, x in (("a", 0), ("r", 10), ("b", 20)):
        m.register(nid, (x, 0))
    t1 = m.begin_transmission("a", 11, 0, b"\x00" * 10)
    sim.schedule_at(t1.end, lambda: m.begin_transmission("b", 11, 0, b"\x00" * 10))
    sim.run(10_000)
    assert m.receive_outcome("r", t1) == RxOutcome.DELIVERED


def test_energy_sensing():
    sim = Simulator()
    m = Medium(sim)
    m.register("s", (0, 0))
    m.register("a", (100, 0))  # -80.2 dBm at s
    m.register("b", (0, 10))  # -60.2 dBm at s
    assert m.sense_energy("s", 11, 128) == NOISE_FLOOR_DBM
    m.begin_transmission("b", 11, 0, b"\x00" * 20)
    assert m.sense_energy("s", 11, 128) == pytest.approx(-60.2)
    m.begin_transmission("a", 11, 0, b"\x00" * 20)
    expected = mw_to_dbm(dbm_to_mw(-60.2) + dbm_to_mw(-80.2))
    assert m.sense_energy("s", 11, 128) == pytest.approx(expected)
    assert m.current_energy("s", 11) == pytest.approx(expected)
    assert m.sense_energy("s", 12, 128) == NOISE_FLOOR_DBM


def test_energy_window_remembers_recent_frames():
    sim = Simulator()
    m = Medium(sim)
    m.register("s", (0, 0))
    m.register("b", (0, 10))
    tx = m.begin_transmission("b", 11, 0, b"\x00" * 2)
    sim.run(tx.end)
    # the frame ended at now: a window reaching back over it still sees it
    assert m.sense_energy("s", 11, 128) == pytest.approx(-60.2)
    sim.schedule(200, lambda: None)
    sim.run(tx.end + 200)
    assert m.sense_energy("s", 11, 128) == NOISE_FLOOR_DBM


def test_duplicate_registration_rejected():
    m = Medium(Simulator())
    m.register("a", (0, 0))
    with pytest.raises(ValueError):
        m.register("a", (1, 1))
