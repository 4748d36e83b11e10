import random

from wpansim.enums import Status
from wpansim.pib import MacPib, PhyPib, PibAttribute


def fresh(seed=0):
    return MacPib(PhyPib(), 0xABCD, random.Random(seed))


def test_standard_defaults():
    pib = fresh()
    assert pib.get_attribute("macMinBE") == 3
    assert pib.get_attribute(PibAttribute.macMaxBE) == 5
    assert pib.get_attribute("macMaxCSMABackoffs") == 4
    assert pib.get_attribute("macMaxFrameRetries") == 3
    assert pib.get_attribute("macTransactionPersistenceTime") == 0x01F4
    assert pib.get_attribute("macPANId") == 0xFFFF
    assert pib.get_attribute("macShortAddress") == 0xFFFF
    assert pib.get_attribute(0x6F) == 0xABCD


def test_derived_timing_attributes():
    pib = fresh()
    # 20 + 12 + 10 SHR symbols + ceil(6 octets * 8 / 4 bits) at 2.4 GHz
    assert pib.macAckWaitDuration == 54
    # m = min(5 - 3, 4) = 2: (2^3 + 2^4) + (2^5 - 1)(4 - 2) backoff periods, plus the longest frame
    assert pib.macMaxFrameTotalWaitTime == (8 + 16 + 31 * 2) * 20 + 266
    pib.phy.set_attribute("phyCurrentChannel", 0)
    assert pib.macAckWaitDuration == 20 + 12 + 40 + 48


def test_unknown_attribute():
    pib = fresh()
    assert pib.set_attribute("macNoSuchThing", 1) == Status.UNSUPPORTED_ATTRIBUTE
    try:
        pib.get_attribute(0x99)
    except LookupError as exc:
        assert exc.status == Status.UNSUPPORTED_ATTRIBUTE
    else:
        raise AssertionError("expected an error")


def test_set_and_ranges():
    pib = fresh()
    assert pib.set_attribute("macMinBE", 2) == Status.SUCCESS
    assert pib.get_attribute("macMinBE") == 2
    assert pib.set_attribute("macMinBE", 9) == Status.INVALID_PARAMETER
    assert pib.set_attribute("macMinBE", 6) == Status.INVALID_PARAMETER  # macMaxBE is 5
    assert pib.set_attribute("macMaxBE", 8) == Status.SUCCESS
    assert pib.set_attribute("macMinBE", 6) == Status.SUCCESS
    assert pib.set_attribute("macMaxBE", 5) == Status.INVALID_PARAMETER  # below macMinBE now
    assert pib.set_attribute("macRxOnWhenIdle", 1) == Status.INVALID_PARAMETER  # type check
    assert pib.set_attribute("macAckWaitDuration", 60) == Status.READ_ONLY
    assert pib.set_attribute("macExtendedAddress", 1) == Status.READ_ONLY


def test_phy_attributes():
    phy = PhyPib()
    assert phy.set_attribute("phyCCAMode", 2) == Status.SUCCESS
    assert phy.set_attribute("phyCCAMode", 4) == Status.INVALID_PARAMETER
    assert phy.set_attribute("phyCurrentChannel", 27) == Status.INVALID_PARAMETER
    assert phy.get_attribute("phySHRDuration") == 10
    assert phy.get_attribute("phyMaxFrameDuration") == 10 + (127 + 1) * 2


def test_reset():
    pib = fresh()
    pib.set_attribute("macMaxCSMABackoffs", 1)
    pib.set_attribute("macPANId", 0x4242)
    pib.reset(False)
    assert pib.macPANId == 0x4242
    pib.reset(True)
    assert pib.macMaxCSMABackoffs == 4
    assert pib.macPANId == 0xFFFF


def test_reset_dsn_is_reproducible():
    a, b = fresh(7), fresh(7)
    for pib in (a, b):
        pib.next_dsn()
        pib.reset(True)
    assert a.macDSN == b.macDSN
    assert fresh(7).macDSN != fresh(8).macDSN or fresh(7).macBSN != fresh(8).macBSN


def test_sequence_numbers_wrap():
    pib = fresh()
    pib.store("macDSN", 255)
    assert pib.next_dsn() == 255
    assert pib.macDSN == 0
