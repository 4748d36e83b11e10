"""Discrete-event simulator of the IEEE 802.15.4-2006 LR-WPAN stack."""

__version__ = "0.1.0"
