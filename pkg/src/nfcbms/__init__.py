"""Secure wireless BMS readout simulator.

A desk-scale model of an NFC-based battery management system readout
stack: mutual authentication handshake, tag-chained Encrypt-then-MAC
record channel, NDEF-style framing, diagnostic payloads, wake-up power
simulation, a belief-logic protocol verifier, and an adversary harness.
"""

from . import adversary, ban, diagnostics, errors, handshake, passport, secure_channel, sndef, wakeup

__all__ = [
    "adversary",
    "ban",
    "diagnostics",
    "errors",
    "handshake",
    "passport",
    "secure_channel",
    "sndef",
    "wakeup",
]

__version__ = "0.1.0"
