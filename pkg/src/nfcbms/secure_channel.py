"""Symmetric crypto core for the secure readout channel.

Three pieces live here:

* session key derivation from the pre-embedded master key and the two
  handshake challenges (counter-mode CMAC PRF with distinct labels, so
  the encryption and MAC keys are domain separated),
* the double encryption / double decryption challenge transforms used
  by the mutual-authentication handshake (AES-128-CBC applied twice
  with an all-zero IV; the two directions are deliberately different
  ciphers so a challenge oracle in one direction is useless for the
  other),
* the record channel: AES-128-CBC in Encrypt-then-MAC mode with CMAC
  tag chaining, where each record's MAC input is
  ``sec_data | IV | add_data | previous_tag`` so replayed, reordered,
  duplicated or dropped records break the chain.
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.cmac import CMAC

from .errors import (
    BadLength,
    ChannelNotEstablished,
    InvalidNonce,
    KeyDerivationError,
    PaddingError,
    TagMismatch,
)

BLOCK = 16
KEY_LEN = 16
NONCE_LEN = 16
TAG_LEN = 16
CHAIN_SENTINEL = bytes(TAG_LEN)

_ZERO_IV = bytes(BLOCK)
_KDF_LABEL_ENC = bytes([0x01]) + b"SKEYENC"
_KDF_LABEL_MAC = bytes([0x02]) + b"SKEYMAC"
_KDF_OUTLEN = b"\x00\x80"  # 128 output bits, big endian


def _aes_cbc(key: bytes, iv: bytes, data: bytes, *, decrypt: bool) -> bytes:
    cipher = Cipher(algorithms.AES(key), modes.CBC(iv))
    op = cipher.decryptor() if decrypt else cipher.encryptor()
    return op.update(data) + op.finalize()


def _aes_cmac(key: bytes, data: bytes) -> bytes:
    mac = CMAC(algorithms.AES(key))
    mac.update(data)
    return mac.finalize()


def pkcs7_pad(data: bytes) -> bytes:
    n = BLOCK - (len(data) % BLOCK)
    return data + bytes([n]) * n


def pkcs7_unpad(data: bytes) -> bytes:
    if not data or len(data) % BLOCK:
        raise PaddingError("ciphertext length not block aligned")
    n = data[-1]
    if not 1 <= n <= BLOCK or data[-n:] != bytes([n]) * n:
        raise PaddingError("bad padding byte pattern")
    return data[:-n]


@dataclass(frozen=True)
class MasterKey:
    """Pre-embedded 16-byte master key. Never serialized or logged."""

    bytes: bytes

    def __post_init__(self) -> None:
        if len(self.bytes) != KEY_LEN:
            raise BadLength(f"master key must be {KEY_LEN} bytes")

    def __repr__(self) -> str:  # keep key material out of logs and tracebacks
        return "MasterKey(<redacted>)"


@dataclass(frozen=True)
class SessionKeys:
    """Derived per-session keys: one for AES-CBC, one for CMAC."""

    k_enc: bytes
    k_mac: bytes

    def __post_init__(self) -> None:
        if len(self.k_enc) != KEY_LEN or len(self.k_mac) != KEY_LEN:
            raise BadLength("session keys must be 16 bytes each")
        if self.k_enc == self.k_mac:
            raise KeyDerivationError("encryption and MAC key must differ")

    def __repr__(self) -> str:
        return "SessionKeys(<redacted>)"


@dataclass(frozen=True)
class Nonce:
    """16-byte challenge nonce; all-zero values are forbidden."""

    bytes: bytes

    def __post_init__(self) -> None:
        if len(self.bytes) != NONCE_LEN:
            raise BadLength(f"nonce must be {NONCE_LEN} bytes")
        if self.bytes == bytes(NONCE_LEN):
            raise InvalidNonce("nonce cannot be all-zero")


def new_nonce(rng) -> Nonce:
    """Draw a fresh nonce; the all-zero draw is rejected and retried."""
    while True:
        raw = rng.randbytes(NONCE_LEN)
        if raw != bytes(NONCE_LEN):
            return Nonce(raw)


@dataclass(frozen=True)
class SecureRecord:
    """One sealed channel unit: IV, ciphertext, associated data, chained tag."""

    iv: bytes
    sec_data: bytes
    add_data: bytes
    tag: bytes

    def __post_init__(self) -> None:
        if len(self.iv) != BLOCK:
            raise BadLength("record IV must be 16 bytes")
        if len(self.tag) != TAG_LEN:
            raise BadLength("record tag must be 16 bytes")
        if not self.sec_data or len(self.sec_data) % BLOCK:
            raise BadLength("sec_data must be a positive multiple of 16 bytes")


@dataclass
class ChannelState:
    """Per-endpoint channel state; the two chain directions are independent."""

    keys: SessionKeys | None = None
    last_tag_sent: bytes = CHAIN_SENTINEL
    last_tag_received: bytes = CHAIN_SENTINEL
    records_sealed: int = 0
    records_opened: int = 0

    @classmethod
    def for_keys(cls, keys: SessionKeys) -> "ChannelState":
        return cls(keys=keys)


def derive_session_keys(master: MasterKey, ch_r: Nonce, ch_t: Nonce) -> SessionKeys:
    """Derive the session key pair from the master key and both challenges.

    Counter-mode PRF: ``CMAC(K_M, ctr | label | ch_r | ch_t | len)`` with
    distinct counters and labels per output key, so neither key is a
    function of the other and KDF inputs are fixed-length, closing the
    CBC-MAC variable-length weakness for this use.
    """
    if ch_r.bytes == ch_t.bytes:
        raise InvalidNonce("challenges must differ within a handshake")
    k_enc = _aes_cmac(master.bytes, _KDF_LABEL_ENC + ch_r.bytes + ch_t.bytes + _KDF_OUTLEN)
    k_mac = _aes_cmac(master.bytes, _KDF_LABEL_MAC + ch_r.bytes + ch_t.bytes + _KDF_OUTLEN)
    return SessionKeys(k_enc=k_enc, k_mac=k_mac)


def double_encrypt(key: MasterKey, payload: bytes, *, pad: bool = True) -> bytes:
    """Encrypt twice under AES-128-CBC with an all-zero IV.

    With ``pad=True`` (default) the payload is PKCS#7 padded first.  The
    handshake challenge transform passes ``pad=False`` and supplies an
    exact two-block payload, keeping the transform length stable so it
    can be inverted from either direction.
    """
    if not payload:
        raise BadLength("payload must be non-empty")
    data = pkcs7_pad(payload) if pad else payload
    if len(data) % BLOCK:
        raise BadLength("unpadded payload must be block aligned")
    once = _aes_cbc(key.bytes, _ZERO_IV, data, decrypt=False)
    return _aes_cbc(key.bytes, _ZERO_IV, once, decrypt=False)


def double_decrypt(key: MasterKey, payload: bytes, *, unpad: bool = True) -> bytes:
    """Decrypt twice under AES-128-CBC with an all-zero IV.

    Inverse of :func:`double_encrypt`.  With ``unpad=False`` the raw
    two-pass decryption is returned; that is the reader-side challenge
    transform, where the input is not a padded ciphertext at all.
    """
    if not payload or len(payload) % BLOCK:
        raise BadLength("payload must be a positive multiple of 16 bytes")
    once = _aes_cbc(key.bytes, _ZERO_IV, payload, decrypt=True)
    twice = _aes_cbc(key.bytes, _ZERO_IV, once, decrypt=True)
    return pkcs7_unpad(twice) if unpad else twice


def compute_chained_tag(
    k_mac: bytes,
    sec_data: bytes,
    iv: bytes,
    add_data: bytes,
    previous_tag: bytes,
) -> bytes:
    """CMAC over ``sec_data | IV | add_data | previous_tag``."""
    if len(iv) != BLOCK or len(previous_tag) != TAG_LEN:
        raise BadLength("iv and previous_tag must be 16 bytes")
    return _aes_cmac(k_mac, sec_data + iv + add_data + previous_tag)


def seal_record(state: ChannelState, plaintext: bytes, add_data: bytes, rng) -> SecureRecord:
    """Encrypt-then-MAC one record and advance the send chain."""
    if state.keys is None:
        raise ChannelNotEstablished("no session keys")
    iv = rng.randbytes(BLOCK)
    sec_data = _aes_cbc(state.keys.k_enc, iv, pkcs7_pad(plaintext), decrypt=False)
    tag = compute_chained_tag(state.keys.k_mac, sec_data, iv, add_data, state.last_tag_sent)
    state.last_tag_sent = tag
    state.records_sealed += 1
    return SecureRecord(iv=iv, sec_data=sec_data, add_data=add_data, tag=tag)


def open_record(state: ChannelState, record: SecureRecord) -> bytes:
    """Verify the chained tag, then (and only then) decrypt.

    The expected tag is computed against this endpoint's receive chain,
    so a replayed or out-of-order record fails even though its tag was
    once valid.
    """
    if state.keys is None:
        raise ChannelNotEstablished("no session keys")
    expected = compute_chained_tag(
        state.keys.k_mac, record.sec_data, record.iv, record.add_data, state.last_tag_received
    )
    if not hmac.compare_digest(expected, record.tag):
        raise TagMismatch("record tag does not verify at this chain position")
    plaintext = pkcs7_unpad(_aes_cbc(state.keys.k_enc, record.iv, record.sec_data, decrypt=True))
    state.last_tag_received = record.tag
    state.records_opened += 1
    return plaintext
