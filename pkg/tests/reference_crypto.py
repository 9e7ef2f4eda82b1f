"""Independent AES-128 / CBC / CMAC reference used as the test oracle.

Everything here is implemented from the public algorithm descriptions
(FIPS 197 for the block cipher, NIST SP 800-38A for CBC, SP 800-38B /
RFC 4493 for CMAC) without touching the library code under test.  It is
slow and that is fine: it only ever runs on test vectors.

test_reference_crypto.py pins this module against the published vectors
before anything else trusts it.
"""

from __future__ import annotations

BLOCK = 16

_SBOX = [
    0x63, 0x7C, 0x77, 0x7B, 0xF2, 0x6B, 0x6F, 0xC5, 0x30, 0x01, 0x67, 0x2B, 0xFE, 0xD7, 0xAB, 0x76,
    0xCA, 0x82, 0xC9, 0x7D, 0xFA, 0x59, 0x47, 0xF0, 0xAD, 0xD4, 0xA2, 0xAF, 0x9C, 0xA4, 0x72, 0xC0,
    0xB7, 0xFD, 0x93, 0x26, 0x36, 0x3F, 0xF7, 0xCC, 0x34, 0xA5, 0xE5, 0xF1, 0x71, 0xD8, 0x31, 0x15,
    0x04, 0xC7, 0x23, 0xC3, 0x18, 0x96, 0x05, 0x9A, 0x07, 0x12, 0x80, 0xE2, 0xEB, 0x27, 0xB2, 0x75,
    0x09, 0x83, 0x2C, 0x1A, 0x1B, 0x6E, 0x5A, 0xA0, 0x52, 0x3B, 0xD6, 0xB3, 0x29, 0xE3, 0x2F, 0x84,
    0x53, 0xD1, 0x00, 0xED, 0x20, 0xFC, 0xB1, 0x5B, 0x6A, 0xCB, 0xBE, 0x39, 0x4A, 0x4C, 0x58, 0xCF,
    0xD0, 0xEF, 0xAA, 0xFB, 0x43, 0x4D, 0x33, 0x85, 0x45, 0xF9, 0x02, 0x7F, 0x50, 0x3C, 0x9F, 0xA8,
    0x51, 0xA3, 0x40, 0x8F, 0x92, 0x9D, 0x38, 0xF5, 0xBC, 0xB6, 0xDA, 0x21, 0x10, 0xFF, 0xF3, 0xD2,
    0xCD, 0x0C, 0x13, 0xEC, 0x5F, 0x97, 0x44, 0x17, 0xC4, 0xA7, 0x7E, 0x3D, 0x64, 0x5D, 0x19, 0x73,
    0x60, 0x81, 0x4F, 0xDC, 0x22, 0x2A, 0x90, 0x88, 0x46, 0xEE, 0xB8, 0x14, 0xDE, 0x5E, 0x0B, 0xDB,
    0xE0, 0x32, 0x3A, 0x0A, 0x49, 0x06, 0x24, 0x5C, 0xC2, 0xD3, 0xAC, 0x62, 0x91, 0x95, 0xE4, 0x79,
    0xE7, 0xC8, 0x37, 0x6D, 0x8D, 0xD5, 0x4E, 0xA9, 0x6C, 0x56, 0xF4, 0xEA, 0x65, 0x7A, 0xAE, 0x08,
    0xBA, 0x78, 0x25, 0x2E, 0x1C, 0xA6, 0xB4, 0xC6, 0xE8, 0xDD, 0x74, 0x1F, 0x4B, 0xBD, 0x8B, 0x8A,
    0x70, 0x3E, 0xB5, 0x66, 0x48, 0x03, 0xF6, 0x0E, 0x61, 0x35, 0x57, 0xB9, 0x86, 0xC1, 0x1D, 0x9E,
    0xE1, 0xF8, 0x98, 0x11, 0x69, 0xD9, 0x8E, 0x94, 0x9B, 0x1E, 0x87, 0xE9, 0xCE, 0x55, 0x28, 0xDF,
    0x8C, 0xA1, 0x89, 0x0D, 0xBF, 0xE6, 0x42, 0x68, 0x41, 0x99, 0x2D, 0x0F, 0xB0, 0x54, 0xBB, 0x16,
]

_INV_SBOX = [0] * 256
for _i, _v in enumerate(_SBOX):
    _INV_SBOX[_v] = _i

_RCON = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36]


def _xtime(a: int) -> int:
    a <<= 1
    if a & 0x100:
        a = (a ^ 0x1B) & 0xFF
    return a


def _gmul(a: int, b: int) -> int:
    p = 0
    for _ in range(8):
        if b & 1:
            p ^= a
        b >>= 1
        a = _xtime(a)
    return p


def _expand_key(key: bytes) -> list[list[int]]:
    """AES-128 key schedule: 11 round keys of 16 bytes each."""
    assert len(key) == 16
    words = [list(key[4 * i:4 * i + 4]) for i in range(4)]
    for i in range(4, 44):
        temp = list(words[i - 1])
        if i % 4 == 0:
            temp = temp[1:] + temp[:1]
            temp = [_SBOX[b] for b in temp]
            temp[0] ^= _RCON[i // 4 - 1]
        words.append([t ^ w for t, w in zip(temp, words[i - 4])])
    return [sum(words[4 * r:4 * r + 4], []) for r in range(11)]


def _add_round_key(state: list[int], rk: list[int]) -> None:
    for i in range(16):
        state[i] ^= rk[i]


def _sub_bytes(state: list[int], box: list[int]) -> None:
    for i in range(16):
        state[i] = box[state[i]]


def _shift_rows(state: list[int]) -> list[int]:
    # state is column-major: byte (row, col) lives at index 4*col + row
    out = list(state)
    for row in range(1, 4):
        for col in range(4):
            out[4 * col + row] = state[4 * ((col + row) % 4) + row]
    return out


def _inv_shift_rows(state: list[int]) -> list[int]:
    out = list(state)
    for row in range(1, 4):
        for col in range(4):
            out[4 * ((col + row) % 4) + row] = state[4 * col + row]
    return out


def _mix_columns(state: list[int]) -> list[int]:
    out = [0] * 16
    for c in range(4):
        a = state[4 * c:4 * c + 4]
        out[4 * c + 0] = _gmul(a[0], 2) ^ _gmul(a[1], 3) ^ a[2] ^ a[3]
        out[4 * c + 1] = a[0] ^ _gmul(a[1], 2) ^ _gmul(a[2], 3) ^ a[3]
        out[4 * c + 2] = a[0] ^ a[1] ^ _gmul(a[2], 2) ^ _gmul(a[3], 3)
        out[4 * c + 3] = _gmul(a[0], 3) ^ a[1] ^ a[2] ^ _gmul(a[3], 2)
    return out


def _inv_mix_columns(state: list[int]) -> list[int]:
    out = [0] * 16
    for c in range(4):
        a = state[4 * c:4 * c + 4]
        out[4 * c + 0] = _gmul(a[0], 14) ^ _gmul(a[1], 11) ^ _gmul(a[2], 13) ^ _gmul(a[3], 9)
        out[4 * c + 1] = _gmul(a[0], 9) ^ _gmul(a[1], 14) ^ _gmul(a[2], 11) ^ _gmul(a[3], 13)
        out[4 * c + 2] = _gmul(a[0], 13) ^ _gmul(a[1], 9) ^ _gmul(a[2], 14) ^ _gmul(a[3], 11)
        out[4 * c + 3] = _gmul(a[0], 11) ^ _gmul(a[1], 13) ^ _gmul(a[2], 9) ^ _gmul(a[3], 14)
    return out


def aes128_encrypt_block(key: bytes, block: bytes) -> bytes:
    if len(block) != BLOCK:
        raise ValueError("block must be 16 bytes")
    rks = _expand_key(key)
    state = list(block)
    _add_round_key(state, rks[0])
    for rnd in range(1, 10):
        _sub_bytes(state, _SBOX)
        state = _shift_rows(state)
        state = _mix_columns(state)
        _add_round_key(state, rks[rnd])
    _sub_bytes(state, _SBOX)
    state = _shift_rows(state)
    _add_round_key(state, rks[10])
    return bytes(state)


def aes128_decrypt_block(key: bytes, block: bytes) -> bytes:
    if len(block) != BLOCK:
        raise ValueError("block must be 16 bytes")
    rks = _expand_key(key)
    state = list(block)
    _add_round_key(state, rks[10])
    state = _inv_shift_rows(state)
    _sub_bytes(state, _INV_SBOX)
    for rnd in range(9, 0, -1):
        _add_round_key(state, rks[rnd])
        state = _inv_mix_columns(state)
        state = _inv_shift_rows(state)
        _sub_bytes(state, _INV_SBOX)
    _add_round_key(state, rks[0])
    return bytes(state)


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def cbc_encrypt(key: bytes, iv: bytes, data: bytes) -> bytes:
    """Raw CBC over block-aligned data (no padding)."""
    if len(data) % BLOCK:
        raise ValueError("data must be block aligned")
    out = bytearray()
    prev = iv
    for i in range(0, len(data), BLOCK):
        prev = aes128_encrypt_block(key, _xor(data[i:i + BLOCK], prev))
        out += prev
    return bytes(out)


def cbc_decrypt(key: bytes, iv: bytes, data: bytes) -> bytes:
    if len(data) % BLOCK:
        raise ValueError("data must be block aligned")
    out = bytearray()
    prev = iv
    for i in range(0, len(data), BLOCK):
        block = data[i:i + BLOCK]
        out += _xor(aes128_decrypt_block(key, block), prev)
        prev = block
    return bytes(out)


def pkcs7_pad(data: bytes) -> bytes:
    n = BLOCK - (len(data) % BLOCK)
    return data + bytes([n]) * n


def pkcs7_unpad(data: bytes) -> bytes:
    if not data or len(data) % BLOCK:
        raise ValueError("bad padded length")
    n = data[-1]
    if not 1 <= n <= BLOCK or data[-n:] != bytes([n]) * n:
        raise ValueError("bad padding")
    return data[:-n]


def _dbl(block: bytes) -> bytes:
    """GF(2^128) doubling for the CMAC subkeys."""
    n = int.from_bytes(block, "big") << 1
    if n & (1 << 128):
        n = (n & ((1 << 128) - 1)) ^ 0x87
    return n.to_bytes(16, "big")


def cmac(key: bytes, msg: bytes) -> bytes:
    """AES-128 CMAC per SP 800-38B / RFC 4493."""
    k1 = _dbl(aes128_encrypt_block(key, bytes(BLOCK)))
    k2 = _dbl(k1)
    n = max(1, (len(msg) + BLOCK - 1) // BLOCK)
    last = msg[(n - 1) * BLOCK:]
    if len(last) == BLOCK:
        m_last = _xor(last, k1)
    else:
        padded = last + b"\x80" + bytes(BLOCK - len(last) - 1)
        m_last = _xor(padded, k2)
    x = bytes(BLOCK)
    for i in range(n - 1):
        x = aes128_encrypt_block(key, _xor(x, msg[i * BLOCK:(i + 1) * BLOCK]))
    return aes128_encrypt_block(key, _xor(x, m_last))
