"""XOR stream cipher over the Trident keystream.

Ciphertext layout: an 8-byte header (``b"TRI1"``, n, s, two zero bytes)
followed by ``plaintext ^ keystream``. There is no nonce: encrypting two
messages under one key leaks their XOR.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .errors import BadHeader, KeyMismatch
from .generator import Trident, TridentKey

MAGIC = b"TRI1"
HEADER_SIZE = 8
CHUNK = 1 << 20

_FMT = "<4sBBH"


@dataclass(frozen=True)
class CipherHeader:
    n: int
    s: int
    magic: bytes = MAGIC

    def pack(self) -> bytes:
        return struct.pack(_FMT, self.magic, self.n, self.s, 0)

    @classmethod
    def unpack(cls, data: bytes) -> "CipherHeader":
        if len(data) < HEADER_SIZE:
            raise BadHeader(f"need {HEADER_SIZE} header bytes, got {len(data)}")
        magic, n, s, reserved = struct.unpack(_FMT, data[:HEADER_SIZE])
        if magic != MAGIC:
            raise BadHeader(f"unknown magic {magic!r}")
        if reserved:
            raise BadHeader("reserved header bytes are not zero")
        return cls(n=n, s=s, magic=magic)

    @classmethod
    def for_key(cls, key: TridentKey) -> "CipherHeader":
        return cls(n=key.n, s=key.s)


def _xor(data: bytes, ks: bytes) -> bytes:
    a = np.frombuffer(data, dtype=np.uint8)
    b = np.frombuffer(ks, dtype=np.uint8)
    return (a ^ b).tobytes()


def _pump(gen: Trident, fin: BinaryIO, fout: BinaryIO) -> int:
    total = 0
    while chunk := fin.read(CHUNK):
        fout.write(_xor(chunk, gen.read(len(chunk))))
        total += len(chunk)
    return total


def encrypt_stream(key: TridentKey, fin: BinaryIO, fout: BinaryIO) -> int:
    fout.write(CipherHeader.for_key(key).pack())
    return _pump(Trident(key), fin, fout)


def decrypt_stream(key: TridentKey, fin: BinaryIO, fout: BinaryIO) -> int:
    header = CipherHeader.unpack(fin.read(HEADER_SIZE))
    if (header.n, header.s) != (key.n, key.s):
        raise KeyMismatch(f"ciphertext made with n={header.n}, s={header.s}; "
                          f"key has n={key.n}, s={key.s}")
    return _pump(Trident(key), fin, fout)


def encrypt(key: TridentKey, plaintext: bytes) -> bytes:
    return CipherHeader.for_key(key).pack() + _xor(plaintext, Trident(key).read(len(plaintext)))


def decrypt(key: TridentKey, ciphertext: bytes) -> bytes:
    header = CipherHeader.unpack(ciphertext)
    if (header.n, header.s) != (key.n, key.s):
        raise KeyMismatch(f"ciphertext made with n={header.n}, s={header.s}; "
                          f"key has n={key.n}, s={key.s}")
    body = ciphertext[HEADER_SIZE:]
    return _xor(body, Trident(key).read(len(body)))
