"""Canonical length-prefixed field encoding shared by every binary structure."""

from __future__ import annotations

import struct

_LEN = struct.Struct(">I")


class DecodeError(ValueError):
    """Raised for truncated, oversized or otherwise malformed encodings."""


def pack(*fields: bytes) -> bytes:
    out = bytearray()
    for f in fields:
        out += _LEN.pack(len(f))
        out += f
    return bytes(out)


def pack_optional(value: bytes | None) -> bytes:
    if value is None:
        return b"\x00"
    return b"\x01" + _LEN.pack(len(value)) + value


class Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(bytes(data))
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise DecodeError("truncated input")
        chunk = self.data[self.pos : self.pos + n].tobytes()
        self.pos += n
        return chunk

    def field(self) -> bytes:
        (n,) = _LEN.unpack(self.take(_LEN.size))
        return self.take(n)

    def optional(self) -> bytes | None:
        flag = self.take(1)
        if flag == b"\x00":
            return None
        if flag != b"\x01":
            raise DecodeError("bad presence flag")
        return self.field()

    def fixed(self, n: int) -> bytes:
        value = self.field()
        if len(value) != n:
            raise DecodeError(f"expected {n}-byte field, got {len(value)}")
        return value

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError("trailing bytes")


def encode_map(blobs: dict[str, bytes]) -> bytes:
    """Canonical map of named blobs, keys sorted; used for avatar descriptions."""
    parts = [len(blobs).to_bytes(4, "big")]
    for key in sorted(blobs):
        parts.append(pack(key.encode(), blobs[key]))
    return b"".join(parts)


def decode_map(data: bytes) -> dict[str, bytes]:
    r = Reader(data)
    count = int.from_bytes(r.take(4), "big")
    out: dict[str, bytes] = {}
    prev = None
    for _ in range(count):
        key = r.field().decode()
        if prev is not None and key <= prev:
            raise DecodeError("map keys not in canonical order")
        out[key] = r.field()
        prev = key
    r.done()
    return out
