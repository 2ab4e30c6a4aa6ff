"""Canonical byte encoding shared by every node.

Hashing and signing require bit-exact bytes, so this is a bespoke
length-prefixed format rather than a general serializer:

* a *field* is a 4-byte big-endian length prefix followed by the content;
* integer field content is 8 bytes big-endian;
* structured *values* (call arguments, provenance payloads) are tagged:
  ``N`` null, ``B`` bool, ``I`` signed 64-bit int, ``D`` IEEE-754 double,
  ``S`` utf-8 string, ``Y`` raw bytes, ``L`` list, ``M`` map with keys
  sorted lexicographically.

Two field-identical inputs always produce byte-identical encodings on
every node; map key order never leaks into the bytes.
"""

from __future__ import annotations

import struct

U32_MAX = 2**32 - 1
I64_MIN = -(2**63)
I64_MAX = 2**63 - 1
U64_MAX = 2**64 - 1

TAG_NULL = b"N"
TAG_BOOL = b"B"
TAG_INT = b"I"
TAG_FLOAT = b"D"
TAG_STR = b"S"
TAG_BYTES = b"Y"
TAG_LIST = b"L"
TAG_MAP = b"M"


class EncodingError(Exception):
    """A value cannot be canonically encoded or decoded."""


def encode_uint(n: int) -> bytes:
    """Unsigned 64-bit big-endian, used for nonces, heights, gas, timestamps."""
    if not isinstance(n, int) or isinstance(n, bool) or n < 0 or n > U64_MAX:
        raise EncodingError(f"not a u64: {n!r}")
    return struct.pack(">Q", n)


def decode_uint(b: bytes) -> int:
    if len(b) != 8:
        raise EncodingError("u64 field must be 8 bytes")
    return struct.unpack(">Q", b)[0]


def encode_field(content: bytes) -> bytes:
    """4-byte big-endian length prefix + content. Empty content encodes as
    exactly the prefix 00 00 00 00."""
    if not isinstance(content, (bytes, bytearray)):
        raise EncodingError(f"field content must be bytes, got {type(content).__name__}")
    if len(content) > U32_MAX:
        raise EncodingError("field content too large")
    return struct.pack(">I", len(content)) + bytes(content)


def encode_fields(*contents: bytes) -> bytes:
    """Concatenate fields in declared order."""
    return b"".join(encode_field(c) for c in contents)


class _Reader:
    __slots__ = ("buf", "pos")

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise EncodingError("truncated encoding")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def take_u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def done(self) -> bool:
        return self.pos == len(self.buf)


def read_fields(data: bytes) -> list[bytes]:
    """Split a field-concatenated encoding back into raw contents."""
    r = _Reader(data)
    out = []
    while not r.done():
        out.append(r.take(r.take_u32()))
    return out


def encode_value(v) -> bytes:
    """Tagged canonical encoding of a JSON-like value (plus bytes)."""
    if v is None:
        return TAG_NULL
    if isinstance(v, bool):
        return TAG_BOOL + (b"\x01" if v else b"\x00")
    if isinstance(v, int):
        if v < I64_MIN or v > I64_MAX:
            raise EncodingError(f"int out of 64-bit range: {v}")
        return TAG_INT + struct.pack(">q", v)
    if isinstance(v, float):
        return TAG_FLOAT + struct.pack(">d", v)
    if isinstance(v, str):
        raw = v.encode("utf-8")
        return TAG_STR + struct.pack(">I", len(raw)) + raw
    if isinstance(v, (bytes, bytearray)):
        return TAG_BYTES + struct.pack(">I", len(v)) + bytes(v)
    if isinstance(v, (list, tuple)):
        body = b"".join(encode_value(item) for item in v)
        return TAG_LIST + struct.pack(">I", len(v)) + body
    if isinstance(v, dict):
        keys = list(v.keys())
        if any(not isinstance(k, str) for k in keys):
            raise EncodingError("map keys must be strings")
        if len(set(keys)) != len(keys):
            raise EncodingError("duplicate map keys")
        body = b""
        for k in sorted(keys):
            body += encode_value(k) + encode_value(v[k])
        return TAG_MAP + struct.pack(">I", len(keys)) + body
    raise EncodingError(f"unencodable value of type {type(v).__name__}")


def _decode_value(r: _Reader):
    tag = r.take(1)
    if tag == TAG_NULL:
        return None
    if tag == TAG_BOOL:
        b = r.take(1)
        if b not in (b"\x00", b"\x01"):
            raise EncodingError("bad bool byte")
        return b == b"\x01"
    if tag == TAG_INT:
        return struct.unpack(">q", r.take(8))[0]
    if tag == TAG_FLOAT:
        return struct.unpack(">d", r.take(8))[0]
    if tag == TAG_STR:
        return r.take(r.take_u32()).decode("utf-8")
    if tag == TAG_BYTES:
        return r.take(r.take_u32())
    if tag == TAG_LIST:
        n = r.take_u32()
        return [_decode_value(r) for _ in range(n)]
    if tag == TAG_MAP:
        n = r.take_u32()
        out = {}
        for _ in range(n):
            k = _decode_value(r)
            if not isinstance(k, str):
                raise EncodingError("map key must decode to a string")
            out[k] = _decode_value(r)
        return out
    raise EncodingError(f"unknown value tag {tag!r}")


def decode_value(data: bytes):
    """Inverse of encode_value; rejects trailing bytes."""
    r = _Reader(data)
    v = _decode_value(r)
    if not r.done():
        raise EncodingError("trailing bytes after value")
    return v
