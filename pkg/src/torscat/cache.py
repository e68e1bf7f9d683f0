"""Binary sieve cache.

Layout (little endian throughout):

    magic   4 bytes  b"S2SQ"
    version u32      1
    limit   u64
    bitmap  ceil((limit+1)/8) bytes, LSB-first membership bits
    r2      (limit+1) u32
    omega1  (limit+1) u8
    check   u64      FNV-1a over everything above

The checksum is FNV-1a-64 run over the payload as 8-byte little-endian
words (zero padded at the end); wordwise keeps verification fast at
large limits while remaining a plain FNV chain.  The spf array is a
build-time auxiliary and is not stored; tables read back from cache
rebuild it lazily on first factorization.
"""

from __future__ import annotations

import struct

import numpy as np

from .arith import SumsOfTwoSquaresTable
from .errors import CacheError

MAGIC = b"S2SQ"
VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """FNV-1a over 8-byte little-endian words of the zero-padded data."""
    pad = (-len(data)) % 8
    if pad:
        data = data + b"\x00" * pad
    words = np.frombuffer(data, dtype="<u8")
    h = _FNV_OFFSET
    for w in words.tolist():
        h = ((h ^ w) * _FNV_PRIME) & _MASK64
    return h


def write_cache(table: SumsOfTwoSquaresTable, path: str) -> None:
    bitmap = np.packbits(table.membership.view(np.uint8), bitorder="little")
    payload = b"".join([
        MAGIC,
        struct.pack("<I", VERSION),
        struct.pack("<Q", table.limit),
        bitmap.tobytes(),
        table.r2.astype("<u4").tobytes(),
        table.omega1.astype("<u1").tobytes(),
    ])
    with open(path, "wb") as f:
        f.write(payload)
        f.write(struct.pack("<Q", fnv1a64(payload)))


def read_cache(path: str) -> SumsOfTwoSquaresTable:
    """Load a table; any structural damage raises, never a silent fallback."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 24:
        raise CacheError(f"{path}: truncated header")
    if blob[:4] != MAGIC:
        raise CacheError(f"{path}: bad magic {blob[:4]!r}")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise CacheError(f"{path}: version {version} unsupported (supported: {VERSION})")
    (limit,) = struct.unpack_from("<Q", blob, 8)
    nbytes_bitmap = (limit + 1 + 7) // 8
    expect = 16 + nbytes_bitmap + 4 * (limit + 1) + (limit + 1) + 8
    if len(blob) != expect:
        raise CacheError(f"{path}: length {len(blob)} != expected {expect} "
                         "(truncated or corrupt)")
    payload, check = blob[:-8], blob[-8:]
    (stored,) = struct.unpack("<Q", check)
    if fnv1a64(payload) != stored:
        raise CacheError(f"{path}: checksum mismatch")
    off = 16
    bitmap = np.frombuffer(blob, dtype=np.uint8, count=nbytes_bitmap, offset=off)
    off += nbytes_bitmap
    membership = np.unpackbits(bitmap, bitorder="little")[:limit + 1].astype(bool)
    r2 = np.frombuffer(blob, dtype="<u4", count=limit + 1, offset=off).astype(np.uint32)
    off += 4 * (limit + 1)
    omega1 = np.frombuffer(blob, dtype="<u1", count=limit + 1, offset=off).astype(np.uint8)
    return SumsOfTwoSquaresTable(limit=int(limit), membership=membership,
                                 r2=r2, omega1=omega1, spf=None)
