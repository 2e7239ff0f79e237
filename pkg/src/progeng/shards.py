"""On-disk node shards.

Layout (little-endian)::

    magic      8s   b"PECSHRD1"
    version    u16
    w          u8   symbol width in bits
    role       u8   0 systematic, 1 parity
    node       u16  global node id (systematic 0..k-1, parity k..n-1)
    n, k       u16 each
    reserved   u16
    L          u32  blocks per node
    s          u64  symbols per block
    length     u64  original file length in bytes
    digest     32s  sha256 of the canonical CodeSpec JSON
    crc        L x u32, CRC-32 of each block's bytes
    payload    L * s symbols of w/8 bytes each

Per-block CRCs let a repair read only the rows it needs and still detect
corruption in what it read.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .codes import CodeSpec

MAGIC = b"PECSHRD1"
VERSION = 1
_FIXED = struct.Struct("<8sHBBHHHHIQQ32s")


class ShardError(Exception):
    pass


def symbol_dtype(w: int) -> np.dtype:
    return np.dtype({8: "u1", 16: "<u2", 32: "<u4"}[w])


@dataclass(frozen=True)
class ShardHeader:
    w: int
    node: int
    n: int
    k: int
    L: int
    s: int
    length: int
    digest: bytes
    crcs: tuple[int, ...] = ()

    @property
    def role(self) -> int:
        return 0 if self.node < self.k else 1

    @property
    def block_bytes(self) -> int:
        return self.s * self.w // 8

    @property
    def header_size(self) -> int:
        return _FIXED.size + 4 * self.L

    def pack(self) -> bytes:
        fixed = _FIXED.pack(MAGIC, VERSION, self.w, self.role, self.node, self.n, self.k, 0,
                            self.L, self.s, self.length, self.digest)
        return fixed + struct.pack(f"<{self.L}I", *self.crcs)

    @classmethod
    def unpack_from(cls, f) -> ShardHeader:
        raw = f.read(_FIXED.size)
        if len(raw) != _FIXED.size:
            raise ShardError("truncated shard header")
        magic, ver, w, role, node, n, k, _, L, s, length, digest = _FIXED.unpack(raw)
        if magic != MAGIC:
            raise ShardError("not a shard file (bad magic)")
        if ver != VERSION:
            raise ShardError(f"unsupported shard version {ver}")
        if w not in (8, 16, 32) or role != (0 if node < k else 1):
            raise ShardError("inconsistent shard header")
        crc_raw = f.read(4 * L)
        if len(crc_raw) != 4 * L:
            raise ShardError("truncated block checksum table")
        return cls(w, node, n, k, L, s, length, digest, struct.unpack(f"<{L}I", crc_raw))


def header_for(spec: CodeSpec, node: int, s: int, length: int) -> ShardHeader:
    return ShardHeader(spec.w, node, spec.n, spec.k, spec.L, s, length, spec.digest())


def shard_name(spec_or_k, node: int) -> str:
    k = spec_or_k.k if isinstance(spec_or_k, CodeSpec) else spec_or_k
    return f"S{node + 1}.shard" if node < k else f"P{node - k + 1}.shard"


def write_shard(path, header: ShardHeader, content: np.ndarray) -> ShardHeader:
    """Write ``content`` of shape ``(L, s)``; returns the header with CRCs filled in."""
    content = np.ascontiguousarray(content, dtype=symbol_dtype(header.w))
    if content.shape != (header.L, header.s):
        raise ShardError(f"content shape {content.shape} does not match header ({header.L}, {header.s})")
    crcs = tuple(zlib.crc32(content[t].tobytes()) for t in range(header.L))
    header = replace(header, crcs=crcs)
    with open(path, "wb") as f:
        f.write(header.pack())
        f.write(content.tobytes())
    return header


class ShardReader:
    """Random access to single blocks of one shard, counting what is read."""

    def __init__(self, path, spec: CodeSpec | None = None):
        self.path = Path(path)
        self._f = open(self.path, "rb")
        try:
            self.header = ShardHeader.unpack_from(self._f)
            expect = self.header.header_size + self.header.L * self.header.block_bytes
            size = self.path.stat().st_size
            if size != expect:
                raise ShardError(f"{self.path.name}: size {size} != expected {expect}")
            if spec is not None:
                if self.header.digest != spec.digest():
                    raise ShardError(f"{self.path.name}: spec hash mismatch")
                if (self.header.n, self.header.k, self.header.L, self.header.w) != (
                        spec.n, spec.k, spec.L, spec.w):
                    raise ShardError(f"{self.path.name}: geometry does not match the code")
        except Exception:
            self._f.close()
            raise
        self.blocks_read = 0
        self.bytes_read = 0

    def read_block(self, t: int) -> np.ndarray:
        h = self.header
        if not 0 <= t < h.L:
            raise IndexError(t)
        self._f.seek(h.header_size + t * h.block_bytes)
        raw = self._f.read(h.block_bytes)
        if zlib.crc32(raw) != h.crcs[t]:
            raise ShardError(f"{self.path.name}: checksum mismatch in block {t}")
        self.blocks_read += 1
        self.bytes_read += len(raw)
        return np.frombuffer(raw, dtype=symbol_dtype(h.w)).copy()

    def read_all(self) -> np.ndarray:
        return np.stack([self.read_block(t) for t in range(self.header.L)])

    def close(self):
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
