"""Arithmetic over GF(2**w) for w in {8, 16, 32}.

Elements are plain unsigned integers; blocks are numpy arrays of the field's
native dtype.  Widths 8 and 16 are table driven (log/antilog, plus a full
product table for w=8).  w=32 uses carry-less multiply with reduction, and
scaling a block by a constant goes through four per-byte partial product
tables built on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

POLYNOMIALS = {8: 0x11D, 16: 0x1100B, 32: 0x100400007}
DTYPES = {8: np.uint8, 16: np.uint16, 32: np.uint32}


class FieldError(ValueError):
    pass


def clmul_reduce(x: int, y: int, w: int, poly: int) -> int:
    """Table-free product of ``x`` and ``y`` modulo ``poly`` (shift-and-add)."""
    top = 1 << w
    result = 0
    while y:
        if y & 1:
            result ^= x
        y >>= 1
        x <<= 1
        if x & top:
            x ^= poly
    return result


@dataclass(frozen=True, eq=False)
class FieldContext:
    w: int
    poly: int
    _exp: np.ndarray | None = field(default=None, repr=False)
    _log: np.ndarray | None = field(default=None, repr=False)
    _mul8: np.ndarray | None = field(default=None, repr=False)

    def __eq__(self, other):
        return isinstance(other, FieldContext) and (self.w, self.poly) == (other.w, other.poly)

    def __hash__(self):
        return hash((self.w, self.poly))

    @property
    def order(self) -> int:
        return 1 << self.w

    @property
    def dtype(self):
        return DTYPES[self.w]

    @property
    def nbytes(self) -> int:
        return self.w // 8

    # -- scalar ops -------------------------------------------------------

    @staticmethod
    def add(x: int, y: int) -> int:
        return x ^ y

    def mul(self, x: int, y: int) -> int:
        if x == 0 or y == 0:
            return 0
        if self._mul8 is not None:
            return int(self._mul8[x, y])
        if self._log is not None:
            return int(self._exp[int(self._log[x]) + int(self._log[y])])
        return clmul_reduce(x, y, self.w, self.poly)

    def inv(self, x: int) -> int:
        if x == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        if self._log is not None:
            return int(self._exp[(self.order - 1) - int(self._log[x])])
        return self.pow(x, self.order - 2)

    def div(self, x: int, y: int) -> int:
        return self.mul(x, self.inv(y))

    def pow(self, x: int, e: int) -> int:
        if e < 0:
            raise ValueError("negative exponent")
        result = 1
        base = x
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    # -- vectorized ops ---------------------------------------------------

    def mul_array(self, x, y) -> np.ndarray:
        """Elementwise product of two broadcastable integer arrays."""
        x = np.asarray(x, dtype=self.dtype)
        y = np.asarray(y, dtype=self.dtype)
        if self._mul8 is not None:
            return self._mul8[x, y]
        if self._log is not None:
            s = self._log[x].astype(np.int64) + self._log[y]
            out = self._exp[s]
            return np.where((x == 0) | (y == 0), 0, out).astype(self.dtype)
        a = x.astype(np.uint64)
        b = np.broadcast_to(y, np.broadcast_shapes(x.shape, y.shape)).astype(np.uint64)
        a = np.broadcast_to(a, b.shape).copy()
        out = np.zeros(b.shape, dtype=np.uint64)
        top = np.uint64(1 << self.w)
        poly = np.uint64(self.poly)
        for bit in range(self.w):
            sel = (b >> np.uint64(bit)) & np.uint64(1)
            out ^= a * sel
            a <<= np.uint64(1)
            a ^= np.where(a & top, poly, np.uint64(0))
        return out.astype(self.dtype)

    def scale(self, coeff: int, src: np.ndarray) -> np.ndarray:
        """``coeff * src`` for a scalar coefficient."""
        src = np.asarray(src, dtype=self.dtype)
        if coeff == 0:
            return np.zeros_like(src)
        if coeff == 1:
            return src.copy()
        if self._mul8 is not None:
            return self._mul8[coeff][src]
        if self._log is not None:
            lc = int(self._log[coeff])
            out = self._exp[self._log[src].astype(np.int64) + lc]
            return np.where(src == 0, 0, out).astype(self.dtype)
        t0, t1, t2, rot63 = _byte_tables(self, coeff)
        return (t0[src & 0xFF] ^ t1[(src >> 8) & 0xFF]
                ^ t2[(src >> 16) & 0xFF] ^ rot63[src >> 24])

    def block_scale_add(self, acc: np.ndarray, coeff: int, src: np.ndarray) -> np.ndarray:
        """Return ``acc + coeff * src`` as a new array."""
        acc = np.asarray(acc)
        src = np.asarray(src)
        if acc.shape != src.shape:
            raise FieldError(f"block length mismatch: {acc.shape} vs {src.shape}")
        return acc ^ self.scale(coeff, src)


@lru_cache(maxsize=4096)
def _byte_tables(fc: FieldContext, coeff: int):
    v = np.arange(256, dtype=np.uint32)
    return tuple(fc.mul_array(v << np.uint32(8 * b), np.uint32(coeff)) for b in range(4))


def _log_tables(w: int, poly: int):
    q = 1 << w
    exp = np.zeros(2 * q, dtype=np.int64)
    log = np.zeros(q, dtype=np.int64)
    x = 1
    for i in range(q - 1):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & q:
            x ^= poly
        if x == 1 and i < q - 2:
            raise FieldError(f"0x{poly:x} is not primitive for w={w}")
    exp[q - 1: 2 * (q - 1)] = exp[: q - 1]
    return exp.astype(DTYPES[w]), log


@lru_cache(maxsize=None)
def make_field(w: int) -> FieldContext:
    """Build (and cache) the field context for symbol width ``w``."""
    if w not in POLYNOMIALS:
        raise FieldError(f"unsupported symbol width {w}; expected 8, 16 or 32")
    poly = POLYNOMIALS[w]
    if w == 32:
        return FieldContext(w, poly)
    exp, log = _log_tables(w, poly)
    mul8 = None
    if w == 8:
        a = np.arange(256)
        s = log[a][:, None] + log[a][None, :]
        mul8 = exp[s].astype(np.uint8)
        mul8[0, :] = 0
        mul8[:, 0] = 0
    return FieldContext(w, poly, exp, log, mul8)
