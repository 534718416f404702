"""Space-filling-curve keys for points of the open unit cube.

Three encoders share one quantization rule and one key format:

* :func:`hilbert_encode` walks the 24-state ordering/orientation tables, one
  octant digit per level.
* :func:`hilbert_encode_recursive` subdivides the cube recursively and
  re-orients the point into each child's frame by an explicit axis
  permutation and reflection. It shares no tables with the table walk and is
  kept as a cross-check.
* :func:`morton_encode` interleaves bits, no state.

A key of level ``L`` is an exact ``3 * L`` bit integer. Octant digits are
``(x_bit << 2) | (y_bit << 1) | z_bit``, most significant level first.

Batch encoders (:func:`encode_lattice`, :func:`encode_points`) return a
:class:`KeyArray` holding each key as two ``uint64`` words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "DEFAULT_LEVEL",
    "MAX_LEVEL",
    "KeyArray",
    "SfcKey",
    "check_level",
    "encode_lattice",
    "encode_points",
    "hilbert_encode",
    "hilbert_encode_recursive",
    "key_to_unit_interval",
    "legacy_double",
    "morton_encode",
    "quantize",
]

DEFAULT_LEVEL = 30
MAX_LEVEL = 42  # 3 * 42 = 126 bits, fits the two-word KeyArray

# Ordering table: IDATA3D[8 * state + octant] is the digit emitted.
# fmt: off
IDATA3D = (
    0, 7, 3, 4, 1, 6, 2, 5, 0, 1, 3, 2, 7, 6, 4, 5, 0, 3, 7, 4, 1, 2, 6, 5, 2, 3, 5, 4, 1, 0, 6, 7,
    4, 5, 3, 2, 7, 6, 0, 1, 4, 7, 3, 0, 5, 6, 2, 1, 6, 7, 5, 4, 1, 0, 2, 3, 0, 1, 7, 6, 3, 2, 4, 5,
    2, 1, 5, 6, 3, 0, 4, 7, 6, 1, 5, 2, 7, 0, 4, 3, 0, 7, 1, 6, 3, 4, 2, 5, 2, 1, 3, 0, 5, 6, 4, 7,
    4, 7, 5, 6, 3, 0, 2, 1, 4, 5, 7, 6, 3, 2, 0, 1, 6, 1, 7, 0, 5, 2, 4, 3, 0, 3, 1, 2, 7, 4, 6, 5,
    2, 3, 1, 0, 5, 4, 6, 7, 6, 7, 1, 0, 5, 4, 2, 3, 2, 5, 1, 6, 3, 4, 0, 7, 4, 3, 7, 0, 5, 2, 6, 1,
    4, 3, 5, 2, 7, 0, 6, 1, 6, 5, 1, 2, 7, 4, 0, 3, 2, 5, 3, 4, 1, 6, 0, 7, 6, 5, 7, 4, 1, 2, 0, 3,
)

# Orientation table: ISTATE3D[8 * state + octant] is the state for the child.
ISTATE3D = (
    1,  6,  3,  4,  2,  5,  0,  0,  0,  7,  8,  1,  9,  4,  5,  1,
    15, 22, 23, 20, 0,  2,  19, 2,  3,  23, 3,  15, 6,  20, 16, 22,
    11, 4,  12, 4,  20, 1,  22, 13, 22, 12, 20, 11, 5,  0,  5,  19,
    17, 0,  6,  21, 3,  9,  6,  2,  10, 1,  14, 13, 11, 7,  12, 7,
    8,  9,  8,  18, 14, 12, 10, 11, 21, 8,  9,  9,  1,  6,  17, 7,
    7,  17, 15, 12, 16, 13, 10, 10, 11, 14, 9,  5,  11, 22, 0,  8,
    18, 5,  12, 10, 19, 8,  12, 20, 8,  13, 19, 7,  5,  13, 18, 4,
    23, 11, 7,  17, 14, 14, 6,  1,  2,  18, 10, 15, 21, 19, 20, 15,
    16, 21, 17, 19, 16, 2,  3,  18, 6,  10, 16, 14, 17, 23, 17, 15,
    18, 18, 21, 8,  17, 7,  13, 16, 3,  4,  13, 16, 19, 19, 2,  5,
    16, 13, 20, 20, 4,  3,  15, 12, 9,  21, 18, 21, 15, 14, 23, 10,
    22, 22, 6,  1,  23, 11, 4,  3,  14, 23, 2,  9,  22, 23, 21, 0,
)
# fmt: on

_IDATA = np.array(IDATA3D, dtype=np.uint8)
_ISTATE = np.array(ISTATE3D, dtype=np.uint8)

_QBITS = 32  # quantization width for levels up to 32 (scale by 2**32 - 1, truncate)


def check_level(level) -> int:
    if isinstance(level, bool) or int(level) != level or not 1 <= level <= MAX_LEVEL:
        raise ConfigError(f"level must be an integer in [1, {MAX_LEVEL}], got {level!r}")
    return int(level)


@total_ordering
@dataclass(frozen=True)
class SfcKey:
    """Curve position: ``value`` has ``3 * level`` bits."""

    value: int
    level: int

    def __post_init__(self):
        check_level(self.level)
        if not 0 <= self.value < 1 << (3 * self.level):
            raise ConfigError(f"key {self.value} does not fit in {3 * self.level} bits")

    def _same_level(self, other: "SfcKey"):
        if not isinstance(other, SfcKey):
            return NotImplemented
        if other.level != self.level:
            raise ConfigError(f"cannot compare level-{self.level} and level-{other.level} keys")
        return True

    def __lt__(self, other):
        ok = self._same_level(other)
        if ok is NotImplemented:
            return ok
        return self.value < other.value

    def __int__(self):
        return self.value

    def digits(self) -> list[int]:
        """Octant digits, coarsest level first."""
        return [(self.value >> (3 * (self.level - 1 - n))) & 7 for n in range(self.level)]

    def hex(self) -> str:
        return f"0x{self.value:0{(3 * self.level + 3) // 4}x}"


def _check_point(p) -> tuple[float, float, float]:
    try:
        u, v, w = (float(c) for c in p)
    except (TypeError, ValueError):
        raise DomainError(f"expected three coordinates, got {p!r}") from None
    for c in (u, v, w):
        if not 0.0 < c < 1.0:
            raise DomainError(f"point {(u, v, w)} is not inside the open unit cube")
    return u, v, w


def _qbits(level: int) -> int:
    return max(_QBITS, level)


def quantize(u: float, level: int) -> int:
    """Lattice coordinate of ``u`` at ``level``: the top ``level`` bits of
    ``trunc(u * (2**B - 1))`` with ``B = max(32, level)``."""
    b = _qbits(level)
    return int(u * float((1 << b) - 1)) >> (b - level)


def hilbert_encode(p, level: int = DEFAULT_LEVEL) -> SfcKey:
    level = check_level(level)
    x, y, z = (quantize(c, level) for c in _check_point(p))
    key = 0
    state = 0
    for shift in range(level - 1, -1, -1):
        octant = (((x >> shift) & 1) << 2) | (((y >> shift) & 1) << 1) | ((z >> shift) & 1)
        key = (key << 3) | IDATA3D[8 * state + octant]
        state = ISTATE3D[8 * state + octant]
    return SfcKey(key, level)


# Canonical visiting order of the 8 octants, as (x, y, z) bits.
_HILBERT_BASE = ((0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 0, 1), (0, 0, 1))

# Frame of the child curve inside octant n of the canonical parent. Parent axis
# a holds child axis perm[a], mirrored when flip[a] is set.
_HILBERT_CHILD = (
    ((2, 1, 0), (0, 0, 0)),
    ((0, 2, 1), (0, 0, 0)),
    ((0, 1, 2), (0, 0, 0)),
    ((1, 2, 0), (1, 0, 1)),
    ((1, 2, 0), (1, 1, 0)),
    ((0, 1, 2), (0, 0, 0)),
    ((0, 2, 1), (0, 1, 1)),
    ((2, 1, 0), (1, 0, 1)),
)


def _hilbert_rec(q: tuple[int, int, int], side_bits: int) -> int:
    if side_bits == 0:
        return 0
    half = 1 << (side_bits - 1)
    octant = tuple(int(c >= half) for c in q)
    n = _HILBERT_BASE.index(octant)
    local = [c - half * b for c, b in zip(q, octant)]
    perm, flip = _HILBERT_CHILD[n]
    child = [0, 0, 0]
    for a in range(3):
        child[perm[a]] = half - 1 - local[a] if flip[a] else local[a]
    return n * half**3 + _hilbert_rec(tuple(child), side_bits - 1)


def hilbert_encode_recursive(p, level: int = DEFAULT_LEVEL) -> SfcKey:
    level = check_level(level)
    q = tuple(quantize(c, level) for c in _check_point(p))
    return SfcKey(_hilbert_rec(q, level), level)


def morton_encode(p, level: int = DEFAULT_LEVEL) -> SfcKey:
    level = check_level(level)
    x, y, z = (quantize(c, level) for c in _check_point(p))
    key = 0
    for shift in range(level - 1, -1, -1):
        key = (key << 3) | (((x >> shift) & 1) << 2) | (((y >> shift) & 1) << 1) | ((z >> shift) & 1)
    return SfcKey(key, level)


def key_to_unit_interval(k: SfcKey, exact: bool = False):
    """``k.value / 8**level`` in [0, 1).

    Floats are correctly rounded, so the map is monotone but only strictly so
    while ``3 * level <= 53``. ``exact=True`` returns a :class:`Fraction`.
    """
    if exact:
        return Fraction(k.value, 1 << (3 * k.level))
    return k.value / (1 << (3 * k.level))


def legacy_double(k: SfcKey) -> float:
    """The double the reference C routine stores for this key (level <= 30).

    That routine keeps three 30-bit words and sums them with ``ldexp`` from
    the least significant word up; the rounding of those two additions is
    reproduced here.
    """
    if k.level > 30:
        raise ConfigError("the three-word double layout only holds levels up to 30")
    mask = (1 << 30) - 1
    w2, w1, w0 = k.value & mask, (k.value >> 30) & mask, (k.value >> 60) & mask
    e = -3 * k.level
    h = math.ldexp(float(w2), e)
    h += math.ldexp(float(w1), e + 30)
    h += math.ldexp(float(w0), e + 60)
    return h


@dataclass(frozen=True, eq=False)
class KeyArray:
    """A batch of same-level keys; key ``n`` is ``hi[n] << 64 | lo[n]``."""

    hi: np.ndarray
    lo: np.ndarray
    level: int

    def __len__(self):
        return self.lo.size

    def __getitem__(self, n) -> SfcKey:
        return SfcKey((int(self.hi.flat[n]) << 64) | int(self.lo.flat[n]), self.level)

    def to_ints(self) -> list[int]:
        return [(h << 64) | l for h, l in zip(self.hi.ravel().tolist(), self.lo.ravel().tolist())]

    @property
    def wide(self) -> bool:
        return 3 * self.level > 64

    def argsort(self) -> np.ndarray:
        """Stable ascending order (ties keep input order)."""
        if self.wide:
            hi, lo = self.hi.ravel(), self.lo.ravel()
            s = np.uint64(3 * self.level - 64)
            top = (hi << (np.uint64(64) - s)) | (lo >> s)
            # distinct 64-bit prefixes fix the full order, so any sort kind is exact
            order = np.argsort(top)
            t = top[order]
            if not np.any(t[1:] == t[:-1]):
                return order
            return np.lexsort((lo, hi))
        return np.argsort(self.lo.ravel(), kind="stable")

    def take(self, idx) -> "KeyArray":
        return KeyArray(self.hi.ravel()[idx], self.lo.ravel()[idx], self.level)

    def equal_adjacent(self, order: np.ndarray) -> np.ndarray:
        """Mask of positions ``m`` where sorted keys ``m`` and ``m + 1`` coincide."""
        lo = self.lo.ravel()[order]
        same = lo[1:] == lo[:-1]
        if self.wide:
            hi = self.hi.ravel()[order]
            same &= hi[1:] == hi[:-1]
        return same

    def unit_values(self) -> np.ndarray:
        """Keys mapped to [0, 1) as doubles."""
        e = -3 * self.level
        return np.ldexp(self.hi.astype(np.float64), e + 64) + np.ldexp(self.lo.astype(np.float64), e)

    def legacy_doubles(self) -> np.ndarray:
        """Vectorized :func:`legacy_double`."""
        if self.level > 30:
            raise ConfigError("the three-word double layout only holds levels up to 30")
        hi = self.hi.ravel()
        lo = self.lo.ravel()
        mask = np.uint64((1 << 30) - 1)
        w2 = lo & mask
        w1 = (lo >> np.uint64(30)) & mask
        w0 = ((lo >> np.uint64(60)) | (hi << np.uint64(4))) & mask
        e = -3 * self.level
        h = np.ldexp(w2.astype(np.float64), e)
        h += np.ldexp(w1.astype(np.float64), e + 30)
        h += np.ldexp(w0.astype(np.float64), e + 60)
        return h


def encode_lattice(qx, qy, qz, level: int, method: str = "hilbert") -> KeyArray:
    """Keys of lattice points given per-axis coordinates in ``[0, 2**level)``.

    The three coordinate arrays are broadcast against each other, so a
    structured grid can pass ``(1, 1, nx)``, ``(1, ny, 1)`` and ``(nz, 1, 1)``
    shaped arrays and get an ``(nz, ny, nx)`` result without building the
    full coordinate arrays.
    """
    level = check_level(level)
    if method not in ("hilbert", "morton"):
        raise ConfigError(f"unknown curve {method!r}; expected 'hilbert' or 'morton'")
    qx, qy, qz = (np.asarray(q, dtype=np.uint64) for q in (qx, qy, qz))
    shape = np.broadcast_shapes(qx.shape, qy.shape, qz.shape)
    hi = np.zeros(shape, dtype=np.uint64)
    lo = np.zeros(shape, dtype=np.uint64)
    state = np.zeros(shape, dtype=np.uint8)
    octant = np.empty(shape, dtype=np.uint8)
    one = np.uint64(1)
    wide = 3 * level > 64
    for shift in range(level - 1, -1, -1):
        s = np.uint64(shift)
        bx = (((qx >> s) & one) << np.uint64(2)).astype(np.uint8)
        by = (((qy >> s) & one) << one).astype(np.uint8)
        bz = ((qz >> s) & one).astype(np.uint8)
        np.bitwise_or(bx, by, out=octant)
        np.bitwise_or(octant, bz, out=octant)
        if method == "hilbert":
            idx = state << np.uint8(3)
            idx |= octant
            digit = _IDATA[idx]
            np.take(_ISTATE, idx, out=state)
        else:
            digit = octant
        if wide:
            np.left_shift(hi, np.uint64(3), out=hi)
            hi |= lo >> np.uint64(61)
        np.left_shift(lo, np.uint64(3), out=lo)
        lo |= digit
    return KeyArray(hi, lo, level)


def quantize_array(u, level: int) -> np.ndarray:
    """Vectorized :func:`quantize`; raises :class:`DomainError` outside (0, 1)."""
    level = check_level(level)
    u = np.asarray(u, dtype=np.float64)
    if not np.all((u > 0.0) & (u < 1.0)):
        raise DomainError("coordinates must lie strictly inside (0, 1)")
    b = _qbits(level)
    q = (u * float((1 << b) - 1)).astype(np.uint64)
    return q >> np.uint64(b - level)


def encode_points(points: Sequence, level: int = DEFAULT_LEVEL, method: str = "hilbert") -> KeyArray:
    """Keys for an ``(N, 3)`` array of unit-cube points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DomainError(f"expected an (N, 3) array of points, got shape {pts.shape}")
    q = quantize_array(pts, level)
    return encode_lattice(q[:, 0], q[:, 1], q[:, 2], level, method)
