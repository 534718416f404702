"""Space-filling-curve partitioning of a structured grid.

Three steps: map the domain into the open unit cube with one scale factor
(aspect ratio kept), key every cell center, then cut the sorted key sequence
into ``n_ranks`` contiguous runs of near-equal workload.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, ParseError, SfcPartError
from .grid import GridSpec
from .sfc import DEFAULT_LEVEL, MAX_LEVEL, KeyArray, SfcKey, check_level, encode_lattice, quantize_array

__all__ = [
    "DEFAULT_EPSILON",
    "METHODS",
    "DomainMap",
    "Partition",
    "build_domain_map",
    "check_distinct",
    "key_cells",
    "min_level",
    "partition_1d",
    "partition_grid",
    "read_partition",
    "write_partition",
]

DEFAULT_EPSILON = 2.0**-20
METHODS = ("hilbert", "morton", "external")

_CHUNK_CELLS = 1 << 18  # ~10 MB of temporaries per slab, cache friendly


class DuplicateKeyError(SfcPartError):
    """Two cells share a curve key; the level is too coarse for the grid."""


@dataclass(frozen=True)
class DomainMap:
    """``p -> epsilon + (p - offset) * scale``, componentwise."""

    scale: float
    offset: tuple[float, float, float]
    epsilon: float

    def __call__(self, p) -> np.ndarray:
        return self.epsilon + (np.asarray(p, dtype=np.float64) - np.asarray(self.offset)) * self.scale

    def axis(self, values, axis: int) -> np.ndarray:
        return self.epsilon + (np.asarray(values, dtype=np.float64) - self.offset[axis]) * self.scale


def build_domain_map(grid: GridSpec, epsilon: float = DEFAULT_EPSILON) -> DomainMap:
    if not 0.0 < epsilon < 0.5:
        raise ConfigError(f"epsilon must lie in (0, 0.5), got {epsilon!r}")
    longest = float(np.max(grid.lengths))
    if not (np.isfinite(longest) and longest > 0.0):
        raise ConfigError("domain has degenerate extents")
    scale = (1.0 - 2.0 * epsilon) / longest
    return DomainMap(scale, (grid.x1, grid.y1, grid.z1), float(epsilon))


def _axis_lattice(grid: GridSpec, dmap: DomainMap) -> list[np.ndarray]:
    """Mapped cell-center coordinates per axis."""
    return [dmap.axis(c, a) for a, c in enumerate(grid.axis_centers())]


def min_level(grid: GridSpec, dmap: DomainMap) -> int:
    """Smallest level at which every cell center gets its own lattice point.

    Cell centers along each axis are quantized independently, so keys are
    distinct exactly when each axis' quantized centers are.
    """
    coords = _axis_lattice(grid, dmap)
    for level in range(1, MAX_LEVEL + 1):
        if all(np.all(np.diff(quantize_array(c, level).astype(np.int64)) > 0) for c in coords):
            return level
    raise ConfigError(f"grid cells are too fine to separate at level {MAX_LEVEL}")


def key_cells(
    grid: GridSpec,
    dmap: DomainMap,
    method: str = "hilbert",
    level: int = DEFAULT_LEVEL,
    threads: int = 1,
) -> KeyArray:
    """Curve key of every cell center, in linear-index order.

    Work is split into z-slabs; with ``threads > 1`` slabs are encoded on a
    thread pool (numpy releases the GIL). Each slab fills its own rows, so the
    result does not depend on scheduling.
    """
    level = check_level(level)
    if method not in ("hilbert", "morton"):
        raise ConfigError(f"method must be 'hilbert' or 'morton', got {method!r}")
    need = min_level(grid, dmap)
    if level < need:
        raise ConfigError(f"level {level} cannot separate all cells of this grid; minimum level is {need}")
    qx, qy, qz = (quantize_array(c, level) for c in _axis_lattice(grid, dmap))
    nx, ny, nz = grid.dims
    hi = np.empty(grid.shape, dtype=np.uint64)
    lo = np.empty(grid.shape, dtype=np.uint64)
    step = max(1, _CHUNK_CELLS // (nx * ny))

    def slab(k0: int) -> None:
        k1 = min(nz, k0 + step)
        part = encode_lattice(qx[None, None, :], qy[None, :, None], qz[k0:k1, None, None], level, method)
        hi[k0:k1] = part.hi
        lo[k0:k1] = part.lo

    starts = range(0, nz, step)
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(slab, starts))
    else:
        for k0 in starts:
            slab(k0)
    return KeyArray(hi.ravel(), lo.ravel(), level)


@dataclass(frozen=True, eq=False)
class Partition:
    """Cell-to-rank assignment.

    ``cut_keys[j - 1]`` is the key of the first cell of rank ``j`` in curve
    order; empty for external partitions. It is not stored in partition
    files and does not take part in equality.
    """

    n_ranks: int
    assignment: np.ndarray = field(repr=False)
    cut_keys: tuple[SfcKey, ...] = ()
    method: str = "external"

    def __post_init__(self):
        if int(self.n_ranks) != self.n_ranks or self.n_ranks < 1:
            raise ConfigError(f"n_ranks must be a positive integer, got {self.n_ranks!r}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown partition method {self.method!r}")
        a = np.asarray(self.assignment)
        if a.ndim != 1 or (a.size and not np.issubdtype(a.dtype, np.integer)):
            raise ConfigError("assignment must be a 1-D integer array")
        if a.size and (a.min() < 0 or a.max() >= self.n_ranks):
            raise ConfigError(f"rank ids must lie in [0, {self.n_ranks})")
        counts = np.bincount(a, minlength=self.n_ranks)
        if np.any(counts == 0):
            raise ConfigError(f"rank {int(np.flatnonzero(counts == 0)[0])} owns no cells")
        a = a.astype(np.int32, copy=True)
        a.flags.writeable = False
        object.__setattr__(self, "n_ranks", int(self.n_ranks))
        object.__setattr__(self, "assignment", a)
        object.__setattr__(self, "cut_keys", tuple(self.cut_keys))

    @property
    def n_cells(self) -> int:
        return self.assignment.size

    def counts(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_ranks)

    def rank_weights(self, weights) -> np.ndarray:
        return np.bincount(self.assignment, weights=np.asarray(weights, dtype=np.float64), minlength=self.n_ranks)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return (
            self.n_ranks == other.n_ranks
            and self.method == other.method
            and np.array_equal(self.assignment, other.assignment)
        )

    __hash__ = None


def _choose_cuts(prefix: np.ndarray, n_ranks: int) -> np.ndarray:
    """Sorted positions ``m_1 < ... < m_{P-1}`` splitting ``prefix`` (length N + 1).

    Cut ``j`` goes where ``prefix[m]`` is nearest ``j * W / P``, earlier on a
    tie, then clamped so that every rank keeps at least one cell. Distances
    are compared as ``|P * prefix[m] - j * W|`` to avoid a division.
    """
    n = prefix.size - 1
    total = prefix[-1]
    j = np.arange(1, n_ranks, dtype=np.float64)
    target = j * total
    scaled = prefix * n_ranks
    right = np.clip(np.searchsorted(scaled, target, side="left"), 1, n)
    left = right - 1
    pick_left = np.abs(scaled[left] - target) <= np.abs(scaled[right] - target)
    nearest = np.where(pick_left, left, right)
    cuts = np.empty(n_ranks - 1, dtype=np.int64)
    prev = 0
    for jj in range(n_ranks - 1):
        m = min(max(int(nearest[jj]), prev + 1), n - (n_ranks - 1 - jj))
        cuts[jj] = m
        prev = m
    return cuts


def check_distinct(keys: KeyArray, order: np.ndarray) -> None:
    dup = keys.equal_adjacent(order)
    if dup.any():
        m = int(np.flatnonzero(dup)[0])
        raise DuplicateKeyError(
            f"cells {int(order[m])} and {int(order[m + 1])} share key {keys[int(order[m])].value}"
        )


def partition_1d(
    keys: KeyArray,
    weights,
    n_ranks: int,
    method: str = "hilbert",
    order: Optional[np.ndarray] = None,
) -> Partition:
    """Split cells sorted by key into ``n_ranks`` contiguous weighted runs.

    ``order`` may pass a previously computed ``keys.argsort()`` so that
    several rank counts can share one sort.
    """
    n = len(keys)
    if int(n_ranks) != n_ranks or n_ranks < 1:
        raise ConfigError(f"number of ranks must be a positive integer, got {n_ranks!r}")
    n_ranks = int(n_ranks)
    if n_ranks > n:
        raise ConfigError(f"cannot split {n} cells over {n_ranks} ranks")
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size != n:
        raise ConfigError(f"{w.size} weights for {n} keys")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ConfigError("weights must be finite and positive")

    if order is None:
        order = keys.argsort()
        check_distinct(keys, order)
    elif len(order) != n:
        raise ConfigError(f"sort order has {len(order)} entries for {n} keys")
    prefix = np.concatenate(([0.0], np.cumsum(w[order])))
    cuts = _choose_cuts(prefix, n_ranks)
    bounds = np.concatenate(([0], cuts, [n]))
    ranks_sorted = np.repeat(np.arange(n_ranks, dtype=np.int32), np.diff(bounds))
    assignment = np.empty(n, dtype=np.int32)
    assignment[order] = ranks_sorted
    cut_keys = tuple(keys[int(order[m])] for m in cuts)
    return Partition(n_ranks, assignment, cut_keys, method)


def partition_grid(
    grid: GridSpec,
    method: str = "hilbert",
    n_ranks: int = 1,
    level: int = DEFAULT_LEVEL,
    epsilon: float = DEFAULT_EPSILON,
    weights: Optional[np.ndarray] = None,
    threads: int = 1,
) -> Partition:
    """Map, key and split ``grid``; weights default to the grid's own."""
    if int(n_ranks) != n_ranks or n_ranks < 1:
        raise ConfigError(f"number of ranks must be a positive integer, got {n_ranks!r}")
    if n_ranks > grid.n_cells:
        raise ConfigError(f"cannot split {grid.n_cells} cells over {n_ranks} ranks")
    dmap = build_domain_map(grid, epsilon)
    keys = key_cells(grid, dmap, method, level, threads)
    return partition_1d(keys, grid.weights() if weights is None else weights, n_ranks, method)


def write_partition(part: Partition, path) -> None:
    """``nparts N``, ``method NAME``, then one rank id per cell."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"nparts {part.n_ranks}\nmethod {part.method}\n")
        a = part.assignment
        for start in range(0, a.size, 1 << 20):
            chunk = a[start : start + (1 << 20)]
            fh.write("\n".join(map(str, chunk.tolist())))
            fh.write("\n")


def _header(line: Optional[str], key: str, path, lineno: int) -> str:
    parts = (line or "").split()
    if len(parts) != 2 or parts[0] != key:
        raise ParseError(f"expected '{key} <value>', got {(line or '').strip()!r}", path, lineno)
    return parts[1]


def read_partition(path, n_cells: Optional[int] = None) -> Partition:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read partition file: {exc.strerror}", path) from exc
    head, _, body = text.partition("\n")
    second, _, body = body.partition("\n")
    raw = _header(head, "nparts", path, 1)
    try:
        n_ranks = int(raw)
    except ValueError:
        raise ParseError(f"bad rank count {raw!r}", path, 1) from None
    if n_ranks < 1:
        raise ParseError(f"rank count must be positive, got {n_ranks}", path, 1)
    method = _header(second, "method", path, 2)
    if method not in METHODS:
        raise ParseError(f"unknown method {method!r}", path, 2)

    lines = body.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    try:
        ranks = np.array(lines, dtype=np.int64)
    except ValueError:
        for n, ln in enumerate(lines):
            try:
                int(ln)
            except ValueError:
                raise ParseError(f"bad rank id {ln!r}", path, n + 3) from None
        raise
    bad = np.flatnonzero((ranks < 0) | (ranks >= n_ranks))
    if bad.size:
        raise ParseError(f"rank id {int(ranks[bad[0]])} outside [0, {n_ranks})", path, int(bad[0]) + 3)
    if n_cells is not None and ranks.size != n_cells:
        raise ParseError(f"partition lists {ranks.size} cells, grid has {n_cells}", path)
    try:
        return Partition(n_ranks, ranks, (), method)
    except ConfigError as exc:
        raise ParseError(str(exc), path) from None
