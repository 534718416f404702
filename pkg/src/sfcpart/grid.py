"""Structured 3D grids, cell indexing and the implicit face-adjacency dual graph.

Cells are indexed x-fastest: ``idx = i + nx * (j + ny * k)``. Arrays holding one
value per cell can therefore be viewed as ``(nz, ny, nx)`` C-ordered blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, NamedTuple, Optional

import numpy as np

from .errors import ConfigError, ParseError

__all__ = [
    "CellCoord",
    "DualGraph",
    "GridSpec",
    "cell_center",
    "neighbors",
    "read_grid_file",
    "write_grid_file",
]


class CellCoord(NamedTuple):
    i: int
    j: int
    k: int


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Box ``[x1,x2] x [y1,y2] x [z1,z2]`` cut into ``nx * ny * nz`` cells."""

    nx: int
    ny: int
    nz: int
    x1: float = 0.0
    x2: float = 1.0
    y1: float = 0.0
    y2: float = 1.0
    z1: float = 0.0
    z2: float = 1.0
    cell_weights: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        for lo, hi in (("x1", "x2"), ("y1", "y2"), ("z1", "z2")):
            a, b = float(getattr(self, lo)), float(getattr(self, hi))
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ConfigError(f"extent {lo}={a} must be finite and below {hi}={b}")
            object.__setattr__(self, lo, a)
            object.__setattr__(self, hi, b)
        if self.cell_weights is not None:
            w = np.array(self.cell_weights, dtype=np.float64).ravel()
            if w.size != self.n_cells:
                raise ConfigError(
                    f"weight array has {w.size} entries, grid has {self.n_cells} cells"
                )
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ConfigError("cell weights must be finite and positive")
            w.flags.writeable = False
            object.__setattr__(self, "cell_weights", w)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def shape(self) -> tuple[int, int, int]:
        """Array shape of per-cell data in linear-index order."""
        return (self.nz, self.ny, self.nx)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.z1])

    @property
    def lengths(self) -> np.ndarray:
        return np.array([self.x2 - self.x1, self.y2 - self.y1, self.z2 - self.z1])

    @property
    def spacing(self) -> np.ndarray:
        return self.lengths / np.array(self.dims, dtype=np.float64)

    def weights(self) -> np.ndarray:
        """Per-cell workloads, 1.0 when none were given."""
        if self.cell_weights is None:
            return np.ones(self.n_cells)
        return self.cell_weights

    def check(self, c) -> CellCoord:
        i, j, k = (int(v) for v in c)
        if not (0 <= i < self.nx and 0 <= j < self.ny and 0 <= k < self.nz):
            raise IndexError(f"cell {(i, j, k)} outside grid {self.dims}")
        return CellCoord(i, j, k)

    def linear_index(self, c) -> int:
        i, j, k = self.check(c)
        return i + self.nx * (j + self.ny * k)

    def cell(self, idx: int) -> CellCoord:
        idx = int(idx)
        if not 0 <= idx < self.n_cells:
            raise IndexError(f"linear index {idx} outside [0, {self.n_cells})")
        k, rem = divmod(idx, self.nx * self.ny)
        j, i = divmod(rem, self.nx)
        return CellCoord(i, j, k)

    def axis_centers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cell-center coordinates along each axis (one array per axis)."""
        out = []
        for lo, h, n in zip(self.lower, self.spacing, self.dims):
            out.append(lo + (np.arange(n) + 0.5) * h)
        return tuple(out)

    def __eq__(self, other):
        if not isinstance(other, GridSpec):
            return NotImplemented
        same_w = (self.cell_weights is None and other.cell_weights is None) or (
            self.cell_weights is not None
            and other.cell_weights is not None
            and np.array_equal(self.cell_weights, other.cell_weights)
        )
        return (
            self.dims == other.dims
            and (self.x1, self.x2, self.y1, self.y2, self.z1, self.z2)
            == (other.x1, other.x2, other.y1, other.y2, other.z1, other.z2)
            and same_w
        )

    __hash__ = None


def cell_center(grid: GridSpec, c) -> tuple[float, float, float]:
    i, j, k = grid.check(c)
    hx, hy, hz = grid.spacing
    return (
        grid.x1 + (i + 0.5) * hx,
        grid.y1 + (j + 0.5) * hy,
        grid.z1 + (k + 0.5) * hz,
    )


_OFFSETS = ((-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1))


def neighbors(grid: GridSpec, c) -> list[CellCoord]:
    """In-range face neighbours of ``c`` (6-point stencil)."""
    i, j, k = grid.check(c)
    out = []
    for di, dj, dk in _OFFSETS:
        a, b, d = i + di, j + dj, k + dk
        if 0 <= a < grid.nx and 0 <= b < grid.ny and 0 <= d < grid.nz:
            out.append(CellCoord(a, b, d))
    return out


EdgeWeight = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DualGraph:
    """Cells as vertices, shared faces as edges. Never materialized.

    ``edge_weight`` receives two arrays of linear indices (the two sides of a
    batch of faces) and returns one positive weight per face. ``None`` means
    every edge weighs 1.
    """

    grid: GridSpec
    edge_weight: Optional[EdgeWeight] = None

    def neighbors(self, c) -> list[CellCoord]:
        return neighbors(self.grid, c)

    def degree(self, c) -> int:
        return len(neighbors(self.grid, c))

    def n_edges(self) -> int:
        nx, ny, nz = self.grid.dims
        return (nx - 1) * ny * nz + nx * (ny - 1) * nz + nx * ny * (nz - 1)

    def face_pairs(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        """Linear indices ``(lo, hi)`` of every face normal to ``axis``.

        Returned as arrays shaped like the face block, so callers can index
        per-cell data viewed with ``grid.shape``.
        """
        idx = np.arange(self.grid.n_cells, dtype=np.int64).reshape(self.grid.shape)
        lo, hi = _face_slices(idx, axis)
        return lo, hi

    def weights_for(self, lo: np.ndarray, hi: np.ndarray) -> Optional[np.ndarray]:
        if self.edge_weight is None:
            return None
        w = np.asarray(self.edge_weight(lo, hi), dtype=np.float64)
        if w.shape != np.shape(lo):
            w = np.broadcast_to(w, np.shape(lo))
        if np.any(w <= 0):
            raise ConfigError("edge weights must be positive")
        return w

    def edges(self) -> Iterator[tuple[int, int]]:
        """Every undirected edge once, as ``(u, v)`` linear indices with u < v."""
        for axis in range(3):
            lo, hi = self.face_pairs(axis)
            yield from zip(lo.ravel().tolist(), hi.ravel().tolist())


def _face_slices(block: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Views of the two sides of all faces normal to ``axis`` of a (nz, ny, nx) block."""
    if axis == 0:
        return block[:, :, :-1], block[:, :, 1:]
    if axis == 1:
        return block[:, :-1, :], block[:, 1:, :]
    if axis == 2:
        return block[:-1, :, :], block[1:, :, :]
    raise ValueError(f"axis must be 0, 1 or 2, got {axis}")


def read_grid_file(path) -> GridSpec:
    """Parse a grid spec file.

    Format (UTF-8, one directive per line)::

        dims nx ny nz
        extents x1 x2 y1 y2 z1 z2
        weights <path>          # optional, relative to the grid file

    Blank lines are ignored; anything else is a parse error.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read grid file: {exc.strerror}", path) from exc

    dims = extents = wpath = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts:
            continue
        key, args = parts[0], parts[1:]
        if key == "dims" and dims is None:
            if len(args) != 3:
                raise ParseError("'dims' expects 3 integers", path, lineno)
            try:
                dims = [int(a) for a in args]
            except ValueError:
                raise ParseError(f"bad integer in {raw.strip()!r}", path, lineno) from None
        elif key == "extents" and extents is None:
            if len(args) != 6:
                raise ParseError("'extents' expects 6 numbers", path, lineno)
            try:
                extents = [float(a) for a in args]
            except ValueError:
                raise ParseError(f"bad number in {raw.strip()!r}", path, lineno) from None
        elif key == "weights" and wpath is None:
            if len(args) != 1:
                raise ParseError("'weights' expects one path", path, lineno)
            wpath = (Path(args[0]), lineno)
        else:
            raise ParseError(f"unexpected line {raw.strip()!r}", path, lineno)
    if dims is None:
        raise ParseError("missing 'dims' line", path)
    if extents is None:
        raise ParseError("missing 'extents' line", path)

    weights = None
    if wpath is not None:
        wp, lineno = wpath
        if not wp.is_absolute():
            wp = path.parent / wp
        weights = read_weights_file(wp, int(np.prod(dims)))

    try:
        return GridSpec(*dims, *extents, cell_weights=weights)
    except ConfigError as exc:
        raise ParseError(str(exc), path) from None


def read_weights_file(path, n_cells: int) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read weights file: {exc.strerror}", path) from exc
    try:
        w = np.array(text.split(), dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"non-numeric weight: {exc}", path) from None
    if w.size != n_cells:
        raise ParseError(f"expected {n_cells} weights, found {w.size}", path)
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        bad = int(np.flatnonzero(~(w > 0) | ~np.isfinite(w))[0])
        raise ParseError(f"weight #{bad} is not a positive number", path)
    return w


def write_grid_file(grid: GridSpec, path, weights_path=None) -> None:
    path = Path(path)
    lines = [
        f"dims {grid.nx} {grid.ny} {grid.nz}",
        "extents " + " ".join(repr(v) for v in (grid.x1, grid.x2, grid.y1, grid.y2, grid.z1, grid.z2)),
    ]
    if grid.cell_weights is not None:
        wp = Path(weights_path) if weights_path else path.with_suffix(".weights")
        np.savetxt(wp, grid.cell_weights, fmt="%.17g")
        lines.append(f"weights {wp.name if wp.parent == path.parent else wp}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
