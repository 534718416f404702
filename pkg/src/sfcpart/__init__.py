"""Hilbert and Morton space-filling-curve partitioning of structured 3D grids."""

from .errors import ConfigError, DomainError, ParseError, SfcPartError
from .grid import CellCoord, DualGraph, GridSpec, cell_center, neighbors, read_grid_file, write_grid_file
from .metrics import QualityReport, connectivity, edge_cut, imbalance, quality_report, surface_counts, surface_indices
from .partition import (
    DEFAULT_EPSILON,
    DomainMap,
    Partition,
    build_domain_map,
    key_cells,
    min_level,
    partition_1d,
    partition_grid,
    read_partition,
    write_partition,
)
from .sfc import (
    DEFAULT_LEVEL,
    MAX_LEVEL,
    KeyArray,
    SfcKey,
    legacy_double,
    encode_points,
    hilbert_encode,
    hilbert_encode_recursive,
    key_to_unit_interval,
    morton_encode,
)

__all__ = [
    "CellCoord",
    "ConfigError",
    "DEFAULT_EPSILON",
    "DEFAULT_LEVEL",
    "DomainError",
    "DomainMap",
    "DualGraph",
    "GridSpec",
    "KeyArray",
    "MAX_LEVEL",
    "ParseError",
    "Partition",
    "QualityReport",
    "SfcKey",
    "SfcPartError",
    "legacy_double",
    "build_domain_map",
    "cell_center",
    "connectivity",
    "edge_cut",
    "encode_points",
    "hilbert_encode",
    "hilbert_encode_recursive",
    "imbalance",
    "key_cells",
    "key_to_unit_interval",
    "min_level",
    "morton_encode",
    "neighbors",
    "partition_1d",
    "partition_grid",
    "quality_report",
    "read_grid_file",
    "read_partition",
    "surface_counts",
    "surface_indices",
    "write_grid_file",
    "write_partition",
]
