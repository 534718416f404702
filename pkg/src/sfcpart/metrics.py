"""Partition quality: surface indices, inter-rank connectivity, edge cut, imbalance.

Face accounting, per rank ``i``:

* ``f_i`` counts interior faces touching a rank-``i`` cell. A face between two
  rank-``i`` cells counts once; a face between ranks ``i`` and ``j`` counts
  once for each of them. Faces on the domain boundary are ignored.
* ``b_i`` counts the faces of ``f_i`` whose other side belongs to another rank.

So ``b_i <= f_i`` and ``sum(b) == 2 * (number of cut faces)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .grid import DualGraph, GridSpec, _face_slices
from .partition import Partition

__all__ = [
    "QualityReport",
    "connectivity",
    "edge_cut",
    "imbalance",
    "quality_report",
    "surface_counts",
    "surface_indices",
]


@dataclass(frozen=True)
class _FaceStats:
    internal: np.ndarray  # faces with both sides in rank i
    boundary: np.ndarray  # b_i
    pairs: np.ndarray  # sorted unique codes lo_rank * n_ranks + hi_rank of cut faces, both directions
    cut_weight: float


def _as_graph(graph) -> DualGraph:
    return graph if isinstance(graph, DualGraph) else DualGraph(graph)


def _check(partition: Partition, graph: DualGraph) -> np.ndarray:
    grid = graph.grid
    if partition.n_cells != grid.n_cells:
        raise ConfigError(f"partition covers {partition.n_cells} cells, grid has {grid.n_cells}")
    return partition.assignment.reshape(grid.shape)


def _face_stats(partition: Partition, graph: DualGraph) -> _FaceStats:
    a = _check(partition, graph)
    p = partition.n_ranks
    internal = np.zeros(p, dtype=np.int64)
    boundary = np.zeros(p, dtype=np.int64)
    codes = []
    n_cut = 0
    cut_weight = 0.0
    for axis in range(3):
        left, right = _face_slices(a, axis)
        if left.size == 0:
            continue
        same = left == right
        internal += np.bincount(left[same], minlength=p)
        cut = ~same
        del same
        cl = left[cut]
        cr = right[cut]
        n_cut += cl.size
        boundary += np.bincount(cl, minlength=p)
        boundary += np.bincount(cr, minlength=p)
        if cl.size:
            cl64 = cl.astype(np.int64)
            cr64 = cr.astype(np.int64)
            codes.append(np.unique(cl64 * p + cr64))
            codes.append(np.unique(cr64 * p + cl64))
        if graph.edge_weight is not None and cl.size:
            lo_idx, hi_idx = graph.face_pairs(axis)
            w = graph.weights_for(lo_idx[cut], hi_idx[cut])
            cut_weight += float(np.sum(w))
    if graph.edge_weight is None:
        cut_weight = float(n_cut)
    pairs = np.unique(np.concatenate(codes)) if codes else np.zeros(0, dtype=np.int64)
    return _FaceStats(internal, boundary, pairs, cut_weight)


def surface_counts(partition: Partition, graph) -> tuple[np.ndarray, np.ndarray]:
    """Per-rank ``(f, b)`` face counts."""
    s = _face_stats(partition, _as_graph(graph))
    return s.internal + s.boundary, s.boundary


def surface_indices(f, b) -> tuple[float, float]:
    """``(max_i b_i/f_i, mean_i b_i/f_i)``.

    A rank without interior faces (only possible for a single-cell grid)
    contributes a ratio of 0.
    """
    f = np.asarray(f, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if f.size == 0:
        raise ConfigError("no ranks")
    if np.any(b > f) or np.any(b < 0):
        raise ConfigError("boundary face counts must lie in [0, f_i]")
    ratio = np.divide(b, f, out=np.zeros_like(b), where=f > 0)
    # fsum: exact, so the mean does not depend on rank numbering
    return float(ratio.max()), math.fsum(ratio.tolist()) / ratio.size


def _per_rank_connectivity(pairs: np.ndarray, n_ranks: int) -> np.ndarray:
    return np.bincount(pairs // n_ranks, minlength=n_ranks) if pairs.size else np.zeros(n_ranks, dtype=np.int64)


def connectivity(partition: Partition, graph) -> tuple[np.ndarray, int]:
    """Per-rank count of distinct neighbouring ranks, and its maximum."""
    s = _face_stats(partition, _as_graph(graph))
    c = _per_rank_connectivity(s.pairs, partition.n_ranks)
    return c, int(c.max())


def edge_cut(partition: Partition, graph) -> float:
    """Total weight of faces whose two cells sit on different ranks."""
    return _face_stats(partition, _as_graph(graph)).cut_weight


def imbalance(partition: Partition, weights=None) -> float:
    """Heaviest rank over the mean rank workload; 1.0 is perfect."""
    w = np.ones(partition.n_cells) if weights is None else np.asarray(weights, dtype=np.float64).ravel()
    if w.size != partition.n_cells:
        raise ConfigError(f"{w.size} weights for {partition.n_cells} cells")
    per_rank = partition.rank_weights(w)
    return float(per_rank.max()) / (math.fsum(per_rank.tolist()) / partition.n_ranks)


@dataclass(frozen=True, eq=False)
class QualityReport:
    n_ranks: int
    cells: np.ndarray
    weight: np.ndarray
    f: np.ndarray
    b: np.ndarray
    c: np.ndarray
    r_max: float
    r_avg: float
    c_max: int
    edge_cut: float
    imbalance: float

    def rows(self) -> list[dict]:
        return [
            {
                "rank": i,
                "cells": int(self.cells[i]),
                "weight": float(self.weight[i]),
                "f": int(self.f[i]),
                "b": int(self.b[i]),
                "c": int(self.c[i]),
            }
            for i in range(self.n_ranks)
        ]

    def summary(self) -> dict:
        return {
            "n_ranks": self.n_ranks,
            "r_max": self.r_max,
            "r_avg": self.r_avg,
            "c_max": self.c_max,
            "edge_cut": self.edge_cut,
            "imbalance": self.imbalance,
        }

    def to_text(self, per_rank: bool = True) -> str:
        lines = []
        if per_rank:
            hdr = f"{'rank':>6} {'cells':>10} {'weight':>14} {'f':>10} {'b':>10} {'b/f':>8} {'c':>4}"
            lines.append(hdr)
            lines.append("-" * len(hdr))
            for r in self.rows():
                ratio = r["b"] / r["f"] if r["f"] else 0.0
                lines.append(
                    f"{r['rank']:>6} {r['cells']:>10} {r['weight']:>14.6g} {r['f']:>10} "
                    f"{r['b']:>10} {ratio:>8.4f} {r['c']:>4}"
                )
            lines.append("")
        lines.append(f"ranks      {self.n_ranks}")
        lines.append(f"r_max      {100 * self.r_max:.4f} %")
        lines.append(f"r_avg      {100 * self.r_avg:.4f} %")
        lines.append(f"c_max      {self.c_max}")
        lines.append(f"edge_cut   {self.edge_cut:.12g}")
        lines.append(f"imbalance  {self.imbalance:.6f}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "cells", "weight", "f", "b", "c"])
        for r in self.rows():
            w.writerow([r["rank"], r["cells"], repr(r["weight"]), r["f"], r["b"], r["c"]])
        w.writerow(
            ["total", int(self.cells.sum()), repr(float(self.weight.sum())), int(self.f.sum()), int(self.b.sum()), self.c_max]
        )
        return buf.getvalue()


def quality_report(partition: Partition, graph, weights: Optional[np.ndarray] = None) -> QualityReport:
    """All metrics from a single pass over the faces.

    ``graph`` may be a :class:`DualGraph` or a bare :class:`GridSpec`;
    ``weights`` defaults to the grid's cell weights.
    """
    graph = _as_graph(graph)
    grid: GridSpec = graph.grid
    w = grid.weights() if weights is None else np.asarray(weights, dtype=np.float64).ravel()
    s = _face_stats(partition, graph)
    f = s.internal + s.boundary
    r_max, r_avg = surface_indices(f, s.boundary)
    c = _per_rank_connectivity(s.pairs, partition.n_ranks)
    return QualityReport(
        n_ranks=partition.n_ranks,
        cells=partition.counts(),
        weight=partition.rank_weights(w),
        f=f,
        b=s.boundary,
        c=c,
        r_max=r_max,
        r_avg=r_avg,
        c_max=int(c.max()),
        edge_cut=s.cut_weight,
        imbalance=imbalance(partition, w),
    )
