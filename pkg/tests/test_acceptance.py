"""Exit criteria. Each test appends one PASS/FAIL line to the terminal summary.

Criteria 4 and 5 partition the full 180 x 660 x 255 grid (30.3M cells) and
take about a minute and ~3 GB of memory.
"""

import gc
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import adjacency_breaks, brute_force_metrics, lattice_points, reference_doubles, slab_partitions
from sfcpart.cli import sweep
from sfcpart.grid import GridSpec
from sfcpart.metrics import quality_report
from sfcpart.partition import Partition, build_domain_map, key_cells, partition_1d, partition_grid
from sfcpart.sfc import encode_points, hilbert_encode_recursive

# Example 1: 1200 ft x 2200 ft x 170 ft, 180 x 660 x 255 cells
EXAMPLE1 = dict(nx=180, ny=660, nz=255, x1=0, x2=1200, y1=0, y2=2200, z1=0, z2=170)
EXAMPLE1_RANKS = (256, 512, 1024, 2048)
PUBLISHED_C = {256: 16, 512: 15, 1024: 15, 2048: 16}
PUBLISHED_R_MAX = {256: 0.0834, 512: 0.107, 1024: 0.135, 2048: 0.182}
PUBLISHED_R_AVG = {256: 0.0639, 512: 0.0816, 1024: 0.104, 2048: 0.130}
C_TOL = 2
R_REL_TOL = 0.15


def record(number, name, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {name}: {detail}")
    assert ok, detail


def test_1_reference_routine_parity(reference_lib):
    rng = np.random.default_rng(20240601)
    pts = rng.uniform(np.nextafter(0.0, 1.0), 1.0, size=(100_000, 3))
    ref = reference_doubles(reference_lib, pts)
    t0 = time.perf_counter()
    ours = encode_points(pts, 30).legacy_doubles()
    elapsed = time.perf_counter() - t0
    mismatches = int(np.count_nonzero(ref.view(np.uint64) != ours.view(np.uint64)))
    record(
        1,
        "parity with the reference C routine, 1e5 points, level 30",
        mismatches == 0 and elapsed < 1.0,
        f"{mismatches} bit mismatches, {elapsed:.3f}s (limit 1s)",
    )


def test_2_oracle_equivalence():
    t0 = time.perf_counter()
    bad = []
    for level in range(1, 6):
        pts, _ = lattice_points(2**level)
        table = encode_points(pts, level)
        rec = [hilbert_encode_recursive(p, level).value for p in pts]
        if table.to_ints() != rec or not np.array_equal(table.argsort(), np.argsort(rec, kind="stable")):
            bad.append(2**level)
    elapsed = time.perf_counter() - t0
    record(
        2,
        "table-driven vs recursive Hilbert on 2^3..32^3",
        not bad and elapsed < 5.0,
        f"mismatching lattices {bad or 'none'}, {elapsed:.2f}s (limit 5s)",
    )


def test_3_hilbert_adjacency():
    t0 = time.perf_counter()
    breaks = {}
    for level in range(1, 6):
        pts, ijk = lattice_points(2**level)
        breaks[2**level] = adjacency_breaks(ijk[encode_points(pts, level).argsort()])
    pts, ijk = lattice_points(4)
    morton_breaks = adjacency_breaks(ijk[encode_points(pts, 2, "morton").argsort()])
    elapsed = time.perf_counter() - t0
    record(
        3,
        "Hilbert consecutive cells face-adjacent, Morton jumps",
        all(v == 0 for v in breaks.values()) and morton_breaks >= 1 and elapsed < 5.0,
        f"Hilbert violations {breaks}, Morton 4^3 violations {morton_breaks}, {elapsed:.2f}s",
    )


@pytest.fixture(scope="module")
def example1_rows():
    grid = GridSpec(**EXAMPLE1)
    t0 = time.perf_counter()
    rows = sweep(grid, ["hilbert"], EXAMPLE1_RANKS)
    return rows, time.perf_counter() - t0


def test_4_connectivity_table(example1_rows):
    rows, elapsed = example1_rows
    got = {r["np"]: r["c_max"] for r in rows}
    ok = all(abs(got[n] - PUBLISHED_C[n]) <= C_TOL for n in EXAMPLE1_RANKS)
    balanced = all(r["imbalance"] < 1 + 1 / (30_294_000 // r["np"]) + 1e-12 for r in rows)
    record(
        4,
        "max inter-rank connectivity, Example 1 (published 16/15/15/16, +-2)",
        ok and balanced and elapsed < 600,
        f"c_max {[got[n] for n in EXAMPLE1_RANKS]}, total {elapsed:.0f}s (limit 600s)",
    )


def test_5_surface_index_table(example1_rows):
    rows, _ = example1_rows
    r_max = [r["r_max"] for r in rows]
    r_avg = [r["r_avg"] for r in rows]
    rel_max = [abs(v - PUBLISHED_R_MAX[n]) / PUBLISHED_R_MAX[n] for v, n in zip(r_max, EXAMPLE1_RANKS)]
    rel_avg = [abs(v - PUBLISHED_R_AVG[n]) / PUBLISHED_R_AVG[n] for v, n in zip(r_avg, EXAMPLE1_RANKS)]
    increasing = all(np.diff(r_max) > 0) and all(np.diff(r_avg) > 0)
    ok = max(rel_max + rel_avg) <= R_REL_TOL and increasing
    record(
        5,
        "surface indices, Example 1 (+-15% relative, increasing in N_p)",
        ok,
        "r_max % "
        + "/".join(f"{100 * v:.2f}" for v in r_max)
        + ", r_avg % "
        + "/".join(f"{100 * v:.2f}" for v in r_avg)
        + f", worst relative error {max(rel_max + rel_avg):.3f}",
    )


def test_6_partition_invariants():
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    failures = []
    for trial in range(200):
        dims = tuple(int(v) for v in rng.integers(1, 21, size=3))
        lengths = rng.uniform(0.1, 100.0, size=3)
        grid = GridSpec(*dims, 0, lengths[0], 0, lengths[1], 0, lengths[2])
        n_ranks = int(min(rng.integers(1, 33), grid.n_cells))
        method = ("hilbert", "morton")[trial % 2]
        keys = key_cells(grid, build_domain_map(grid), method, 30)
        order = keys.argsort()

        plain = partition_1d(keys, np.ones(grid.n_cells), n_ranks, method)
        counts = plain.counts()
        w = rng.uniform(0.01, 10.0, size=grid.n_cells)
        heavy = partition_1d(keys, w, n_ranks, method)
        per_rank = heavy.rank_weights(w)

        checks = {
            "eq2": counts.min() >= 1 and counts.sum() == grid.n_cells and heavy.counts().min() >= 1,
            "contiguous": np.all(np.diff(plain.assignment[order]) >= 0) and np.all(np.diff(heavy.assignment[order]) >= 0),
            "spread": counts.max() - counts.min() <= 1,
            "greedy bound": per_rank.max() <= w.sum() / n_ranks + w.max() + 1e-9,
        }
        perm = rng.permutation(n_ranks)
        a = quality_report(heavy, grid, w)
        b = quality_report(Partition(n_ranks, perm[heavy.assignment]), grid, w)
        checks["relabel"] = (a.r_max, a.r_avg, a.c_max, a.edge_cut, a.imbalance) == (
            b.r_max,
            b.r_avg,
            b.c_max,
            b.edge_cut,
            b.imbalance,
        )
        failures += [(trial, dims, n_ranks, k) for k, v in checks.items() if not v]
    elapsed = time.perf_counter() - t0
    record(
        6,
        "partition invariants on 200 random grids",
        not failures and elapsed < 30,
        f"{len(failures)} failures {failures[:3]}, {elapsed:.1f}s (limit 30s)",
    )


def test_7_metrics_brute_force():
    t0 = time.perf_counter()
    n_checked = 0
    bad = []
    for nx in range(1, 7):
        for ny in range(1, 7):
            for nz in range(1, 7):
                grid = GridSpec(nx, ny, nz)
                for axis, starts, a in slab_partitions((nx, ny, nz)):
                    n_ranks = len(starts)
                    f, b, c, cut = brute_force_metrics((nx, ny, nz), a, n_ranks)
                    rep = quality_report(Partition(n_ranks, a), grid)
                    ratios = [bi / fi if fi else 0.0 for bi, fi in zip(b, f)]
                    same = (
                        rep.f.tolist() == f
                        and rep.b.tolist() == b
                        and rep.c.tolist() == c
                        and rep.edge_cut == cut
                        and rep.c_max == max(c)
                        and rep.r_max == max(ratios)
                        and rep.r_avg == math.fsum(ratios) / len(ratios)
                    )
                    if not same:
                        bad.append(((nx, ny, nz), axis, starts.tolist()))
                    n_checked += 1
    elapsed = time.perf_counter() - t0
    record(
        7,
        "metrics equal brute-force recount on all slab partitions up to 6^3",
        not bad and elapsed < 10,
        f"{n_checked} partitions, {len(bad)} mismatches, {elapsed:.1f}s (limit 10s)",
    )


def _run(grid):
    t0 = time.perf_counter()
    partition_grid(grid, "hilbert", 256)
    return time.perf_counter() - t0


def test_8_doubling_scaling():
    small = GridSpec(90, 330, 64, 0, 1200, 0, 2200, 0, 170)
    large = GridSpec(90, 330, 128, 0, 1200, 0, 2200, 0, 170)
    gc.collect()
    _run(small)  # warm-up
    # interleaved so machine drift hits both sizes alike; best-of filters noise
    t_small = t_large = float("inf")
    for _ in range(4):
        t_small = min(t_small, _run(small))
        t_large = min(t_large, _run(large))
    ratio = t_large / t_small
    record(
        8,
        "single-node partitioning time, N_g doubled",
        ratio < 2.3,
        f"{small.n_cells} cells {t_small:.2f}s, {large.n_cells} cells {t_large:.2f}s, ratio {ratio:.2f} (limit 2.3)",
    )
