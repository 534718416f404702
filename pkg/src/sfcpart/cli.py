"""``sfcpart`` command line: partition, metrics, sweep, encode.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, ParseError, SfcPartError
from .grid import GridSpec, read_grid_file, read_weights_file
from .metrics import quality_report
from .partition import (
    DEFAULT_EPSILON,
    build_domain_map,
    check_distinct,
    key_cells,
    partition_1d,
    read_partition,
    write_partition,
)
from .sfc import DEFAULT_LEVEL, MAX_LEVEL, encode_points, key_to_unit_interval

log = logging.getLogger("sfcpart")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2

SWEEP_COLUMNS = ("method", "np", "r_max", "r_avg", "c_max", "edge_cut", "imbalance", "seconds")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty rank list")
    return vals


def _methods(text: str) -> list[str]:
    vals = [v.strip() for v in text.split(",") if v.strip()]
    for v in vals:
        if v not in ("hilbert", "morton"):
            raise argparse.ArgumentTypeError(f"unknown method {v!r}; choose hilbert or morton")
    return vals


@dataclass
class RunConfig:
    command: str
    grid: Optional[str] = None
    methods: Sequence[str] = ("hilbert",)
    n_ranks: Sequence[int] = (1,)
    level: int = DEFAULT_LEVEL
    epsilon: float = DEFAULT_EPSILON
    weights: Optional[str] = None
    partition: Optional[str] = None
    out: Optional[str] = None
    format: str = "text"
    threads: int = 1

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        threads = args.threads
        if threads is None:
            env = os.environ.get("SFCPART_THREADS")
            try:
                threads = int(env) if env else 1
            except ValueError:
                raise ConfigError(f"SFCPART_THREADS must be an integer, got {env!r}") from None
        cfg = cls(
            command=args.command,
            grid=getattr(args, "grid", None),
            methods=getattr(args, "method", None) or ["hilbert"],
            n_ranks=getattr(args, "np", None) or [1],
            level=args.level,
            epsilon=getattr(args, "epsilon", DEFAULT_EPSILON),
            weights=getattr(args, "weights", None),
            partition=getattr(args, "partition", None),
            out=getattr(args, "out", None),
            format=getattr(args, "format", "text"),
            threads=threads,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if any(n < 1 for n in self.n_ranks):
            raise ConfigError(f"--np values must be >= 1, got {list(self.n_ranks)}")
        if not 1 <= self.level <= MAX_LEVEL:
            raise ConfigError(f"--level must lie in [1, {MAX_LEVEL}], got {self.level}")
        if not 0.0 < self.epsilon < 0.5:
            raise ConfigError(f"--epsilon must lie in (0, 0.5), got {self.epsilon}")
        if self.threads < 1:
            raise ConfigError(f"thread count must be >= 1, got {self.threads}")

    def load_grid(self) -> GridSpec:
        grid = read_grid_file(self.grid)
        if self.weights:
            w = read_weights_file(self.weights, grid.n_cells)
            grid = GridSpec(*grid.dims, grid.x1, grid.x2, grid.y1, grid.y2, grid.z1, grid.z2, cell_weights=w)
        for n in self.n_ranks:
            if n > grid.n_cells:
                raise ConfigError(f"--np {n} exceeds the {grid.n_cells} cells of the grid")
        return grid


def sweep(grid: GridSpec, methods, n_ranks, level=DEFAULT_LEVEL, epsilon=DEFAULT_EPSILON, threads=1) -> list[dict]:
    """Partition ``grid`` for every (method, rank count) and score each result.

    Keys and their sort order are computed once per method. ``seconds`` is
    that shared cost plus the cut selection for the row, i.e. what a single
    ``partition`` run would spend.
    """
    dmap = build_domain_map(grid, epsilon)
    weights = grid.weights()
    rows = []
    for method in methods:
        t0 = time.perf_counter()
        keys = key_cells(grid, dmap, method, level, threads)
        order = keys.argsort()
        check_distinct(keys, order)
        shared = time.perf_counter() - t0
        log.info("%s keys for %d cells in %.2fs", method, grid.n_cells, shared)
        for n in n_ranks:
            t1 = time.perf_counter()
            part = partition_1d(keys, weights, n, method, order=order)
            elapsed = shared + time.perf_counter() - t1
            rep = quality_report(part, grid, weights)
            rows.append(
                {
                    "method": method,
                    "np": n,
                    "r_max": rep.r_max,
                    "r_avg": rep.r_avg,
                    "c_max": rep.c_max,
                    "edge_cut": rep.edge_cut,
                    "imbalance": rep.imbalance,
                    "seconds": elapsed,
                }
            )
    return rows


def format_sweep(rows: list[dict], fmt: str = "text") -> str:
    if fmt == "csv":
        out = [",".join(SWEEP_COLUMNS)]
        for r in rows:
            out.append(
                f"{r['method']},{r['np']},{r['r_max']!r},{r['r_avg']!r},{r['c_max']},"
                f"{r['edge_cut']!r},{r['imbalance']!r},{r['seconds']:.3f}"
            )
        return "\n".join(out) + "\n"
    hdr = f"{'method':<8} {'N_p':>6} {'r_max %':>9} {'r_avg %':>9} {'c_max':>6} {'edge_cut':>12} {'imbalance':>10} {'time s':>8}"
    out = [hdr, "-" * len(hdr)]
    for r in rows:
        out.append(
            f"{r['method']:<8} {r['np']:>6} {100 * r['r_max']:>9.3f} {100 * r['r_avg']:>9.3f} "
            f"{r['c_max']:>6} {r['edge_cut']:>12.10g} {r['imbalance']:>10.6f} {r['seconds']:>8.2f}"
        )
    return "\n".join(out) + "\n"


def cmd_partition(cfg: RunConfig) -> int:
    if len(cfg.n_ranks) != 1 or len(cfg.methods) != 1:
        raise ConfigError("partition takes a single --np value and a single --method")
    if not cfg.out:
        raise ConfigError("partition requires --out")
    grid = cfg.load_grid()
    method, n = cfg.methods[0], cfg.n_ranks[0]
    t0 = time.perf_counter()
    dmap = build_domain_map(grid, cfg.epsilon)
    keys = key_cells(grid, dmap, method, cfg.level, cfg.threads)
    part = partition_1d(keys, grid.weights(), n, method)
    elapsed = time.perf_counter() - t0
    write_partition(part, cfg.out)
    print(f"N_g={grid.n_cells} N_p={n} method={method} elapsed={elapsed:.3f}s")
    return EXIT_OK


def cmd_metrics(cfg: RunConfig) -> int:
    if not cfg.partition:
        raise ConfigError("metrics requires --partition")
    grid = cfg.load_grid()
    part = read_partition(cfg.partition, grid.n_cells)
    rep = quality_report(part, grid)
    sys.stdout.write(rep.to_csv() if cfg.format == "csv" else rep.to_text())
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    grid = cfg.load_grid()
    rows = sweep(grid, cfg.methods, cfg.n_ranks, cfg.level, cfg.epsilon, cfg.threads)
    sys.stdout.write(format_sweep(rows, cfg.format))
    return EXIT_OK


def cmd_encode(cfg: RunConfig, stream=None) -> int:
    """Key each ``u v w`` line of stdin: decimal, hex, unit-interval value."""
    stream = sys.stdin if stream is None else stream
    method = cfg.methods[0]
    for lineno, raw in enumerate(stream, start=1):
        parts = raw.split()
        if not parts:
            continue
        if len(parts) != 3:
            raise ParseError(f"expected three numbers, got {raw.strip()!r}", None, lineno)
        try:
            p = [float(v) for v in parts]
        except ValueError:
            raise ParseError(f"non-numeric coordinate in {raw.strip()!r}", None, lineno) from None
        if not all(0.0 < c < 1.0 for c in p):
            raise ParseError(f"point {raw.strip()!r} is not inside the open unit cube", None, lineno)
        key = encode_points(np.array([p]), cfg.level, method)[0]
        print(f"{key.value} {key.hex()} {key_to_unit_interval(key):.17g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sfcpart", description="Space-filling-curve partitioning of structured 3D grids.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, grid=True):
        if grid:
            p.add_argument("--grid", required=True, help="grid spec file")
            p.add_argument("--weights", help="per-cell weights file (overrides the grid file's)")
            p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="unit-cube margin (default 2^-20)")
        p.add_argument("--level", type=int, default=DEFAULT_LEVEL, help=f"curve level, 1..{MAX_LEVEL} (default 30)")
        p.add_argument("--threads", type=int, default=None, help="keying threads (default $SFCPART_THREADS or 1)")

    p = sub.add_parser("partition", help="assign cells to ranks and write a partition file")
    common(p)
    p.add_argument("--method", type=_methods, default=["hilbert"])
    p.add_argument("--np", type=_int_list, required=True, help="number of ranks")
    p.add_argument("--out", required=True, help="partition file to write")

    p = sub.add_parser("metrics", help="score a partition file")
    common(p)
    p.add_argument("--partition", required=True)
    p.add_argument("--format", choices=("text", "csv"), default="text")

    p = sub.add_parser("sweep", help="partition and score for several rank counts")
    common(p)
    p.add_argument("--method", type=_methods, default=["hilbert"], help="comma list: hilbert,morton")
    p.add_argument("--np", type=_int_list, required=True, help="comma list of rank counts")
    p.add_argument("--format", choices=("text", "csv"), default="text")

    p = sub.add_parser("encode", help="key 'u v w' lines from stdin")
    common(p, grid=False)
    p.add_argument("--method", type=_methods, default=["hilbert"])
    return parser


_COMMANDS = {"partition": cmd_partition, "metrics": cmd_metrics, "sweep": cmd_sweep, "encode": cmd_encode}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = RunConfig.from_args(args)
        return _COMMANDS[cfg.command](cfg)
    except SfcPartError as exc:
        print(f"sfcpart {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"sfcpart {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
