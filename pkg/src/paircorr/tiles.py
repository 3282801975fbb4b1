"""Tiled computation of the upper-triangle correlation workload.

The ``n x n`` job matrix is cut into ``t x t`` tiles, giving an ``m x m``
tile matrix with ``m = ceil(n / t)`` whose upper triangle fully covers the
job-matrix upper triangle.  Tiles inherit the same linear-identifier
bijection as jobs, so a contiguous tile-identifier range is a well-defined
unit of work.

A computed tile is ``t*t`` values laid out row-major, cell ``(ry, cx)`` at
offset ``ry*t + cx`` holding the job at global coordinate
``(y_t*t + ry, x_t*t + cx)``.  Cells below the diagonal or past ``n`` are
exactly 0.0.  Keeping these placeholder zeros (rather than compacting
diagonal tiles) makes the buffer offset arithmetic trivial: tile ``J`` of a
pass starting at ``J_start`` lives at ``(J - J_start) * t * t``.

Scattering consults coordinates only, never values, so placeholder zeros in
diagonal or boundary tiles are never confused with genuine zero
correlations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import IntegrityError
from .indexing import Coord, sym_job_coord, sym_job_count, sym_job_id
from .transform import NormalizedDataset

__all__ = [
    "TileGeometry",
    "TileBlock",
    "BlockList",
    "CorrelationResult",
    "tile_coord",
    "compute_pass",
    "scatter",
    "scatter_pass",
]

DEFAULT_TILE_SIZE = 4


@dataclass(frozen=True)
class TileGeometry:
    """Tiling of an ``n``-variable job matrix with edge-``t`` tiles."""

    n: int
    t: int = DEFAULT_TILE_SIZE

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.t < 1:
            raise ValueError(f"tile size must be >= 1, got {self.t}")

    @property
    def m(self) -> int:
        """Tile-matrix edge length, ``ceil(n / t)``."""
        return -(-self.n // self.t)

    @property
    def total_tiles(self) -> int:
        return sym_job_count(self.m)

    @property
    def job_count(self) -> int:
        return sym_job_count(self.n)


@dataclass
class TileBlock:
    """One tile's ``t*t`` results; ``values`` may view a shared pass buffer."""

    tile_id: int
    values: np.ndarray


class BlockList(list):
    """Blocks of one pass, in tile order.

    When produced by :func:`compute_pass`, ``flat`` views the contiguous
    underlying buffer (``len(self) * t^2`` floats), letting consumers scatter
    a whole pass in one compiled call instead of per block.
    """

    flat: np.ndarray | None = None


@dataclass
class CorrelationResult:
    """Symmetric correlations packed as the upper triangle in job-id order."""

    n: int
    packed: np.ndarray
    zero_variance: frozenset[int] = field(default_factory=frozenset)

    def get(self, i: int, j: int) -> float:
        """Correlation of variables ``i`` and ``j`` (order-independent)."""
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError(f"pair ({i}, {j}) outside [0, {self.n})")
        return float(self.packed[sym_job_id(self.n, min(i, j), max(i, j))])

    def to_dense(self) -> np.ndarray:
        """Expand to a full symmetric ``n x n`` matrix (small n only)."""
        full = np.empty((self.n, self.n), dtype=np.float64)
        k = 0
        for y in range(self.n):
            row = self.packed[k : k + self.n - y]
            full[y, y:] = row
            full[y:, y] = row
            k += self.n - y
        return full


def empty_result(n: int, zero_variance: frozenset[int] = frozenset()) -> CorrelationResult:
    """Zero-filled packed result ready for scattering."""
    return CorrelationResult(
        n=n,
        packed=np.zeros(sym_job_count(n), dtype=np.float64),
        zero_variance=zero_variance,
    )


def tile_coord(m: int, tile_id: int) -> Coord:
    """Coordinate of ``tile_id`` in the tile matrix; same bijection as jobs."""
    return sym_job_coord(m, tile_id)


def compute_pass(
    u: NormalizedDataset,
    geom: TileGeometry,
    j_start: int,
    j_end: int,
    threads: int = 1,
    out: np.ndarray | None = None,
    pool: ThreadPoolExecutor | None = None,
) -> list[TileBlock]:
    """Compute tiles ``[j_start, j_end)`` into a flat buffer of tile blocks.

    ``out``, when given, must hold ``(j_end - j_start) * t^2`` floats and is
    filled in place (pipeline buffer reuse); otherwise a fresh buffer is
    allocated.  ``threads`` splits the tile range into contiguous chunks,
    one per thread; every cell is written by exactly one thread and each
    pair's value comes from the same fixed-order kernel, so output is
    independent of the thread count.  ``pool`` lets a caller reuse one
    executor (with at least ``threads`` workers) across many passes.
    """
    if not 0 <= j_start <= j_end <= geom.total_tiles:
        raise ValueError(
            f"tile range [{j_start}, {j_end}) invalid for {geom.total_tiles} tiles"
        )
    count = j_end - j_start
    t = geom.t
    need = count * t * t
    if out is None:
        out = np.empty(need, dtype=np.float64)
    elif out.shape[0] < need:
        raise ValueError(f"pass buffer too small: {out.shape[0]} < {need}")
    if count == 0:
        return BlockList()

    uvals = u.u
    n = geom.n
    m = geom.m
    threads = max(1, min(threads, count))
    if threads == 1:
        _kernels.compute_tile_range(uvals, out, n, t, m, j_start, j_end, j_start)
    else:
        chunk = -(-count // threads)
        spans = [
            (lo, min(j_end, lo + chunk)) for lo in range(j_start, j_end, chunk)
        ]
        own_pool = pool is None
        if own_pool:
            pool = ThreadPoolExecutor(max_workers=len(spans))
        try:
            futures = [
                pool.submit(
                    _kernels.compute_tile_range, uvals, out, n, t, m, lo, hi, j_start
                )
                for lo, hi in spans
            ]
            for f in futures:
                f.result()
        finally:
            if own_pool:
                pool.shutdown(wait=True)

    t2 = t * t
    blocks = BlockList(
        TileBlock(tile_id=j_start + k, values=out[k * t2 : (k + 1) * t2])
        for k in range(count)
    )
    blocks.flat = out[:need]
    return blocks


def scatter(
    blocks: list[TileBlock], geom: TileGeometry, result: CorrelationResult
) -> CorrelationResult:
    """Write tile blocks into the packed result, coordinate-driven.

    Only cells with ``y <= x < n`` are taken from a block; placeholder zeros
    below the diagonal are skipped by position.  Tile ids within one call
    must be distinct.
    """
    seen: set[int] = set()
    for block in blocks:
        if block.tile_id in seen:
            raise IntegrityError(f"tile {block.tile_id} scattered twice in one call")
        if not 0 <= block.tile_id < geom.total_tiles:
            raise ValueError(
                f"tile id {block.tile_id} outside [0, {geom.total_tiles})"
            )
        seen.add(block.tile_id)
        values = np.ascontiguousarray(block.values, dtype=np.float64)
        if values.shape != (geom.t * geom.t,):
            raise ValueError(
                f"tile {block.tile_id} carries {values.shape} values, "
                f"expected ({geom.t * geom.t},)"
            )
        _kernels.scatter_range(
            result.packed, values, block.tile_id, 1, geom.m, geom.t, geom.n
        )
    return result


def scatter_pass(
    blocks: list[TileBlock], geom: TileGeometry, result: CorrelationResult
) -> None:
    """Scatter one pass; uses the flat-buffer fast path when available."""
    flat = getattr(blocks, "flat", None)
    if flat is None or not blocks or flat.shape[0] != len(blocks) * geom.t * geom.t:
        scatter(blocks, geom, result)
        return
    _kernels.scatter_range(
        result.packed, flat, blocks[0].tile_id, len(blocks), geom.m, geom.t, geom.n
    )
