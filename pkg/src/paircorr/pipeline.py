"""Multi-pass, double-buffered execution over a tile-identifier range.

The full result matrix for large ``n`` does not fit in a bounded result
buffer, so the tile range is split into capacity-limited passes and one pass
is computed at a time into a reusable flat buffer.  With overlap enabled,
two buffers alternate roles: while the consumer digests pass ``k`` from one
buffer, the producer computes pass ``k + 1`` into the other.  There is never
more than one pass in flight, so peak block storage is bounded by
``2 * capacity * t^2`` floats regardless of problem size.

Every pair's value is produced by the same fixed-order kernel and passes are
delivered to the sink strictly in plan order, so the assembled output is
bitwise identical with overlap on or off, for any capacity.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import PipelineError
from .tiles import (
    CorrelationResult,
    TileBlock,
    TileGeometry,
    compute_pass,
    empty_result,
    scatter_pass,
)
from .transform import NormalizedDataset

__all__ = [
    "PassPlan",
    "plan_passes",
    "ResultSink",
    "ResultAssembler",
    "run_pipeline",
]


@dataclass(frozen=True)
class PassPlan:
    """Contiguous, disjoint, ordered pass ranges covering [start, stop)."""

    start: int
    stop: int
    capacity: int
    passes: tuple[tuple[int, int], ...]

    @property
    def total(self) -> int:
        return self.stop - self.start


def plan_passes(range_start: int, range_stop: int, capacity: int) -> PassPlan:
    """Split ``[range_start, range_stop)`` into passes of at most ``capacity`` tiles.

    All passes except possibly the last have exactly ``capacity`` tiles; an
    empty range yields an empty plan.
    """
    if capacity < 1:
        raise ValueError(f"capacity must be >= 1, got {capacity}")
    if not 0 <= range_start <= range_stop:
        raise ValueError(f"bad tile range [{range_start}, {range_stop})")
    spans = []
    lo = range_start
    while lo < range_stop:
        hi = min(range_stop, lo + capacity)
        spans.append((lo, hi))
        lo = hi
    return PassPlan(
        start=range_start, stop=range_stop, capacity=capacity, passes=tuple(spans)
    )


class ResultSink:
    """Consumer of computed passes, invoked in plan order.

    ``consume`` receives the pass range and its tile blocks; block values
    view a buffer that will be reused for a later pass, so implementations
    must finish reading (or copy) before returning.
    """

    def consume(self, pass_range: tuple[int, int], blocks: list[TileBlock]) -> None:
        raise NotImplementedError


class ResultAssembler(ResultSink):
    """Scatters every delivered block into an in-memory packed result."""

    def __init__(self, geom: TileGeometry, zero_variance: frozenset[int] = frozenset()):
        self.geom = geom
        self._result = empty_result(geom.n, zero_variance)

    def consume(self, pass_range, blocks) -> None:
        scatter_pass(blocks, self.geom, self._result)

    @property
    def result(self) -> CorrelationResult:
        return self._result


def _default_alloc(num_floats: int) -> np.ndarray:
    return np.empty(num_floats, dtype=np.float64)


def run_pipeline(
    u: NormalizedDataset,
    geom: TileGeometry,
    plan: PassPlan,
    sink: ResultSink,
    threads: int = 1,
    overlap: bool = True,
    allocator=None,
) -> None:
    """Execute ``plan`` and deliver each pass to ``sink`` in order.

    ``allocator(num_floats) -> float64 ndarray`` is the hook through which
    all block-buffer memory is obtained (at most two buffers); tests
    instrument it to assert the memory bound.  A sink exception aborts the
    run after any in-flight pass has completed, raising
    :class:`PipelineError` naming the failing pass range.
    """
    if plan.stop > geom.total_tiles:
        raise ValueError(
            f"plan covers [{plan.start}, {plan.stop}) but geometry has "
            f"{geom.total_tiles} tiles"
        )
    passes = plan.passes
    if not passes:
        return
    alloc = allocator or _default_alloc
    t2 = geom.t * geom.t
    buf_floats = max(hi - lo for lo, hi in passes) * t2
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        if not overlap or len(passes) == 1:
            buf = alloc(buf_floats)
            for span in passes:
                blocks = compute_pass(
                    u, geom, span[0], span[1], threads=threads, out=buf, pool=pool
                )
                _consume(sink, span, blocks)
            return

        bufs = (alloc(buf_floats), alloc(buf_floats))
        with ThreadPoolExecutor(max_workers=1) as producer:
            in_flight = producer.submit(
                compute_pass, u, geom, passes[0][0], passes[0][1], threads, bufs[0], pool
            )
            for idx, span in enumerate(passes):
                blocks = in_flight.result()
                has_next = idx + 1 < len(passes)
                if has_next:
                    nxt = passes[idx + 1]
                    in_flight = producer.submit(
                        compute_pass, u, geom, nxt[0], nxt[1], threads,
                        bufs[(idx + 1) % 2], pool,
                    )
                try:
                    _consume(sink, span, blocks)
                except PipelineError:
                    if has_next:
                        _drain(in_flight)
                    raise
    finally:
        if pool is not None:
            pool.shutdown(wait=True)


def _consume(sink: ResultSink, span: tuple[int, int], blocks: list[TileBlock]) -> None:
    try:
        sink.consume(span, blocks)
    except Exception as exc:
        raise PipelineError(
            f"result sink failed on pass [{span[0]}, {span[1]})", pass_range=span
        ) from exc


def _drain(future) -> None:
    # Let the in-flight pass finish before surfacing the sink failure.
    try:
        future.result()
    except Exception:
        pass
