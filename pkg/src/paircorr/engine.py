"""One-call entry point tying normalization, tiling, passes and workers together."""

from __future__ import annotations

from pathlib import Path

from .pipeline import ResultAssembler, plan_passes, run_pipeline
from .tiles import CorrelationResult, TileGeometry, DEFAULT_TILE_SIZE
from .transform import Dataset, normalize

__all__ = ["allpairs", "default_capacity", "DEFAULT_BUFFER_BUDGET"]

# Two pass buffers of capacity * t^2 doubles must fit in this budget.
DEFAULT_BUFFER_BUDGET = 256 * 2**20


def default_capacity(t: int, buffer_budget: int | None = None) -> int:
    """Largest per-pass tile count whose two buffers fit the byte budget."""
    budget = DEFAULT_BUFFER_BUDGET if buffer_budget is None else buffer_budget
    return max(1, budget // (2 * t * t * 8))


def allpairs(
    dataset: Dataset | str | Path,
    tile_size: int = DEFAULT_TILE_SIZE,
    capacity: int | None = None,
    threads: int = 1,
    workers: int = 1,
    backend: str = "in_process",
    buffer_budget: int | None = None,
) -> CorrelationResult:
    """All-pairs correlation of ``dataset`` (in memory or a file path).

    The result is bitwise independent of every knob here: tile size, pass
    capacity, thread count, worker count and backend only change how the
    work is scheduled, never any floating-point operation order.
    """
    if not isinstance(dataset, Dataset):
        from .fileio import load_dataset

        dataset = load_dataset(dataset)
    geom = TileGeometry(n=dataset.n, t=tile_size)
    if capacity is None:
        capacity = default_capacity(tile_size, buffer_budget)

    if workers == 1 and backend == "in_process":
        u = normalize(dataset, threads=threads)
        assembler = ResultAssembler(geom, u.zero_variance)
        run_pipeline(
            u, geom, plan_passes(0, geom.total_tiles, capacity), assembler, threads=threads
        )
        return assembler.result

    from .distributed import run_workers

    return run_workers(dataset, geom, workers, backend, capacity, threads)
