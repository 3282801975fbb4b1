"""Static distribution of the tile range across multiple workers.

The total tile range ``[0, T)`` is cut into ``p`` contiguous chunks of
``ceil(T / p)`` tiles; worker ``i`` owns
``[min(T, i*chunk), min(T, (i+1)*chunk))``, so trailing workers may be
empty.  Each worker runs the same multi-pass pipeline over its own range --
either in-process (thread per worker) or as a subprocess speaking the
framed protocol over its stdin/stdout -- and the coordinator scatters
arriving blocks into one shared packed result.

Because every tile belongs to exactly one worker and every packed cell to
exactly one tile, scatters never collide and the merged result is bitwise
identical to a single-worker run, for any ``p`` and either backend.
"""

from __future__ import annotations

import os
import subprocess
import sys
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels, protocol
from .errors import IntegrityError, WorkerError
from .pipeline import ResultSink, plan_passes, run_pipeline
from .tiles import (
    CorrelationResult,
    TileBlock,
    TileGeometry,
    empty_result,
    scatter,
    scatter_pass,
)
from .transform import Dataset, normalize

__all__ = [
    "WorkerAssignment",
    "WorkerReport",
    "partition",
    "make_assignments",
    "run_workers",
    "merge",
]

BACKENDS = ("in_process", "subprocess")


@dataclass(frozen=True)
class WorkerAssignment:
    worker_index: int
    start: int
    stop: int
    geometry: TileGeometry
    capacity: int

    @property
    def tile_count(self) -> int:
        return self.stop - self.start


@dataclass
class WorkerReport:
    worker_index: int
    tiles_done: int = 0
    blocks: list[TileBlock] = field(default_factory=list)
    status: str = "ok"
    message: str = ""


def partition(total_tiles: int, p: int) -> list[tuple[int, int]]:
    """Contiguous, disjoint ranges covering ``[0, total_tiles)``.

    Chunk size is ``ceil(total_tiles / p)``; once the range is exhausted the
    remaining workers get empty ranges.
    """
    if p < 1:
        raise ValueError(f"worker count must be >= 1, got {p}")
    if total_tiles < 0:
        raise ValueError(f"total tile count must be >= 0, got {total_tiles}")
    chunk = -(-total_tiles // p) if total_tiles else 0
    ranges = []
    for i in range(p):
        lo = min(total_tiles, i * chunk)
        hi = min(total_tiles, (i + 1) * chunk)
        ranges.append((lo, hi))
    return ranges


def make_assignments(geom: TileGeometry, p: int, capacity: int) -> list[WorkerAssignment]:
    return [
        WorkerAssignment(worker_index=i, start=lo, stop=hi, geometry=geom, capacity=capacity)
        for i, (lo, hi) in enumerate(partition(geom.total_tiles, p))
    ]


class _SharedScatterSink(ResultSink):
    """Scatters passes into a shared result; safe for concurrent workers."""

    def __init__(self, geom: TileGeometry, result: CorrelationResult, lock: threading.Lock):
        self.geom = geom
        self.result = result
        self.lock = lock
        self.tiles_done = 0

    def consume(self, pass_range, blocks) -> None:
        with self.lock:
            scatter_pass(blocks, self.geom, self.result)
        self.tiles_done += pass_range[1] - pass_range[0]


def run_workers(
    dataset: Dataset | str | Path,
    geom: TileGeometry,
    p: int,
    backend: str = "in_process",
    capacity: int | None = None,
    threads: int = 1,
) -> CorrelationResult:
    """Partition, execute on ``p`` workers, and assemble the full result.

    ``dataset`` may be an in-memory :class:`Dataset` or a path.  The
    subprocess backend hands workers a file path (writing a temporary
    binary copy if needed); each worker loads and normalizes its own copy.
    ``threads`` is the compute thread count per worker.
    """
    from .fileio import load_dataset, save_dataset

    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}, expected one of {BACKENDS}")
    if capacity is None:
        from .engine import default_capacity

        capacity = default_capacity(geom.t)

    dataset_path = None
    if not isinstance(dataset, Dataset):
        dataset_path = str(dataset)
        dataset = load_dataset(dataset_path)
    if dataset.n != geom.n:
        raise ValueError(f"geometry is for n={geom.n} but dataset has n={dataset.n}")

    assignments = make_assignments(geom, p, capacity)

    if backend == "in_process":
        return _run_in_process(dataset, geom, assignments, threads)

    if dataset_path is None:
        with tempfile.NamedTemporaryFile(suffix=".lpcc", delete=False) as tmp:
            tmp_path = tmp.name
        try:
            save_dataset(tmp_path, dataset)
            return _run_subprocess(dataset, tmp_path, geom, assignments, threads)
        finally:
            os.unlink(tmp_path)
    return _run_subprocess(dataset, dataset_path, geom, assignments, threads)


def _zero_variance_of(dataset: Dataset) -> frozenset[int]:
    flags = np.zeros(dataset.n, dtype=np.bool_)
    _kernels.constant_row_flags(dataset.values, flags)
    return frozenset(np.flatnonzero(flags).tolist())


def _run_in_process(
    dataset: Dataset,
    geom: TileGeometry,
    assignments: list[WorkerAssignment],
    threads: int,
) -> CorrelationResult:
    u = normalize(dataset, threads=threads)
    result = empty_result(geom.n, u.zero_variance)
    lock = threading.Lock()
    sinks = [_SharedScatterSink(geom, result, lock) for _ in assignments]

    def run_one(a: WorkerAssignment) -> None:
        plan = plan_passes(a.start, a.stop, a.capacity)
        run_pipeline(u, geom, plan, sinks[a.worker_index], threads=threads)

    with ThreadPoolExecutor(max_workers=len(assignments)) as pool:
        futures = {pool.submit(run_one, a): a for a in assignments}
        failure: tuple[WorkerAssignment, BaseException] | None = None
        for fut, a in futures.items():
            exc = fut.exception()
            if exc is not None and (failure is None or a.worker_index < failure[0].worker_index):
                failure = (a, exc)
    if failure is not None:
        a, exc = failure
        done = sinks[a.worker_index].tiles_done
        raise WorkerError(
            f"worker {a.worker_index} failed with tiles "
            f"[{a.start + done}, {a.stop}) unassembled: {exc}",
            worker_index=a.worker_index,
            unfinished_range=(a.start + done, a.stop),
        ) from exc

    _check_coverage(
        [(a.start, a.start + sinks[a.worker_index].tiles_done, a.stop) for a in assignments],
        geom.total_tiles,
    )
    return result


def _run_subprocess(
    dataset: Dataset,
    dataset_path: str,
    geom: TileGeometry,
    assignments: list[WorkerAssignment],
    threads: int,
) -> CorrelationResult:
    result = empty_result(geom.n, _zero_variance_of(dataset))
    lock = threading.Lock()
    env = dict(os.environ, PAIRCORR_THREADS=str(threads))

    procs: list[subprocess.Popen] = []
    cursors = [a.start for a in assignments]
    errors: list[WorkerError | None] = [None] * len(assignments)

    def read_worker(a: WorkerAssignment, proc: subprocess.Popen) -> None:
        i = a.worker_index
        try:
            done = False
            while True:
                frame = protocol.read_frame(proc.stdout)
                if frame is None:
                    if not done:
                        raise protocol.ProtocolError("worker exited before DONE")
                    break
                frame_type, payload = frame
                if frame_type == protocol.FRAME_BLOCKS:
                    first, count, values = protocol.decode_blocks(payload, geom.t)
                    if first != cursors[i]:
                        raise IntegrityError(
                            f"worker {i} sent tiles from {first}, expected {cursors[i]}"
                        )
                    if first + count > a.stop:
                        raise IntegrityError(
                            f"worker {i} overran its range: [{first}, {first + count})"
                        )
                    with lock:
                        _kernels.scatter_range(
                            result.packed, values, first, count, geom.m, geom.t, geom.n
                        )
                    cursors[i] = first + count
                elif frame_type == protocol.FRAME_DONE:
                    tiles_done = protocol.decode_done(payload)
                    if tiles_done != a.tile_count or cursors[i] != a.stop:
                        raise IntegrityError(
                            f"worker {i} reported {tiles_done} tiles done but "
                            f"delivered up to {cursors[i]} of [{a.start}, {a.stop})"
                        )
                    done = True
                elif frame_type == protocol.FRAME_ERROR:
                    raise WorkerError(
                        f"worker {i} reported: {protocol.decode_error(payload)}",
                        worker_index=i,
                        unfinished_range=(cursors[i], a.stop),
                    )
                else:
                    raise protocol.ProtocolError(
                        f"unexpected frame type 0x{frame_type:02x} from worker {i}"
                    )
        except WorkerError as err:
            errors[i] = err
        except Exception as exc:
            errors[i] = WorkerError(
                f"worker {i} failed with tiles [{cursors[i]}, {a.stop}) unassembled: {exc}",
                worker_index=i,
                unfinished_range=(cursors[i], a.stop),
            )

    readers = []
    try:
        for a in assignments:
            proc = subprocess.Popen(
                [sys.executable, "-m", "paircorr.worker"],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                env=env,
            )
            procs.append(proc)
        for a, proc in zip(assignments, procs):
            payload = protocol.encode_assign(
                a.start, a.stop, geom.t, a.capacity, dataset_path
            )
            try:
                protocol.write_frame(proc.stdin, protocol.FRAME_ASSIGN, payload)
                proc.stdin.close()
            except OSError:
                pass  # worker died early; its reader reports the EOF
            reader = threading.Thread(target=read_worker, args=(a, proc), daemon=True)
            reader.start()
            readers.append(reader)
        for reader in readers:
            reader.join()
        for proc in procs:
            proc.wait()
    finally:
        for proc in procs:
            if proc.poll() is None:
                proc.kill()
                proc.wait()

    for err in errors:
        if err is not None:
            raise err

    _check_coverage(
        [(a.start, cursors[a.worker_index], a.stop) for a in assignments],
        geom.total_tiles,
    )
    return result


def _check_coverage(spans: list[tuple[int, int, int]], total: int) -> None:
    """Each span is (start, delivered_up_to, stop); demand full, exact cover."""
    covered = 0
    expected_next = 0
    for start, delivered, stop in spans:
        if start != expected_next:
            raise IntegrityError(
                f"tile ranges not contiguous: expected start {expected_next}, got {start}"
            )
        if delivered != stop:
            raise IntegrityError(f"tiles [{delivered}, {stop}) never delivered")
        covered += stop - start
        expected_next = stop
    if covered != total:
        raise IntegrityError(f"covered {covered} tiles of {total}")


def merge(
    reports: list[WorkerReport],
    geom: TileGeometry,
    zero_variance: frozenset[int] = frozenset(),
) -> CorrelationResult:
    """Assemble retained worker blocks into one result, checking coverage.

    Every tile in ``[0, total_tiles)`` must appear exactly once across all
    reports; duplicated or missing tiles raise :class:`IntegrityError`
    naming the offenders.
    """
    for report in reports:
        if report.status != "ok":
            raise WorkerError(
                f"cannot merge: worker {report.worker_index} status "
                f"{report.status!r}: {report.message}",
                worker_index=report.worker_index,
            )
    total = geom.total_tiles
    seen = np.zeros(total, dtype=np.int64)
    for report in reports:
        for block in report.blocks:
            if not 0 <= block.tile_id < total:
                raise IntegrityError(f"tile id {block.tile_id} out of range [0, {total})")
            seen[block.tile_id] += 1
    duplicated = np.flatnonzero(seen > 1)
    if duplicated.size:
        raise IntegrityError(f"duplicated tiles: {duplicated.tolist()[:20]}")
    missing = np.flatnonzero(seen == 0)
    if missing.size:
        raise IntegrityError(f"missing tiles: {missing.tolist()[:20]}")

    result = empty_result(geom.n, zero_variance)
    for report in reports:
        scatter(report.blocks, geom, result)
    return result
