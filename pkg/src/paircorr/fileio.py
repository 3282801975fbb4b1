"""Dataset and result persistence, synthetic data, queries, verification.

Two little-endian binary containers:

Dataset file (magic ``LPCC``)
    ``LPCC | version u32 = 1 | n u64 | l u64 | n*l f64 row-major``

Packed result file (magic ``LPCR``)
    ``LPCR | version u32 = 1 | n u64 | zv_count u64 | zv_count sorted u64
    indices | n*(n+1)/2 f64 in job-identifier order``

Storing the packed upper triangle makes the job-identifier bijection the
file's index structure: the value for pair ``(i, j)`` sits at a computable
offset, so random access needs no index table and half the storage of a
full square matrix.

Text ingestion reads one variable per line, samples as whitespace-separated
decimal floats, with an optional leading label column (detected when the
first field of the first row does not parse as a number).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, VerificationError
from .indexing import sym_job_coord, sym_job_count, sym_job_id
from .tiles import CorrelationResult, TileGeometry
from .pipeline import ResultSink
from .transform import Dataset, allpairs_naive

__all__ = [
    "save_dataset",
    "load_dataset",
    "save_result",
    "load_result",
    "PackedResultReader",
    "PackedFileWriterSink",
    "gen_synthetic",
    "query_pair",
    "verify",
    "VerifyReport",
]

DATASET_MAGIC = b"LPCC"
RESULT_MAGIC = b"LPCR"
FORMAT_VERSION = 1

_DATASET_HEADER = struct.Struct("<4sIQQ")
_RESULT_FIXED = struct.Struct("<4sIQQ")


def save_dataset(path, dataset: Dataset) -> None:
    """Write the binary dataset container."""
    with open(path, "wb") as f:
        f.write(_DATASET_HEADER.pack(DATASET_MAGIC, FORMAT_VERSION, dataset.n, dataset.l))
        dataset.values.astype("<f8", copy=False).tofile(f)


def load_dataset(path, format: str = "auto") -> Dataset:
    """Load a dataset from ``path``; ``format`` is ``auto``, ``binary`` or ``tsv``.

    Auto-detection peeks at the magic bytes.
    """
    path = Path(path)
    if format not in ("auto", "binary", "tsv"):
        raise ValueError(f"unknown format {format!r}")
    if format == "auto":
        with open(path, "rb") as f:
            format = "binary" if f.read(4) == DATASET_MAGIC else "tsv"
    if format == "binary":
        return _load_dataset_binary(path)
    return _load_dataset_tsv(path)


def _load_dataset_binary(path: Path) -> Dataset:
    size = path.stat().st_size
    with open(path, "rb") as f:
        header = f.read(_DATASET_HEADER.size)
        if len(header) < _DATASET_HEADER.size:
            raise DataError(f"{path}: truncated header")
        magic, version, n, l = _DATASET_HEADER.unpack(header)
        if magic != DATASET_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise DataError(f"{path}: unsupported version {version}")
        expected = _DATASET_HEADER.size + n * l * 8
        if size != expected:
            raise DataError(
                f"{path}: file is {size} bytes but header declares {expected}"
            )
        values = np.fromfile(f, dtype="<f8", count=n * l)
    values = values.astype(np.float64, copy=False).reshape(n, l)
    return Dataset(values=values)


def _load_dataset_tsv(path: Path) -> Dataset:
    rows: list[list[float]] = []
    ids: list[str] = []
    labeled = None
    width = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                continue
            if labeled is None:
                labeled = not _is_number(fields[0])
            if labeled:
                if _is_number(fields[0]):
                    raise DataError(
                        f"{path}:{lineno}: expected a label in column 1, got {fields[0]!r}"
                    )
                ids.append(fields[0])
                fields = fields[1:]
            row = []
            for col, field in enumerate(fields, start=2 if labeled else 1):
                try:
                    value = float(field)
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: column {col}: {field!r} is not a number"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(
                        f"{path}:{lineno}: column {col}: non-finite value {field!r}"
                    )
                row.append(value)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(
                    f"{path}:{lineno}: ragged row of {len(row)} samples, expected {width}"
                )
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: empty dataset")
    values = np.array(rows, dtype=np.float64)
    return Dataset(values=values, ids=ids if labeled else None)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _result_header_bytes(n: int, zero_variance: frozenset[int]) -> bytes:
    zv = sorted(zero_variance)
    return _RESULT_FIXED.pack(RESULT_MAGIC, FORMAT_VERSION, n, len(zv)) + np.array(
        zv, dtype="<u8"
    ).tobytes()


def save_result(path, result: CorrelationResult) -> None:
    """Write the packed-triangle result container."""
    with open(path, "wb") as f:
        f.write(_result_header_bytes(result.n, result.zero_variance))
        result.packed.astype("<f8", copy=False).tofile(f)


def load_result(path) -> CorrelationResult:
    with PackedResultReader(path) as reader:
        packed = reader.read_all()
        return CorrelationResult(
            n=reader.n, packed=packed, zero_variance=reader.zero_variance
        )


class PackedResultReader:
    """Seek-based random access to a packed result file.

    Entry order is exactly job-identifier order, so ``query(i, j)`` is one
    arithmetic offset and one seek.
    """

    def __init__(self, path):
        self._f = open(path, "rb")
        try:
            header = self._f.read(_RESULT_FIXED.size)
            if len(header) < _RESULT_FIXED.size:
                raise DataError(f"{path}: truncated header")
            magic, version, n, zv_count = _RESULT_FIXED.unpack(header)
            if magic != RESULT_MAGIC:
                raise DataError(f"{path}: bad magic {magic!r}")
            if version != FORMAT_VERSION:
                raise DataError(f"{path}: unsupported version {version}")
            zv = np.fromfile(self._f, dtype="<u8", count=zv_count)
            if zv.size != zv_count:
                raise DataError(f"{path}: truncated zero-variance index list")
            self.n = n
            self.zero_variance = frozenset(int(i) for i in zv)
            self._data_offset = _RESULT_FIXED.size + 8 * zv_count
            expected = self._data_offset + 8 * sym_job_count(n)
            actual = Path(path).stat().st_size
            if actual != expected:
                raise DataError(
                    f"{path}: file is {actual} bytes but header declares {expected}"
                )
        except Exception:
            self._f.close()
            raise

    def query(self, i: int, j: int) -> float:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError(f"pair ({i}, {j}) outside [0, {self.n})")
        job = sym_job_id(self.n, min(i, j), max(i, j))
        self._f.seek(self._data_offset + 8 * job)
        return struct.unpack("<d", self._f.read(8))[0]

    def read_all(self) -> np.ndarray:
        self._f.seek(self._data_offset)
        packed = np.fromfile(self._f, dtype="<f8", count=sym_job_count(self.n))
        return packed.astype(np.float64, copy=False)

    def close(self) -> None:
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class PackedFileWriterSink(ResultSink):
    """Streams tile blocks straight into a packed result file.

    The header and a zero-filled payload are written up front; each
    consumed pass seeks and writes only the cells its tiles own (one
    contiguous write per in-range tile row).  Peak memory stays at the
    pipeline's two pass buffers no matter how large ``n`` is.
    """

    def __init__(self, path, geom: TileGeometry, zero_variance: frozenset[int] = frozenset()):
        self.geom = geom
        self._f = open(path, "wb")
        self._data_offset = len(_result_header_bytes(geom.n, zero_variance))
        self._f.write(_result_header_bytes(geom.n, zero_variance))
        end = self._data_offset + 8 * sym_job_count(geom.n)
        self._f.truncate(end)

    def consume(self, pass_range, blocks) -> None:
        n, t = self.geom.n, self.geom.t
        for block in blocks:
            yt, xt = sym_job_coord(self.geom.m, block.tile_id)
            y0, x0 = yt * t, xt * t
            for ry in range(min(t, n - y0)):
                y = y0 + ry
                x_lo = max(x0, y)
                x_hi = min(x0 + t, n)
                if x_lo >= x_hi:
                    continue
                job = sym_job_id(n, y, x_lo)
                self._f.seek(self._data_offset + 8 * job)
                row = block.values[ry * t + (x_lo - x0) : ry * t + (x_lo - x0) + (x_hi - x_lo)]
                self._f.write(row.astype("<f8", copy=False).tobytes())

    def close(self) -> None:
        self._f.flush()
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


# SplitMix64: counter-based, so element (row, col) of a generated dataset is
# mix(seed + (row*l + col + 1) * 0x9E3779B97F4A7C15) with the standard
# finalizer, mapped to [0, 1) via the top 53 bits.  Identical output for any
# implementation language and any generation chunking.
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64_block(seed: int, start: int, count: int) -> np.ndarray:
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    x = np.uint64(seed % 2**64) + idx * _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    x = x ^ (x >> np.uint64(31))
    return (x >> np.uint64(11)).astype(np.float64) * 2.0**-53


def gen_synthetic(n: int, l: int, seed: int = 0) -> Dataset:
    """Deterministic uniform [0, 1) dataset of ``n`` variables, ``l`` samples."""
    if n < 1 or l < 1:
        raise ValueError(f"n and l must be >= 1, got n={n}, l={l}")
    total = n * l
    values = np.empty(total, dtype=np.float64)
    chunk = 1 << 22
    for start in range(0, total, chunk):
        count = min(chunk, total - start)
        values[start : start + count] = _splitmix64_block(seed, start, count)
    return Dataset(values=values.reshape(n, l))


def query_pair(result_path, i: int, j: int) -> float:
    """Correlation of pair ``(i, j)`` read straight from a result file."""
    with PackedResultReader(result_path) as reader:
        return reader.query(i, j)


@dataclass
class VerifyReport:
    n: int
    tolerance: float
    max_abs_deviation: float
    worst_pair: tuple[int, int]
    first_bad_pair: tuple[int, int] | None
    zero_variance_match: bool

    @property
    def ok(self) -> bool:
        return self.first_bad_pair is None and self.zero_variance_match


def verify(
    dataset: Dataset,
    result: CorrelationResult,
    tolerance: float = 1e-10,
    raise_on_failure: bool = True,
) -> VerifyReport:
    """Compare ``result`` against the brute-force oracle.

    O(n^2 l); intended for desk-scale spot checks.  Raises
    :class:`VerificationError` (report attached) when any pair deviates by
    more than ``tolerance`` or the zero-variance sets disagree.
    """
    oracle = allpairs_naive(dataset)
    if result.n != dataset.n:
        raise ValueError(f"result is for n={result.n}, dataset has n={dataset.n}")
    dev = np.abs(result.packed - oracle.packed)
    worst_job = int(np.argmax(dev)) if dev.size else 0
    bad = np.flatnonzero(dev > tolerance)
    first_bad = sym_job_coord(dataset.n, int(bad[0])) if bad.size else None
    wy, wx = sym_job_coord(dataset.n, worst_job)
    report = VerifyReport(
        n=dataset.n,
        tolerance=tolerance,
        max_abs_deviation=float(dev[worst_job]) if dev.size else 0.0,
        worst_pair=(wy, wx),
        first_bad_pair=(first_bad.y, first_bad.x) if first_bad else None,
        zero_variance_match=result.zero_variance == oracle.zero_variance,
    )
    if raise_on_failure and not report.ok:
        if report.first_bad_pair is not None:
            raise VerificationError(
                f"pair {report.first_bad_pair} deviates by more than {tolerance} "
                f"(max deviation {report.max_abs_deviation:.3e} at {report.worst_pair})",
                report=report,
            )
        raise VerificationError(
            "zero-variance row sets disagree between engine and oracle",
            report=report,
        )
    return report
