"""Bijective mappings between linear job identifiers and matrix coordinates.

An all-pairs computation over ``n`` variables is an ``n x n`` job matrix with
the origin at the top-left corner, ``x`` growing left-to-right (columns) and
``y`` top-to-bottom (rows).  For commutative pairwise work only the upper
triangle (``y <= x``, diagonal included) matters and jobs are numbered
row-major::

    n = 4        x=0  x=1  x=2  x=3
          y=0  [  0    1    2    3 ]
          y=1  [       4    5    6 ]
          y=2  [            7    8 ]
          y=3  [                 9 ]

The number of cells preceding row ``y`` is ``F(y) = y*(2n - y + 1)/2``, so

    job_id(y, x) = F(y) + x - y

and the inverse recovers the row as the unique integer in ``[z, z+1)`` for
``z = n - 0.5 - sqrt(n^2 + n + 0.25 - 2*(job_id+1))``, i.e. ``y = ceil(z)``.
The square root is evaluated in double precision; near row boundaries at very
large ``n`` the ceiling can land one row off, so the result is bracket-checked
against exact integer ``F`` and nudged when needed.

The same mapping is reused verbatim for the tile matrix (``n := m`` tiles per
side).  A non-symmetric (full matrix) numbering is provided as well.  All
functions are pure; identifiers and prefix sums are exact Python integers and
``n`` is capped below 2**32 so ``n*(n+1)/2`` stays comfortably inside 64 bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# n*(n+1)/2 must fit in an unsigned 64-bit identifier.
MAX_N = 2**32 - 1


class Coord(NamedTuple):
    """Job-matrix coordinate: row ``y``, column ``x`` (both 0-based)."""

    y: int
    x: int


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_N:
        raise ValueError(f"n must be in [1, {MAX_N}], got {n}")


def row_prefix(n: int, y: int) -> int:
    """Number of upper-triangle cells strictly above row ``y``.

    ``row_prefix(n, 0) == 0`` and ``row_prefix(n, n) == n*(n+1)//2``; the
    product ``y*(2n - y + 1)`` is always even so the division is exact.
    """
    _check_n(n)
    if not 0 <= y <= n:
        raise ValueError(f"row index {y} outside [0, {n}]")
    return y * (2 * n - y + 1) // 2


def sym_job_count(n: int) -> int:
    """Total jobs in the upper triangle, diagonal included."""
    _check_n(n)
    return n * (n + 1) // 2


def sym_job_id(n: int, y: int, x: int) -> int:
    """Linear identifier of upper-triangle job ``(y, x)``, ``0 <= y <= x < n``."""
    _check_n(n)
    if not 0 <= y <= x < n:
        raise ValueError(f"({y}, {x}) is not an upper-triangle coordinate for n={n}")
    return y * (2 * n - y + 1) // 2 + x - y


def sym_job_coord(n: int, job_id: int) -> Coord:
    """Inverse of :func:`sym_job_id`: coordinate of ``job_id``.

    Closed form with a double-precision square root, then an exact integer
    bracket check that walks the row up or down if rounding put it off by
    a step.
    """
    _check_n(n)
    total = n * (n + 1) // 2
    if not 0 <= job_id < total:
        raise ValueError(f"job id {job_id} outside [0, {total}) for n={n}")
    y = _row_of(n, job_id)
    x = job_id + y - row_prefix(n, y)
    return Coord(y, x)


def _row_of(n: int, job_id: int) -> int:
    disc = n * n + n + 0.25 - 2.0 * (job_id + 1)
    y = math.ceil(n - 0.5 - math.sqrt(disc)) if disc >= 0.0 else n - 1
    # Exact-integer bracket fix for sqrt rounding near row boundaries.
    if y < 0:
        y = 0
    elif y > n - 1:
        y = n - 1
    while y > 0 and job_id < row_prefix(n, y):
        y -= 1
    while job_id >= row_prefix(n, y + 1):
        y += 1
    return y


def nonsym_job_id(n: int, y: int, x: int) -> int:
    """Row-major identifier of full-matrix job ``(y, x)``."""
    _check_n(n)
    if not (0 <= y < n and 0 <= x < n):
        raise ValueError(f"({y}, {x}) outside the {n}x{n} job matrix")
    return y * n + x


def nonsym_job_coord(n: int, job_id: int) -> Coord:
    """Inverse of :func:`nonsym_job_id`."""
    _check_n(n)
    if not 0 <= job_id < n * n:
        raise ValueError(f"job id {job_id} outside [0, {n * n})")
    return Coord(job_id // n, job_id % n)


def sym_job_coords(n: int, job_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`sym_job_coord` over an array of identifiers.

    Returns ``(ys, xs)`` as uint64 arrays.  Same bracket correction as the
    scalar path, applied elementwise until stable (at most a couple of
    sweeps; the float estimate is never far off).
    """
    _check_n(n)
    j = np.asarray(job_ids, dtype=np.uint64)
    total = n * (n + 1) // 2
    if j.size and (int(j.max()) >= total):
        raise ValueError("job id out of range")

    nf = float(n)
    disc = nf * nf + nf + 0.25 - 2.0 * (j.astype(np.float64) + 1.0)
    y = np.ceil(nf - 0.5 - np.sqrt(np.maximum(disc, 0.0)))
    y = np.clip(y, 0, n - 1).astype(np.uint64)

    def prefix(rows: np.ndarray) -> np.ndarray:
        r = rows.astype(np.uint64)
        return r * (np.uint64(2 * n + 1) - r) // np.uint64(2)

    while True:
        too_high = (y > 0) & (j < prefix(y))
        if too_high.any():
            y[too_high] -= np.uint64(1)
            continue
        too_low = j >= prefix(y + np.uint64(1))
        if too_low.any():
            y[too_low] += np.uint64(1)
            continue
        break
    x = j + y - prefix(y)
    return y, x


def sym_job_ids(n: int, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`sym_job_id` over coordinate arrays."""
    _check_n(n)
    y = np.asarray(ys, dtype=np.uint64)
    x = np.asarray(xs, dtype=np.uint64)
    if y.size and not (np.all(y <= x) and np.all(x < np.uint64(n))):
        raise ValueError("coordinates outside the upper triangle")
    return y * (np.uint64(2 * n + 1) - y) // np.uint64(2) + x - y


@dataclass(frozen=True)
class TriangleIndexer:
    """Value object bundling the mappings for one matrix edge size.

    Works equally for the job matrix (``n`` variables) and the tile matrix
    (``n := m`` tiles per side).
    """

    n: int

    def __post_init__(self) -> None:
        _check_n(self.n)

    @property
    def sym_count(self) -> int:
        return sym_job_count(self.n)

    @property
    def nonsym_count(self) -> int:
        return self.n * self.n

    def row_prefix(self, y: int) -> int:
        return row_prefix(self.n, y)

    def job_id(self, y: int, x: int) -> int:
        return sym_job_id(self.n, y, x)

    def coord(self, job_id: int) -> Coord:
        return sym_job_coord(self.n, job_id)

    def nonsym_job_id(self, y: int, x: int) -> int:
        return nonsym_job_id(self.n, y, x)

    def nonsym_coord(self, job_id: int) -> Coord:
        return nonsym_job_coord(self.n, job_id)
