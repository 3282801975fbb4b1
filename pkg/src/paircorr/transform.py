"""Variable normalization that reduces Pearson correlation to a dot product.

Each variable (row) is centered on its mean and divided by the square root
of its sum of squared deviations::

    u[i][k] = (x[i][k] - mean_i) / sqrt(sum_k (x[i][k] - mean_i)^2)

After this one-time transform the correlation of rows ``i`` and ``j`` is just
``sum_k u[i][k] * u[j][k]``, saving the per-pair recomputation of row
statistics that a literal evaluation of the definition would repeat ``n - 1``
times per row.

Constant rows have zero deviation everywhere, so their correlation is
undefined (0/0).  Convention here: such a row normalizes to all zeros, every
correlation involving it (its own diagonal included) is 0, and its index is
reported in ``zero_variance`` so callers can tell "0 by convention" from a
genuine zero correlation.  Constancy is the exact all-samples-equal test
(the mathematical ssd-is-zero condition; the floating-point ssd can round
away from zero for a constant row), plus a guard for computed ssd
underflowing to exactly 0.0 -- never an epsilon threshold.

All reductions use the fixed 8-lane order documented in ``_kernels``; see
that module for why this makes results schedule-invariant bit for bit.

Precision note: rows whose deviations are so small that their squares fall
into the subnormal range (|deviation| below ~1e-150) lose relative accuracy
when squared; that is inherent to double precision, and real measurement
data sits a hundred orders of magnitude above it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DataError

__all__ = [
    "Dataset",
    "NormalizedDataset",
    "normalize",
    "pcc_normalized",
    "pcc_naive",
    "allpairs_naive",
    "estimate_cost",
]


@dataclass
class Dataset:
    """``n`` variables of ``l`` samples each, one row per variable."""

    values: np.ndarray
    ids: list[str] | None = None

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DataError(f"dataset must be 2-D (rows=variables), got ndim={v.ndim}")
        if v.shape[0] < 1:
            raise DataError("dataset needs at least one variable")
        if v.shape[1] < 2:
            raise DataError(f"need at least 2 samples per variable, got {v.shape[1]}")
        if not np.isfinite(v).all():
            bad = np.argwhere(~np.isfinite(v))[0]
            raise DataError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        if self.ids is not None and len(self.ids) != v.shape[0]:
            raise DataError("ids length does not match variable count")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def l(self) -> int:
        return self.values.shape[1]


@dataclass
class NormalizedDataset:
    """Centered/scaled variables, plus which rows were constant."""

    u: np.ndarray
    zero_variance: frozenset[int] = field(default_factory=frozenset)

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def l(self) -> int:
        return self.u.shape[1]


def normalize(dataset: Dataset, threads: int = 1) -> NormalizedDataset:
    """Transform every row of ``dataset`` as described in the module docstring.

    Rows are independent, so ``threads > 1`` splits the row range across a
    thread pool; per-row arithmetic is identical either way, making the output
    bitwise independent of ``threads``.
    """
    x = dataset.values
    n, l = x.shape
    u = np.empty_like(x)
    flags = np.zeros(n, dtype=np.bool_)

    threads = max(1, min(threads, n))
    if threads == 1:
        _kernels.normalize_rows(x, u, flags, 0, n)
    else:
        chunk = -(-n // threads)
        spans = [(i, min(n, i + chunk)) for i in range(0, n, chunk)]
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            futures = [
                pool.submit(_kernels.normalize_rows, x, u, flags, lo, hi)
                for lo, hi in spans
            ]
            for f in futures:
                f.result()
    return NormalizedDataset(u=u, zero_variance=frozenset(np.flatnonzero(flags).tolist()))


def _as_row(v) -> np.ndarray:
    row = np.ascontiguousarray(v, dtype=np.float64)
    if row.ndim != 1:
        raise ValueError("expected a 1-D vector")
    return row


def pcc_normalized(u_i, u_j) -> float:
    """Correlation of two already-normalized rows: their fixed-order dot.

    A zero-variance row is all zeros, so any pair involving one returns 0
    without special-casing.
    """
    a = _as_row(u_i)
    b = _as_row(u_j)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(_kernels.dot8(a, b))


def pcc_naive(u, v) -> float:
    """Pearson correlation straight from the definition.

    Recomputes means and deviations for both vectors on every call.  Serves
    as the independent reference for the transformed engine path; if either
    vector is constant the result is 0, matching :func:`normalize`.
    """
    a = _as_row(u)
    b = _as_row(v)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    return float(_kernels.pcc_naive_pair(a, b))


def allpairs_naive(dataset: Dataset):
    """Brute-force oracle: every upper-triangle pair via :func:`pcc_naive`.

    O(n^2 l) with per-pair recomputation of row statistics -- only sensible
    at desk scale.  Returns a packed CorrelationResult in job-identifier
    order.
    """
    from .tiles import CorrelationResult

    x = dataset.values
    n = x.shape[0]
    packed = np.empty(n * (n + 1) // 2, dtype=np.float64)
    _kernels.naive_allpairs_packed(x, packed)
    flags = np.zeros(n, dtype=np.bool_)
    _kernels.constant_row_flags(x, flags)
    zv = frozenset(np.flatnonzero(flags).tolist())
    return CorrelationResult(n=n, packed=packed, zero_variance=zv)


def estimate_cost(n: int, l: int) -> int:
    """Unit arithmetic operations for the transformed all-pairs computation.

    ``5*l*n`` for the one-time row transforms (mean, squared deviations and
    the scaling pass) plus ``l`` fused operations for each of the
    ``n*(n+1)/2`` symmetric pairs.  Exact integer arithmetic.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    return 5 * l * n + l * n * (n + 1) // 2
