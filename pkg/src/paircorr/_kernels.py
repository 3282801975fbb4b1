"""Numba kernels shared by the oracle, the tile engine and normalization.

Reduction order
---------------
Every sum over a length-``l`` vector in this package uses one fixed order:
eight partial accumulators where lane ``j`` adds elements ``k`` with
``k % 8 == j`` in increasing ``k``, followed by the fixed combining tree

    ((s0+s1) + (s2+s3)) + ((s4+s5) + (s6+s7))

This mirrors an 8-lane SIMD accumulation, vectorizes well, and because it is
the *only* reduction used anywhere (row means, squared deviations, covariance
sums, normalized dot products), any grouping of the pair workload -- tile
size, pass capacity, thread count, worker count -- yields bitwise identical
results.

All kernels are compiled ``nogil`` so Python threads achieve real
parallelism, and ``cache=True`` so subprocess workers reuse compiled code.
"""

from __future__ import annotations

import math

from numba import njit

_JIT = dict(cache=True, nogil=True)


@njit(inline="always", **_JIT)
def dot8(a, b):
    """Fixed-order dot product of two equal-length float64 vectors."""
    l = a.shape[0]
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    s3 = 0.0
    s4 = 0.0
    s5 = 0.0
    s6 = 0.0
    s7 = 0.0
    main = (l // 8) * 8
    k = 0
    while k < main:
        s0 += a[k] * b[k]
        s1 += a[k + 1] * b[k + 1]
        s2 += a[k + 2] * b[k + 2]
        s3 += a[k + 3] * b[k + 3]
        s4 += a[k + 4] * b[k + 4]
        s5 += a[k + 5] * b[k + 5]
        s6 += a[k + 6] * b[k + 6]
        s7 += a[k + 7] * b[k + 7]
        k += 8
    if k < l:
        s0 += a[k] * b[k]
    if k + 1 < l:
        s1 += a[k + 1] * b[k + 1]
    if k + 2 < l:
        s2 += a[k + 2] * b[k + 2]
    if k + 3 < l:
        s3 += a[k + 3] * b[k + 3]
    if k + 4 < l:
        s4 += a[k + 4] * b[k + 4]
    if k + 5 < l:
        s5 += a[k + 5] * b[k + 5]
    if k + 6 < l:
        s6 += a[k + 6] * b[k + 6]
    return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))


@njit(inline="always", **_JIT)
def sum8(a):
    """Fixed-order sum of a float64 vector (same lane scheme as dot8)."""
    l = a.shape[0]
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    s3 = 0.0
    s4 = 0.0
    s5 = 0.0
    s6 = 0.0
    s7 = 0.0
    main = (l // 8) * 8
    k = 0
    while k < main:
        s0 += a[k]
        s1 += a[k + 1]
        s2 += a[k + 2]
        s3 += a[k + 3]
        s4 += a[k + 4]
        s5 += a[k + 5]
        s6 += a[k + 6]
        s7 += a[k + 7]
        k += 8
    if k < l:
        s0 += a[k]
    if k + 1 < l:
        s1 += a[k + 1]
    if k + 2 < l:
        s2 += a[k + 2]
    if k + 3 < l:
        s3 += a[k + 3]
    if k + 4 < l:
        s4 += a[k + 4]
    if k + 5 < l:
        s5 += a[k + 5]
    if k + 6 < l:
        s6 += a[k + 6]
    return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))


@njit(inline="always", **_JIT)
def ssd8(a, mean):
    """Fixed-order sum of squared deviations from ``mean``."""
    l = a.shape[0]
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    s3 = 0.0
    s4 = 0.0
    s5 = 0.0
    s6 = 0.0
    s7 = 0.0
    main = (l // 8) * 8
    k = 0
    while k < main:
        d0 = a[k] - mean
        d1 = a[k + 1] - mean
        d2 = a[k + 2] - mean
        d3 = a[k + 3] - mean
        d4 = a[k + 4] - mean
        d5 = a[k + 5] - mean
        d6 = a[k + 6] - mean
        d7 = a[k + 7] - mean
        s0 += d0 * d0
        s1 += d1 * d1
        s2 += d2 * d2
        s3 += d3 * d3
        s4 += d4 * d4
        s5 += d5 * d5
        s6 += d6 * d6
        s7 += d7 * d7
        k += 8
    if k < l:
        d = a[k] - mean
        s0 += d * d
    if k + 1 < l:
        d = a[k + 1] - mean
        s1 += d * d
    if k + 2 < l:
        d = a[k + 2] - mean
        s2 += d * d
    if k + 3 < l:
        d = a[k + 3] - mean
        s3 += d * d
    if k + 4 < l:
        d = a[k + 4] - mean
        s4 += d * d
    if k + 5 < l:
        d = a[k + 5] - mean
        s5 += d * d
    if k + 6 < l:
        d = a[k + 6] - mean
        s6 += d * d
    return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))


@njit(inline="always", **_JIT)
def covar8(a, b, mean_a, mean_b):
    """Fixed-order sum of products of deviations."""
    l = a.shape[0]
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    s3 = 0.0
    s4 = 0.0
    s5 = 0.0
    s6 = 0.0
    s7 = 0.0
    main = (l // 8) * 8
    k = 0
    while k < main:
        s0 += (a[k] - mean_a) * (b[k] - mean_b)
        s1 += (a[k + 1] - mean_a) * (b[k + 1] - mean_b)
        s2 += (a[k + 2] - mean_a) * (b[k + 2] - mean_b)
        s3 += (a[k + 3] - mean_a) * (b[k + 3] - mean_b)
        s4 += (a[k + 4] - mean_a) * (b[k + 4] - mean_b)
        s5 += (a[k + 5] - mean_a) * (b[k + 5] - mean_b)
        s6 += (a[k + 6] - mean_a) * (b[k + 6] - mean_b)
        s7 += (a[k + 7] - mean_a) * (b[k + 7] - mean_b)
        k += 8
    if k < l:
        s0 += (a[k] - mean_a) * (b[k] - mean_b)
    if k + 1 < l:
        s1 += (a[k + 1] - mean_a) * (b[k + 1] - mean_b)
    if k + 2 < l:
        s2 += (a[k + 2] - mean_a) * (b[k + 2] - mean_b)
    if k + 3 < l:
        s3 += (a[k + 3] - mean_a) * (b[k + 3] - mean_b)
    if k + 4 < l:
        s4 += (a[k + 4] - mean_a) * (b[k + 4] - mean_b)
    if k + 5 < l:
        s5 += (a[k + 5] - mean_a) * (b[k + 5] - mean_b)
    if k + 6 < l:
        s6 += (a[k + 6] - mean_a) * (b[k + 6] - mean_b)
    return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))


@njit(inline="always", **_JIT)
def is_constant(a):
    """Exact zero-deviation test: every element equals the first.

    Equivalent to "sum of squared deviations is zero" evaluated in exact
    arithmetic; the floating-point ssd can round to a nonzero value for a
    truly constant row (the computed mean may be an ulp off the constant),
    so constancy is tested directly.
    """
    l = a.shape[0]
    first = a[0]
    for k in range(1, l):
        if a[k] != first:
            return False
    return True


@njit(**_JIT)
def normalize_rows(x, u, zero_variance, row_lo, row_hi):
    """Center and scale rows ``[row_lo, row_hi)`` of ``x`` into ``u``.

    A zero-deviation row is written as zeros and flagged in
    ``zero_variance``.  The computed ssd can also underflow to exactly 0.0
    for rows varying only at subnormal scale; those are flagged too rather
    than dividing by zero.
    """
    l = x.shape[1]
    for i in range(row_lo, row_hi):
        if is_constant(x[i]):
            for k in range(l):
                u[i, k] = 0.0
            zero_variance[i] = True
            continue
        mean = sum8(x[i]) / l
        ssd = ssd8(x[i], mean)
        if ssd == 0.0:
            for k in range(l):
                u[i, k] = 0.0
            zero_variance[i] = True
        else:
            scale = math.sqrt(ssd)
            for k in range(l):
                u[i, k] = (x[i, k] - mean) / scale
            zero_variance[i] = False


@njit(**_JIT)
def pcc_naive_pair(a, b):
    """Pearson correlation straight from the definition.

    Recomputes both row means and deviations on every call; either vector
    constant (same zero-deviation test as normalize_rows) yields 0 by
    convention.
    """
    if is_constant(a) or is_constant(b):
        return 0.0
    l = a.shape[0]
    mean_a = sum8(a) / l
    mean_b = sum8(b) / l
    ssd_a = ssd8(a, mean_a)
    ssd_b = ssd8(b, mean_b)
    if ssd_a == 0.0 or ssd_b == 0.0:
        return 0.0
    # sqrt each factor before multiplying: ssd_a * ssd_b can underflow to 0
    # for tiny-magnitude rows even though both factors are nonzero, whereas
    # sqrt(ssd_a) * sqrt(ssd_b) cannot (and differs by at most one ulp)
    return covar8(a, b, mean_a, mean_b) / (math.sqrt(ssd_a) * math.sqrt(ssd_b))


@njit(**_JIT)
def constant_row_flags(x, flags):
    """Flag zero-deviation rows; must agree exactly with normalize_rows."""
    n = x.shape[0]
    l = x.shape[1]
    for i in range(n):
        if is_constant(x[i]):
            flags[i] = True
        else:
            mean = sum8(x[i]) / l
            flags[i] = ssd8(x[i], mean) == 0.0


@njit(**_JIT)
def naive_allpairs_packed(x, packed):
    """Brute-force upper-triangle fill of ``packed`` via pcc_naive_pair."""
    n = x.shape[0]
    for y in range(n):
        base = y * (2 * n - y + 1) // 2 - y
        for xx in range(y, n):
            packed[base + xx] = pcc_naive_pair(x[y], x[xx])


@njit(inline="always", **_JIT)
def tile_row(m, tile_id):
    """Vertical coordinate of ``tile_id`` in the m x m tile matrix.

    Closed-form ceiling estimate, then an exact integer bracket fix against
    the row prefix counts.  The discriminant is formed in float64 (not
    int64) so the estimate cannot overflow; the bracket absorbs rounding.
    """
    mf = float(m)
    y = int(math.ceil(mf - 0.5 - math.sqrt(mf * mf + mf + 0.25 - 2.0 * (tile_id + 1))))
    if y < 0:
        y = 0
    if y > m - 1:
        y = m - 1
    while y > 0 and tile_id < y * (2 * m - y + 1) // 2:
        y -= 1
    while tile_id >= (y + 1) * (2 * m - y) // 2:
        y += 1
    return y


@njit(**_JIT)
def scatter_range(packed, values, first_tile, count, m, t, n):
    """Scatter ``count`` consecutive tiles from a flat pass buffer.

    ``values[k*t*t + ry*t + cx]`` belongs to tile ``first_tile + k``; only
    cells with ``y <= x < n`` are written, one packed row segment at a time.
    """
    t2 = t * t
    for k in range(count):
        jt = first_tile + k
        yt = tile_row(m, jt)
        xt = jt + yt - yt * (2 * m - yt + 1) // 2
        y0 = yt * t
        x0 = xt * t
        for ry in range(t):
            y = y0 + ry
            if y >= n:
                break
            x_lo = x0 if x0 > y else y
            x_hi = x0 + t if x0 + t < n else n
            if x_lo >= x_hi:
                continue
            row_base = y * (2 * n - y + 1) // 2 - y
            src = k * t2 + ry * t + (x_lo - x0)
            for x in range(x_lo, x_hi):
                packed[row_base + x] = values[src]
                src += 1


@njit(**_JIT)
def compute_tile_range(u, out, n, t, m, j_lo, j_hi, base):
    """Compute tiles ``[j_lo, j_hi)`` into ``out`` at offsets relative to ``base``.

    Tile ``J`` occupies ``out[(J - base)*t*t : (J - base + 1)*t*t]`` row-major;
    cells outside the upper triangle or past ``n`` are written as 0.0 so the
    buffer content is deterministic without pre-zeroing.
    """
    t2 = t * t
    for jt in range(j_lo, j_hi):
        yt = tile_row(m, jt)
        xt = jt + yt - yt * (2 * m - yt + 1) // 2
        off = (jt - base) * t2
        y0 = yt * t
        x0 = xt * t
        for ry in range(t):
            y = y0 + ry
            for cx in range(t):
                x = x0 + cx
                if y <= x and x < n:
                    out[off + ry * t + cx] = dot8(u[y], u[x])
                else:
                    out[off + ry * t + cx] = 0.0
