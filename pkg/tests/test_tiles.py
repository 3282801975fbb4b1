import numpy as np
import pytest

from paircorr import (
    CorrelationResult,
    IntegrityError,
    TileGeometry,
    allpairs_naive,
    compute_pass,
    empty_result,
    normalize,
    pcc_normalized,
    scatter,
    sym_job_count,
    sym_job_id,
    tile_coord,
)
from paircorr.tiles import TileBlock

from conftest import random_dataset, triangle_walk


def tile_cells(geom, tile_id):
    """Oracle: global coordinates covered by a tile, by enumeration."""
    walk = triangle_walk(geom.m)
    yt, xt = walk[tile_id]
    cells = []
    for ry in range(geom.t):
        for cx in range(geom.t):
            cells.append((yt * geom.t + ry, xt * geom.t + cx))
    return cells


@pytest.mark.parametrize(
    "n,t,m",
    [(1, 1, 1), (2, 2, 1), (3, 2, 2), (4, 2, 2), (5, 2, 3), (128, 4, 32), (10, 3, 4)],
)
def test_geometry(n, t, m):
    geom = TileGeometry(n=n, t=t)
    assert geom.m == m
    assert geom.total_tiles == m * (m + 1) // 2
    assert geom.m * t >= n > (geom.m - 1) * t
    assert geom.job_count == n * (n + 1) // 2


def test_geometry_validation():
    with pytest.raises(ValueError):
        TileGeometry(n=0, t=2)
    with pytest.raises(ValueError):
        TileGeometry(n=4, t=0)


def test_tile_coord_matches_enumeration():
    walk = triangle_walk(3)
    for tid in range(6):
        assert tuple(tile_coord(3, tid)) == walk[tid]
    assert tuple(tile_coord(3, 0)) == (0, 0)
    assert tuple(tile_coord(3, 3)) == (1, 1)
    assert tuple(tile_coord(3, 5)) == (2, 2)


def test_compute_pass_single_tile_layout(rng):
    d = random_dataset(rng, 2, 6)
    u = normalize(d)
    geom = TileGeometry(n=2, t=2)
    blocks = compute_pass(u, geom, 0, 1)
    assert len(blocks) == 1
    r = lambda i, j: pcc_normalized(u.u[i], u.u[j])
    expected = np.array([r(0, 0), r(0, 1), 0.0, r(1, 1)])
    assert np.array_equal(blocks[0].values, expected)


def test_compute_pass_empty_range(rng):
    u = normalize(random_dataset(rng, 4, 5))
    geom = TileGeometry(n=4, t=2)
    assert compute_pass(u, geom, 2, 2) == []


def test_compute_pass_boundary_tiles(rng):
    # n=3, t=2: m=2, 3 tiles; x=3 and y=3 fall outside the data
    d = random_dataset(rng, 3, 7)
    u = normalize(d)
    geom = TileGeometry(n=3, t=2)
    blocks = compute_pass(u, geom, 0, 3)
    assert [b.tile_id for b in blocks] == [0, 1, 2]
    for block in blocks:
        for offset, (y, x) in enumerate(tile_cells(geom, block.tile_id)):
            value = block.values[offset]
            if y <= x < 3:
                assert value == pcc_normalized(u.u[y], u.u[x])
            else:
                assert value == 0.0


def test_compute_pass_thread_count_does_not_change_bits(rng):
    u = normalize(random_dataset(rng, 37, 16))
    geom = TileGeometry(n=37, t=4)
    reference = np.concatenate(
        [b.values for b in compute_pass(u, geom, 0, geom.total_tiles, threads=1)]
    )
    for threads in (2, 3, 7):
        again = np.concatenate(
            [b.values for b in compute_pass(u, geom, 0, geom.total_tiles, threads=threads)]
        )
        assert np.array_equal(reference, again)


def test_compute_pass_range_validation(rng):
    u = normalize(random_dataset(rng, 4, 5))
    geom = TileGeometry(n=4, t=2)
    with pytest.raises(ValueError):
        compute_pass(u, geom, 0, geom.total_tiles + 1)
    with pytest.raises(ValueError):
        compute_pass(u, geom, 2, 1)
    with pytest.raises(ValueError):
        compute_pass(u, geom, 0, 2, out=np.empty(3))


def test_scatter_coverage_and_values(rng):
    d = random_dataset(rng, 4, 9)
    u = normalize(d)
    geom = TileGeometry(n=4, t=2)
    blocks = compute_pass(u, geom, 0, geom.total_tiles)

    # shadow write counts, computed from coordinates alone
    writes = np.zeros(sym_job_count(4), dtype=int)
    for block in blocks:
        for (y, x) in tile_cells(geom, block.tile_id):
            if y <= x < 4:
                writes[sym_job_id(4, y, x)] += 1
    assert np.array_equal(writes, np.ones(10, dtype=int))

    result = empty_result(4, u.zero_variance)
    scatter(blocks, geom, result)
    for y in range(4):
        for x in range(y, 4):
            assert result.get(y, x) == pcc_normalized(u.u[y], u.u[x])


def test_scatter_single_tile_touches_expected_jobs(rng):
    u = normalize(random_dataset(rng, 4, 5))
    geom = TileGeometry(n=4, t=2)
    blocks = compute_pass(u, geom, 0, 1)  # tile (0,0)
    result = CorrelationResult(n=4, packed=np.full(10, np.nan))
    scatter(blocks, geom, result)
    touched = set(np.flatnonzero(~np.isnan(result.packed)).tolist())
    assert touched == {0, 1, 4}  # jobs (0,0), (0,1), (1,1)


def test_scatter_empty_and_duplicate(rng):
    u = normalize(random_dataset(rng, 4, 5))
    geom = TileGeometry(n=4, t=2)
    result = empty_result(4)
    before = result.packed.copy()
    scatter([], geom, result)
    assert np.array_equal(result.packed, before)

    blocks = compute_pass(u, geom, 0, 1)
    with pytest.raises(IntegrityError):
        scatter([blocks[0], TileBlock(tile_id=0, values=blocks[0].values.copy())], geom, result)


@pytest.mark.parametrize("t", [1, 2, 3, 4, 8, 16])
def test_tiling_invariance(rng, t):
    d = random_dataset(rng, 33, 17)
    u = normalize(d)
    reference = None
    geom = TileGeometry(n=33, t=t)
    result = empty_result(33, u.zero_variance)
    # arbitrary pass split: thirds
    total = geom.total_tiles
    cuts = [0, total // 3, 2 * total // 3, total]
    for lo, hi in zip(cuts, cuts[1:]):
        scatter(compute_pass(u, geom, lo, hi), geom, result)
    reference = allpairs_tiled_reference(u)
    assert np.array_equal(result.packed, reference)


def allpairs_tiled_reference(u):
    """t=1, single pass: the plainest path through the same kernel."""
    geom = TileGeometry(n=u.n, t=1)
    result = empty_result(u.n, u.zero_variance)
    scatter(compute_pass(u, geom, 0, geom.total_tiles), geom, result)
    return result.packed


@pytest.mark.parametrize("n,l", [(1, 2), (7, 3), (64, 33), (65, 8)])
def test_engine_matches_oracle(rng, n, l):
    d = random_dataset(rng, n, l, special_rows=True)
    u = normalize(d)
    geom = TileGeometry(n=n, t=4)
    result = empty_result(n, u.zero_variance)
    scatter(compute_pass(u, geom, 0, geom.total_tiles), geom, result)
    oracle = allpairs_naive(d)
    np.testing.assert_allclose(result.packed, oracle.packed, atol=1e-10, rtol=0)
    assert result.zero_variance == oracle.zero_variance
    # zero-by-convention is exact, diagonal of the constant row included
    for i in result.zero_variance:
        for j in range(n):
            assert result.get(i, j) == 0.0


def test_boundary_tiles_under_bounds_checking(tmp_path):
    """n % t != 0 must never read past the data (bounds-checked JIT build)."""
    import os
    import subprocess
    import sys
    import textwrap

    script = textwrap.dedent(
        """
        import numpy as np
        from paircorr import TileGeometry, allpairs_naive, compute_pass, empty_result, normalize, scatter
        from paircorr.transform import Dataset

        rng = np.random.default_rng(0)
        for n, t in [(3, 2), (5, 3), (7, 4), (9, 8)]:
            d = Dataset(values=rng.random((n, 5)))
            u = normalize(d)
            geom = TileGeometry(n=n, t=t)
            result = empty_result(n, u.zero_variance)
            scatter(compute_pass(u, geom, 0, geom.total_tiles), geom, result)
            dev = np.abs(result.packed - allpairs_naive(d).packed).max()
            assert dev <= 1e-10, (n, t, dev)
        print("bounds-checked boundary tiles ok")
        """
    )
    env = dict(os.environ, NUMBA_BOUNDSCHECK="1")
    proc = subprocess.run(
        [sys.executable, "-c", script], capture_output=True, text=True, env=env
    )
    assert proc.returncode == 0, proc.stderr
    assert "boundary tiles ok" in proc.stdout


def test_to_dense_symmetry(rng):
    d = random_dataset(rng, 5, 6)
    u = normalize(d)
    geom = TileGeometry(n=5, t=2)
    result = empty_result(5, u.zero_variance)
    scatter(compute_pass(u, geom, 0, geom.total_tiles), geom, result)
    dense = result.to_dense()
    assert np.array_equal(dense, dense.T)
    for i in range(5):
        for j in range(5):
            assert dense[i, j] == result.get(i, j)


def test_result_get_validation():
    result = empty_result(3)
    with pytest.raises(ValueError):
        result.get(0, 3)
    with pytest.raises(ValueError):
        result.get(-1, 0)
