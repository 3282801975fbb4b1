"""Linear job identifiers <-> upper-triangle coordinates, with no lookup table.

An all-pairs computation over n variables is an n x n grid of jobs; for a
symmetric measure only the upper triangle (diagonal included) is needed.
Giving each job a linear identifier makes workload distribution trivial --
"worker 3 owns ids [30, 45)" -- but only if ids map to coordinates both ways
in O(1). That closed-form bijection is what this demo walks through.
"""

import numpy as np

from paircorr import row_prefix, sym_job_coord, sym_job_count, sym_job_id
from paircorr import nonsym_job_coord, nonsym_job_id

n = 5

# row_prefix(n, y) counts the upper-triangle cells above row y.
print(f"n = {n}, total symmetric jobs = {sym_job_count(n)}")
for y in range(n + 1):
    print(f"  cells before row {y}: {row_prefix(n, y)}")

# Forward: (y, x) -> id. Row-major over the triangle.
print("\nidentifier layout (upper triangle, diagonal included):")
for y in range(n):
    cells = ["  " * y] if y else [""]
    cells += [f"{sym_job_id(n, y, x):3d}" for x in range(y, n)]
    print(" ".join(cells))

# Inverse: id -> (y, x), via one square root plus an exact integer check.
print("\nround trip over every job id:")
ok = all(sym_job_id(n, *sym_job_coord(n, j)) == j for j in range(sym_job_count(n)))
print(f"  all {sym_job_count(n)} ids round-trip: {ok}")

# The non-symmetric (full grid) variant is the familiar divmod.
j = nonsym_job_id(n, 3, 1)
print(f"\nnon-symmetric: (3, 1) -> {j} -> {tuple(nonsym_job_coord(n, j))}")

# The same bijection is reused for the tile matrix: with tile edge t the
# job grid becomes an m x m tile grid, m = ceil(n/t), indexed identically.
from paircorr import TileGeometry, tile_coord

geom = TileGeometry(n=10, t=4)
print(f"\nn=10 with 4x4 tiles: m={geom.m}, {geom.total_tiles} tiles")
for tid in range(geom.total_tiles):
    print(f"  tile {tid} -> {tuple(tile_coord(geom.m, tid))}")

# Scaling: identifiers stay exact integers far beyond any practical n.
big = 1_000_000
ids = np.array([0, 17, sym_job_count(big) - 1], dtype=np.uint64)
for j in map(int, ids):
    y, x = sym_job_coord(big, j)
    assert sym_job_id(big, y, x) == j
print(f"\nn = {big:,}: spot ids round-trip exactly (job count {sym_job_count(big):,})")
