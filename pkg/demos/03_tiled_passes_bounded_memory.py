"""Tiles, capacity-bounded passes, and the two-buffer pipeline.

The packed result for n variables is n(n+1)/2 doubles -- 16 GB at n = 64k.
The engine never materializes more than one pass of tile blocks at a time:
the tile range is split into passes of at most `capacity` tiles, and two
reusable buffers alternate between "being computed into" and "being
consumed", so peak block memory is exactly 2 * capacity * t^2 doubles no
matter how big n gets.
"""

import numpy as np

from paircorr import (
    TileGeometry,
    ResultAssembler,
    allpairs,
    default_capacity,
    gen_synthetic,
    normalize,
    plan_passes,
    run_pipeline,
)

d = gen_synthetic(512, 64, seed=3)
u = normalize(d, threads=2)
geom = TileGeometry(n=512, t=4)
print(f"n=512, t=4: tile matrix {geom.m}x{geom.m}, {geom.total_tiles} tiles, "
      f"{geom.job_count} jobs")

# A pass plan is pure arithmetic: contiguous ranges of at most `capacity`.
capacity = 1000
plan = plan_passes(0, geom.total_tiles, capacity)
print(f"capacity {capacity} -> {len(plan.passes)} passes; "
      f"first {plan.passes[0]}, last {plan.passes[-1]}")

# Instrument the allocator hook to watch the memory bound hold.
class Meter:
    def __init__(self):
        self.live = 0
        self.peak = 0

    def __call__(self, num_floats):
        self.live += num_floats
        self.peak = max(self.peak, self.live)
        return np.empty(num_floats, dtype=np.float64)

meter = Meter()
assembler = ResultAssembler(geom, u.zero_variance)
run_pipeline(u, geom, plan, assembler, threads=2, overlap=True, allocator=meter)
bound = 2 * capacity * geom.t * geom.t
print(f"peak block storage: {meter.peak * 8:,} bytes "
      f"(bound {bound * 8:,}); result cells: {assembler.result.packed.size:,}")

# Overlap on/off changes the schedule, never the bits.
plain = ResultAssembler(geom, u.zero_variance)
run_pipeline(u, geom, plan, plain, threads=2, overlap=False)
print("overlap on == overlap off, bitwise:",
      np.array_equal(assembler.result.packed, plain.result.packed))

# The default capacity comes from a byte budget (256 MiB unless overridden).
for t in (4, 16):
    print(f"default capacity at t={t}: {default_capacity(t):,} tiles/pass")

# And any tile size gives the same bits, because every pair's dot product
# uses one fixed reduction order regardless of how pairs are grouped.
reference = allpairs(d, tile_size=4)
for t in (1, 3, 16):
    same = np.array_equal(allpairs(d, tile_size=t).packed, reference.packed)
    print(f"t={t:2d} bitwise equal to t=4: {same}")
