"""Spreading the tile range over workers: threads, subprocesses, one answer.

Distribution is static: T tiles over p workers means worker i owns the
contiguous range [i*ceil(T/p), (i+1)*ceil(T/p)), clamped to T. Each worker
runs the same multi-pass pipeline over its range; the coordinator scatters
arriving blocks into the shared packed result. Subprocess workers speak a
small framed protocol over stdin/stdout: one ASSIGN in, one BLOCKS frame
per pass out, then DONE.
"""

import io

import numpy as np

from paircorr import TileGeometry, allpairs, gen_synthetic, partition, run_workers
from paircorr import protocol

d = gen_synthetic(96, 48, seed=11)
geom = TileGeometry(n=96, t=4)
print(f"n=96: {geom.total_tiles} tiles")

# The partition formula, visibly.
for p in (1, 3, 5):
    print(f"  p={p}: {partition(geom.total_tiles, p)}")

# More workers than tiles leaves trailing workers empty -- still correct.
print(f"  p=4 over 3 tiles: {partition(3, 4)}")

# Same bits from every worker count and both backends.
reference = allpairs(d, tile_size=4, capacity=20)
for backend in ("in_process", "subprocess"):
    for p in (1, 2, 5):
        result = run_workers(d, geom, p=p, backend=backend, capacity=20)
        same = np.array_equal(result.packed, reference.packed)
        print(f"backend={backend:10s} p={p}: bitwise equal = {same}")

# What actually crosses the pipe: a peek at the frames.
payload = protocol.encode_assign(0, 10, 4, 5, "/tmp/data.lpcc")
buf = io.BytesIO()
protocol.write_frame(buf, protocol.FRAME_ASSIGN, payload)
raw = buf.getvalue()
print(f"\nASSIGN frame: {len(raw)} bytes, type=0x{raw[0]:02x}, "
      f"payload length={int.from_bytes(raw[1:5], 'little')}")
a = protocol.decode_assign(payload)
print(f"decoded: tiles [{a.j_start}, {a.j_end}), t={a.t}, "
      f"capacity={a.capacity}, dataset={a.dataset_path!r}")

values = np.arange(2 * 16, dtype=np.float64)  # two 4x4 tiles
blocks_payload = protocol.encode_blocks(7, values, t=4)
first, count, decoded = protocol.decode_blocks(blocks_payload, t=4)
print(f"BLOCKS frame: first tile {first}, {count} tiles, "
      f"{decoded.size} values ({len(blocks_payload)} payload bytes)")
