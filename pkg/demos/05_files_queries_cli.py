"""Files on disk: datasets in, packed results out, O(1) pair queries.

The result file stores the packed upper triangle in job-identifier order,
so the bijection IS the file's index: pair (i, j) lives at a computable
byte offset, no index table needed, and storage is half of a full square
matrix. Everything here is also reachable from the command line.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from paircorr import (
    PackedResultReader,
    allpairs,
    gen_synthetic,
    load_dataset,
    query_pair,
    save_dataset,
    save_result,
    verify,
)

workdir = Path(tempfile.mkdtemp(prefix="paircorr-demo-"))
data_path = workdir / "expr.lpcc"
result_path = workdir / "expr.lpcr"

# Deterministic synthetic data: a counter-based generator (splitmix64), so
# the same (n, l, seed) gives the same bytes on any machine or language.
d = gen_synthetic(64, 40, seed=42)
save_dataset(data_path, d)
print(f"dataset: {data_path} ({data_path.stat().st_size:,} bytes)")
assert np.array_equal(load_dataset(data_path).values, d.values)

result = allpairs(d, threads=2)
save_result(result_path, result)
print(f"result:  {result_path} ({result_path.stat().st_size:,} bytes, "
      f"{result.packed.size} packed values)")

# Random access without loading the matrix: seek straight to the pair.
print(f"query (10, 3) from file: {query_pair(result_path, 10, 3):+.12f}")
print(f"query (3, 10) from file: {query_pair(result_path, 3, 10):+.12f}")
with PackedResultReader(result_path) as reader:
    assert reader.query(5, 5) == result.get(5, 5)
    print(f"diagonal (5, 5): {reader.query(5, 5)}")

# Verification replays the brute-force definition and compares.
report = verify(d, result)
print(f"verify: ok={report.ok}, max |dev| = {report.max_abs_deviation:.2e} "
      f"at pair {report.worst_pair}")

# The same flow via the CLI (exit codes: 0 ok, 1 usage, 2 data,
# 3 verification, 4 worker failure).
def cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "paircorr", *args], capture_output=True, text=True
    )
    print(f"$ paircorr {' '.join(args)}\n  -> exit {proc.returncode}: "
          f"{(proc.stdout or proc.stderr).strip()}")
    return proc

cli("gen", "--n", "32", "--l", "16", "--seed", "1", "--out", str(workdir / "g.lpcc"))
cli("run", "--input", str(workdir / "g.lpcc"), "--out", str(workdir / "g.lpcr"),
    "--threads", "2")
cli("verify", "--input", str(workdir / "g.lpcc"), "--result", str(workdir / "g.lpcr"))
cli("query", "--result", str(workdir / "g.lpcr"), "--i", "7", "--j", "21")
cli("cost", "--n", "32", "--l", "16")

# TSV input works too: rows are variables, first column may label them.
tsv = workdir / "tiny.tsv"
tsv.write_text("geneA\t1\t2\t3\t4\ngeneB\t4\t3\t2\t1\ngeneC\t1\t3\t2\t4\n")
tsv_data = load_dataset(tsv)
print(f"\nTSV: {tsv_data.n} labeled variables {tsv_data.ids}, "
      f"r(geneA, geneB) = {allpairs(tsv_data).get(0, 1):+.3f}")
