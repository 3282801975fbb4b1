"""Bounded-memory parallel all-pairs Pearson correlation.

Variables are normalized once so each pairwise correlation reduces to a
dot product; the upper-triangle workload is addressed through a closed-form
bijection between linear job identifiers and matrix coordinates, computed
in cache-friendly tiles, streamed through capacity-bounded double-buffered
passes, and optionally spread across worker threads or subprocesses.  Every
floating-point reduction uses one fixed order, so results are bitwise
identical no matter how the work is scheduled.
"""

from .engine import allpairs, default_capacity, DEFAULT_BUFFER_BUDGET
from .errors import (
    DataError,
    IntegrityError,
    PairCorrError,
    PipelineError,
    ProtocolError,
    VerificationError,
    WorkerError,
)
from .indexing import (
    Coord,
    TriangleIndexer,
    nonsym_job_coord,
    nonsym_job_id,
    row_prefix,
    sym_job_coord,
    sym_job_count,
    sym_job_id,
)
from .transform import (
    Dataset,
    NormalizedDataset,
    allpairs_naive,
    estimate_cost,
    normalize,
    pcc_naive,
    pcc_normalized,
)
from .tiles import (
    CorrelationResult,
    TileBlock,
    TileGeometry,
    compute_pass,
    empty_result,
    scatter,
    tile_coord,
)
from .pipeline import PassPlan, ResultAssembler, ResultSink, plan_passes, run_pipeline
from .distributed import (
    WorkerAssignment,
    WorkerReport,
    make_assignments,
    merge,
    partition,
    run_workers,
)
from .fileio import (
    PackedFileWriterSink,
    PackedResultReader,
    VerifyReport,
    gen_synthetic,
    load_dataset,
    load_result,
    query_pair,
    save_dataset,
    save_result,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "allpairs",
    "default_capacity",
    "DEFAULT_BUFFER_BUDGET",
    "PairCorrError",
    "DataError",
    "IntegrityError",
    "VerificationError",
    "ProtocolError",
    "WorkerError",
    "PipelineError",
    "Coord",
    "TriangleIndexer",
    "row_prefix",
    "sym_job_id",
    "sym_job_coord",
    "sym_job_count",
    "nonsym_job_id",
    "nonsym_job_coord",
    "Dataset",
    "NormalizedDataset",
    "normalize",
    "pcc_normalized",
    "pcc_naive",
    "allpairs_naive",
    "estimate_cost",
    "TileGeometry",
    "TileBlock",
    "CorrelationResult",
    "tile_coord",
    "compute_pass",
    "scatter",
    "empty_result",
    "PassPlan",
    "plan_passes",
    "ResultSink",
    "ResultAssembler",
    "run_pipeline",
    "WorkerAssignment",
    "WorkerReport",
    "partition",
    "make_assignments",
    "run_workers",
    "merge",
    "gen_synthetic",
    "load_dataset",
    "save_dataset",
    "load_result",
    "save_result",
    "PackedResultReader",
    "PackedFileWriterSink",
    "query_pair",
    "verify",
    "VerifyReport",
]
