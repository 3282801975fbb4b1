"""Subprocess worker: ``python -m paircorr.worker``.

Reads one ASSIGN frame from stdin, loads the dataset from the path it
names, normalizes locally, computes its tile range pass by pass, and
answers with one BLOCKS frame per pass followed by DONE.  Any failure --
including a malformed frame -- is reported as an ERROR frame and a nonzero
exit.

Environment:
    PAIRCORR_THREADS            compute threads for this worker (default 1)
    PAIRCORR_FAIL_AFTER_PASSES  fault-injection hook for tests: abort with
                                an ERROR frame after this many passes
"""

from __future__ import annotations

import os
import sys

import numpy as np

from . import protocol
from .errors import ProtocolError
from .fileio import load_dataset
from .pipeline import ResultSink, plan_passes, run_pipeline
from .tiles import TileGeometry
from .transform import normalize


class _InjectedFailure(Exception):
    pass


class _FrameSink(ResultSink):
    """Encodes each completed pass as a BLOCKS frame on the output stream."""

    def __init__(self, stream, t: int, fail_after: int | None = None):
        self.stream = stream
        self.t = t
        self.fail_after = fail_after
        self.passes_done = 0

    def consume(self, pass_range, blocks) -> None:
        if self.fail_after is not None and self.passes_done >= self.fail_after:
            raise _InjectedFailure(
                f"injected failure after {self.passes_done} passes"
            )
        values = getattr(blocks, "flat", None)
        if values is None:
            values = np.concatenate([b.values for b in blocks])
        payload = protocol.encode_blocks(pass_range[0], values, self.t)
        protocol.write_frame(self.stream, protocol.FRAME_BLOCKS, payload)
        self.passes_done += 1


def serve(stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    try:
        frame = protocol.read_frame(stdin)
        if frame is None:
            raise ProtocolError("connection closed before ASSIGN")
        frame_type, payload = frame
        if frame_type != protocol.FRAME_ASSIGN:
            raise ProtocolError(f"expected ASSIGN, got frame type 0x{frame_type:02x}")
        assign = protocol.decode_assign(payload)

        dataset = load_dataset(assign.dataset_path)
        geom = TileGeometry(n=dataset.n, t=assign.t)
        if assign.j_end > geom.total_tiles:
            raise ProtocolError(
                f"ASSIGN range end {assign.j_end} exceeds "
                f"{geom.total_tiles} tiles for n={dataset.n}, t={assign.t}"
            )

        threads = int(os.environ.get("PAIRCORR_THREADS", "1"))
        fail_env = os.environ.get("PAIRCORR_FAIL_AFTER_PASSES")
        fail_after = int(fail_env) if fail_env else None

        u = normalize(dataset, threads=threads)
        sink = _FrameSink(stdout, assign.t, fail_after)
        plan = plan_passes(assign.j_start, assign.j_end, assign.capacity)
        run_pipeline(u, geom, plan, sink, threads=threads, overlap=True)
        protocol.write_frame(
            stdout,
            protocol.FRAME_DONE,
            protocol.encode_done(assign.j_end - assign.j_start),
        )
        return 0
    except Exception as exc:
        try:
            message = f"{type(exc).__name__}: {exc}"
            protocol.write_frame(stdout, protocol.FRAME_ERROR, protocol.encode_error(message))
        except Exception:
            pass
        return 1


def main() -> None:
    sys.exit(serve())


if __name__ == "__main__":
    main()
