"""Framed binary protocol spoken between coordinator and subprocess workers.

Every frame is ``type (1 byte) | payload_len (u32) | payload``, integers
little-endian throughout:

====== ======= =====================================================
type   name    payload
====== ======= =====================================================
0x01   ASSIGN  J_start u64, J_end u64, t u32, capacity u64,
               dataset_path_len u16, dataset_path utf-8
0x02   BLOCKS  first_tile_id u64, count u32, count*t^2 f64 values
               in tile order (one frame per completed pass)
0x03   DONE    tiles_done u64
0x7F   ERROR   utf-8 message
====== ======= =====================================================

A worker receives exactly one ASSIGN, answers with one BLOCKS frame per
pass in range order, then DONE.  On any failure (including a malformed
frame) it sends ERROR and exits.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .errors import ProtocolError

FRAME_ASSIGN = 0x01
FRAME_BLOCKS = 0x02
FRAME_DONE = 0x03
FRAME_ERROR = 0x7F

_HEADER = struct.Struct("<BI")
_ASSIGN_FIXED = struct.Struct("<QQIQH")
_BLOCKS_FIXED = struct.Struct("<QI")
_DONE = struct.Struct("<Q")

MAX_PAYLOAD = 2**32 - 1


@dataclass(frozen=True)
class Assignment:
    j_start: int
    j_end: int
    t: int
    capacity: int
    dataset_path: str


def write_frame(stream: BinaryIO, frame_type: int, payload: bytes) -> None:
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(payload)} bytes exceeds u32 length field")
    stream.write(_HEADER.pack(frame_type, len(payload)))
    stream.write(payload)
    stream.flush()


def read_frame(stream: BinaryIO) -> tuple[int, bytes] | None:
    """Read one frame; ``None`` on clean EOF, ProtocolError on a torn frame."""
    header = stream.read(_HEADER.size)
    if not header:
        return None
    if len(header) < _HEADER.size:
        raise ProtocolError("truncated frame header")
    frame_type, length = _HEADER.unpack(header)
    payload = stream.read(length) if length else b""
    if len(payload) < length:
        raise ProtocolError(
            f"truncated payload: expected {length} bytes, got {len(payload)}"
        )
    return frame_type, payload


def encode_assign(j_start: int, j_end: int, t: int, capacity: int, dataset_path: str) -> bytes:
    path = dataset_path.encode("utf-8")
    if len(path) > 0xFFFF:
        raise ProtocolError("dataset path longer than u16 length field")
    return _ASSIGN_FIXED.pack(j_start, j_end, t, capacity, len(path)) + path


def decode_assign(payload: bytes) -> Assignment:
    if len(payload) < _ASSIGN_FIXED.size:
        raise ProtocolError("ASSIGN payload too short")
    j_start, j_end, t, capacity, path_len = _ASSIGN_FIXED.unpack_from(payload)
    path = payload[_ASSIGN_FIXED.size :]
    if len(path) != path_len:
        raise ProtocolError(
            f"ASSIGN path length mismatch: declared {path_len}, got {len(path)}"
        )
    if j_start > j_end:
        raise ProtocolError(f"ASSIGN range [{j_start}, {j_end}) is inverted")
    if t < 1 or capacity < 1:
        raise ProtocolError("ASSIGN tile size and capacity must be >= 1")
    try:
        text = path.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProtocolError("ASSIGN path is not valid utf-8") from exc
    return Assignment(j_start, j_end, t, capacity, text)


def encode_blocks(first_tile_id: int, values: np.ndarray, t: int) -> bytes:
    t2 = t * t
    if values.size % t2 != 0:
        raise ProtocolError(
            f"BLOCKS values length {values.size} is not a multiple of t^2={t2}"
        )
    count = values.size // t2
    data = np.ascontiguousarray(values, dtype="<f8").tobytes()
    return _BLOCKS_FIXED.pack(first_tile_id, count) + data


def decode_blocks(payload: bytes, t: int) -> tuple[int, int, np.ndarray]:
    if len(payload) < _BLOCKS_FIXED.size:
        raise ProtocolError("BLOCKS payload too short")
    first_tile_id, count = _BLOCKS_FIXED.unpack_from(payload)
    expected = _BLOCKS_FIXED.size + count * t * t * 8
    if len(payload) != expected:
        raise ProtocolError(
            f"BLOCKS payload of {len(payload)} bytes, expected {expected} "
            f"for {count} tiles of t={t}"
        )
    values = np.frombuffer(payload, dtype="<f8", offset=_BLOCKS_FIXED.size).astype(
        np.float64, copy=False
    )
    return first_tile_id, count, values


def encode_done(tiles_done: int) -> bytes:
    return _DONE.pack(tiles_done)


def decode_done(payload: bytes) -> int:
    if len(payload) != _DONE.size:
        raise ProtocolError("DONE payload must be exactly 8 bytes")
    return _DONE.unpack(payload)[0]


def encode_error(message: str) -> bytes:
    return message.encode("utf-8")


def decode_error(payload: bytes) -> str:
    return payload.decode("utf-8", errors="replace")
