import io

import numpy as np
import pytest

from paircorr import ProtocolError, TileGeometry, allpairs, gen_synthetic, save_dataset
from paircorr import protocol
from paircorr.tiles import TileBlock, empty_result, scatter
from paircorr.worker import serve


def roundtrip(frame_type, payload):
    buf = io.BytesIO()
    protocol.write_frame(buf, frame_type, payload)
    buf.seek(0)
    return protocol.read_frame(buf)


def test_assign_round_trip():
    payload = protocol.encode_assign(3, 17, 4, 5, "/data/input.lpcc")
    ftype, raw = roundtrip(protocol.FRAME_ASSIGN, payload)
    assert ftype == protocol.FRAME_ASSIGN
    a = protocol.decode_assign(raw)
    assert (a.j_start, a.j_end, a.t, a.capacity, a.dataset_path) == (3, 17, 4, 5, "/data/input.lpcc")


def test_blocks_round_trip():
    values = np.arange(2 * 9, dtype=np.float64)
    payload = protocol.encode_blocks(42, values, t=3)
    ftype, raw = roundtrip(protocol.FRAME_BLOCKS, payload)
    first, count, decoded = protocol.decode_blocks(raw, t=3)
    assert (ftype, first, count) == (protocol.FRAME_BLOCKS, 42, 2)
    assert np.array_equal(decoded, values)


def test_done_and_error_round_trip():
    assert protocol.decode_done(protocol.encode_done(99)) == 99
    assert protocol.decode_error(protocol.encode_error("boom: épic")) == "boom: épic"


def test_read_frame_eof_and_truncation():
    assert protocol.read_frame(io.BytesIO(b"")) is None
    with pytest.raises(ProtocolError):
        protocol.read_frame(io.BytesIO(b"\x02\x01"))  # torn header
    buf = io.BytesIO()
    protocol.write_frame(buf, protocol.FRAME_DONE, protocol.encode_done(1))
    torn = buf.getvalue()[:-3]
    with pytest.raises(ProtocolError):
        protocol.read_frame(io.BytesIO(torn))


def test_decode_assign_rejects_garbage():
    with pytest.raises(ProtocolError):
        protocol.decode_assign(b"too short")
    good = protocol.encode_assign(0, 5, 4, 2, "x")
    with pytest.raises(ProtocolError):
        protocol.decode_assign(good[:-1])  # declared path length mismatch
    with pytest.raises(ProtocolError):
        protocol.decode_assign(protocol.encode_assign(5, 2, 4, 2, "x"))  # inverted
    with pytest.raises(ProtocolError):
        protocol.decode_assign(protocol.encode_assign(0, 5, 0, 2, "x"))  # t=0
    bad_utf8 = protocol.encode_assign(0, 5, 4, 2, "ab")[:-2] + b"\xff\xfe"
    with pytest.raises(ProtocolError):
        protocol.decode_assign(bad_utf8)


def test_decode_blocks_rejects_wrong_size():
    payload = protocol.encode_blocks(0, np.zeros(16), t=4)
    with pytest.raises(ProtocolError):
        protocol.decode_blocks(payload, t=3)
    with pytest.raises(ProtocolError):
        protocol.decode_blocks(payload[:10], t=4)


def test_encode_blocks_rejects_ragged_values():
    with pytest.raises(ProtocolError):
        protocol.encode_blocks(0, np.zeros(10), t=3)


def test_read_frame_never_crashes_on_arbitrary_bytes():
    from hypothesis import given, settings
    from hypothesis import strategies as st

    @given(st.binary(max_size=64))
    @settings(max_examples=300, deadline=None)
    def check(raw):
        stream = io.BytesIO(raw)
        try:
            frame = protocol.read_frame(stream)
        except ProtocolError:
            return
        if frame is None:
            assert raw == b""
        else:
            _, payload = frame
            assert len(payload) == int.from_bytes(raw[1:5], "little")

    check()


class TestWorkerServe:
    def _dataset_file(self, tmp_path, n=6, l=5, seed=3):
        d = gen_synthetic(n, l, seed)
        path = tmp_path / "input.lpcc"
        save_dataset(path, d)
        return d, str(path)

    def test_happy_path_frames(self, tmp_path):
        d, path = self._dataset_file(tmp_path)
        geom = TileGeometry(n=6, t=2)
        stdin = io.BytesIO()
        protocol.write_frame(
            stdin, protocol.FRAME_ASSIGN, protocol.encode_assign(0, geom.total_tiles, 2, 2, path)
        )
        stdin.seek(0)
        stdout = io.BytesIO()
        assert serve(stdin, stdout) == 0

        stdout.seek(0)
        result = empty_result(6)
        tiles_seen = 0
        while True:
            frame = protocol.read_frame(stdout)
            assert frame is not None, "stream ended before DONE"
            ftype, payload = frame
            if ftype == protocol.FRAME_BLOCKS:
                first, count, values = protocol.decode_blocks(payload, t=2)
                assert first == tiles_seen
                assert count <= 2  # pass capacity
                blocks = [
                    TileBlock(tile_id=first + k, values=values[k * 4 : (k + 1) * 4])
                    for k in range(count)
                ]
                scatter(blocks, geom, result)
                tiles_seen += count
            else:
                assert ftype == protocol.FRAME_DONE
                assert protocol.decode_done(payload) == geom.total_tiles
                break
        assert tiles_seen == geom.total_tiles
        expected = allpairs(d, tile_size=2)
        assert np.array_equal(result.packed, expected.packed)

    def test_malformed_first_frame_yields_error(self, tmp_path):
        stdin = io.BytesIO()
        protocol.write_frame(stdin, protocol.FRAME_DONE, protocol.encode_done(0))
        stdin.seek(0)
        stdout = io.BytesIO()
        assert serve(stdin, stdout) == 1
        stdout.seek(0)
        ftype, payload = protocol.read_frame(stdout)
        assert ftype == protocol.FRAME_ERROR
        assert "ASSIGN" in protocol.decode_error(payload)

    def test_eof_before_assign_yields_error(self):
        stdout = io.BytesIO()
        assert serve(io.BytesIO(b""), stdout) == 1
        stdout.seek(0)
        ftype, _ = protocol.read_frame(stdout)
        assert ftype == protocol.FRAME_ERROR

    def test_range_overrun_yields_error(self, tmp_path):
        _, path = self._dataset_file(tmp_path)
        stdin = io.BytesIO()
        protocol.write_frame(
            stdin, protocol.FRAME_ASSIGN, protocol.encode_assign(0, 9999, 2, 2, path)
        )
        stdin.seek(0)
        stdout = io.BytesIO()
        assert serve(stdin, stdout) == 1
        stdout.seek(0)
        ftype, payload = protocol.read_frame(stdout)
        assert ftype == protocol.FRAME_ERROR

    def test_missing_dataset_yields_error(self, tmp_path):
        stdin = io.BytesIO()
        protocol.write_frame(
            stdin,
            protocol.FRAME_ASSIGN,
            protocol.encode_assign(0, 1, 2, 2, str(tmp_path / "nope.lpcc")),
        )
        stdin.seek(0)
        stdout = io.BytesIO()
        assert serve(stdin, stdout) == 1
        stdout.seek(0)
        ftype, _ = protocol.read_frame(stdout)
        assert ftype == protocol.FRAME_ERROR
