import io
import logging

import numpy as np
import pytest

from abcbm.frame_io import (
    FormatError,
    Frame,
    Sequence,
    crop_to_block_grid,
    dump_pgm,
    dump_raw_gray,
    dump_y4m,
    load_pgm,
    load_raw_yuv,
    load_sequence,
    load_y4m,
    medium_motion_sequence,
    parse_raw_yuv,
    synth_sequence,
    synth_translate,
    textured_base,
)

from conftest import random_frame


def y4m_bytes(w, h, payloads, extra=b" F30:1"):
    out = b"YUV4MPEG2 W%d H%d" % (w, h) + extra + b"\n"
    for p in payloads:
        out += b"FRAME\n" + p
    return out


class TestFrame:
    def test_dimensions(self):
        f = Frame(np.zeros((3, 5), dtype=np.uint8))
        assert (f.width, f.height) == (5, 3)
        assert f.luma.size == f.width * f.height

    def test_immutable(self):
        f = Frame(np.zeros((2, 2), dtype=np.uint8))
        with pytest.raises(ValueError):
            f.luma[0, 0] = 1

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Frame(np.array([[0, 256]]))
        with pytest.raises(ValueError):
            Frame(np.array([[-1, 3]]))

    def test_sequence_needs_equal_sizes(self):
        a = Frame(np.zeros((2, 2), dtype=np.uint8))
        b = Frame(np.zeros((2, 3), dtype=np.uint8))
        with pytest.raises(ValueError, match="frame 1"):
            Sequence((a, b))


class TestY4M:
    def test_header_echo(self):
        w, h = 176, 144
        size = w * h * 3 // 2
        seq = load_y4m(y4m_bytes(w, h, [bytes(size), bytes(size)]))
        assert len(seq) == 2
        assert (seq.width, seq.height) == (176, 144)
        assert seq.frame_rate == 30.0

    def test_420_byte_offsets(self):
        # 2x2 4:2:0 frame: 4 luma bytes, then one U and one V byte
        payload = bytes([1, 2, 3, 4, 200, 100])
        seq = load_y4m(y4m_bytes(2, 2, [payload, bytes([5, 6, 7, 8, 9, 9])], b" C420jpeg"))
        assert seq[0].luma.tolist() == [[1, 2], [3, 4]]
        assert seq[1].luma.tolist() == [[5, 6], [7, 8]]

    def test_mono(self):
        seq = load_y4m(y4m_bytes(2, 2, [bytes([1, 2, 3, 4])], b" Cmono"))
        assert seq[0].luma.tolist() == [[1, 2], [3, 4]]

    def test_frame_params_allowed(self):
        data = b"YUV4MPEG2 W2 H2 Cmono\nFRAME Ixyz\n" + bytes(4)
        assert len(load_y4m(data)) == 1

    def test_truncated_second_frame(self):
        data = y4m_bytes(4, 4, [bytes(24), bytes(10)])
        with pytest.raises(FormatError, match="frame 1"):
            load_y4m(data)

    def test_bad_magic(self):
        with pytest.raises(FormatError, match="magic"):
            load_y4m(b"YUV4MPEG3 W2 H2\nFRAME\n" + bytes(6))

    def test_unsupported_chroma_named(self):
        with pytest.raises(FormatError, match="C444"):
            load_y4m(y4m_bytes(2, 2, [bytes(12)], b" C444"))

    def test_round_trip(self, rng):
        seq = Sequence(tuple(random_frame(rng, 6, 4) for _ in range(3)), frame_rate=25.0)
        back = load_y4m(io.BytesIO(dump_y4m(seq)))
        assert back.frames == seq.frames
        assert back.frame_rate == 25.0

    def test_matches_raw_i420(self, rng):
        frames = [rng.integers(0, 256, 24, dtype=np.uint8).tobytes() for _ in range(2)]
        a = load_y4m(y4m_bytes(4, 4, frames, b" C420"))
        b = parse_raw_yuv(b"".join(frames), 4, 4, "i420")
        assert a.frames == b.frames


class TestRaw:
    def test_gray_two_frames(self, tmp_path):
        p = tmp_path / "a.yuv"
        p.write_bytes(bytes(range(32)))
        seq = load_raw_yuv(p, 4, 4, "gray")
        assert len(seq) == 2
        assert seq[1].luma[0, 0] == 16

    def test_i420_stride(self, tmp_path):
        # 16 luma + 4 U + 4 V per 4x4 frame
        data = bytes(range(48))
        p = tmp_path / "b.yuv"
        p.write_bytes(data)
        seq = load_raw_yuv(p, 4, 4, "i420")
        assert len(seq) == 2
        assert seq[1].luma.ravel().tolist() == list(range(24, 40))

    def test_trailing_byte(self, tmp_path):
        p = tmp_path / "c.yuv"
        p.write_bytes(bytes(17))
        with pytest.raises(FormatError, match="1 trailing byte"):
            load_raw_yuv(p, 4, 4, "gray")

    def test_round_trip(self, tmp_path, rng):
        seq = Sequence(tuple(random_frame(rng, 5, 3) for _ in range(4)))
        p = tmp_path / "r.gray"
        p.write_bytes(dump_raw_gray(seq))
        assert load_raw_yuv(p, 5, 3, "gray").frames == seq.frames

    def test_load_sequence_needs_dims(self, tmp_path):
        p = tmp_path / "x.yuv"
        p.write_bytes(bytes(16))
        with pytest.raises(ValueError):
            load_sequence(p)


class TestPGM:
    def test_basic(self):
        f = load_pgm(b"P5 2 2 255\n" + bytes([0, 1, 2, 3]))
        assert f.luma.tolist() == [[0, 1], [2, 3]]

    def test_comments(self):
        data = b"P5\n# made by hand\n2 # width\n# height next\n2\n255\n" + bytes([9, 8, 7, 6])
        assert load_pgm(data).luma.tolist() == [[9, 8], [7, 6]]

    def test_16bit_rejected(self):
        with pytest.raises(FormatError, match="65535"):
            load_pgm(b"P5 2 2 65535\n" + bytes(8))

    def test_ascii_rejected(self):
        with pytest.raises(FormatError, match="P2"):
            load_pgm(b"P2 2 2 255\n0 1 2 3\n")

    def test_round_trip(self, rng):
        f = random_frame(rng, 7, 5)
        assert load_pgm(dump_pgm(f)) == f


class TestCrop:
    def test_qcif_unchanged(self):
        f = Frame(np.zeros((144, 176), dtype=np.uint8))
        assert crop_to_block_grid(f, 16) is f

    def test_crop_width(self, caplog):
        f = Frame(np.zeros((144, 170), dtype=np.uint8))
        with caplog.at_level(logging.WARNING):
            g = crop_to_block_grid(f, 16)
        assert (g.width, g.height) == (160, 144)
        assert "dropped 10 columns, 0 rows" in caplog.text

    def test_too_small(self):
        with pytest.raises(ValueError):
            crop_to_block_grid(Frame(np.zeros((10, 10), dtype=np.uint8)), 16)


class TestSynth:
    def test_static(self, texture):
        seq = synth_translate(texture, (0, 0), 3)
        assert all(f == texture for f in seq)

    def test_shift_definition(self, texture):
        seq = synth_translate(texture, (3, -2), 3)
        b, f1, f2 = texture.luma, seq[1].luma, seq[2].luma
        h, w = b.shape
        assert np.array_equal(f1[:h - 2, 3:], b[2:, :w - 3])
        assert np.array_equal(f2[:h - 4, 6:], b[4:, :w - 6])

    def test_noise_bounded(self, texture):
        clean = synth_translate(texture, (1, 1), 2)
        noisy = synth_translate(texture, (1, 1), 2, noise_amplitude=5, rng_seed=3)
        diff = noisy[1].luma.astype(int) - clean[1].luma.astype(int)
        assert diff.min() >= -5 and diff.max() <= 5 and diff.any()

    def test_needs_two_frames(self, texture):
        with pytest.raises(ValueError):
            synth_translate(texture, (1, 0), 1)

    def test_viewport(self, texture):
        seq = synth_sequence(texture, [(2, 0)], size=(64, 32))
        assert (seq.width, seq.height) == (64, 32)
        assert np.array_equal(seq[1].luma[:, 2:], seq[0].luma[:, :-2])

    def test_deterministic(self):
        a = medium_motion_sequence(48, 32, 4, seed=9)
        b = medium_motion_sequence(48, 32, 4, seed=9)
        assert a.frames == b.frames

    def test_textured_base_range(self):
        f = textured_base(40, 30, seed=1)
        assert f.luma.min() >= 10 and f.luma.max() <= 245
        assert f.luma.std() > 20
