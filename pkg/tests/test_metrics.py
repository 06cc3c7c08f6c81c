import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abcbm.block_matching import BlockResult, MotionField, MotionVector, full_search
from abcbm.frame_io import Frame, synth_translate
from abcbm.metrics import BlockSpec, block_grid, compensate, d_psnr, mse, psnr, sad

from conftest import brute_sad, random_frame


def const(value, w=16, h=16):
    return Frame(np.full((h, w), value, dtype=np.uint8))


def uniform_field(rows, cols, n, mv):
    res = BlockResult(MotionVector(*mv), 0, 1, candidates=1)
    return MotionField(tuple(tuple(res for _ in range(cols)) for _ in range(rows)), n, 8)


class TestSad:
    def test_identity(self, rng):
        f = random_frame(rng, 16, 16)
        assert sad(f, f, BlockSpec(0, 0, 16), (0, 0)) == 0

    def test_uniform_offset(self):
        assert sad(const(100), const(99), BlockSpec(0, 0, 16), (0, 0)) == 256

    def test_matches_brute_force(self, rng):
        for _ in range(20):
            cur, prev = random_frame(rng, 4, 4), random_frame(rng, 4, 4)
            for n in (1, 2, 3):
                for x in range(4 - n + 1):
                    for y in range(4 - n + 1):
                        for u in range(-x, 4 - n - x + 1):
                            for v in range(-y, 4 - n - y + 1):
                                assert sad(cur, prev, BlockSpec(x, y, n), (u, v)) == brute_sad(
                                    cur.luma, prev.luma, x, y, n, u, v)

    def test_out_of_frame(self):
        with pytest.raises(ValueError):
            sad(const(1), const(1), BlockSpec(0, 0, 16), (1, 0))

    def test_no_uint8_wrap(self):
        assert sad(const(0), const(255), BlockSpec(0, 0, 16), (0, 0)) == 256 * 255

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_symmetric(self, seed):
        r = np.random.default_rng(seed)
        a, b = random_frame(r, 8, 8), random_frame(r, 8, 8)
        blk = BlockSpec(4, 4, 4)
        assert sad(a, b, blk, (0, 0)) == sad(b, a, blk, (0, 0))


class TestCompensate:
    def test_zero_field(self, rng):
        prev = random_frame(rng, 32, 32)
        assert compensate(prev, uniform_field(2, 2, 16, (0, 0))) == prev

    def test_synth_interior_blocks(self, texture):
        seq = synth_translate(texture, (-3, 2), 2)
        n = 16
        base = Frame(texture.luma[:(texture.height // n) * n, :(texture.width // n) * n])
        cur = Frame(seq[1].luma[:base.height, :base.width])
        rows, cols = base.height // n, base.width // n
        grid = []
        for r in range(rows):
            row = []
            for c in range(cols):
                interior = 0 < r < rows - 1 and 0 < c < cols - 1
                mv = (3, -2) if interior else (0, 0)
                row.append(BlockResult(MotionVector(*mv), 0, 1, candidates=1))
            grid.append(tuple(row))
        pred = compensate(base, MotionField(tuple(grid), n, 8))
        for r in range(1, rows - 1):
            for c in range(1, cols - 1):
                sl = np.s_[r * n:(r + 1) * n, c * n:(c + 1) * n]
                assert np.array_equal(pred.luma[sl], cur.luma[sl])

    def test_hand_checked_copy(self):
        # 32x16 frame, two blocks; left block uses (1, 0), right block (-1, 0)
        prev = Frame(np.tile(np.arange(32, dtype=np.uint8), (16, 1)))
        left = BlockResult(MotionVector(1, 0), 0, 1, candidates=1)
        right = BlockResult(MotionVector(-1, 0), 0, 1, candidates=1)
        pred = compensate(prev, MotionField(((left, right),), 16, 8))
        assert pred.luma[0, :16].tolist() == list(range(1, 17))
        assert pred.luma[0, 16:].tolist() == list(range(15, 31))

    def test_geometry_mismatch(self, rng):
        with pytest.raises(ValueError):
            compensate(random_frame(rng, 48, 32), uniform_field(2, 2, 16, (0, 0)))

    def test_fsa_argmin_never_worse(self, texture, rng):
        # swapping a block's vector for the full-search argmin never raises its SAD
        seq = synth_translate(texture, (2, 1), 2, noise_amplitude=8, rng_seed=2)
        cur, prev = seq[1], seq[0]
        for b in (BlockSpec(64, 64, 16), BlockSpec(96, 48, 16)):
            best = full_search(cur, prev, b, 8)
            for _ in range(20):
                mv = tuple(int(t) for t in rng.integers(-8, 9, 2))
                assert sad(cur, prev, b, best.mv) <= sad(cur, prev, b, mv)


class TestPsnr:
    def test_mse(self):
        a = Frame(np.array([[10, 10], [10, 10]]))
        b = Frame(np.array([[11, 12], [13, 14]]))
        assert mse(a, a) == 0
        assert mse(a, b) == 7.5
        assert mse(const(0), const(255)) == 65025

    def test_mse_shape(self):
        with pytest.raises(ValueError):
            mse(const(0, 16, 16), const(0, 16, 8))

    def test_values(self):
        assert psnr(65025) == 0.0
        assert psnr(1) == pytest.approx(48.1308036086791, abs=1e-9)
        assert psnr(0) == math.inf

    def test_negative(self):
        with pytest.raises(ValueError):
            psnr(-1)

    @given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
    def test_decreasing(self, a, b):
        if a < b:
            assert psnr(a) > psnr(b)

    def test_d_psnr_examples(self):
        assert d_psnr(43.18, 43.18) == 0
        assert d_psnr(43.18, 43.10) == pytest.approx(-0.18527095877720773, abs=1e-9)
        assert d_psnr(25.95, 25.90) == pytest.approx(-0.19267822736031104, abs=1e-9)

    def test_d_psnr_lossless(self):
        with pytest.raises(ValueError):
            d_psnr(math.inf, 40.0)

    @given(st.floats(1, 100), st.floats(1, 100))
    def test_d_psnr_sign(self, p, q):
        assert (d_psnr(p, q) < 0) == (q < p)


def test_block_grid():
    g = block_grid(176, 144, 16)
    assert len(g) * len(g[0]) == 99
    assert g[8][10] == BlockSpec(160, 128, 16)
