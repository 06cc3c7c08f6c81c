"""Block distortion and frame-quality measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frame_io import Frame

PEAK = 255


@dataclass(frozen=True)
class BlockSpec:
    """Top-left corner (x, y) of an n x n template block."""

    x: int
    y: int
    n: int = 16

    def __post_init__(self):
        if self.n < 1 or self.x < 0 or self.y < 0:
            raise ValueError(f"invalid block {self}")

    def fits(self, width: int, height: int) -> bool:
        return self.x + self.n <= width and self.y + self.n <= height


def block_grid(width: int, height: int, n: int) -> list[list[BlockSpec]]:
    """Non-overlapping n x n blocks in raster order, as rows of BlockSpec."""
    return [[BlockSpec(c * n, r * n, n) for c in range(width // n)] for r in range(height // n)]


def sad(current: Frame, previous: Frame, block: BlockSpec, candidate: tuple[int, int]) -> int:
    """Sum of absolute differences between the template block and the block displaced by
    `candidate` = (u, v) in the previous frame."""
    u, v = candidate
    n = block.n
    if not block.fits(current.width, current.height):
        raise ValueError(f"{block} does not fit the {current.width}x{current.height} frame")
    px, py = block.x + u, block.y + v
    if px < 0 or py < 0 or px + n > previous.width or py + n > previous.height:
        raise ValueError(f"candidate {candidate} leaves the previous frame for {block}")
    a = current.luma[block.y:block.y + n, block.x:block.x + n].astype(np.int32)
    b = previous.luma[py:py + n, px:px + n].astype(np.int32)
    return int(np.abs(a - b).sum())


def compensate(previous: Frame, field) -> Frame:
    """Predict the current frame by copying each block from `previous` at its motion vector."""
    n = field.n
    rows, cols = len(field.grid), len(field.grid[0]) if field.grid else 0
    if rows * n != previous.height or cols * n != previous.width:
        raise ValueError(
            f"{cols}x{rows} field of {n}px blocks does not cover a "
            f"{previous.width}x{previous.height} frame"
        )
    src = previous.luma
    out = np.empty_like(src)
    for r, row in enumerate(field.grid):
        for c, res in enumerate(row):
            u, v = res.mv
            x, y = c * n, r * n
            if not (0 <= x + u <= previous.width - n and 0 <= y + v <= previous.height - n):
                raise ValueError(f"motion vector {(u, v)} of block ({r}, {c}) leaves the frame")
            out[y:y + n, x:x + n] = src[y + v:y + v + n, x + u:x + u + n]
    return Frame(out)


def mse(a: Frame, b: Frame) -> float:
    if a.luma.shape != b.luma.shape:
        raise ValueError(f"frame sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    d = a.luma.astype(np.int64) - b.luma.astype(np.int64)
    return float(np.mean(d * d))


def psnr(mse_value: float) -> float:
    """PSNR in dB for 8-bit data. A zero MSE yields math.inf."""
    if mse_value < 0 or math.isnan(mse_value):
        raise ValueError(f"MSE must be non-negative, got {mse_value}")
    if mse_value == 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse_value)


def d_psnr(psnr_fsa: float, psnr_bm: float) -> float:
    """Percent PSNR degradation of a method relative to the full-search reference.

    Negative when the method is worse than full search.
    """
    if not (math.isfinite(psnr_fsa) and math.isfinite(psnr_bm)):
        raise ValueError("D_PSNR is undefined for lossless (infinite PSNR) inputs")
    if psnr_fsa <= 0:
        raise ValueError(f"reference PSNR must be positive, got {psnr_fsa}")
    # same as -((fsa - bm) / fsa) * 100, written so equal inputs give +0.0
    return (psnr_bm - psnr_fsa) / psnr_fsa * 100.0
