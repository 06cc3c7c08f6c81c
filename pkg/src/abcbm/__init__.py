"""Block-matching motion estimation with an Artificial Bee Colony search.

The bee-colony search (``abc``) evaluates SAD only where a nearest-neighbour
cache cannot estimate it. Full search, three-step search and diamond search
are included as references.
"""

from .block_matching import (
    ALGORITHMS,
    BlockResult,
    MotionField,
    MotionVector,
    SearchConfig,
    SearchWindow,
    abc_bm,
    clip_window,
    ds,
    estimate_motion_field,
    full_search,
    initial_pattern,
    tss,
)
from .frame_io import FormatError, Frame, Sequence
from .metrics import BlockSpec, compensate, d_psnr, mse, psnr, sad

__version__ = "0.1.0"
