"""Video input: Y4M / raw YUV / PGM readers and writers, synthetic sequences.

Only the luma plane is kept. Chroma bytes are parsed for size bookkeeping
and then dropped.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence as Seq

import numpy as np

log = logging.getLogger(__name__)


class FormatError(ValueError):
    """Input bytes do not describe a valid frame or sequence."""


@dataclass(frozen=True)
class Frame:
    """A single 8-bit luma plane. The array is stored read-only."""

    luma: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.luma)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"luma must be a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("luma samples must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        else:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "luma", arr)

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.luma.shape == other.luma.shape and bool(np.array_equal(self.luma, other.luma))

    def __hash__(self):
        return hash((self.luma.shape, self.luma.tobytes()))

    @classmethod
    def from_bytes(cls, data: bytes, width: int, height: int) -> "Frame":
        return cls(np.frombuffer(data, dtype=np.uint8, count=width * height).reshape(height, width))


@dataclass(frozen=True)
class Sequence:
    frames: tuple
    frame_rate: float = 30.0
    name: str = "sequence"

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a sequence needs at least one frame")
        shape = frames[0].luma.shape
        for k, f in enumerate(frames):
            if f.luma.shape != shape:
                raise ValueError(
                    f"frame {k} is {f.width}x{f.height}, expected {shape[1]}x{shape[0]}"
                )
        object.__setattr__(self, "frames", frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, k):
        return self.frames[k]


# ---------------------------------------------------------------- YUV4MPEG2

Y4M_MAGIC = b"YUV4MPEG2"

# chroma tag -> (horizontal subsampling, vertical subsampling); None = no chroma
_Y4M_CHROMA = {
    b"420": (2, 2),
    b"420jpeg": (2, 2),
    b"420paldv": (2, 2),
    b"420mpeg2": (2, 2),
    b"mono": None,
}


def _chroma_bytes(width: int, height: int, sub) -> int:
    if sub is None:
        return 0
    sx, sy = sub
    return 2 * (-(-width // sx)) * (-(-height // sy))


def _parse_rate(token: bytes) -> float:
    try:
        num, den = token.split(b":")
        return int(num) / int(den) if int(den) else 0.0
    except ValueError as exc:
        raise FormatError(f"bad frame-rate token {token!r}") from exc


def load_y4m(stream: BinaryIO | bytes, name: str | None = None) -> Sequence:
    """Read a YUV4MPEG2 stream (4:2:0 or mono) into a luma-only Sequence."""
    data = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    data = bytes(data)
    eol = data.find(b"\n")
    if eol < 0:
        raise FormatError("missing YUV4MPEG2 header line")
    tokens = data[:eol].split(b" ")
    if tokens[0] != Y4M_MAGIC:
        raise FormatError(f"bad magic {tokens[0][:16]!r}, expected {Y4M_MAGIC!r}")

    width = height = None
    rate = 30.0
    sub = _Y4M_CHROMA[b"420"]
    for tok in tokens[1:]:
        if not tok:
            continue
        key, val = tok[:1], tok[1:]
        try:
            if key == b"W":
                width = int(val)
            elif key == b"H":
                height = int(val)
        except ValueError as exc:
            raise FormatError(f"bad header token {tok!r}") from exc
        if key == b"F":
            rate = _parse_rate(val)
        elif key == b"C":
            if val not in _Y4M_CHROMA:
                raise FormatError(f"unsupported chroma tag {tok.decode(errors='replace')!r}")
            sub = _Y4M_CHROMA[val]
    if not width or not height or width < 1 or height < 1:
        raise FormatError("header lacks positive W and H tokens")

    luma_size = width * height
    frame_size = luma_size + _chroma_bytes(width, height, sub)
    frames = []
    pos = eol + 1
    while pos < len(data):
        k = len(frames)
        eol = data.find(b"\n", pos)
        if eol < 0 or not data.startswith(b"FRAME", pos):
            raise FormatError(f"frame {k}: expected FRAME marker at byte {pos}")
        start = eol + 1
        if start + frame_size > len(data):
            raise FormatError(
                f"frame {k}: payload truncated ({len(data) - start} of {frame_size} bytes)"
            )
        frames.append(Frame.from_bytes(data[start:start + luma_size], width, height))
        pos = start + frame_size
    if not frames:
        raise FormatError("stream contains no frames")
    return Sequence(tuple(frames), frame_rate=rate, name=name or "y4m")


def dump_y4m(seq: Sequence | Iterable[Frame], frame_rate: float = 30.0) -> bytes:
    """Serialise frames as a mono YUV4MPEG2 stream."""
    frames = list(seq)
    if isinstance(seq, Sequence):
        frame_rate = seq.frame_rate
    num, den = _rate_fraction(frame_rate)
    head = f"YUV4MPEG2 W{frames[0].width} H{frames[0].height} F{num}:{den} Ip A1:1 Cmono\n"
    parts = [head.encode("ascii")]
    for f in frames:
        parts.append(b"FRAME\n")
        parts.append(f.luma.tobytes())
    return b"".join(parts)


def _rate_fraction(rate: float) -> tuple[int, int]:
    if float(rate).is_integer():
        return int(rate), 1
    return int(round(rate * 1001)), 1001


# ---------------------------------------------------------------- raw planar

RAW_CHROMA = ("i420", "gray")


def raw_frame_size(width: int, height: int, chroma: str) -> int:
    if chroma not in RAW_CHROMA:
        raise ValueError(f"unknown raw chroma layout {chroma!r}; choose from {RAW_CHROMA}")
    sub = (2, 2) if chroma == "i420" else None
    return width * height + _chroma_bytes(width, height, sub)


def parse_raw_yuv(data: bytes, width: int, height: int, chroma: str = "gray",
                  name: str = "raw", frame_rate: float = 30.0) -> Sequence:
    stride = raw_frame_size(width, height, chroma)
    count, rem = divmod(len(data), stride)
    if rem:
        unit = "byte" if rem == 1 else "bytes"
        raise FormatError(
            f"file size {len(data)} is not a multiple of the {stride}-byte frame: "
            f"{rem} trailing {unit}"
        )
    if count == 0:
        raise FormatError("file contains no frames")
    luma = width * height
    frames = tuple(
        Frame.from_bytes(data[k * stride:k * stride + luma], width, height) for k in range(count)
    )
    return Sequence(frames, frame_rate=frame_rate, name=name)


def load_raw_yuv(path, width: int, height: int, chroma: str = "gray") -> Sequence:
    with open(path, "rb") as fh:
        data = fh.read()
    name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return parse_raw_yuv(data, width, height, chroma, name=name)


def dump_raw_gray(frames: Iterable[Frame]) -> bytes:
    return b"".join(f.luma.tobytes() for f in frames)


# ---------------------------------------------------------------- PGM

def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Return `count` whitespace-separated header tokens and the offset after them.

    Comments run from '#' to end of line and may appear between tokens.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("PGM header truncated")
        tokens.append(data[start:pos])
    return tokens, pos


def load_pgm(stream: BinaryIO | bytes) -> Frame:
    """Read a binary (P5) PGM with maxval <= 255."""
    data = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    data = bytes(data)
    if data[:2] != b"P5":
        raise FormatError(f"unsupported PGM magic {data[:2]!r}; only binary P5 is accepted")
    (magic, w, h, maxval), pos = _pgm_tokens(data, 4)
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise FormatError("non-numeric PGM header field") from exc
    if width < 1 or height < 1:
        raise FormatError(f"bad PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise FormatError(f"PGM maxval {maxval} unsupported (must be 1..255)")
    pos += 1  # single whitespace byte ends the header
    payload = data[pos:pos + width * height]
    if len(payload) < width * height:
        raise FormatError(f"PGM raster truncated ({len(payload)} of {width * height} bytes)")
    return Frame.from_bytes(payload, width, height)


def dump_pgm(frame: Frame) -> bytes:
    return f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii") + frame.luma.tobytes()


def load_sequence(path, width: int | None = None, height: int | None = None,
                  chroma: str = "gray") -> Sequence:
    """Load a sequence choosing the reader from the file extension."""
    ext = os.path.splitext(os.fspath(path))[1].lower()
    name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    if ext == ".y4m":
        with open(path, "rb") as fh:
            return load_y4m(fh, name=name)
    if ext in (".pgm", ".pnm"):
        with open(path, "rb") as fh:
            return Sequence((load_pgm(fh),), name=name)
    if width is None or height is None:
        raise ValueError(f"raw input {path} needs explicit width and height")
    return load_raw_yuv(path, width, height, chroma)


# ---------------------------------------------------------------- geometry

def crop_to_block_grid(frame: Frame, n: int) -> Frame:
    if n < 1:
        raise ValueError("block size must be >= 1")
    if frame.width < n or frame.height < n:
        raise ValueError(f"{frame.width}x{frame.height} frame is smaller than one {n}x{n} block")
    w = frame.width - frame.width % n
    h = frame.height - frame.height % n
    if (w, h) == (frame.width, frame.height):
        return frame
    log.warning("cropping %dx%d frame to %dx%d: dropped %d columns, %d rows",
                frame.width, frame.height, w, h, frame.width - w, frame.height - h)
    return Frame(frame.luma[:h, :w])


# ---------------------------------------------------------------- synthesis

def textured_base(width: int, height: int, seed: int = 0, smoothness: float = 2.0) -> Frame:
    """Smoothed random texture spanning most of [0, 255]."""
    from scipy.ndimage import gaussian_filter

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((height, width))
    img = gaussian_filter(noise, smoothness, mode="reflect") if smoothness > 0 else noise
    img -= img.min()
    peak = img.max()
    if peak > 0:
        img *= 235.0 / peak
    return Frame(np.rint(img + 10.0).astype(np.uint8))


def synth_sequence(base: Frame, shifts: Seq[tuple[int, int]], noise_amplitude: int = 0,
                   rng_seed: int = 0, name: str = "synth",
                   size: tuple[int, int] | None = None) -> Sequence:
    """Frame 0 is `base`; frame k is frame k-1 moved by shifts[k-1] (plus fresh noise).

    Sampling uses clamp-to-edge addressing on the base, so every frame is fully defined.
    With `size=(w, h)` each frame is the centred w x h viewport of the moving base,
    which keeps long pans away from the clamped border.
    """
    if noise_amplitude < 0:
        raise ValueError("noise amplitude must be >= 0")
    rng = np.random.default_rng(rng_seed)
    h, w = base.height, base.width
    out_w, out_h = size if size is not None else (w, h)
    if not (0 < out_w <= w and 0 < out_h <= h):
        raise ValueError(f"viewport {out_w}x{out_h} does not fit the {w}x{h} base")
    ys = np.arange(out_h)[:, None] + (h - out_h) // 2
    xs = np.arange(out_w)[None, :] + (w - out_w) // 2
    src = base.luma.astype(np.int16)
    ox = oy = 0
    frames = []
    for k in range(len(shifts) + 1):
        if k:
            dx, dy = shifts[k - 1]
            ox += int(dx)
            oy += int(dy)
        img = src[np.clip(ys - oy, 0, h - 1), np.clip(xs - ox, 0, w - 1)]
        if noise_amplitude:
            img = img + rng.integers(-noise_amplitude, noise_amplitude + 1, size=img.shape)
        frames.append(Frame(np.clip(img, 0, 255).astype(np.uint8)))
    return Sequence(tuple(frames), name=name)


def synth_translate(base: Frame, shift_per_frame: tuple[int, int], frame_count: int,
                    noise_amplitude: int = 0, rng_seed: int = 0) -> Sequence:
    if frame_count < 2:
        raise ValueError("a synthetic sequence needs at least 2 frames")
    return synth_sequence(base, [tuple(shift_per_frame)] * (frame_count - 1),
                          noise_amplitude, rng_seed, name="translate")


def random_walk_shifts(count: int, max_step: int, seed: int = 0) -> list[tuple[int, int]]:
    """Per-frame integer shifts drawn uniformly from [-max_step, max_step]^2."""
    rng = np.random.default_rng(seed)
    steps = rng.integers(-max_step, max_step + 1, size=(count, 2))
    return [(int(a), int(b)) for a, b in steps]


def medium_motion_sequence(width: int = 176, height: int = 144, frames: int = 30,
                           max_step: int = 4, noise_amplitude: int = 5, seed: int = 0,
                           smoothness: float = 3.0, margin: int = 48) -> Sequence:
    """Textured pan whose per-frame shift is drawn uniformly from [-max_step, max_step]^2.

    The texture is `margin` pixels larger than the viewport on every side.
    """
    base = textured_base(width + 2 * margin, height + 2 * margin, seed, smoothness)
    shifts = random_walk_shifts(frames - 1, max_step, seed + 1)
    return synth_sequence(base, shifts, noise_amplitude, seed + 2, name="medium",
                          size=(width, height))
