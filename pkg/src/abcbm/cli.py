"""Command-line front end: ``abcbm bench | estimate | synth``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data-format error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field

from . import frame_io
from .block_matching import ALGORITHMS, DEFAULT_PATTERN, SearchConfig, estimate_motion_field
from .frame_io import FormatError, Frame, Sequence
from .metrics import block_grid, compensate, d_psnr, mse, psnr

log = logging.getLogger("abcbm")

CSV_COLUMNS = (
    "sequence", "frame", "algorithm", "psnr_db", "d_psnr_pct", "evals_per_block",
    "ests_per_block", "reuses_per_block", "candidates_per_block", "time_ms",
)

LOSSLESS = "lossless"


class UsageError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    input: str
    algorithms: tuple = ALGORITHMS
    block_size: int = 16
    window: int = 8
    d: float = 3.0
    limit: int = 10
    iterations: int | None = None
    seed: int = 0
    pattern: tuple = DEFAULT_PATTERN
    output: str | None = None
    format: str = "csv"
    trace: bool = False
    workers: int = 1
    timing: bool = True
    width: int | None = None
    height: int | None = None
    chroma: str = "gray"

    def __post_init__(self):
        algos = tuple(self.algorithms)
        unknown = [a for a in algos if a not in ALGORITHMS]
        if unknown:
            raise UsageError(f"unknown algorithm(s) {', '.join(unknown)}; choose from {ALGORITHMS}")
        # full search is the D_PSNR reference and always runs first
        self.algorithms = ("fsa",) + tuple(a for a in dict.fromkeys(algos) if a != "fsa")
        if self.format not in ("csv", "json"):
            raise UsageError(f"unknown report format {self.format!r}")

    def search_config(self, algorithm: str) -> SearchConfig:
        try:
            return SearchConfig(algorithm, self.block_size, self.window, self.d, self.limit,
                                self.iterations, len(self.pattern), self.pattern, self.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc


@dataclass
class SequenceReport:
    sequence: str
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows + self.summary:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self, config: ExperimentConfig | None = None) -> str:
        doc = {
            "sequence": self.sequence,
            "columns": list(CSV_COLUMNS),
            "rows": [{c: _jsonable(r[c]) for c in CSV_COLUMNS} for r in self.rows],
            "summary": [{c: _jsonable(r[c]) for c in CSV_COLUMNS} for r in self.summary],
        }
        if config is not None:
            doc["config"] = _config_dict(config)
        return json.dumps(doc, indent=2) + "\n"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else str(value)
    return value


def _config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["pattern"] = [list(p) for p in config.pattern]
    d["algorithms"] = list(config.algorithms)
    return d


# ---------------------------------------------------------------- inputs

def parse_pattern(text: str) -> tuple:
    """``"u,v;u,v;..."`` -> tuple of integer pairs."""
    try:
        pts = tuple(tuple(int(t) for t in part.split(",")) for part in text.split(";") if part.strip())
    except ValueError as exc:
        raise UsageError(f"bad pattern {text!r}") from exc
    if len(pts) < 2 or any(len(p) != 2 for p in pts):
        raise UsageError("pattern needs at least two 'u,v' points separated by ';'")
    return pts


def _parse_pair(text: str, sep: str, what: str) -> tuple[int, int]:
    try:
        a, b = text.split(sep)
        return int(a), int(b)
    except ValueError as exc:
        raise UsageError(f"bad {what} {text!r}") from exc


def synth_from_spec(spec: str) -> Sequence:
    """Build a synthetic sequence from ``synth:key=value,...``.

    Keys: size=WxH (176x144), frames (30), shift=U/V or random (random),
    step (4; max per-frame shift for random motion), noise (5), seed (0),
    smooth (3.0; texture blur sigma), margin (48; texture border beyond the viewport).
    """
    body = spec.split(":", 1)[1] if ":" in spec else ""
    opts = dict(size="176x144", frames="30", shift="random", step="4", noise="5", seed="0",
                smooth="3.0", margin="48")
    for item in filter(None, body.split(",")):
        if "=" not in item:
            raise UsageError(f"bad synth option {item!r}")
        k, v = item.split("=", 1)
        if k not in opts:
            raise UsageError(f"unknown synth option {k!r}")
        opts[k] = v
    try:
        w, h = _parse_pair(opts["size"], "x", "size")
        frames, noise, seed = int(opts["frames"]), int(opts["noise"]), int(opts["seed"])
        step, margin, smooth = int(opts["step"]), int(opts["margin"]), float(opts["smooth"])
    except ValueError as exc:
        raise UsageError(f"bad synth spec {spec!r}") from exc
    if frames < 2:
        raise UsageError("a synthetic sequence needs at least 2 frames")
    if opts["shift"] == "random":
        return frame_io.medium_motion_sequence(w, h, frames, step, noise, seed, smooth, margin)
    shift = _parse_pair(opts["shift"], "/", "shift")
    base = frame_io.textured_base(w + 2 * margin, h + 2 * margin, seed, smooth)
    return frame_io.synth_sequence(base, [shift] * (frames - 1), noise, seed + 1,
                                   name="translate", size=(w, h))


def load_input(config: ExperimentConfig) -> Sequence:
    if config.input.startswith("synth"):
        return synth_from_spec(config.input)
    return frame_io.load_sequence(config.input, config.width, config.height, config.chroma)


# ---------------------------------------------------------------- commands

def run_bench(config: ExperimentConfig, seq: Sequence | None = None) -> SequenceReport:
    """PSNR, D_PSNR and per-block search cost for every algorithm and frame pair."""
    if seq is None:
        seq = load_input(config)
    frames = [frame_io.crop_to_block_grid(f, config.block_size) for f in seq]
    if len(frames) < 2:
        raise UsageError("motion estimation needs at least 2 frames")
    report = SequenceReport(seq.name)
    per_algo = {a: [] for a in config.algorithms}
    for k in range(1, len(frames)):
        prev, cur = frames[k - 1], frames[k]
        ref = None
        for algo in config.algorithms:
            t0 = time.perf_counter()
            fld = estimate_motion_field(cur, prev, config.search_config(algo), k, config.workers)
            elapsed = (time.perf_counter() - t0) * 1000.0
            p = psnr(mse(cur, compensate(prev, fld)))
            if algo == "fsa":
                ref = p
            stats = [r for _, _, r in fld.blocks()]
            row = {
                "sequence": seq.name, "frame": k, "algorithm": algo, "psnr_db": p,
                "d_psnr_pct": _d_psnr_or_reason(ref, p),
                "evals_per_block": _mean(r.evaluations for r in stats),
                "ests_per_block": _mean(r.estimations for r in stats),
                "reuses_per_block": _mean(r.reuses for r in stats),
                "candidates_per_block": _mean(r.candidates for r in stats),
                "time_ms": round(elapsed, 3) if config.timing else None,
            }
            report.rows.append(row)
            per_algo[algo].append(row)
    ref = None
    for algo in config.algorithms:
        rows = per_algo[algo]
        p = _mean(r["psnr_db"] for r in rows)
        if algo == "fsa":
            ref = p
        report.summary.append({
            "sequence": seq.name, "frame": "mean", "algorithm": algo, "psnr_db": p,
            "d_psnr_pct": _d_psnr_or_reason(ref, p),
            **{c: _mean(r[c] for r in rows) for c in
               ("evals_per_block", "ests_per_block", "reuses_per_block", "candidates_per_block")},
            "time_ms": round(_mean(r["time_ms"] for r in rows), 3) if config.timing else None,
        })
    return report


def _mean(values) -> float:
    vals = list(values)
    if any(math.isinf(v) for v in vals):
        return math.inf
    return math.fsum(vals) / len(vals)


def _d_psnr_or_reason(ref: float, p: float):
    if math.isinf(ref) or math.isinf(p):
        return LOSSLESS
    return d_psnr(ref, p)


def run_estimate(config: ExperimentConfig, previous: Frame, current: Frame,
                 algorithm: str, frame_index: int = 1) -> dict:
    """Motion field of one frame pair as a JSON-ready dict."""
    n = config.block_size
    previous = frame_io.crop_to_block_grid(previous, n)
    current = frame_io.crop_to_block_grid(current, n)
    fld = estimate_motion_field(current, previous, config.search_config(algorithm), frame_index,
                                config.workers, trace=config.trace)
    grid = block_grid(current.width, current.height, n)
    blocks = []
    for r, c, res in fld.blocks():
        entry = {
            "row": r, "col": c, "x": grid[r][c].x, "y": grid[r][c].y,
            "mv": [res.mv.u, res.mv.v], "sad": res.sad, "evaluations": res.evaluations,
            "estimations": res.estimations, "reuses": res.reuses, "candidates": res.candidates,
        }
        if res.trace is not None:
            entry["trace"] = [
                {"iteration": e.iteration, "phase": e.phase, "position": list(e.position),
                 "kind": e.kind, "value": e.value, "nearest_distance": e.nearest_distance,
                 "rule": e.rule}
                for e in res.trace
            ]
        blocks.append(entry)
    return {
        "algorithm": algorithm, "frame": frame_index, "block_size": n, "window": config.window,
        "width": current.width, "height": current.height, "blocks": blocks,
    }


def run_synth(seq: Sequence, path: str) -> None:
    data = frame_io.dump_y4m(seq) if path.lower().endswith(".y4m") else frame_io.dump_raw_gray(seq)
    with open(path, "wb") as fh:
        fh.write(data)


# ---------------------------------------------------------------- argparse

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True,
                   help="sequence file (.y4m, .pgm, raw .yuv) or 'synth:key=value,...'")
    p.add_argument("--width", type=int, help="frame width for raw input")
    p.add_argument("--height", type=int, help="frame height for raw input")
    p.add_argument("--chroma", choices=frame_io.RAW_CHROMA, default="gray")
    p.add_argument("--block", type=int, default=16)
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--d", type=float, default=3.0)
    p.add_argument("--limit", type=int, default=10)
    p.add_argument("--iters", type=int, default=None,
                   help="ABC iterations (default 4 for window <= 8, else 8)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pattern", type=parse_pattern, default=DEFAULT_PATTERN,
                   help='initial ABC positions, "u,v;u,v;..."')
    p.add_argument("--out", help="report path (stdout if omitted)")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--workers", type=int, default=1, help="threads for block searches")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="abcbm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    bench = sub.add_parser("bench", help="benchmark algorithms over a sequence")
    _add_search_flags(bench)
    bench.add_argument("--algos", default=",".join(ALGORITHMS))
    bench.add_argument("--format", choices=("csv", "json"), default="csv")
    bench.add_argument("--no-timing", dest="timing", action="store_false",
                       help="leave time_ms empty so reports are byte-reproducible")

    est = sub.add_parser("estimate", help="dump one motion field as JSON")
    _add_search_flags(est)
    est.add_argument("--ref", help="previous frame (PGM); --input is then the current frame")
    est.add_argument("--frame", type=int, default=1,
                     help="current frame index in the sequence (previous is frame-1)")
    est.add_argument("--algo", choices=ALGORITHMS, default="abc")

    syn = sub.add_parser("synth", help="write a synthetic translating sequence")
    syn.add_argument("--out", required=True, help=".y4m or raw gray output")
    syn.add_argument("--size", default="176x144")
    syn.add_argument("--frames", type=int, default=10)
    syn.add_argument("--shift", default="3,-2", help="per-frame shift 'dx,dy' or 'random'")
    syn.add_argument("--step", type=int, default=4, help="max per-frame shift for random motion")
    syn.add_argument("--noise", type=int, default=0)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--smooth", type=float, default=3.0)
    syn.add_argument("--base", help="PGM to translate instead of a random texture")
    return parser


def _experiment(args, **extra) -> ExperimentConfig:
    return ExperimentConfig(
        input=args.input, block_size=args.block, window=args.window, d=args.d, limit=args.limit,
        iterations=args.iters, seed=args.seed, pattern=args.pattern, output=args.out,
        trace=args.trace, workers=args.workers, width=args.width, height=args.height,
        chroma=args.chroma, **extra,
    )


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _cmd_bench(args) -> None:
    algos = tuple(a.strip() for a in args.algos.split(",") if a.strip())
    config = _experiment(args, algorithms=algos, format=args.format, timing=args.timing)
    report = run_bench(config)
    _write(config.output, report.to_csv() if config.format == "csv" else report.to_json(config))


def _cmd_estimate(args) -> None:
    config = _experiment(args)
    if args.ref:
        with open(args.ref, "rb") as fh:
            previous = frame_io.load_pgm(fh)
        with open(args.input, "rb") as fh:
            current = frame_io.load_pgm(fh)
        k = 1
    else:
        seq = load_input(config)
        k = args.frame
        if not 1 <= k < len(seq):
            raise UsageError(f"--frame must be in 1..{len(seq) - 1}")
        previous, current = seq[k - 1], seq[k]
    doc = run_estimate(config, previous, current, args.algo, k)
    _write(config.output, json.dumps(doc, indent=1) + "\n")


def _cmd_synth(args) -> None:
    w, h = _parse_pair(args.size, "x", "size")
    if args.frames < 2:
        raise UsageError("a synthetic sequence needs at least 2 frames")
    if args.base:
        with open(args.base, "rb") as fh:
            base = frame_io.load_pgm(fh)
        size = (min(w, base.width), min(h, base.height))
    else:
        base = frame_io.textured_base(w, h, args.seed, args.smooth)
        size = None
    if args.shift == "random":
        shifts = frame_io.random_walk_shifts(args.frames - 1, args.step, args.seed)
    else:
        shifts = [_parse_pair(args.shift, ",", "shift")] * (args.frames - 1)
    seq = frame_io.synth_sequence(base, shifts, args.noise, args.seed, name="synth", size=size)
    run_synth(seq, args.out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"bench": _cmd_bench, "estimate": _cmd_estimate, "synth": _cmd_synth}[args.command]
    try:
        handler(args)
    except FormatError as exc:
        print(f"abcbm: format error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"abcbm: I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"abcbm: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
