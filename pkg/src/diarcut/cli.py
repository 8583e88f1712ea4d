"""Command-line interface: synth, diarize, detect-overlap, score.

Exit codes: 0 success, 1 usage, 2 data or configuration error, 3 numerical
failure.  Every run logs a reproducibility manifest (version, seed, resolved
configuration); human-readable results go to stdout together with one
machine-readable JSON line.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import ingest, overlap_decode, scoring, synth
from .errors import (
    ConfigError,
    ContractError,
    DiarcutError,
    EmptyReferenceError,
    InfeasiblePathError,
    NumericalError,
    ParseError,
)
from .pipeline import DiarizationConfig, diarize_embeddings

log = logging.getLogger("diarcut")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _version() -> str:
    try:
        return metadata.version("diarcut")
    except metadata.PackageNotFoundError:
        return "unknown"


def _manifest(command: str, args: argparse.Namespace) -> None:
    resolved = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")
    }
    log.info(
        "manifest %s",
        json.dumps(
            {"version": _version(), "command": command, "config": resolved},
            sort_keys=True,
            default=str,
        ),
    )


def _parse_p_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"--p-range expects MIN:MAX, got {text!r}")


def _cmd_synth(args) -> int:
    cfg = synth.SynthConfig(
        n_speakers=args.speakers,
        n_segments=args.segments,
        dim=args.dim,
        overlap_fraction=args.overlap_frac,
        noise_sigma=args.sigma,
        overlap_sigma=args.overlap_sigma,
        min_centroid_angle=args.min_angle,
        seed=args.seed,
    )
    _manifest("synth", args)
    result = synth.generate(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ingest.save_embeddings(result.embeddings, out / "embeddings.txt")
    ingest.save_overlap_flags(result.overlap, out / "overlap_flags.txt")
    ingest.write_rttm(result.reference, out / "reference.rttm")
    summary = {
        "out_dir": str(out),
        "n_segments": len(result.embeddings),
        "n_overlap": int(result.overlap.flags.sum()),
        "n_speakers": cfg.n_speakers,
    }
    print(
        f"wrote {summary['n_segments']} segments "
        f"({summary['n_overlap']} overlapping, {cfg.n_speakers} speakers) to {out}"
    )
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _cmd_diarize(args) -> int:
    _manifest("diarize", args)
    p_min, p_max = _parse_p_range(args.p_range)
    seq = ingest.load_embeddings(args.embeddings)
    overlap = None
    if args.flags:
        overlap = ingest.load_overlap_flags(args.flags, expected_length=len(seq))
    config = DiarizationConfig(
        p_min=p_min,
        p_max=p_max,
        max_speakers=args.max_speakers,
        max_iters=args.max_iters,
        tol=args.tol,
        restarts=args.restarts,
        seed=args.seed,
    )
    result = diarize_embeddings(seq, overlap, config)
    ingest.write_rttm(result.timeline, args.out)
    if args.dump_report:
        Path(args.dump_report).write_text(
            json.dumps(result.report.to_dict(), sort_keys=True), encoding="utf-8"
        )
    if args.dump_matrices:
        dump_dir = Path(args.dump_matrices)
        dump_dir.mkdir(parents=True, exist_ok=True)
        np.savetxt(dump_dir / "affinity_raw.csv", result.bundle.raw, delimiter=",")
        np.savetxt(dump_dir / "affinity_binarized.csv", result.bundle.binarized, delimiter=",")
        np.savetxt(dump_dir / "laplacian.csv", result.bundle.laplacian, delimiter=",")
    summary = {
        "out": str(args.out),
        "n_segments": len(seq),
        "p_hat": result.report.p_hat,
        "k_hat": result.report.k_hat,
        "phi": result.discretization.phi,
    }
    print(
        f"{len(seq)} segments -> {result.report.k_hat} speakers "
        f"(p={result.report.p_hat}); wrote {args.out}"
    )
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _cmd_detect_overlap(args) -> int:
    _manifest("detect-overlap", args)
    post = ingest.load_posteriors(args.posteriors)
    if args.frame_shift is not None:
        post = ingest.FramePosteriors(post.recording_id, args.frame_shift, post.rows)
    cfg = overlap_decode.DurationConfig(
        min_single=args.min_single,
        max_single=args.max_single,
        min_overlap=args.min_overlap,
        max_overlap=args.max_overlap,
        min_silence=args.min_silence,
        max_silence=args.max_silence,
        bias_silence=args.bias_silence,
        bias_single=args.bias_single,
        bias_overlap=args.bias_overlap,
    )
    labels = overlap_decode.viterbi(post, cfg)
    seq = ingest.load_embeddings(args.segments)
    flags = overlap_decode.frames_to_flags(labels, seq.spans)
    ingest.save_overlap_flags(flags, args.out)
    if args.lab:
        with Path(args.lab).open("w", encoding="utf-8") as fh:
            for start, end in labels.class_intervals(overlap_decode.OVERLAP):
                fh.write(f"{start:.3f}\t{end:.3f}\toverlap\n")
    summary = {
        "out": str(args.out),
        "n_segments": len(seq),
        "n_flagged": int(flags.flags.sum()),
        "n_frames": len(labels),
    }
    print(f"flagged {summary['n_flagged']} of {len(seq)} segments; wrote {args.out}")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _cmd_score(args) -> int:
    _manifest("score", args)
    reference = ingest.load_rttm(args.ref)
    hypothesis = ingest.load_rttm(args.hyp)
    breakdown = scoring.der_score(reference, hypothesis, collar=args.collar)
    print(f"missed speech : {breakdown.missed:5.1f}%")
    print(f"false alarm   : {breakdown.false_alarm:5.1f}%")
    print(f"confusion     : {breakdown.confusion:5.1f}%")
    print(f"DER           : {breakdown.der:5.1f}%")
    print(json.dumps(breakdown.to_dict(), sort_keys=True))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="diarcut", description=__doc__)
    parser.add_argument("--log-level", default="INFO", help="logging level name")
    parser.add_argument(
        "--jobs",
        type=int,
        default=1,
        help="worker budget for batch runs; never changes outputs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic conversation")
    p.add_argument("--speakers", type=int, required=True)
    p.add_argument("--segments", type=int, required=True)
    p.add_argument("--overlap-frac", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--overlap-sigma", type=float, default=None)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--min-angle", type=float, default=45.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("diarize", help="cluster an embeddings file into an RTTM")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--flags", default=None, help="overlap-flag file; omit for none")
    p.add_argument("--out", required=True)
    p.add_argument("--p-range", default="2:20", metavar="MIN:MAX")
    p.add_argument("--max-speakers", type=int, default=10)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-report", default=None, help="write the eigengap report JSON")
    p.add_argument("--dump-matrices", default=None, help="dump A, binarized A, L as CSV")
    p.set_defaults(func=_cmd_diarize)

    p = sub.add_parser("detect-overlap", help="decode posteriors into overlap flags")
    p.add_argument("--posteriors", required=True)
    p.add_argument("--segments", required=True, help="embeddings file providing spans")
    p.add_argument("--out", required=True)
    p.add_argument("--frame-shift", type=float, default=None, help="override the header")
    p.add_argument("--min-single", type=float, default=0.03)
    p.add_argument("--max-single", type=float, default=10.0)
    p.add_argument("--min-overlap", type=float, default=0.1)
    p.add_argument("--max-overlap", type=float, default=5.0)
    p.add_argument("--min-silence", type=float, default=0.01)
    p.add_argument("--max-silence", type=float, default=None)
    p.add_argument("--bias-silence", type=float, default=1.0)
    p.add_argument("--bias-single", type=float, default=1.0)
    p.add_argument("--bias-overlap", type=float, default=1.0)
    p.add_argument("--lab", default=None, help="also write overlap regions as a .lab file")
    p.set_defaults(func=_cmd_detect_overlap)

    p = sub.add_parser("score", help="score a hypothesis RTTM against a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--collar", type=float, default=0.0)
    p.set_defaults(func=_cmd_score)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except (ParseError, ContractError, ConfigError, InfeasiblePathError, EmptyReferenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DiarcutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
