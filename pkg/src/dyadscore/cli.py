"""Command-line surface: score, decode, tile, synth, split, ablate, report."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .decode import DecodeConfig, decode
from .frames import OverlapPolicy
from .harness import (
    Protocol,
    SplitPlan,
    make_splits,
    run_protocol,
)
from .io_formats import (
    FormatError,
    SessionManifest,
    read_manifest,
    read_posteriors,
    read_rttm,
    write_manifest,
    write_posteriors,
    write_rttm,
)
from .metrics import ScoreConfig, map_speakers, score
from .synth import CorruptionConfig, SynthConfig, corrupt_to_posteriors, generate_session
from .timeline import ROLE_LABELS
from .windows import WindowMode, WindowSpec, plan_windows

EXIT_OK = 0
EXIT_INPUT_ERROR = 2


def _default_seed() -> int:
    return int(os.environ.get("DYAD_SEED", "0"))


def _add_decode_opts(p):
    p.add_argument("--smoothing", type=int, default=1,
                   help="odd median-filter width in frames (1 = off)")
    p.add_argument("--min-segment-ms", type=int, default=0)
    p.add_argument("--overlap-policy", choices=["both", "drop"], default="both")


def _decode_cfg(args) -> DecodeConfig:
    policy = (OverlapPolicy.BOTH_SPEAKERS if args.overlap_policy == "both"
              else OverlapPolicy.DROP)
    return DecodeConfig(args.smoothing, args.min_segment_ms, policy)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyadscore",
        description="Child-adult diarization scoring and experiment tooling",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score a hypothesis RTTM against a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--collar-ms", type=int, default=100)
    p.add_argument("--skip-overlap", action="store_true")
    p.add_argument("--map-speakers", action="store_true",
                   help="assign anonymous hypothesis speakers to roles first")
    p.add_argument("--duration", type=float, default=None,
                   help="session duration in seconds (default: max segment end)")

    p = sub.add_parser("decode", help="decode a posterior file to RTTM")
    p.add_argument("--posteriors", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--uri", default="session")
    _add_decode_opts(p)

    p = sub.add_parser("tile", help="list the window plan for a session")
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--window", type=float, required=True)
    p.add_argument("--mode", choices=["train", "inference"], default="inference")
    p.add_argument("--overlap", type=float, default=0.5,
                   help="train-mode window overlap fraction")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--sessions", type=int, default=1)
    p.add_argument("--duration", type=float, default=900.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--overlap-fraction", type=float, default=0.0)
    p.add_argument("--child-mean", type=float, default=153.0)
    p.add_argument("--adult-mean", type=float, default=286.0)
    p.add_argument("--flip-p", type=float, default=0.0)
    p.add_argument("--drop-p", type=float, default=0.0)
    p.add_argument("--spurious-p", type=float, default=0.0)

    p = sub.add_parser("split", help="make a session-level cross-validation plan")
    p.add_argument("--manifest", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ablate", help="data-efficiency ablation report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--splits", default=None)
    p.add_argument("--out", required=True, help="report path prefix")
    p.add_argument("--collar-ms", type=int, default=100)
    p.add_argument("--skip-overlap", action="store_true")
    p.add_argument("--hyp-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_decode_opts(p)

    p = sub.add_parser("report", help="run a scoring protocol over a corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--protocol",
                   choices=[pr.value for pr in Protocol], default="baseline")
    p.add_argument("--splits", default=None)
    p.add_argument("--out", required=True, help="report path prefix")
    p.add_argument("--collar-ms", type=int, default=100)
    p.add_argument("--skip-overlap", action="store_true")
    p.add_argument("--hyp-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_decode_opts(p)
    return parser


def _cmd_score(args) -> int:
    ref = read_rttm(args.ref, args.duration)
    duration = args.duration
    hyp = read_rttm(args.hyp)
    if duration is None:
        duration = max(ref.session_duration, hyp.session_duration)
        ref = ref.with_duration(duration)
    hyp = hyp.with_duration(duration)
    if args.map_speakers:
        hyp = map_speakers(ref, hyp)
    elif set(hyp.speakers) - ROLE_LABELS:
        print("error: hypothesis has anonymous speakers; use --map-speakers",
              file=sys.stderr)
        return EXIT_INPUT_ERROR
    cfg = ScoreConfig(args.collar_ms, args.skip_overlap)
    b = score(ref, hyp, cfg)
    pct = b.as_percentages()
    print(f"FA   {pct['fa']:.1f}")
    print(f"Miss {pct['miss']:.1f}")
    print(f"F+M  {pct['detection']:.1f}")
    print(f"SC   {pct['sc']:.1f}")
    print(f"DER  {pct['der']:.1f}")
    return EXIT_OK


def _cmd_decode(args) -> int:
    p = read_posteriors(args.posteriors)
    t = decode(p, _decode_cfg(args))
    write_rttm(t, args.out, uri=args.uri)
    return EXIT_OK


def _cmd_tile(args) -> int:
    mode = WindowMode.TRAIN if args.mode == "train" else WindowMode.INFERENCE
    spec = WindowSpec(args.window, mode, args.overlap)
    plan = plan_windows(args.duration, spec)
    if not plan.windows:
        print("empty plan (session shorter than the training window)")
        return EXIT_OK
    for start, end in plan.windows:
        print(f"{start:.3f}\t{end:.3f}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sessions = []
    for i in range(args.sessions):
        sid = f"synth{i:03d}"
        scfg = SynthConfig(
            session_duration=args.duration,
            child_speech_target=(args.child_mean, 100.0),
            adult_speech_target=(args.adult_mean, 96.0),
            overlap_fraction=args.overlap_fraction,
            seed=seed + i,
        )
        tl = generate_session(scfg)
        ccfg = CorruptionConfig(args.flip_p, args.drop_p, args.spurious_p,
                                seed=seed + i)
        post = corrupt_to_posteriors(tl, ccfg)
        rttm = out / f"{sid}.rttm"
        fpos = out / f"{sid}.fpos"
        write_rttm(tl, rttm, uri=sid)
        write_posteriors(post, fpos)
        sessions.append(SessionManifest(
            session_id=sid,
            annotation_path=str(rttm),
            posterior_path=str(fpos),
            duration=tl.session_duration,
            demographics={"gender": "m" if i % 2 == 0 else "f",
                          "language_level": f"LL-{i % 3 + 1}"},
        ))
    write_manifest(sessions, out / "manifest.jsonl")
    print(f"wrote {len(sessions)} sessions to {out}")
    return EXIT_OK


def _cmd_split(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    corpus = read_manifest(args.manifest)
    plan = make_splits(corpus, args.folds, seed)
    Path(args.out).write_text(json.dumps(plan.to_json(), indent=2) + "\n")
    print(f"wrote {len(plan.folds)}-fold plan to {args.out}")
    return EXIT_OK


def _run_report(args, protocol: Protocol) -> int:
    from .io_formats import write_report

    seed = args.seed if args.seed is not None else _default_seed()
    corpus = read_manifest(args.manifest)
    plan = None
    if args.splits:
        plan = SplitPlan.from_json(json.loads(Path(args.splits).read_text()))
    report = run_protocol(
        corpus,
        protocol,
        score_cfg=ScoreConfig(args.collar_ms, args.skip_overlap),
        decode_cfg=_decode_cfg(args),
        split_plan=plan,
        hyp_dir=args.hyp_dir,
        seed=seed,
    )
    json_path, txt_path = write_report(report, args.out)
    print(f"wrote {json_path} and {txt_path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; keep 0 for --help/--version
        return int(exc.code or 0)
    try:
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "decode":
            return _cmd_decode(args)
        if args.command == "tile":
            return _cmd_tile(args)
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "split":
            return _cmd_split(args)
        if args.command == "ablate":
            return _run_report(args, Protocol.ABLATION)
        if args.command == "report":
            return _run_report(args, Protocol(args.protocol))
    except (FormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
