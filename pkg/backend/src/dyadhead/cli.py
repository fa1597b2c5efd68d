"""Backend CLI: train a head on a manifest and export posterior files."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import torch

from .encoder import FilterbankEncoder
from .formats import read_manifest
from .head import DiarizationHead
from .train import TrainConfig, default_seed, extract_posteriors, save_training_log, train_head


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dyadhead",
        description="Frame-posterior backend for the diarization scorer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the head on a manifested corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--train-ids", required=True,
                   help="comma-separated session ids")
    p.add_argument("--val-ids", default="", help="comma-separated session ids")
    p.add_argument("--out", required=True, help="checkpoint path (.pt)")
    p.add_argument("--log", default=None, help="training log path (.json)")
    p.add_argument("--window", type=float, default=20.0)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("extract", help="write FPOS posteriors for sessions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--window", type=float, default=20.0)

    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            sessions = read_manifest(args.manifest)
            cfg = TrainConfig(
                window_size_s=args.window,
                max_epochs=args.epochs,
                seed=args.seed if args.seed is not None else default_seed(),
            )
            result = train_head(
                sessions,
                args.train_ids.split(","),
                [v for v in args.val_ids.split(",") if v],
                cfg,
            )
            encoder = FilterbankEncoder()
            torch.save(
                {"state_dict": result.head.state_dict(),
                 "n_layers": encoder.n_layers,
                 "feat_dim": encoder.n_bands},
                args.out,
            )
            save_training_log(result.log, args.log or args.out + ".log.json")
            print(f"saved checkpoint to {args.out}")
            return 0
        if args.command == "extract":
            sessions = read_manifest(args.manifest)
            ckpt = torch.load(args.checkpoint, weights_only=True)
            head = DiarizationHead(ckpt["n_layers"], ckpt["feat_dim"])
            head.load_state_dict(ckpt["state_dict"])
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            for s in sessions:
                extract_posteriors(s, head, out_dir / f"{s.session_id}.fpos",
                                   window_size_s=args.window)
            print(f"wrote {len(sessions)} posterior files to {out_dir}")
            return 0
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
