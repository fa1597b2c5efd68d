"""Head training and posterior extraction.

Training windows are drawn with 50% overlap between adjacent windows;
inference tiles the session without overlap and keeps the partial tail.
The encoder is frozen throughout; only the head trains.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from .audio import read_wav
from .encoder import FilterbankEncoder, n_output_frames, resample_features
from .formats import STEP_MS, Session, read_rttm_labels, write_fpos
from .head import DiarizationHead


def default_seed() -> int:
    return int(os.environ.get("DYAD_SEED", "0"))


@dataclass(frozen=True)
class TrainConfig:
    window_size_s: float = 20.0
    lr: float = 5e-4
    weight_decay: float = 1e-4
    max_epochs: int = 15
    batch_size: int = 8
    seed: int = field(default_factory=default_seed)

    def __post_init__(self):
        if self.lr <= 0 or self.max_epochs < 1:
            raise ValueError("need positive lr and at least one epoch")


def train_windows(duration_s: float, window_s: float) -> list[float]:
    """Start times with 50% overlap, windows fully inside the session."""
    stride = window_s / 2
    starts = []
    k = 0
    while k * stride + window_s <= duration_s + 1e-9:
        starts.append(k * stride)
        k += 1
    return starts


def inference_windows(duration_s: float, window_s: float) -> list[tuple[float, float]]:
    """Non-overlapping tiling; the final window is the partial remainder."""
    out = []
    start = 0.0
    while start < duration_s - 1e-9:
        out.append((start, min(start + window_s, duration_s)))
        start += window_s
    return out


def _window_features(encoder, samples: np.ndarray, sr: int,
                     start_s: float, end_s: float) -> np.ndarray:
    """(n_layers, T, dim) feature stack for one audio window, aligned to
    the 20 ms grid."""
    i0, i1 = round(start_s * sr), round(end_s * sr)
    layers = encoder.hidden_layers(samples[i0:i1], sr)
    stack = np.stack(layers)
    n_expected = n_output_frames(i1 - i0, sr, STEP_MS)
    if encoder.step_ms != STEP_MS:
        stack = np.stack([
            resample_features(l, encoder.step_ms, STEP_MS, n_expected)
            for l in layers
        ])
    if stack.shape[1] < n_expected:
        pad = n_expected - stack.shape[1]
        stack = np.pad(stack, ((0, 0), (0, pad), (0, 0)))
    return stack[:, :n_expected, :]


def _load_session_arrays(session: Session, encoder, window_s: float):
    samples, sr = read_wav(session.audio_path)
    labels = read_rttm_labels(session.annotation_path, session.duration)
    feats, targs = [], []
    n_win_frames = round(window_s * 1000) // STEP_MS
    for start in train_windows(session.duration, window_s):
        stack = _window_features(encoder, samples, sr, start, start + window_s)
        k0 = round(start * 1000) // STEP_MS
        y = labels[k0:k0 + n_win_frames]
        if len(y) < n_win_frames or stack.shape[1] < n_win_frames:
            continue
        feats.append(stack[:, :n_win_frames, :])
        targs.append(y)
    return feats, targs


@dataclass
class TrainResult:
    head: DiarizationHead
    log: dict


def train_head(
    sessions: Sequence[Session],
    train_ids: Sequence[str],
    val_ids: Sequence[str],
    cfg: TrainConfig = TrainConfig(),
    encoder: Optional[FilterbankEncoder] = None,
    duration_limits: Optional[dict] = None,
) -> TrainResult:
    """Train the head on windows from train_ids, keeping the checkpoint
    with the best validation frame accuracy.

    duration_limits optionally truncates sessions to their first N
    seconds (data-efficiency ablations).
    """
    encoder = encoder or FilterbankEncoder()
    fingerprint_before = encoder.parameter_fingerprint()
    torch.manual_seed(cfg.seed)

    by_id = {s.session_id: s for s in sessions}

    def gather(ids):
        feats, targs = [], []
        for sid in ids:
            s = by_id[sid]
            if duration_limits and duration_limits.get(sid) is not None:
                s = Session(s.session_id, s.annotation_path,
                            min(s.duration, duration_limits[sid]),
                            s.audio_path, s.posterior_path, s.demographics)
            f, t = _load_session_arrays(s, encoder, cfg.window_size_s)
            feats += f
            targs += t
        return feats, targs

    train_feats, train_targs = gather(train_ids)
    val_feats, val_targs = gather(val_ids)
    if not train_feats:
        raise ValueError("empty training plan: no full windows in train set")

    head = DiarizationHead(encoder.n_layers, train_feats[0].shape[2])
    opt = torch.optim.Adam(head.parameters(), lr=cfg.lr,
                           weight_decay=cfg.weight_decay)
    loss_fn = torch.nn.CrossEntropyLoss()

    x_train = torch.from_numpy(np.stack(train_feats, axis=1)).float()  # (L,N,T,D)
    y_train = torch.from_numpy(np.stack(train_targs))                  # (N,T)
    x_val = (torch.from_numpy(np.stack(val_feats, axis=1)).float()
             if val_feats else None)
    y_val = torch.from_numpy(np.stack(val_targs)) if val_targs else None

    n = x_train.shape[1]
    epochs_log = []
    best_acc = -1.0
    best_state = None
    gen = torch.Generator().manual_seed(cfg.seed)
    for epoch in range(cfg.max_epochs):
        head.train()
        perm = torch.randperm(n, generator=gen)
        total_loss = 0.0
        for b0 in range(0, n, cfg.batch_size):
            idx = perm[b0:b0 + cfg.batch_size]
            logits = head(x_train[:, idx])
            loss = loss_fn(logits.reshape(-1, 4), y_train[idx].reshape(-1))
            opt.zero_grad()
            loss.backward()
            opt.step()
            total_loss += float(loss.detach()) * len(idx)
        train_loss = total_loss / n

        head.eval()
        if x_val is not None:
            with torch.no_grad():
                pred = head(x_val).argmax(dim=-1)
            val_acc = float((pred == y_val).float().mean())
        else:
            val_acc = float("nan")
        epochs_log.append({"epoch": epoch, "train_loss": train_loss,
                           "val_frame_accuracy": val_acc})
        if x_val is None or val_acc > best_acc:
            best_acc = val_acc if x_val is not None else -epoch
            best_state = {k: v.clone() for k, v in head.state_dict().items()}

    head.load_state_dict(best_state)
    head.eval()
    assert encoder.parameter_fingerprint() == fingerprint_before

    log = {
        "config": {
            "window_size_s": cfg.window_size_s, "lr": cfg.lr,
            "weight_decay": cfg.weight_decay, "max_epochs": cfg.max_epochs,
            "seed": cfg.seed,
        },
        "n_train_windows": len(train_feats),
        "n_val_windows": len(val_feats),
        "epochs": epochs_log,
        "best_val_frame_accuracy": best_acc if x_val is not None else None,
        "layer_weights": head.mix.normalized_weights().tolist(),
        "frame_alignment": "native 20 ms hop"
        if encoder.step_ms == STEP_MS
        else f"linear feature interpolation {encoder.step_ms} ms -> 20 ms",
    }
    return TrainResult(head, log)


def extract_posteriors(
    session: Session,
    head: DiarizationHead,
    out_path,
    encoder: Optional[FilterbankEncoder] = None,
    window_size_s: float = 20.0,
) -> np.ndarray:
    """Run inference over non-overlapping windows and write an FPOS file.

    The stitched output has exactly ceil(duration / 20 ms) frames of
    softmax-normalized class scores.
    """
    encoder = encoder or FilterbankEncoder()
    samples, sr = read_wav(session.audio_path)
    head.eval()
    parts = []
    for start, end in inference_windows(session.duration, window_size_s):
        stack = _window_features(encoder, samples, sr, start, end)
        with torch.no_grad():
            logits = head(torch.from_numpy(stack[:, None]).float())
        parts.append(torch.softmax(logits[0], dim=-1).numpy())
    scores = np.concatenate(parts, axis=0)
    n_total = int(math.ceil(round(session.duration * 1000) / STEP_MS))
    scores = scores[:n_total]
    if scores.shape[0] < n_total:
        raise RuntimeError(
            f"{session.session_id}: produced {scores.shape[0]} frames, "
            f"need {n_total}"
        )
    write_fpos(scores.astype(np.float32), out_path)
    return scores


def save_training_log(log: dict, path) -> None:
    Path(path).write_text(json.dumps(log, indent=2) + "\n")
