"""Turn per-frame class posteriors into a hypothesis timeline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import median_filter

from .frames import (
    DEFAULT_STEP_MS,
    N_CLASSES,
    FrameLabelSequence,
    OverlapPolicy,
    frames_to_timeline,
)
from .timeline import Timeline

ROW_SUM_TOL = 1e-4


@dataclass(frozen=True)
class PosteriorMatrix:
    """T x 4 per-frame class scores, class order (child, adult, overlap, silence)."""

    scores: np.ndarray
    step_ms: int = DEFAULT_STEP_MS
    is_logits: bool = False

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[1] != N_CLASSES:
            raise ValueError(f"scores must be T x {N_CLASSES}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("scores contain NaN or Inf")
        if not self.is_logits and len(arr):
            sums = arr.sum(axis=1)
            if np.abs(sums - 1.0).max() > ROW_SUM_TOL:
                raise ValueError("posterior rows must sum to 1")
        if self.step_ms <= 0:
            raise ValueError("step must be positive")
        object.__setattr__(self, "scores", arr)

    @property
    def n_frames(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class DecodeConfig:
    smoothing_frames: int = 1       # odd median-filter width; 1 = off
    min_segment_ms: int = 0         # runs shorter than this are relabeled
    overlap_policy: OverlapPolicy = OverlapPolicy.BOTH_SPEAKERS

    def __post_init__(self):
        if self.smoothing_frames < 1 or self.smoothing_frames % 2 == 0:
            raise ValueError("smoothing_frames must be an odd integer >= 1")
        if self.min_segment_ms < 0:
            raise ValueError("min_segment_ms must be non-negative")


def argmax_labels(p: PosteriorMatrix, smoothing_frames: int = 1) -> np.ndarray:
    """Per-frame argmax with ties broken toward the lowest class index."""
    scores = p.scores
    if smoothing_frames > 1 and len(scores):
        scores = median_filter(
            scores, size=(smoothing_frames, 1), mode="nearest"
        )
    # np.argmax already returns the first (lowest-index) maximum.
    return scores.argmax(axis=1).astype(np.int8)


def _relabel_short_runs(labels: np.ndarray, min_frames: int) -> np.ndarray:
    """Merge runs shorter than min_frames into the longer neighboring run."""
    labels = labels.copy()
    while True:
        runs = []  # (start, end, label)
        i = 0
        n = len(labels)
        while i < n:
            j = i
            while j < n and labels[j] == labels[i]:
                j += 1
            runs.append((i, j, labels[i]))
            i = j
        if len(runs) <= 1:
            return labels
        changed = False
        for k, (s, e, _lab) in enumerate(runs):
            if e - s >= min_frames:
                continue
            if k == 0:
                target = runs[1][2]
            elif k == len(runs) - 1:
                target = runs[-2][2]
            else:
                left, right = runs[k - 1], runs[k + 1]
                target = (
                    left[2]
                    if (left[1] - left[0]) >= (right[1] - right[0])
                    else right[2]
                )
            labels[s:e] = target
            changed = True
            break  # re-scan: merging may have joined adjacent runs
        if not changed:
            return labels


def decode(p: PosteriorMatrix, cfg: DecodeConfig = DecodeConfig()) -> Timeline:
    """Argmax decode a posterior matrix into a hypothesis timeline."""
    labels = argmax_labels(p, cfg.smoothing_frames)
    if cfg.min_segment_ms > 0:
        min_frames = -(-cfg.min_segment_ms // p.step_ms)
        labels = _relabel_short_runs(labels, min_frames)
    return frames_to_timeline(
        FrameLabelSequence(labels, p.step_ms), cfg.overlap_policy
    )


def frame_accuracy(p: PosteriorMatrix, ref: FrameLabelSequence) -> float:
    """Fraction of frames whose argmax matches the reference label."""
    if p.n_frames != len(ref) or p.step_ms != ref.step_ms:
        raise ValueError(
            f"shape mismatch: {p.n_frames} frames @{p.step_ms}ms vs "
            f"{len(ref)} @{ref.step_ms}ms"
        )
    if p.n_frames == 0:
        raise ValueError("empty sequence")
    return float(np.mean(argmax_labels(p) == ref.labels))
