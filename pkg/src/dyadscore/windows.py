"""Session tiling for training and inference, plus coverage statistics."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .decode import PosteriorMatrix
from .frames import n_frames_for
from .timeline import ADULT, CHILD, Timeline, intersect_intervals, to_ms, to_s


class WindowMode(enum.Enum):
    TRAIN = "train"
    INFERENCE = "inference"


@dataclass(frozen=True)
class WindowSpec:
    window_size: float                 # seconds
    mode: WindowMode = WindowMode.INFERENCE
    train_overlap_fraction: float = 0.5

    def __post_init__(self):
        if self.window_size <= 0:
            raise ValueError("window_size must be positive")
        if not 0 <= self.train_overlap_fraction < 1:
            raise ValueError("train_overlap_fraction must be in [0, 1)")


@dataclass(frozen=True)
class WindowPlan:
    windows: tuple[tuple[float, float], ...]  # (start, end) seconds, sorted
    mode: WindowMode

    def __len__(self) -> int:
        return len(self.windows)


def plan_windows(duration: float, spec: WindowSpec) -> WindowPlan:
    """Tile [0, duration] into windows.

    Train mode strides by window_size * (1 - overlap) and keeps only
    windows fully inside the session (a too-short session yields an
    empty plan). Inference mode tiles without overlap and keeps the
    partial remainder as a final shorter window.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    dur_ms = to_ms(duration)
    w_ms = to_ms(spec.window_size)
    windows: list[tuple[float, float]] = []
    if spec.mode is WindowMode.TRAIN:
        stride_ms = round(w_ms * (1 - spec.train_overlap_fraction))
        if stride_ms <= 0:
            raise ValueError("train stride rounds to zero")
        start = 0
        while start + w_ms <= dur_ms:
            windows.append((to_s(start), to_s(start + w_ms)))
            start += stride_ms
    else:
        start = 0
        while start < dur_ms:
            end = min(start + w_ms, dur_ms)
            windows.append((to_s(start), to_s(end)))
            start += w_ms
    return WindowPlan(tuple(windows), spec.mode)


def stitch_predictions(
    plan: WindowPlan, per_window: list[PosteriorMatrix]
) -> PosteriorMatrix:
    """Concatenate per-window posteriors into one session-level matrix."""
    if plan.mode is not WindowMode.INFERENCE:
        raise ValueError("stitching requires an inference-mode plan")
    if len(per_window) != len(plan.windows):
        raise ValueError(
            f"got {len(per_window)} matrices for {len(plan.windows)} windows"
        )
    if not per_window:
        raise ValueError("empty plan")
    step = per_window[0].step_ms
    parts = []
    for (start, end), mat in zip(plan.windows, per_window):
        expected = n_frames_for(to_ms(end), step) - n_frames_for(to_ms(start), step)
        if mat.n_frames != expected:
            raise ValueError(
                f"window [{start}, {end}] expects {expected} frames, "
                f"got {mat.n_frames}"
            )
        if mat.step_ms != step or mat.is_logits != per_window[0].is_logits:
            raise ValueError("inconsistent window matrices")
        parts.append(mat.scores)
    return PosteriorMatrix(
        np.concatenate(parts, axis=0), step, per_window[0].is_logits
    )


def both_seen_fraction(t: Timeline, spec: WindowSpec) -> float:
    """Fraction of train windows containing speech from both roles.

    Activity touching a window only at its endpoint (zero measure) does
    not count.
    """
    plan = plan_windows(t.session_duration, spec)
    if not plan.windows:
        raise ValueError("empty window plan")
    n_both = 0
    child = t.intervals_ms(CHILD)
    adult = t.intervals_ms(ADULT)
    for start, end in plan.windows:
        win = [(to_ms(start), to_ms(end))]
        if intersect_intervals(child, win) and intersect_intervals(adult, win):
            n_both += 1
    return n_both / len(plan.windows)
