"""Timeline <-> frame-label conversion and the energy-based gap splitter.

Frame labels use a fixed class order: 0=child, 1=adult, 2=overlap,
3=silence. The default frame step is 20 ms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .timeline import (
    ADULT,
    CHILD,
    Segment,
    Timeline,
    merge_intervals,
    subtract_intervals,
    to_ms,
    to_s,
)

C, A, O, S = 0, 1, 2, 3
LABEL_NAMES = ("c", "a", "o", "s")
N_CLASSES = 4
DEFAULT_STEP_MS = 20


class OverlapPolicy(enum.Enum):
    """How predicted overlap frames turn back into speaker activity."""

    BOTH_SPEAKERS = "both"   # an overlap frame asserts child AND adult speech
    DROP = "drop"            # an overlap frame contributes no speech


@dataclass(frozen=True)
class FrameLabelSequence:
    """Per-frame class labels at a fixed step."""

    labels: np.ndarray  # int array of values in {0,1,2,3}
    step_ms: int = DEFAULT_STEP_MS

    def __post_init__(self):
        if self.step_ms <= 0:
            raise ValueError("step must be positive")
        arr = np.asarray(self.labels, dtype=np.int8)
        if arr.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if arr.size and (arr.min() < 0 or arr.max() >= N_CLASSES):
            raise ValueError("labels must be in {0,1,2,3}")
        object.__setattr__(self, "labels", arr)

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameLabelSequence):
            return NotImplemented
        return self.step_ms == other.step_ms and np.array_equal(
            self.labels, other.labels
        )


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM samples."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        arr = np.asarray(self.samples, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", arr)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def n_frames_for(duration_ms: int, step_ms: int) -> int:
    return -(-duration_ms // step_ms)  # ceil division


def timeline_to_frames(
    t: Timeline, step_ms: int = DEFAULT_STEP_MS
) -> FrameLabelSequence:
    """Rasterize a timeline: frame k takes the activity at its center time.

    Both roles active -> overlap; one role -> that role; none -> silence.
    Non-role (anonymous) speakers are not representable in the 4-class
    frame domain and are rejected.
    """
    extra = set(t.speakers) - {CHILD, ADULT}
    if extra:
        raise ValueError(f"cannot rasterize anonymous speakers: {sorted(extra)}")
    n = n_frames_for(t.duration_ms, step_ms)
    labels = np.full(n, S, dtype=np.int8)
    # Frame k center is at k*step + step/2; with integer ms this is
    # 2*k*step + step in half-ms units, compared against doubled bounds.
    for spk, code in ((CHILD, C), (ADULT, A)):
        active = np.zeros(n, dtype=bool)
        for s, e in t.intervals_ms(spk):
            # centers c_k = (2k+1)*step/2 in [s, e)  =>  k in [lo, hi)
            lo = -(-(2 * s - step_ms) // (2 * step_ms))
            hi = -(-(2 * e - step_ms) // (2 * step_ms))
            active[max(lo, 0):min(hi, n)] = True
        if code == C:
            child_active = active
        else:
            adult_active = active
    labels[child_active & ~adult_active] = C
    labels[adult_active & ~child_active] = A
    labels[child_active & adult_active] = O
    return FrameLabelSequence(labels, step_ms)


def _runs_to_intervals(active: np.ndarray, step_ms: int) -> list[tuple[int, int]]:
    if not active.any():
        return []
    padded = np.concatenate(([False], active, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    starts, ends = edges[::2], edges[1::2]
    return [(int(s) * step_ms, int(e) * step_ms) for s, e in zip(starts, ends)]


def frames_to_timeline(
    f: FrameLabelSequence,
    overlap_policy: OverlapPolicy = OverlapPolicy.BOTH_SPEAKERS,
) -> Timeline:
    """Reconstruct a timeline from frame labels.

    Segment boundaries fall on frame edges. Overlap frames emit both
    speakers (default) or nothing, per the policy.
    """
    labels = f.labels
    if overlap_policy is OverlapPolicy.BOTH_SPEAKERS:
        child_active = (labels == C) | (labels == O)
        adult_active = (labels == A) | (labels == O)
    else:
        child_active = labels == C
        adult_active = labels == A
    by_speaker = {
        CHILD: _runs_to_intervals(child_active, f.step_ms),
        ADULT: _runs_to_intervals(adult_active, f.step_ms),
    }
    return Timeline.from_intervals_ms(by_speaker, len(labels) * f.step_ms)


def split_segments_by_energy(
    audio: AudioBuffer,
    t: Timeline,
    min_gap_ms: int = 200,
    rel_threshold_db: float = -40.0,
    hop_ms: int = 10,
) -> Timeline:
    """Split annotation segments at low-energy gaps longer than min_gap.

    Within each segment, RMS is computed per hop; maximal runs of hops
    below (segment peak RMS + rel_threshold_db) whose span exceeds
    min_gap are removed. Resulting pieces shorter than one hop are
    dropped.
    """
    if to_ms(audio.duration) < t.duration_ms:
        raise ValueError(
            f"audio ({audio.duration:.3f}s) shorter than timeline extent "
            f"({t.session_duration:.3f}s)"
        )
    sr = audio.sample_rate
    hop_samples = max(1, round(sr * hop_ms / 1000))
    by_speaker: dict[str, list[tuple[int, int]]] = {}
    for spk in t.speakers:
        kept: list[tuple[int, int]] = []
        for seg_s, seg_e in t.intervals_ms(spk):
            i0 = round(seg_s * sr / 1000)
            i1 = round(seg_e * sr / 1000)
            chunk = audio.samples[i0:i1]
            n_hops = len(chunk) // hop_samples
            if n_hops < 2:
                kept.append((seg_s, seg_e))
                continue
            hops = chunk[: n_hops * hop_samples].reshape(n_hops, hop_samples)
            rms = np.sqrt(np.mean(hops**2, axis=1))
            peak = rms.max()
            if peak <= 0:
                kept.append((seg_s, seg_e))
                continue
            quiet = rms < peak * 10.0 ** (rel_threshold_db / 20.0)
            gaps = []
            for h0, h1 in _runs_to_intervals(quiet, hop_ms):
                if h1 - h0 > min_gap_ms:
                    gaps.append((seg_s + h0, seg_s + h1))
            pieces = subtract_intervals([(seg_s, seg_e)], merge_intervals(gaps))
            kept.extend(p for p in pieces if p[1] - p[0] >= hop_ms)
        by_speaker[spk] = kept
    return Timeline.from_intervals_ms(by_speaker, t.duration_ms)
