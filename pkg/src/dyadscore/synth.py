"""Synthetic dyadic sessions with ground truth, and controlled corruption.

Generated segment boundaries snap to the frame grid so that frame
counts and interval measures agree exactly, which makes the binomial
acceptance bands tight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decode import PosteriorMatrix
from .frames import A, C, DEFAULT_STEP_MS, N_CLASSES, O, S, timeline_to_frames
from .timeline import ADULT, CHILD, Timeline, to_ms


@dataclass(frozen=True)
class SynthConfig:
    session_duration: float = 900.0
    child_speech_target: tuple[float, float] = (153.0, 100.0)   # (mean, std) s
    adult_speech_target: tuple[float, float] = (286.0, 96.0)
    overlap_fraction: float = 0.0    # overlapped time / total speech time
    turn_length: tuple[float, float] = (1.0, 6.0)
    seed: int = 0
    step_ms: int = DEFAULT_STEP_MS

    def __post_init__(self):
        if self.session_duration <= 0:
            raise ValueError("session_duration must be positive")
        for mean, std in (self.child_speech_target, self.adult_speech_target):
            if mean < 0 or std < 0:
                raise ValueError("speech targets must be non-negative")
        if not 0 <= self.overlap_fraction < 0.5:
            raise ValueError("overlap_fraction must be in [0, 0.5)")
        if self.turn_length[0] <= 0 or self.turn_length[1] < self.turn_length[0]:
            raise ValueError("invalid turn_length range")
        expected = self.child_speech_target[0] + self.adult_speech_target[0]
        if expected > 2 * self.session_duration:
            raise ValueError("infeasible config: expected speech exceeds capacity")


@dataclass(frozen=True)
class CorruptionConfig:
    flip_child_adult_p: float = 0.0
    drop_to_silence_p: float = 0.0
    spurious_speech_p: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for p in (self.flip_child_adult_p, self.drop_to_silence_p,
                  self.spurious_speech_p):
            if not 0 <= p <= 1:
                raise ValueError("probabilities must be in [0, 1]")


def _snap(seconds: float, step_ms: int) -> int:
    """Round to the nearest frame boundary, in ms."""
    return max(step_ms, round(to_ms(seconds) / step_ms) * step_ms)


def _sample_total(rng, target: tuple[float, float], step_ms: int) -> int:
    """Draw a per-session speech total in ms, snapped to the frame grid
    and clipped to +-10% of the mean so the generator contract holds for
    any std."""
    mean, std = target
    if mean == 0:
        return 0
    lo = -(-to_ms(0.9 * mean) // step_ms) * step_ms           # ceil to grid
    hi = max(lo, to_ms(1.1 * mean) // step_ms * step_ms)      # floor to grid
    drawn = _snap(float(rng.normal(mean, std)), step_ms)
    return int(np.clip(drawn, lo, hi))


def generate_session(cfg: SynthConfig) -> Timeline:
    """Alternating-turn dyadic timeline hitting the speech targets.

    Deterministic under cfg.seed. Overlap is created by shifting turns
    earlier over the previous turn's tail, so per-speaker totals are
    unchanged.
    """
    rng = np.random.default_rng(cfg.seed)
    step = cfg.step_ms
    dur_ms = to_ms(cfg.session_duration) // step * step

    totals = {
        CHILD: _sample_total(rng, cfg.child_speech_target, step),
        ADULT: _sample_total(rng, cfg.adult_speech_target, step),
    }

    # Cut each speaker's total into alternating turns.
    turns: list[tuple[str, int]] = []  # (speaker, length_ms)
    remaining = dict(totals)
    speaker = CHILD if rng.random() < 0.5 else ADULT
    other = {CHILD: ADULT, ADULT: CHILD}
    while remaining[CHILD] > 0 or remaining[ADULT] > 0:
        if remaining[speaker] <= 0:
            speaker = other[speaker]
            continue
        length = _snap(rng.uniform(*cfg.turn_length), step)
        length = min(length, remaining[speaker])
        turns.append((speaker, length))
        remaining[speaker] -= length
        speaker = other[speaker]

    speech_ms = totals[CHILD] + totals[ADULT]
    silence_ms = dur_ms - speech_ms
    if silence_ms < 0:
        raise ValueError("infeasible config: speech does not fit the session")
    budget = round(cfg.overlap_fraction * speech_ms / step) * step

    # Distribute silence into inter-turn gaps (leading gap plus one per turn).
    n_gaps = len(turns) + 1
    weights = rng.random(n_gaps)
    gaps = np.floor(weights / weights.sum() * (silence_ms / step)).astype(int) * step
    gaps[-1] += silence_ms - int(gaps.sum())

    by_speaker: dict[str, list[tuple[int, int]]] = {CHILD: [], ADULT: []}
    cursor = int(gaps[0])
    prev_spk = None
    prev_iv = None
    last_end = {CHILD: 0, ADULT: 0}
    for i, (spk, length) in enumerate(turns):
        start = cursor
        # Greedily pull this turn backward over the previous turn's tail
        # until the overlap budget is spent; same-speaker totals are
        # unaffected because turn lengths never change.
        if budget > 0 and prev_iv is not None and spk != prev_spk:
            prev_s, prev_e = prev_iv
            want = min(budget, length - step, prev_e - prev_s - step)
            if want >= step:
                new_start = max(prev_e - want, prev_s + step, last_end[spk])
                if new_start < start:
                    start = new_start
                    budget -= max(0, prev_e - start)
        end = start + length
        by_speaker[spk].append((start, end))
        last_end[spk] = end
        prev_spk, prev_iv = spk, (start, end)
        cursor = max(cursor, end) + int(gaps[i + 1])
    return Timeline.from_intervals_ms(by_speaker, dur_ms)


def corrupt_to_posteriors(
    t: Timeline, cfg: CorruptionConfig, step_ms: int = DEFAULT_STEP_MS
) -> PosteriorMatrix:
    """Rasterize a timeline and emit one-hot posteriors with i.i.d.
    per-frame corruption.

    Single-speaker speech frames are dropped to silence with
    drop_to_silence_p, else swapped child<->adult with
    flip_child_adult_p. Silence frames become child or adult
    (equiprobable) with spurious_speech_p. Overlap frames are left
    untouched (a role swap maps overlap to itself).
    """
    rng = np.random.default_rng(cfg.seed)
    labels = timeline_to_frames(t, step_ms).labels.copy()
    n = len(labels)
    u_drop = rng.random(n)
    u_flip = rng.random(n)
    u_spur = rng.random(n)
    side = rng.random(n) < 0.5

    speech = (labels == C) | (labels == A)
    dropped = speech & (u_drop < cfg.drop_to_silence_p)
    flipped = speech & ~dropped & (u_flip < cfg.flip_child_adult_p)
    spurious = (labels == S) & (u_spur < cfg.spurious_speech_p)

    out = labels.copy()
    out[dropped] = S
    out[flipped & (labels == C)] = A
    out[flipped & (labels == A)] = C
    out[spurious & side] = C
    out[spurious & ~side] = A

    scores = np.zeros((n, N_CLASSES), dtype=np.float32)
    scores[np.arange(n), out] = 1.0
    return PosteriorMatrix(scores, step_ms)
