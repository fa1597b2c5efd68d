"""Brute-force scorer on a 1 ms grid.

Rasterizes reference, hypothesis, and scoring regions to per-millisecond
boolean tracks and counts cell-wise matches. Slow but unarguable; this
is the ground truth the interval scorer is validated against.
"""

from __future__ import annotations

import numpy as np

from .metrics import ScoreBreakdown, ScoreConfig, scoring_regions_ms
from .timeline import Timeline


def _rasterize(intervals, n: int) -> np.ndarray:
    track = np.zeros(n, dtype=bool)
    for s, e in intervals:
        track[s:e] = True
    return track


def score_on_grid(
    ref: Timeline, hyp: Timeline, cfg: ScoreConfig = ScoreConfig()
) -> ScoreBreakdown:
    """Millisecond-grid equivalent of metrics.score."""
    if ref.duration_ms != hyp.duration_ms:
        raise ValueError("reference and hypothesis session durations differ")
    n = ref.duration_ms
    in_region = _rasterize(scoring_regions_ms(ref, cfg), n)
    speakers = sorted(set(ref.speakers) | set(hyp.speakers))
    n_ref = np.zeros(n, dtype=np.int32)
    n_hyp = np.zeros(n, dtype=np.int32)
    n_correct = np.zeros(n, dtype=np.int32)
    for spk in speakers:
        r = _rasterize(ref.intervals_ms(spk), n)
        h = _rasterize(hyp.intervals_ms(spk), n)
        n_ref += r
        n_hyp += h
        n_correct += r & h
    n_ref[~in_region] = 0
    n_hyp[~in_region] = 0
    n_correct[~in_region] = 0
    miss = np.maximum(n_ref - n_hyp, 0).sum()
    fa = np.maximum(n_hyp - n_ref, 0).sum()
    conf = (np.minimum(n_ref, n_hyp) - n_correct).sum()
    return ScoreBreakdown(
        false_alarm_s=fa / 1000.0,
        missed_s=int(miss) / 1000.0,
        confusion_s=int(conf) / 1000.0,
        scored_reference_s=int(n_ref.sum()) / 1000.0,
    )
