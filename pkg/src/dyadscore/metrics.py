"""Diarization scoring: collars, overlap skipping, FA/Miss/SC/DER,
optimal speaker-role mapping, and corpus aggregation.

All interval arithmetic is exact in integer milliseconds; rates are
derived from absolute error seconds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .timeline import (
    ADULT,
    CHILD,
    ROLE_LABELS,
    Timeline,
    intersect_intervals,
    merge_intervals,
    overlap_regions_ms,
    subtract_intervals,
    to_ms,
    to_s,
    total_duration,
)


@dataclass(frozen=True)
class ScoreConfig:
    collar_ms: int = 100        # applied on each side of every reference boundary
    skip_overlap: bool = False

    def __post_init__(self):
        if self.collar_ms < 0:
            raise ValueError("collar must be non-negative")


@dataclass(frozen=True)
class ScoreBreakdown:
    """Absolute error seconds plus the scored-reference denominator."""

    false_alarm_s: float
    missed_s: float
    confusion_s: float
    scored_reference_s: float

    def __post_init__(self):
        for name in ("false_alarm_s", "missed_s", "confusion_s", "scored_reference_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def _rate(self, seconds: float) -> float:
        if self.scored_reference_s == 0:
            return 0.0
        return seconds / self.scored_reference_s

    @property
    def fa(self) -> float:
        return self._rate(self.false_alarm_s)

    @property
    def miss(self) -> float:
        return self._rate(self.missed_s)

    @property
    def sc(self) -> float:
        return self._rate(self.confusion_s)

    @property
    def der(self) -> float:
        return self._rate(self.false_alarm_s + self.missed_s + self.confusion_s)

    @property
    def detection(self) -> float:
        """F+M: false alarm rate plus missed detection rate."""
        return self._rate(self.false_alarm_s + self.missed_s)

    def as_percentages(self) -> dict[str, float]:
        """Rates as percentages rounded to one decimal, as reported."""
        return {
            "fa": round(100 * self.fa, 1),
            "miss": round(100 * self.miss, 1),
            "detection": round(100 * self.detection, 1),
            "sc": round(100 * self.sc, 1),
            "der": round(100 * self.der, 1),
        }


def scoring_regions_ms(ref: Timeline, cfg: ScoreConfig) -> list[tuple[int, int]]:
    """Session minus collars around reference boundaries, minus reference
    overlap regions when skip_overlap is set."""
    regions = [(0, ref.duration_ms)]
    if cfg.collar_ms > 0:
        collars = []
        for spk in ref.speakers:
            for s, e in ref.intervals_ms(spk):
                collars.append((max(0, s - cfg.collar_ms), s + cfg.collar_ms))
                collars.append((max(0, e - cfg.collar_ms), e + cfg.collar_ms))
        regions = subtract_intervals(regions, merge_intervals(collars))
    if cfg.skip_overlap:
        regions = subtract_intervals(regions, overlap_regions_ms(ref))
    return regions


def scoring_regions(ref: Timeline, cfg: ScoreConfig) -> list[tuple[float, float]]:
    return [(to_s(s), to_s(e)) for s, e in scoring_regions_ms(ref, cfg)]


def score(ref: Timeline, hyp: Timeline, cfg: ScoreConfig = ScoreConfig()) -> ScoreBreakdown:
    """Score a role-labeled hypothesis against the reference.

    Standard multi-speaker DER accounting over the scoring regions:
    per elementary interval, miss is unmatched reference speaker time,
    false alarm is unmatched hypothesis time, and confusion is matched
    time attributed to the wrong speaker.
    """
    if ref.duration_ms != hyp.duration_ms:
        raise ValueError("reference and hypothesis session durations differ")
    anon = set(hyp.speakers) - ROLE_LABELS
    if anon:
        raise ValueError(
            f"hypothesis has unlabeled speakers {sorted(anon)}; "
            "run map_speakers first"
        )
    regions = scoring_regions_ms(ref, cfg)

    # Sweep elementary intervals between consecutive boundary points.
    boundaries = {b for s, e in regions for b in (s, e)}
    speakers = sorted(set(ref.speakers) | set(hyp.speakers))
    tracks = {}
    for spk in speakers:
        for which, tl in (("ref", ref), ("hyp", hyp)):
            ivs = intersect_intervals(tl.intervals_ms(spk), regions)
            tracks[(which, spk)] = ivs
            boundaries.update(b for iv in ivs for b in iv)
    points = sorted(boundaries)

    miss_ms = fa_ms = conf_ms = scored_ms = 0
    region_iter = iter(regions)
    cur_region = next(region_iter, None)
    idx = {key: 0 for key in tracks}
    for p0, p1 in zip(points, points[1:]):
        # skip spans outside scoring regions
        while cur_region is not None and cur_region[1] <= p0:
            cur_region = next(region_iter, None)
        if cur_region is None or p1 <= cur_region[0] or p0 < cur_region[0]:
            continue
        dur = p1 - p0
        n_ref = n_hyp = n_correct = 0
        for spk in speakers:
            r_active = _active(tracks[("ref", spk)], idx, ("ref", spk), p0)
            h_active = _active(tracks[("hyp", spk)], idx, ("hyp", spk), p0)
            n_ref += r_active
            n_hyp += h_active
            n_correct += r_active and h_active
        miss_ms += max(n_ref - n_hyp, 0) * dur
        fa_ms += max(n_hyp - n_ref, 0) * dur
        conf_ms += (min(n_ref, n_hyp) - n_correct) * dur
        scored_ms += n_ref * dur
    return ScoreBreakdown(
        false_alarm_s=to_s(fa_ms),
        missed_s=to_s(miss_ms),
        confusion_s=to_s(conf_ms),
        scored_reference_s=to_s(scored_ms),
    )


def _active(ivs: Sequence[tuple[int, int]], idx: dict, key, t: int) -> bool:
    i = idx[key]
    while i < len(ivs) and ivs[i][1] <= t:
        i += 1
    idx[key] = i
    return i < len(ivs) and ivs[i][0] <= t


def speaker_overlap_matrix(
    ref: Timeline, hyp: Timeline, roles: Sequence[str] = (CHILD, ADULT)
) -> tuple[list[str], np.ndarray]:
    """Matched-speech seconds between each hypothesis speaker and each role."""
    hyp_speakers = hyp.speakers
    mat = np.zeros((len(hyp_speakers), len(roles)))
    for i, spk in enumerate(hyp_speakers):
        for j, role in enumerate(roles):
            mat[i, j] = to_s(
                total_duration(
                    intersect_intervals(
                        hyp.intervals_ms(spk), ref.intervals_ms(role)
                    )
                )
            )
    return hyp_speakers, mat


def map_speakers(ref: Timeline, hyp_anon: Timeline) -> Timeline:
    """Assign anonymous hypothesis speakers to roles by maximum overlap.

    One-to-one assignment (Hungarian) of hypothesis speakers to
    {child, adult}; speakers left unassigned are dropped from the
    returned timeline. Speakers already carrying a role label keep it.
    """
    roles = [CHILD, ADULT]
    anon = [s for s in hyp_anon.speakers if s not in ROLE_LABELS]
    if not anon:
        return hyp_anon
    taken = [r for r in roles if r in hyp_anon.speakers]
    free_roles = [r for r in roles if r not in taken]
    _, full = speaker_overlap_matrix(ref, hyp_anon, free_roles)
    rows = [hyp_anon.speakers.index(s) for s in anon]
    cost = -full[rows, :]
    ri, ci = linear_sum_assignment(cost)
    mapping: dict[str, str | None] = {s: None for s in anon}
    for r, c in zip(ri, ci):
        mapping[anon[r]] = free_roles[c]
    return hyp_anon.relabel(mapping)


def aggregate(breakdowns: Iterable[ScoreBreakdown]) -> ScoreBreakdown:
    """Micro-average: sum absolute seconds, then derive rates."""
    items = list(breakdowns)
    if not items:
        raise ValueError("nothing to aggregate")
    return ScoreBreakdown(
        false_alarm_s=sum(b.false_alarm_s for b in items),
        missed_s=sum(b.missed_s for b in items),
        confusion_s=sum(b.confusion_s for b in items),
        scored_reference_s=sum(b.scored_reference_s for b in items),
    )


def relative_reduction(baseline: float, new: float) -> float:
    """Percent reduction of `new` relative to `baseline`, one decimal."""
    if baseline <= 0:
        raise ValueError("baseline rate must be positive")
    return round(100.0 * (baseline - new) / baseline, 1)


def best_mapping_brute_force(ref: Timeline, hyp_anon: Timeline) -> tuple[dict, float]:
    """Exhaustive search over injective speaker-to-role assignments.

    Independent check for map_speakers; feasible for a handful of
    speakers only.
    """
    roles = [CHILD, ADULT]
    anon = [s for s in hyp_anon.speakers if s not in ROLE_LABELS]
    _, mat = speaker_overlap_matrix(ref, hyp_anon, roles)
    rows = [hyp_anon.speakers.index(s) for s in anon]
    best_total = -1.0
    best: dict[str, str | None] = {}
    options = roles + [None] * len(anon)
    for perm in itertools.permutations(options, len(anon)):
        assigned = [r for r in perm if r is not None]
        if len(assigned) != len(set(assigned)):
            continue
        total = sum(
            mat[rows[i], roles.index(role)]
            for i, role in enumerate(perm)
            if role is not None
        )
        if total > best_total:
            best_total = total
            best = dict(zip(anon, perm))
    return best, best_total
