"""Interval and timeline algebra for two-party diarization.

Time is stored internally as integer milliseconds so all set operations
are exact; the public API speaks float seconds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

CHILD = "child"
ADULT = "adult"
ROLE_LABELS = frozenset({CHILD, ADULT})

# Frame-domain constructs; never valid as Timeline speakers.
_RESERVED = frozenset({"overlap", "silence"})


def to_ms(seconds: float) -> int:
    """Convert seconds to the internal integer-millisecond unit."""
    return round(seconds * 1000)


def to_s(ms: int) -> float:
    return ms / 1000.0


# ---------------------------------------------------------------------------
# Interval-set helpers. An interval set is a sorted list of disjoint
# (start_ms, end_ms) pairs with start < end.
# ---------------------------------------------------------------------------

def merge_intervals(pairs: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    """Sort and coalesce overlapping or touching intervals."""
    out: list[tuple[int, int]] = []
    for s, e in sorted(p for p in pairs if p[1] > p[0]):
        if out and s <= out[-1][1]:
            if e > out[-1][1]:
                out[-1] = (out[-1][0], e)
        else:
            out.append((s, e))
    return out


def intersect_intervals(
    a: Sequence[tuple[int, int]], b: Sequence[tuple[int, int]]
) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    i = j = 0
    while i < len(a) and j < len(b):
        s = max(a[i][0], b[j][0])
        e = min(a[i][1], b[j][1])
        if s < e:
            out.append((s, e))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def subtract_intervals(
    a: Sequence[tuple[int, int]], b: Sequence[tuple[int, int]]
) -> list[tuple[int, int]]:
    """Set difference a \\ b."""
    out: list[tuple[int, int]] = []
    b = list(b)
    j = 0
    for s, e in a:
        cur = s
        while j < len(b) and b[j][1] <= cur:
            j += 1
        k = j
        while k < len(b) and b[k][0] < e:
            bs, be = b[k]
            if bs > cur:
                out.append((cur, bs))
            cur = max(cur, be)
            if be >= e:
                break
            k += 1
        if cur < e:
            out.append((cur, e))
    return out


def total_duration(pairs: Iterable[tuple[int, int]]) -> int:
    return sum(e - s for s, e in pairs)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """A single speaker's speech interval, in seconds."""

    start: float
    end: float
    speaker: str

    def __post_init__(self):
        if self.start < 0:
            raise ValueError(f"segment start must be >= 0, got {self.start}")
        if to_ms(self.end) <= to_ms(self.start):
            raise ValueError(
                f"segment must have positive duration: [{self.start}, {self.end}]"
            )
        if self.speaker in _RESERVED:
            raise ValueError(
                f"{self.speaker!r} is a frame-domain label, not a timeline speaker"
            )

    @property
    def duration(self) -> float:
        return self.end - self.start


class Timeline:
    """Per-speaker speech intervals over one session.

    Same-speaker overlapping or touching segments are merged on
    construction; cross-speaker overlap is preserved (that is the
    overlap region). Immutable after construction.
    """

    __slots__ = ("_by_speaker", "_duration_ms")

    def __init__(
        self,
        segments: Iterable[Segment] = (),
        session_duration: Optional[float] = None,
    ):
        by_speaker: dict[str, list[tuple[int, int]]] = {}
        for seg in segments:
            by_speaker.setdefault(seg.speaker, []).append(
                (to_ms(seg.start), to_ms(seg.end))
            )
        merged = {spk: merge_intervals(ivs) for spk, ivs in by_speaker.items()}
        max_end = max((ivs[-1][1] for ivs in merged.values() if ivs), default=0)
        if session_duration is None:
            dur_ms = max_end
        else:
            dur_ms = to_ms(session_duration)
            if max_end > dur_ms:
                raise ValueError(
                    f"segment end {to_s(max_end)}s exceeds session duration "
                    f"{to_s(dur_ms)}s"
                )
        self._by_speaker = {spk: tuple(ivs) for spk, ivs in merged.items() if ivs}
        self._duration_ms = dur_ms

    # -- accessors ---------------------------------------------------------

    @property
    def session_duration(self) -> float:
        return to_s(self._duration_ms)

    @property
    def duration_ms(self) -> int:
        return self._duration_ms

    @property
    def speakers(self) -> list[str]:
        return sorted(self._by_speaker)

    def intervals_ms(self, speaker: str) -> tuple[tuple[int, int], ...]:
        return self._by_speaker.get(speaker, ())

    def segments(self) -> list[Segment]:
        """All segments, sorted by (start, speaker)."""
        out = [
            Segment(to_s(s), to_s(e), spk)
            for spk, ivs in self._by_speaker.items()
            for s, e in ivs
        ]
        out.sort(key=lambda g: (g.start, g.speaker))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Timeline):
            return NotImplemented
        return (
            self._duration_ms == other._duration_ms
            and self._by_speaker == other._by_speaker
        )

    def __hash__(self):
        return hash(
            (self._duration_ms, tuple(sorted(self._by_speaker.items())))
        )

    def __repr__(self):
        parts = ", ".join(
            f"{spk}:{list(ivs)}" for spk, ivs in sorted(self._by_speaker.items())
        )
        return f"Timeline({parts}; dur={self.session_duration}s)"

    def is_empty(self) -> bool:
        return not self._by_speaker

    # -- construction helpers ---------------------------------------------

    @classmethod
    def from_intervals_ms(
        cls, by_speaker: dict[str, Sequence[tuple[int, int]]], duration_ms: int
    ) -> "Timeline":
        tl = cls.__new__(cls)
        merged = {
            spk: tuple(merge_intervals(ivs))
            for spk, ivs in by_speaker.items()
            if ivs
        }
        merged = {spk: ivs for spk, ivs in merged.items() if ivs}
        max_end = max((ivs[-1][1] for ivs in merged.values()), default=0)
        if max_end > duration_ms:
            raise ValueError("segment end exceeds session duration")
        tl._by_speaker = merged
        tl._duration_ms = duration_ms
        return tl

    def with_duration(self, session_duration: float) -> "Timeline":
        return Timeline.from_intervals_ms(
            dict(self._by_speaker), to_ms(session_duration)
        )

    def relabel(self, mapping: dict[str, str]) -> "Timeline":
        """Rename speakers; speakers mapped to None are dropped."""
        by_speaker: dict[str, list[tuple[int, int]]] = {}
        for spk, ivs in self._by_speaker.items():
            new = mapping.get(spk, spk)
            if new is None:
                continue
            by_speaker.setdefault(new, []).extend(ivs)
        return Timeline.from_intervals_ms(by_speaker, self._duration_ms)

    def crop_ms(self, end_ms: int) -> "Timeline":
        """Truncate to [0, end_ms]."""
        window = [(0, end_ms)]
        by_speaker = {
            spk: intersect_intervals(ivs, window)
            for spk, ivs in self._by_speaker.items()
        }
        return Timeline.from_intervals_ms(by_speaker, end_ms)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def union(a: Timeline, b: Timeline) -> Timeline:
    """Per-speaker interval union of two timelines over the same session."""
    if a.duration_ms != b.duration_ms:
        raise ValueError(
            f"session duration mismatch: {a.session_duration} vs {b.session_duration}"
        )
    by_speaker: dict[str, list[tuple[int, int]]] = {}
    for tl in (a, b):
        for spk in tl.speakers:
            by_speaker.setdefault(spk, []).extend(tl.intervals_ms(spk))
    return Timeline.from_intervals_ms(by_speaker, a.duration_ms)


def overlap_regions_ms(t: Timeline) -> list[tuple[int, int]]:
    """Maximal intervals where at least two distinct speakers are active."""
    speakers = t.speakers
    out: list[tuple[int, int]] = []
    for i, s1 in enumerate(speakers):
        for s2 in speakers[i + 1:]:
            out.extend(
                intersect_intervals(t.intervals_ms(s1), t.intervals_ms(s2))
            )
    return merge_intervals(out)


def overlap_regions(t: Timeline) -> list[tuple[float, float]]:
    return [(to_s(s), to_s(e)) for s, e in overlap_regions_ms(t)]


def total_speech(
    t: Timeline, within: Optional[Sequence[tuple[float, float]]] = None
) -> float:
    """Summed per-speaker speech in seconds; overlap counts once per speaker."""
    if within is None:
        region = None
    else:
        region = merge_intervals([(to_ms(s), to_ms(e)) for s, e in within])
    total = 0
    for spk in t.speakers:
        ivs = t.intervals_ms(spk)
        if region is not None:
            ivs = intersect_intervals(ivs, region)
        total += total_duration(ivs)
    return to_s(total)
