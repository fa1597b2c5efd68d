"""Frame-level child-adult diarization tooling.

Timeline algebra, frame codecs, window planning, posterior decoding,
DER scoring with collars and optimal role mapping, a synthetic-session
oracle, and an experiment harness.
"""

__version__ = "0.1.0"

from .decode import DecodeConfig, PosteriorMatrix, decode, frame_accuracy
from .frames import (
    AudioBuffer,
    FrameLabelSequence,
    OverlapPolicy,
    frames_to_timeline,
    split_segments_by_energy,
    timeline_to_frames,
)
from .metrics import (
    ScoreBreakdown,
    ScoreConfig,
    aggregate,
    map_speakers,
    relative_reduction,
    score,
    scoring_regions,
)
from .timeline import (
    ADULT,
    CHILD,
    Segment,
    Timeline,
    overlap_regions,
    total_speech,
    union,
)
from .windows import WindowMode, WindowPlan, WindowSpec, both_seen_fraction, plan_windows

__all__ = [
    "ADULT",
    "AudioBuffer",
    "CHILD",
    "DecodeConfig",
    "FrameLabelSequence",
    "OverlapPolicy",
    "PosteriorMatrix",
    "ScoreBreakdown",
    "ScoreConfig",
    "Segment",
    "Timeline",
    "WindowMode",
    "WindowPlan",
    "WindowSpec",
    "aggregate",
    "both_seen_fraction",
    "decode",
    "frame_accuracy",
    "frames_to_timeline",
    "map_speakers",
    "overlap_regions",
    "plan_windows",
    "relative_reduction",
    "score",
    "scoring_regions",
    "split_segments_by_energy",
    "timeline_to_frames",
    "total_speech",
    "union",
]
