import numpy as np
import pytest

from dyadscore.timeline import ADULT, CHILD, Timeline


def random_timeline(
    rng: np.random.Generator,
    duration_s: float = 60.0,
    max_segments: int = 8,
    speakers=(CHILD, ADULT),
    grid_ms: int = 1,
) -> Timeline:
    """Random per-speaker intervals on an integer-ms grid."""
    dur_ms = round(duration_s * 1000)
    by_speaker = {}
    for spk in speakers:
        n = int(rng.integers(0, max_segments + 1))
        ivs = []
        for _ in range(n):
            a = int(rng.integers(0, dur_ms - grid_ms)) // grid_ms * grid_ms
            length = int(rng.integers(grid_ms, max(grid_ms + 1, dur_ms // 6)))
            b = min(dur_ms, a + length // grid_ms * grid_ms)
            if b > a:
                ivs.append((a, b))
        by_speaker[spk] = ivs
    return Timeline.from_intervals_ms(by_speaker, dur_ms)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
