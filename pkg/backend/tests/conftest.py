import numpy as np
import pytest

from dyadhead.audio import write_wav
from dyadhead.formats import Session, write_manifest

SR = 8000
CHILD_HZ = 2000.0
ADULT_HZ = 400.0


def tone(freq, n, sr=SR):
    return 0.4 * np.sin(2 * np.pi * freq * np.arange(n) / sr)


def make_toy_session(tmp_path, sid, duration_s=30.0, seed=0):
    """Alternating child/adult tones with silence: per 3 s cycle,
    1.0 s child, 1.5 s adult, 0.5 s silence. Boundaries on the 20 ms
    grid; tones in disjoint frequency bands."""
    rng = np.random.default_rng(seed)
    n = int(duration_s * SR)
    samples = 0.001 * rng.standard_normal(n)
    rttm_lines = []
    t = 0.0
    while t + 3.0 <= duration_s + 1e-9:
        c0, c1 = t, t + 1.0
        a0, a1 = t + 1.0, t + 2.5
        samples[int(c0 * SR):int(c1 * SR)] += tone(CHILD_HZ, int(1.0 * SR))
        samples[int(a0 * SR):int(a1 * SR)] += tone(ADULT_HZ, int(1.5 * SR))
        rttm_lines.append(
            f"SPEAKER {sid} 1 {c0:.3f} 1.000 <NA> <NA> CHI <NA> <NA>"
        )
        rttm_lines.append(
            f"SPEAKER {sid} 1 {a0:.3f} 1.500 <NA> <NA> ADU <NA> <NA>"
        )
        t += 3.0
    wav = tmp_path / f"{sid}.wav"
    rttm = tmp_path / f"{sid}.rttm"
    write_wav(samples, SR, wav)
    rttm.write_text("\n".join(rttm_lines) + "\n")
    return Session(
        session_id=sid,
        annotation_path=str(rttm),
        audio_path=str(wav),
        duration=duration_s,
    )


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("toy")
    sessions = [make_toy_session(d, f"toy{i}", seed=i) for i in range(6)]
    manifest = d / "manifest.jsonl"
    write_manifest(sessions, manifest)
    return {"dir": d, "sessions": sessions, "manifest": manifest}


TRAIN_IDS = ["toy0", "toy1", "toy2", "toy3"]
VAL_IDS = ["toy4"]
TEST_ID = "toy5"


@pytest.fixture(scope="session")
def pipeline(toy_corpus):
    """Train once on the toy corpus, extract held-out posteriors twice."""
    from dyadhead.train import TrainConfig, extract_posteriors, train_head

    d = toy_corpus["dir"]
    sessions = toy_corpus["sessions"]
    cfg = TrainConfig(window_size_s=10.0, max_epochs=12, seed=7)
    result = train_head(sessions, TRAIN_IDS, VAL_IDS, cfg)
    test_session = next(s for s in sessions if s.session_id == TEST_ID)
    fpos_a = d / f"{TEST_ID}.a.fpos"
    fpos_b = d / f"{TEST_ID}.b.fpos"
    scores = extract_posteriors(test_session, result.head, fpos_a,
                                window_size_s=10.0)
    extract_posteriors(test_session, result.head, fpos_b, window_size_s=10.0)
    return {
        "result": result,
        "session": test_session,
        "scores": scores,
        "fpos": fpos_a,
        "fpos_repeat": fpos_b,
    }
