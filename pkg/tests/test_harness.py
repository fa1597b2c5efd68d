import math

import numpy as np
import pytest
from scipy import stats as scipy_stats

from dyadscore.harness import (
    Fold,
    Protocol,
    SplitPlan,
    SubsampleMode,
    group_compare,
    make_splits,
    run_protocol,
    subsample,
)
from dyadscore.io_formats import (
    SessionManifest,
    write_manifest,
    write_posteriors,
    write_rttm,
)
from dyadscore.metrics import ScoreConfig
from dyadscore.synth import (
    CorruptionConfig,
    SynthConfig,
    corrupt_to_posteriors,
    generate_session,
)


def manifests(n):
    return [
        SessionManifest(f"s{i:03d}", f"/tmp/s{i:03d}.rttm", 900.0)
        for i in range(n)
    ]


class TestMakeSplits:
    def test_ten_sessions_five_folds(self):
        plan = make_splits(manifests(10), 5, seed=0)
        tests = [set(f.test_ids) for f in plan.folds]
        assert all(len(t) == 2 for t in tests)
        assert set.union(*tests) == {f"s{i:03d}" for i in range(10)}
        for i, a in enumerate(tests):
            for b in tests[i + 1:]:
                assert not a & b

    def test_deterministic(self):
        a = make_splits(manifests(20), 5, seed=7)
        b = make_splits(manifests(20), 5, seed=7)
        assert a == b
        c = make_splits(manifests(20), 5, seed=8)
        assert a != c

    def test_73_sessions_fold_sizes(self):
        plan = make_splits(manifests(73), 5, seed=0)
        sizes = sorted((len(f.test_ids) for f in plan.folds), reverse=True)
        assert sizes == [15, 15, 15, 14, 14]

    def test_val_is_quarter_of_non_test(self):
        plan = make_splits(manifests(73), 5, seed=0)
        for fold in plan.folds:
            n_rest = 73 - len(fold.test_ids)
            assert len(fold.val_ids) == n_rest // 4
            assert not set(fold.val_ids) & set(fold.test_ids)
            assert not set(fold.train_ids) & set(fold.val_ids)
            assert not set(fold.train_ids) & set(fold.test_ids)
            assert (
                len(fold.train_ids) + len(fold.val_ids) + len(fold.test_ids) == 73
            )

    def test_small_corpus_rejected(self):
        with pytest.raises(ValueError):
            make_splits(manifests(3), 5)

    def test_json_roundtrip(self):
        plan = make_splits(manifests(12), 4, seed=1)
        assert SplitPlan.from_json(plan.to_json()) == plan


class TestSubsample:
    def test_full_fraction_identity(self):
        ids = [f"s{i}" for i in range(10)]
        spec = subsample(ids, SubsampleMode.BY_SESSION, 1.0, seed=0)
        assert set(spec.session_ids) == set(ids)

    def test_nesting_chain(self):
        ids = [f"s{i}" for i in range(10)]
        chain = [
            set(subsample(ids, SubsampleMode.BY_SESSION, f, seed=3).session_ids)
            for f in (0.1, 0.2, 0.5, 1.0)
        ]
        assert chain[0] <= chain[1] <= chain[2] <= chain[3]
        assert [len(c) for c in chain] == [1, 2, 5, 10]

    def test_by_duration_truncates(self):
        spec = subsample(
            ["a"], SubsampleMode.BY_DURATION, 0.2, durations={"a": 900.0}
        )
        assert spec.duration_limits["a"] == pytest.approx(180.0)

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            subsample(["a"], SubsampleMode.BY_SESSION, 0.0)
        with pytest.raises(ValueError):
            subsample(["a"], SubsampleMode.BY_SESSION, 1.5)


class TestGroupCompare:
    def test_identical_groups(self):
        samples = [(1.0, "a"), (2.0, "a"), (3.0, "a"),
                   (1.0, "b"), (2.0, "b"), (3.0, "b")]
        rep = group_compare(samples)
        assert rep.test == "t"
        assert rep.statistic == 0.0
        assert rep.p_value == 1.0

    def test_degenerate_all_equal(self):
        samples = [(5.0, "a")] * 3 + [(5.0, "b")] * 3
        rep = group_compare(samples)
        assert rep.statistic == 0.0 and rep.p_value == 1.0

    def test_t_matches_scipy(self):
        a = [2.1, 2.5, 2.9]
        b = [3.1, 3.5, 3.9]
        rep = group_compare([(v, "a") for v in a] + [(v, "b") for v in b])
        t_ref, p_ref = scipy_stats.ttest_ind(a, b, equal_var=True)
        assert rep.statistic == pytest.approx(t_ref, abs=1e-6)
        assert rep.p_value == pytest.approx(p_ref, abs=1e-6)

    def test_random_cases_match_scipy(self, rng):
        for _ in range(100):
            k = int(rng.integers(2, 5))
            groups = [rng.normal(rng.uniform(0, 3), 1.0, size=rng.integers(2, 12))
                      for _ in range(k)]
            samples = [(v, f"g{i}") for i, g in enumerate(groups) for v in g]
            rep = group_compare(samples)
            if k == 2:
                ref_stat, ref_p = scipy_stats.ttest_ind(
                    groups[0], groups[1], equal_var=True
                )
            else:
                ref_stat, ref_p = scipy_stats.f_oneway(*groups)
            assert rep.statistic == pytest.approx(float(ref_stat), abs=1e-6)
            assert rep.p_value == pytest.approx(float(ref_p), abs=1e-6)

    def test_translation_invariance(self, rng):
        base = [(float(v), "a") for v in rng.normal(0, 1, 6)]
        base += [(float(v), "b") for v in rng.normal(1, 1, 6)]
        shifted = [(v + 100.0, g) for v, g in base]
        assert group_compare(base).statistic == pytest.approx(
            group_compare(shifted).statistic, abs=1e-9
        )

    def test_single_group_rejected(self):
        with pytest.raises(ValueError):
            group_compare([(1.0, "a"), (2.0, "a")])


@pytest.fixture
def synth_corpus(tmp_path):
    def build(n=6, flip_p=0.0, duration=300.0, seed=100):
        sessions = []
        for i in range(n):
            tl = generate_session(SynthConfig(
                session_duration=duration,
                child_speech_target=(60, 10),
                adult_speech_target=(90, 10),
                seed=seed + i,
            ))
            post = corrupt_to_posteriors(
                tl, CorruptionConfig(flip_child_adult_p=flip_p, seed=seed + i)
            )
            rttm = tmp_path / f"s{i}.rttm"
            fpos = tmp_path / f"s{i}.fpos"
            write_rttm(tl, rttm, uri=f"s{i}")
            write_posteriors(post, fpos)
            sessions.append(SessionManifest(
                session_id=f"s{i}",
                annotation_path=str(rttm),
                posterior_path=str(fpos),
                duration=tl.session_duration,
                demographics={"gender": "m" if i % 2 else "f",
                              "language_level": f"LL-{i % 3 + 1}"},
            ))
        return sessions
    return build


class TestRunProtocol:
    def test_zero_corruption_zero_der(self, synth_corpus):
        corpus = synth_corpus(n=6, flip_p=0.0)
        for protocol in Protocol:
            report = run_protocol(corpus, protocol, ScoreConfig(0))
            if "aggregate" in report:
                assert report["aggregate"]["der"] == 0.0

    def test_ablation_flat_with_fixed_posteriors(self, synth_corpus):
        corpus = synth_corpus(n=6, flip_p=0.1)
        report = run_protocol(corpus, Protocol.ABLATION, ScoreConfig(0))
        for curve in report["der_curves"].values():
            assert len(set(curve)) == 1

    def test_window_sweep_both_seen_increases_for_front_loaded_child(
        self, tmp_path
    ):
        from dyadscore.timeline import Segment, Timeline

        sessions = []
        for i in range(3):
            # child only in the first quarter of each 200 s session
            tl = Timeline(
                [Segment(0, 50, "child"), Segment(10, 190, "adult")], 200
            )
            post = corrupt_to_posteriors(tl, CorruptionConfig(seed=i))
            rttm = tmp_path / f"w{i}.rttm"
            fpos = tmp_path / f"w{i}.fpos"
            write_rttm(tl, rttm, uri=f"w{i}")
            write_posteriors(post, fpos)
            sessions.append(SessionManifest(
                f"w{i}", str(rttm), 200.0, posterior_path=str(fpos)
            ))
        report = run_protocol(sessions, Protocol.WINDOW_SWEEP, ScoreConfig(0))
        seen = report["both_seen_pct"]
        # independent oracle: enumerate train windows by hand
        for w, got in zip((5, 10, 15, 20), seen):
            stride = w / 2
            n_windows = n_both = 0
            start = 0.0
            while start + w <= 200.0:
                n_windows += 1
                child_seen = start < 50
                adult_seen = start + w > 10 and start < 190
                if child_seen and adult_seen:
                    n_both += 1
                start += stride
            assert got == pytest.approx(round(100 * n_both / n_windows, 1))
        # larger windows see both parties more often overall
        assert seen[0] < seen[-1]

    def test_demographics_reports_tests(self, synth_corpus):
        corpus = synth_corpus(n=8, flip_p=0.2)
        report = run_protocol(corpus, Protocol.DEMOGRAPHICS, ScoreConfig(0))
        assert "gender" in report["tests"]
        assert 0 <= report["tests"]["gender"]["p_value"] <= 1

    def test_missing_inputs_named(self, synth_corpus):
        corpus = synth_corpus(n=3)
        broken = corpus + [SessionManifest("ghost", "/nonexistent.rttm", 10.0)]
        with pytest.raises(FileNotFoundError, match="ghost"):
            run_protocol(broken, Protocol.BASELINE_SCORE, ScoreConfig(0))

    def test_aggregate_is_micro_average(self, synth_corpus):
        from dyadscore.harness import score_sessions
        from dyadscore.metrics import aggregate
        from dyadscore.decode import DecodeConfig

        corpus = synth_corpus(n=5, flip_p=0.15)
        per = score_sessions(corpus, ScoreConfig(0), DecodeConfig())
        report = run_protocol(corpus, Protocol.BASELINE_SCORE, ScoreConfig(0))
        micro = aggregate(per.values())
        assert report["aggregate"]["der"] == round(100 * micro.der, 1)
