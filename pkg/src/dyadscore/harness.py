"""Experiment protocols: session-level cross-validation, data-efficiency
ablations, window sweeps, and demographic comparisons.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats as _scipy_stats

from . import metrics
from .decode import DecodeConfig, decode
from .io_formats import SessionManifest, read_posteriors, read_rttm
from .metrics import ScoreBreakdown, ScoreConfig, aggregate, map_speakers, score
from .timeline import ROLE_LABELS, Timeline
from .windows import WindowMode, WindowSpec, both_seen_fraction


@dataclass(frozen=True)
class Fold:
    train_ids: tuple[str, ...]
    val_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


@dataclass(frozen=True)
class SplitPlan:
    folds: tuple[Fold, ...]
    seed: int

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "folds": [
                {
                    "train_ids": list(f.train_ids),
                    "val_ids": list(f.val_ids),
                    "test_ids": list(f.test_ids),
                }
                for f in self.folds
            ],
        }

    @classmethod
    def from_json(cls, d: dict) -> "SplitPlan":
        return cls(
            folds=tuple(
                Fold(tuple(f["train_ids"]), tuple(f["val_ids"]), tuple(f["test_ids"]))
                for f in d["folds"]
            ),
            seed=d["seed"],
        )


def make_splits(
    corpus: Sequence[SessionManifest], k: int = 5, seed: int = 0
) -> SplitPlan:
    """Session-level k-fold split with a validation holdout per fold.

    Test folds are disjoint, cover the corpus, and differ in size by at
    most one. Within each fold, 25% of the non-test sessions (rounded
    down, at least one) are held out for validation.
    """
    ids = sorted(s.session_id for s in corpus)
    if len(ids) != len(set(ids)):
        raise ValueError("duplicate session ids in corpus")
    n = len(ids)
    if n < k:
        raise ValueError(f"corpus of {n} sessions cannot make {k} folds")
    rng = random.Random(seed)
    rng.shuffle(ids)
    base, extra = divmod(n, k)
    folds = []
    pos = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        test = ids[pos:pos + size]
        pos += size
        rest = [s for s in ids if s not in test]
        n_val = max(1, len(rest) // 4)
        # deterministic per-fold validation draw
        fold_rng = random.Random(seed * 1000003 + i)
        val = fold_rng.sample(rest, n_val)
        train = [s for s in rest if s not in val]
        folds.append(Fold(tuple(train), tuple(val), tuple(test)))
    return SplitPlan(tuple(folds), seed)


class SubsampleMode(enum.Enum):
    BY_SESSION = "by-session"
    BY_DURATION = "by-duration"


@dataclass(frozen=True)
class TrainingSpec:
    """A (possibly reduced) training set: session ids with per-session
    time budgets in seconds (None = full session)."""

    session_ids: tuple[str, ...]
    duration_limits: dict  # session_id -> Optional[float]


def subsample(
    train_ids: Sequence[str],
    mode: SubsampleMode,
    fraction: float,
    seed: int = 0,
    durations: Optional[dict] = None,
) -> TrainingSpec:
    """Reduce the training set by dropping sessions or truncating them.

    BY_SESSION keeps ceil(fraction * n) sessions; subsets are nested
    across fractions under one seed. BY_DURATION keeps every session
    but only its first fraction of the duration.
    """
    if not train_ids:
        raise ValueError("empty training set")
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if mode is SubsampleMode.BY_SESSION:
        order = sorted(train_ids)
        random.Random(seed).shuffle(order)
        kept = sorted(order[: math.ceil(fraction * len(order))])
        return TrainingSpec(tuple(kept), {sid: None for sid in kept})
    if durations is None:
        raise ValueError("BY_DURATION needs per-session durations")
    kept = sorted(train_ids)
    limits = {sid: fraction * durations[sid] for sid in kept}
    return TrainingSpec(tuple(kept), limits)


# ---------------------------------------------------------------------------
# Group significance tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupTestReport:
    test: str          # "t" or "anova"
    statistic: float
    p_value: float
    group_sizes: tuple[int, ...]


def _pooled_t(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Two-sample Student's t with pooled variance (textbook formula)."""
    n1, n2 = len(a), len(b)
    df = n1 + n2 - 2
    sp2 = ((n1 - 1) * a.var(ddof=1) + (n2 - 1) * b.var(ddof=1)) / df
    diff = a.mean() - b.mean()
    if sp2 == 0:
        return (0.0, 1.0) if diff == 0 else (math.inf, 0.0)
    t = diff / math.sqrt(sp2 * (1 / n1 + 1 / n2))
    p = 2 * _scipy_stats.t.sf(abs(t), df)
    return float(t), float(p)


def _anova_f(groups: list[np.ndarray]) -> tuple[float, float]:
    """One-way ANOVA F statistic (textbook formula)."""
    all_vals = np.concatenate(groups)
    grand = all_vals.mean()
    k = len(groups)
    n = len(all_vals)
    ss_between = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    if ss_within == 0:
        return (0.0, 1.0) if ss_between == 0 else (math.inf, 0.0)
    f = (ss_between / (k - 1)) / (ss_within / (n - k))
    p = _scipy_stats.f.sf(f, k - 1, n - k)
    return float(f), float(p)


def group_compare(samples: Sequence[tuple[float, object]]) -> GroupTestReport:
    """Compare per-session metric values across groups.

    Two groups run a pooled-variance Student's t-test; three or more
    run a one-way ANOVA F-test. Degenerate all-equal inputs report a
    zero statistic with p = 1.
    """
    by_group: dict = {}
    for value, group in samples:
        by_group.setdefault(group, []).append(float(value))
    groups = [np.asarray(by_group[g]) for g in sorted(by_group, key=str)]
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    if any(len(g) < 2 for g in groups):
        raise ValueError("each group needs at least two samples")
    sizes = tuple(len(g) for g in groups)
    if len(groups) == 2:
        stat, p = _pooled_t(groups[0], groups[1])
        return GroupTestReport("t", stat, p, sizes)
    stat, p = _anova_f(groups)
    return GroupTestReport("anova", stat, p, sizes)


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------

class Protocol(enum.Enum):
    BASELINE_SCORE = "baseline"
    WINDOW_SWEEP = "window-sweep"
    ABLATION = "ablation"
    DEMOGRAPHICS = "demographics"


def _pct_row(b: ScoreBreakdown) -> dict:
    p = b.as_percentages()
    return {
        "fa": p["fa"],
        "miss": p["miss"],
        "f+m": p["detection"],
        "sc": p["sc"],
        "der": p["der"],
    }


def load_hypothesis(
    session: SessionManifest,
    decode_cfg: DecodeConfig,
    hyp_dir=None,
    auto_map: bool = True,
    ref: Optional[Timeline] = None,
) -> Timeline:
    """Hypothesis timeline from the session's posterior file, or from
    <hyp_dir>/<session_id>.rttm when no posteriors are manifested."""
    if session.posterior_path:
        p = read_posteriors(session.posterior_path)
        hyp = decode(p, decode_cfg)
    elif hyp_dir is not None:
        hyp = read_rttm(
            f"{hyp_dir}/{session.session_id}.rttm", session.duration
        )
    else:
        raise FileNotFoundError(
            f"session {session.session_id}: no posterior_path and no --hyp-dir"
        )
    hyp = hyp.with_duration(session.duration)
    if auto_map and ref is not None and set(hyp.speakers) - ROLE_LABELS:
        hyp = map_speakers(ref, hyp)
    return hyp


def score_sessions(
    sessions: Sequence[SessionManifest],
    score_cfg: ScoreConfig,
    decode_cfg: DecodeConfig = DecodeConfig(),
    hyp_dir=None,
) -> dict:
    """Per-session breakdowns keyed by session id; missing inputs are
    reported together, by id."""
    missing = []
    out = {}
    for s in sessions:
        try:
            ref = read_rttm(s.annotation_path, s.duration)
            hyp = load_hypothesis(s, decode_cfg, hyp_dir, ref=ref)
        except FileNotFoundError:
            missing.append(s.session_id)
            continue
        out[s.session_id] = score(ref, hyp, score_cfg)
    if missing:
        raise FileNotFoundError(
            f"missing inputs for sessions: {', '.join(sorted(missing))}"
        )
    return out


def run_protocol(
    corpus: Sequence[SessionManifest],
    protocol: Protocol,
    score_cfg: ScoreConfig = ScoreConfig(),
    decode_cfg: DecodeConfig = DecodeConfig(),
    split_plan: Optional[SplitPlan] = None,
    hyp_dir=None,
    window_sizes: Sequence[float] = (5.0, 10.0, 15.0, 20.0),
    fractions: Sequence[float] = (0.1, 0.2, 0.5, 1.0),
    seed: int = 0,
) -> dict:
    """Run one experiment protocol and return a report dict
    (see io_formats.write_report for serialization)."""
    by_id = {s.session_id: s for s in corpus}
    per_session = score_sessions(corpus, score_cfg, decode_cfg, hyp_dir)
    meta = {
        "collar_ms": score_cfg.collar_ms,
        "skip_overlap": score_cfg.skip_overlap,
        "overlap_policy": decode_cfg.overlap_policy.value,
        "n_sessions": len(corpus),
    }

    if protocol is Protocol.BASELINE_SCORE:
        rows = []
        if split_plan is not None:
            for i, fold in enumerate(split_plan.folds):
                agg = aggregate([per_session[sid] for sid in fold.test_ids])
                rows.append([f"fold{i}", *_fmt(_pct_row(agg))])
        total = aggregate(per_session.values())
        rows.append(["all", *_fmt(_pct_row(total))])
        return {
            "protocol": protocol.value,
            "metadata": meta,
            "aggregate": _pct_row(total),
            "per_session": {k: _pct_row(v) for k, v in per_session.items()},
            "table": {"headers": ["scope", "FA", "Miss", "F+M", "SC", "DER"],
                      "rows": rows},
        }

    if protocol is Protocol.WINDOW_SWEEP:
        total = aggregate(per_session.values())
        pct = _pct_row(total)
        seen_rows = []
        for w in window_sizes:
            spec = WindowSpec(w, WindowMode.TRAIN)
            fracs = []
            for s in corpus:
                ref = read_rttm(s.annotation_path, s.duration)
                try:
                    fracs.append(both_seen_fraction(ref, spec))
                except ValueError:
                    continue  # session shorter than the window
            seen_rows.append(
                round(100 * float(np.mean(fracs)), 1) if fracs else float("nan")
            )
        headers = ["Metric"] + [f"{w:g}s" for w in window_sizes]
        rows = [
            ["% both child and adult seen", *[f"{v:.1f}" for v in seen_rows]],
            ["F+M", *[f"{pct['f+m']:.1f}"] * len(window_sizes)],
            ["SC", *[f"{pct['sc']:.1f}"] * len(window_sizes)],
            ["DER", *[f"{pct['der']:.1f}"] * len(window_sizes)],
        ]
        return {
            "protocol": protocol.value,
            "metadata": meta,
            "window_sizes": list(window_sizes),
            "both_seen_pct": seen_rows,
            "aggregate": pct,
            "table": {"headers": headers, "rows": rows},
        }

    if protocol is Protocol.ABLATION:
        plan = split_plan or make_splits(corpus, k=min(5, len(corpus)), seed=seed)
        durations = {s.session_id: s.duration for s in corpus}
        rows = []
        curves: dict = {}
        for mode in (SubsampleMode.BY_SESSION, SubsampleMode.BY_DURATION):
            curve = []
            for frac in fractions:
                # score the (fixed) test sets; the training spec records
                # what a backend would be allowed to train on
                test_scores = []
                for fold in plan.folds:
                    subsample(fold.train_ids, mode, frac, seed, durations)
                    test_scores.extend(per_session[sid] for sid in fold.test_ids)
                der = round(100 * aggregate(test_scores).der, 1)
                curve.append(der)
                rows.append([mode.value, f"{frac:g}", f"{der:.1f}"])
            curves[mode.value] = curve
        return {
            "protocol": protocol.value,
            "metadata": meta,
            "fractions": list(fractions),
            "der_curves": curves,
            "table": {"headers": ["mode", "fraction", "DER"], "rows": rows},
        }

    if protocol is Protocol.DEMOGRAPHICS:
        rows = []
        tests = {}
        for key in ("gender", "language_level"):
            samples = []
            for sid, b in per_session.items():
                group = by_id[sid].demographics.get(key)
                if group is not None:
                    samples.append((100 * b.der, group))
            groups = sorted({g for _, g in samples}, key=str)
            for g in groups:
                vals = [v for v, gg in samples if gg == g]
                rows.append(
                    [key, str(g), str(len(vals)),
                     f"{float(np.mean(vals)):.1f}", f"{float(np.std(vals)):.1f}"]
                )
            if len(groups) >= 2 and all(
                sum(1 for _, gg in samples if gg == g) >= 2 for g in groups
            ):
                rep = group_compare(samples)
                tests[key] = {
                    "test": rep.test,
                    "statistic": rep.statistic,
                    "p_value": rep.p_value,
                }
                rows.append([key, "(test)", rep.test,
                             f"p={rep.p_value:.3f}", ""])
        return {
            "protocol": protocol.value,
            "metadata": meta,
            "tests": tests,
            "table": {
                "headers": ["attribute", "group", "n", "mean DER", "std"],
                "rows": rows,
            },
        }

    raise ValueError(f"unknown protocol {protocol}")


def _fmt(pct: dict) -> list[str]:
    return [f"{pct[k]:.1f}" for k in ("fa", "miss", "f+m", "sc", "der")]
