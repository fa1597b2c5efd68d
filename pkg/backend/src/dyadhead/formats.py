"""Wire formats shared with the scoring engine: FPOS posterior binaries,
RTTM segment files, and JSONL session manifests.

This package talks to the scorer only through these files, so the byte
layout here must match the scorer's documented contract exactly:

    magic "FPOS" | u32 version=1 | u32 flags (bit0: logits) |
    u32 n_classes=4 | u32 step_ms | u64 n_frames
    then n_frames * n_classes little-endian float32, row-major.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

FPOS_MAGIC = b"FPOS"
FPOS_VERSION = 1
FPOS_HEADER = struct.Struct("<4sIIIIQ")
N_CLASSES = 4
STEP_MS = 20

# class order is fixed: child, adult, overlap, silence
LABEL_CHILD, LABEL_ADULT, LABEL_OVERLAP, LABEL_SILENCE = 0, 1, 2, 3

RTTM_NAMES = {"CHI": LABEL_CHILD, "ADU": LABEL_ADULT}


def write_fpos(scores: np.ndarray, path, step_ms: int = STEP_MS,
               is_logits: bool = False) -> None:
    scores = np.ascontiguousarray(scores, dtype="<f4")
    if scores.ndim != 2 or scores.shape[1] != N_CLASSES:
        raise ValueError(f"scores must be T x {N_CLASSES}")
    header = FPOS_HEADER.pack(
        FPOS_MAGIC, FPOS_VERSION, 1 if is_logits else 0,
        N_CLASSES, step_ms, scores.shape[0],
    )
    Path(path).write_bytes(header + scores.tobytes())


def read_fpos(path) -> tuple[np.ndarray, int, bool]:
    data = Path(path).read_bytes()
    magic, version, flags, n_classes, step_ms, n_frames = FPOS_HEADER.unpack_from(data)
    if magic != FPOS_MAGIC or version != FPOS_VERSION:
        raise ValueError(f"{path}: not an FPOS v{FPOS_VERSION} file")
    expected = FPOS_HEADER.size + 4 * n_frames * n_classes
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, got {len(data)}")
    scores = np.frombuffer(data, dtype="<f4", offset=FPOS_HEADER.size).reshape(
        n_frames, n_classes
    )
    return scores.copy(), step_ms, bool(flags & 1)


def read_rttm_labels(path, duration_s: float, step_ms: int = STEP_MS) -> np.ndarray:
    """Rasterize a reference RTTM to per-frame labels.

    Frame k takes the label of the activity at its center time
    (k + 0.5) * step; both roles active means overlap.
    """
    n = int(np.ceil(round(duration_s * 1000) / step_ms))
    child = np.zeros(n, dtype=bool)
    adult = np.zeros(n, dtype=bool)
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith(";;"):
            continue
        parts = line.split()
        if len(parts) < 9 or parts[0] != "SPEAKER":
            raise ValueError(f"{path}:{lineno}: malformed RTTM line")
        tbeg, tdur = float(parts[3]), float(parts[4])
        role = RTTM_NAMES.get(parts[7])
        if role is None:
            raise ValueError(f"{path}:{lineno}: training needs CHI/ADU labels")
        centers = (np.arange(n) + 0.5) * step_ms / 1000.0
        active = (centers >= tbeg) & (centers < tbeg + tdur)
        (child if role == LABEL_CHILD else adult)[active] = True
    labels = np.full(n, LABEL_SILENCE, dtype=np.int64)
    labels[child & ~adult] = LABEL_CHILD
    labels[adult & ~child] = LABEL_ADULT
    labels[child & adult] = LABEL_OVERLAP
    return labels


@dataclass(frozen=True)
class Session:
    session_id: str
    annotation_path: str
    duration: float
    audio_path: Optional[str] = None
    posterior_path: Optional[str] = None
    demographics: dict = field(default_factory=dict)


def read_manifest(path) -> list[Session]:
    lines = Path(path).read_text().splitlines()
    header = json.loads(lines[0])
    if header.get("schema") != "dyadscore-manifest" or header.get("version") != 1:
        raise ValueError(f"{path}: unsupported manifest")
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        d = json.loads(line)
        out.append(Session(
            session_id=d["session_id"],
            annotation_path=d["annotation_path"],
            duration=float(d["duration"]),
            audio_path=d.get("audio_path"),
            posterior_path=d.get("posterior_path"),
            demographics=d.get("demographics", {}),
        ))
    return out


def write_manifest(sessions, path) -> None:
    lines = [json.dumps({"schema": "dyadscore-manifest", "version": 1})]
    for s in sorted(sessions, key=lambda s: s.session_id):
        d = {"session_id": s.session_id, "annotation_path": s.annotation_path,
             "duration": s.duration}
        if s.audio_path:
            d["audio_path"] = s.audio_path
        if s.posterior_path:
            d["posterior_path"] = s.posterior_path
        if s.demographics:
            d["demographics"] = s.demographics
        lines.append(json.dumps(d, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")
