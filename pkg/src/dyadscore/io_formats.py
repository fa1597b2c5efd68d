"""External file formats: RTTM segments, FPOS posterior binaries,
line-delimited manifests, and report tables.

The FPOS layout is fixed to the byte so other language runtimes can
produce and consume it:

    magic "FPOS" | u32 version=1 | u32 flags (bit0: logits) |
    u32 n_classes=4 | u32 step_ms | u64 n_frames
    then n_frames * n_classes little-endian float32, row-major.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .decode import PosteriorMatrix
from .frames import N_CLASSES
from .timeline import ADULT, CHILD, Segment, Timeline

FPOS_MAGIC = b"FPOS"
FPOS_VERSION = 1
FPOS_HEADER = struct.Struct("<4sIIIIQ")  # magic, version, flags, n_classes, step, n_frames

RTTM_NAME_TO_ROLE = {"CHI": CHILD, "ADU": ADULT}
ROLE_TO_RTTM_NAME = {CHILD: "CHI", ADULT: "ADU"}

MANIFEST_SCHEMA = "dyadscore-manifest"
MANIFEST_VERSION = 1


class FormatError(ValueError):
    """Malformed external file."""


# ---------------------------------------------------------------------------
# RTTM
# ---------------------------------------------------------------------------

def read_rttm(path, session_duration: Optional[float] = None) -> Timeline:
    """Parse SPEAKER lines into a Timeline.

    Speaker names CHI/ADU map to the child/adult roles; any other name
    becomes an anonymous speaker that needs map_speakers before role
    scoring.
    """
    segments = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith(";;"):
                continue
            parts = line.split()
            if len(parts) < 9 or parts[0] != "SPEAKER":
                raise FormatError(f"{path}:{lineno}: malformed RTTM line: {line!r}")
            try:
                tbeg = float(parts[3])
                tdur = float(parts[4])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad time field") from exc
            if tdur <= 0:
                raise FormatError(
                    f"{path}:{lineno}: non-positive duration {tdur}"
                )
            name = parts[7]
            speaker = RTTM_NAME_TO_ROLE.get(name, name)
            segments.append(Segment(tbeg, tbeg + tdur, speaker))
    return Timeline(segments, session_duration)


def write_rttm(t: Timeline, path, uri: str = "session") -> None:
    """Write a Timeline as RTTM with 3-decimal second fields."""
    lines = []
    for seg in t.segments():
        name = ROLE_TO_RTTM_NAME.get(seg.speaker, seg.speaker)
        lines.append(
            f"SPEAKER {uri} 1 {seg.start:.3f} {seg.duration:.3f} "
            f"<NA> <NA> {name} <NA> <NA>"
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


# ---------------------------------------------------------------------------
# FPOS posterior binary
# ---------------------------------------------------------------------------

def write_posteriors(p: PosteriorMatrix, path) -> None:
    flags = 1 if p.is_logits else 0
    header = FPOS_HEADER.pack(
        FPOS_MAGIC, FPOS_VERSION, flags, N_CLASSES, p.step_ms, p.n_frames
    )
    payload = np.ascontiguousarray(p.scores, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_posteriors(path) -> PosteriorMatrix:
    data = Path(path).read_bytes()
    if len(data) < FPOS_HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, flags, n_classes, step_ms, n_frames = FPOS_HEADER.unpack_from(data)
    if magic != FPOS_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FPOS_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if n_classes != N_CLASSES:
        raise FormatError(f"{path}: expected {N_CLASSES} classes, got {n_classes}")
    if step_ms == 0:
        raise FormatError(f"{path}: zero step")
    expected = FPOS_HEADER.size + 4 * n_frames * n_classes
    if len(data) != expected:
        raise FormatError(
            f"{path}: size mismatch, expected {expected} bytes, got {len(data)}"
        )
    scores = np.frombuffer(
        data, dtype="<f4", count=n_frames * n_classes, offset=FPOS_HEADER.size
    ).reshape(n_frames, n_classes)
    return PosteriorMatrix(scores.copy(), step_ms, bool(flags & 1))


# ---------------------------------------------------------------------------
# Session manifests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SessionManifest:
    session_id: str
    annotation_path: str
    duration: float
    audio_path: Optional[str] = None
    posterior_path: Optional[str] = None
    demographics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {
            "session_id": self.session_id,
            "annotation_path": self.annotation_path,
            "duration": self.duration,
        }
        if self.audio_path:
            d["audio_path"] = self.audio_path
        if self.posterior_path:
            d["posterior_path"] = self.posterior_path
        if self.demographics:
            d["demographics"] = self.demographics
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SessionManifest":
        return cls(
            session_id=d["session_id"],
            annotation_path=d["annotation_path"],
            duration=float(d["duration"]),
            audio_path=d.get("audio_path"),
            posterior_path=d.get("posterior_path"),
            demographics=d.get("demographics", {}),
        )


def write_manifest(sessions: Iterable[SessionManifest], path) -> None:
    """Line-delimited JSON with a schema header line."""
    lines = [json.dumps({"schema": MANIFEST_SCHEMA, "version": MANIFEST_VERSION})]
    lines += [
        json.dumps(s.to_json(), sort_keys=True)
        for s in sorted(sessions, key=lambda s: s.session_id)
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> list[SessionManifest]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty manifest")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:1: bad header") from exc
    if header.get("schema") != MANIFEST_SCHEMA:
        raise FormatError(f"{path}: not a {MANIFEST_SCHEMA} file")
    if header.get("version") != MANIFEST_VERSION:
        raise FormatError(f"{path}: unsupported manifest version")
    sessions = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            s = SessionManifest.from_json(json.loads(line))
        except (json.JSONDecodeError, KeyError) as exc:
            raise FormatError(f"{path}:{lineno}: bad session record") from exc
        if s.session_id in seen:
            raise FormatError(f"{path}:{lineno}: duplicate session {s.session_id}")
        seen.add(s.session_id)
        sessions.append(s)
    return sessions


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def format_table(headers: list[str], rows: list[list[str]]) -> str:
    """Aligned plain-text table."""
    widths = [
        max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
        for i, h in enumerate(headers)
    ]
    def fmt(cells):
        return "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    sep = "  ".join("-" * w for w in widths)
    return "\n".join([fmt(headers), sep] + [fmt(r) for r in rows]) + "\n"


def write_report(report: dict, out_prefix) -> tuple[Path, Path]:
    """Write <prefix>.json (machine-readable) and <prefix>.txt (table)."""
    out_prefix = Path(out_prefix)
    json_path = out_prefix.with_suffix(".json")
    txt_path = out_prefix.with_suffix(".txt")
    json_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    txt_path.write_text(report_to_text(report))
    return json_path, txt_path


def report_to_text(report: dict) -> str:
    parts = [f"protocol: {report.get('protocol', '?')}"]
    for key, value in sorted(report.get("metadata", {}).items()):
        parts.append(f"{key}: {value}")
    table = report.get("table")
    if table:
        parts.append("")
        parts.append(format_table(table["headers"], table["rows"]))
    return "\n".join(parts) + ("\n" if not parts[-1].endswith("\n") else "")
