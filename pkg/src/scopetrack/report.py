"""Per-video exam report: one row per tracked polyp.

The polyp type is the argmax of the track's averaged class distribution
(full evidence rather than a majority vote of per-frame argmaxes); the
confidence is that average's maximum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, StreamFormatError
from .model import VideoStream
from .tracker import TrackingOutput

_COLUMNS = ("ID", "Type", "Conf", "Fr.Ct.", "1st.Fr.", "Last Fr.")


@dataclass(frozen=True)
class PolypReportEntry:
    polyp_id: int
    polyp_type: str
    confidence: float
    frame_count: int
    first_frame: int
    last_frame: int


@dataclass(frozen=True)
class ExamReport:
    video_id: str
    entries: tuple[PolypReportEntry, ...]
    config: tuple[tuple[str, object], ...]

    def config_dict(self) -> dict:
        return dict(self.config)


def generate_report(tracking: TrackingOutput, stream: VideoStream,
                    min_frames: int = 1) -> ExamReport:
    """Summarize every track with at least min_frames observations."""
    if min_frames < 1:
        raise DataError(f"min_frames must be >= 1, got {min_frames}")
    by_frame = {f.frame_index: f for f in stream.frames}
    classes = stream.header.classes
    entries = []
    for track in tracking.tracks:
        if len(track.observations) < min_frames:
            continue
        probs = []
        for frame_index, slot in track.observations:
            if frame_index not in by_frame:
                raise DataError(
                    f"track {track.track_id} observes frame {frame_index}, "
                    "which is not in the stream"
                )
            frame = by_frame[frame_index]
            if not 0 <= slot < len(frame.slots):
                raise DataError(
                    f"track {track.track_id} observes slot {slot} outside the frame"
                )
            probs.append(frame.slots[slot].classes.probs)
        mean = np.asarray(probs, dtype=np.float64).mean(axis=0)
        best = int(np.argmax(mean))
        entries.append(PolypReportEntry(
            polyp_id=track.track_id,
            polyp_type=classes[best],
            confidence=float(mean[best]),
            frame_count=len(track.observations),
            first_frame=track.observations[0][0],
            last_frame=track.observations[-1][0],
        ))
    entries.sort(key=lambda e: (e.first_frame, e.polyp_id))
    config = dict(tracking.config)
    config["min_frames"] = min_frames
    return ExamReport(
        video_id=stream.header.video_id,
        entries=tuple(entries),
        config=tuple(sorted(config.items())),
    )


def render_report(report: ExamReport, format: str = "text") -> bytes:
    """Serialize a report; text is a fixed-width table, json round-trips."""
    if format == "json":
        obj = {
            "video_id": report.video_id,
            "entries": [
                {
                    "polyp_id": e.polyp_id,
                    "polyp_type": e.polyp_type,
                    "confidence": e.confidence,
                    "frame_count": e.frame_count,
                    "first_frame": e.first_frame,
                    "last_frame": e.last_frame,
                }
                for e in report.entries
            ],
            "config": report.config_dict(),
        }
        return (json.dumps(obj) + "\n").encode()
    if format == "text":
        rows = [
            (
                str(e.polyp_id), e.polyp_type, f"{e.confidence:.2f}",
                str(e.frame_count), str(e.first_frame), str(e.last_frame),
            )
            for e in report.entries
        ]
        widths = [
            max(len(col), *(len(r[i]) for r in rows)) if rows else len(col)
            for i, col in enumerate(_COLUMNS)
        ]
        lines = ["  ".join(col.ljust(widths[i]) for i, col in enumerate(_COLUMNS)).rstrip()]
        for row in rows:
            lines.append("  ".join(v.ljust(widths[i]) for i, v in enumerate(row)).rstrip())
        return ("\n".join(lines) + "\n").encode()
    raise DataError(f"unknown report format {format!r}; use 'text' or 'json'")


def parse_report(data: bytes) -> ExamReport:
    """Inverse of render_report(..., 'json')."""
    try:
        obj = json.loads(data.decode())
        entries = tuple(
            PolypReportEntry(
                polyp_id=int(e["polyp_id"]),
                polyp_type=str(e["polyp_type"]),
                confidence=float(e["confidence"]),
                frame_count=int(e["frame_count"]),
                first_frame=int(e["first_frame"]),
                last_frame=int(e["last_frame"]),
            )
            for e in obj["entries"]
        )
        return ExamReport(
            video_id=str(obj["video_id"]),
            entries=entries,
            config=tuple(sorted(obj.get("config", {}).items())),
        )
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise StreamFormatError(f"malformed report JSON: {exc!r}") from exc
