"""JSON Lines readers and writers for streams, ground truth and tracks.

Line 1 of every stream file is the header object; every later line is one
frame. Floats go through json's repr serialization, which round-trips
exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .errors import StreamFormatError
from .model import (
    BBox,
    ClassDistribution,
    FramePrediction,
    GroundTruthFrame,
    GroundTruthObject,
    GroundTruthStream,
    QuerySlot,
    RleMask,
    StreamHeader,
    VideoStream,
)
from .tracker import FrameAssignments, TrackingOutput, TrackSummary

_HEADER_KEYS = ("n_queries", "embed_dim", "frame_height", "frame_width", "classes")


def _load_lines(path: str | Path) -> list[Any]:
    p = Path(path)
    if not p.exists():
        raise StreamFormatError(f"file not found: {p}")
    out = []
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            out.append(json.loads(raw))
        except json.JSONDecodeError as exc:
            raise StreamFormatError(f"{p}:{lineno}: invalid JSON: {exc}") from exc
    if not out:
        raise StreamFormatError(f"{p}: empty stream file")
    return out


def _parse_header(obj: Any, path: str | Path) -> StreamHeader:
    if not isinstance(obj, dict) or any(k not in obj for k in _HEADER_KEYS):
        raise StreamFormatError(f"{path}: first line is not a stream header")
    extra = {k: v for k, v in obj.items()
             if k not in _HEADER_KEYS and k not in ("version", "video_id")}
    return StreamHeader(
        n_queries=int(obj["n_queries"]),
        embed_dim=int(obj["embed_dim"]),
        frame_height=int(obj["frame_height"]),
        frame_width=int(obj["frame_width"]),
        classes=tuple(str(c) for c in obj["classes"]),
        version=int(obj.get("version", 1)),
        video_id=str(obj.get("video_id", "")),
        extra=extra,
    )


def _header_obj(header: StreamHeader) -> dict:
    obj = {
        "version": header.version,
        "n_queries": header.n_queries,
        "embed_dim": header.embed_dim,
        "frame_height": header.frame_height,
        "frame_width": header.frame_width,
        "classes": list(header.classes),
    }
    if header.video_id:
        obj["video_id"] = header.video_id
    obj.update(header.extra)
    return obj


def _parse_mask(obj: Any) -> RleMask | None:
    if obj is None:
        return None
    return RleMask(height=int(obj["h"]), width=int(obj["w"]),
                   runs=tuple(int(r) for r in obj["runs"]))


def _mask_obj(mask: RleMask | None) -> dict | None:
    if mask is None:
        return None
    return {"h": mask.height, "w": mask.width, "runs": list(mask.runs)}


def _parse_box(obj: Any) -> BBox:
    x1, y1, x2, y2 = (float(v) for v in obj)
    return BBox(x1, y1, x2, y2)


def read_stream(path: str | Path) -> VideoStream:
    lines = _load_lines(path)
    header = _parse_header(lines[0], path)
    frames = []
    try:
        for obj in lines[1:]:
            slots = tuple(
                QuerySlot(
                    embedding=tuple(float(v) for v in s["embedding"]),
                    box=_parse_box(s["box"]),
                    classes=ClassDistribution(tuple(float(p) for p in s["probs"])),
                    mask=_parse_mask(s.get("mask")),
                )
                for s in obj["slots"]
            )
            frames.append(FramePrediction(frame_index=int(obj["frame_index"]), slots=slots))
    except (KeyError, TypeError) as exc:
        raise StreamFormatError(f"{path}: malformed frame record: {exc!r}") from exc
    return VideoStream(header=header, frames=tuple(frames))


def write_stream(stream: VideoStream, path: str | Path) -> None:
    lines = [json.dumps(_header_obj(stream.header))]
    for frame in stream.frames:
        lines.append(json.dumps({
            "frame_index": frame.frame_index,
            "slots": [
                {
                    "embedding": list(s.embedding),
                    "box": list(s.box.as_tuple()),
                    "probs": list(s.classes.probs),
                    "mask": _mask_obj(s.mask),
                }
                for s in frame.slots
            ],
        }))
    Path(path).write_text("\n".join(lines) + "\n")


def read_ground_truth(path: str | Path) -> GroundTruthStream:
    lines = _load_lines(path)
    header = _parse_header(lines[0], path)
    frames = []
    try:
        for obj in lines[1:]:
            objects = tuple(
                GroundTruthObject(
                    gt_track_id=int(o["gt_track_id"]),
                    box=_parse_box(o["box"]),
                    class_label=str(o["class"]),
                    mask=_parse_mask(o.get("mask")),
                )
                for o in obj["objects"]
            )
            frames.append(GroundTruthFrame(frame_index=int(obj["frame_index"]),
                                           objects=objects))
    except (KeyError, TypeError) as exc:
        raise StreamFormatError(f"{path}: malformed ground-truth record: {exc!r}") from exc
    return GroundTruthStream(header=header, frames=tuple(frames))


def write_ground_truth(stream: GroundTruthStream, path: str | Path) -> None:
    lines = [json.dumps(_header_obj(stream.header))]
    for frame in stream.frames:
        lines.append(json.dumps({
            "frame_index": frame.frame_index,
            "objects": [
                {
                    "gt_track_id": o.gt_track_id,
                    "box": list(o.box.as_tuple()),
                    "mask": _mask_obj(o.mask),
                    "class": o.class_label,
                }
                for o in frame.objects
            ],
        }))
    Path(path).write_text("\n".join(lines) + "\n")


def write_tracking(output: TrackingOutput, stream: VideoStream, path: str | Path) -> None:
    """One line per frame plus a trailing track-table line.

    Assignments embed the slot geometry so that downstream evaluation does
    not need the original stream next to the tracks file.
    """
    by_frame = {f.frame_index: f for f in stream.frames}
    lines = []
    for fa in output.frames:
        if fa.frame_index not in by_frame:
            raise StreamFormatError(
                f"tracking refers to frame {fa.frame_index}, which the stream lacks"
            )
        slots = by_frame[fa.frame_index].slots
        lines.append(json.dumps({
            "frame_index": fa.frame_index,
            "assignments": [
                {
                    "slot": slot,
                    "track_id": tid,
                    "box": list(slots[slot].box.as_tuple()),
                    "mask": _mask_obj(slots[slot].mask),
                }
                for slot, tid in fa.assignments
            ],
        }))
    lines.append(json.dumps({
        "track_table": [
            {
                "track_id": t.track_id,
                "observations": [list(o) for o in t.observations],
                "mean_probs": list(t.mean_probs),
                "first_frame": t.first_frame,
                "last_frame": t.last_frame,
                "frame_count": t.frame_count,
            }
            for t in output.tracks
        ],
        "config": output.config_dict(),
    }))
    Path(path).write_text("\n".join(lines) + "\n")


def read_tracking(path: str | Path) -> tuple[TrackingOutput, dict[tuple[int, int], dict]]:
    """Read a tracks file; also return per-(frame, slot) geometry records."""
    lines = _load_lines(path)
    if not (isinstance(lines[-1], dict) and "track_table" in lines[-1]):
        raise StreamFormatError(f"{path}: missing trailing track-table line")
    tail = lines[-1]
    frames = []
    geometry: dict[tuple[int, int], dict] = {}
    try:
        for obj in lines[:-1]:
            frame_index = int(obj["frame_index"])
            assignments = []
            for rec in obj["assignments"]:
                slot = int(rec["slot"])
                assignments.append((slot, int(rec["track_id"])))
                geometry[(frame_index, slot)] = {
                    "box": _parse_box(rec["box"]),
                    "mask": _parse_mask(rec.get("mask")),
                }
            frames.append(FrameAssignments(frame_index=frame_index,
                                           assignments=tuple(assignments)))
        tracks = tuple(
            TrackSummary(
                track_id=int(t["track_id"]),
                observations=tuple((int(f), int(s)) for f, s in t["observations"]),
                mean_probs=tuple(float(p) for p in t["mean_probs"]),
            )
            for t in tail["track_table"]
        )
    except (KeyError, TypeError) as exc:
        raise StreamFormatError(f"{path}: malformed tracks record: {exc!r}") from exc
    output = TrackingOutput(
        frames=tuple(frames),
        tracks=tracks,
        config=tuple(sorted(tail.get("config", {}).items())),
    )
    return output, geometry
