"""Unsupervised per-frame query association with carry-forward and the
IoU-overlap baseline tracker.

Live tracks keep their last embedding as a matching candidate while they
ride out empty matches, which realizes carry-forward without growing the
cost matrix; a track dies once its empty streak exceeds the patience.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from . import assignment
from .errors import DataError
from .model import (
    BBox,
    FramePrediction,
    QuerySlot,
    RleMask,
    VideoStream,
    box_iou,
    embeddings_matrix,
    mask_iou,
    validate_stream,
)

_ZERO_NORM = 1e-12


@dataclass(frozen=True)
class TrackerConfig:
    """Knobs of the association stage.

    A slot counts as empty when its best foreground probability is below
    empty_threshold. With carry_forward disabled a track dies on its first
    empty match instead of surviving death_patience of them.
    """

    empty_threshold: float = 0.5
    death_patience: int = 5
    carry_forward: bool = True
    similarity_floor: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.empty_threshold < 1.0:
            raise DataError(f"empty_threshold must be in (0,1), got {self.empty_threshold}")
        if self.death_patience < 1:
            raise DataError(f"death_patience must be >= 1, got {self.death_patience}")

    def as_dict(self) -> dict:
        return {
            "empty_threshold": self.empty_threshold,
            "death_patience": self.death_patience,
            "carry_forward": self.carry_forward,
            "similarity_floor": self.similarity_floor,
        }


@dataclass(frozen=True)
class TrackRecord:
    track_id: int
    last_embedding: tuple[float, ...]
    empty_streak: int
    observations: tuple[tuple[int, int], ...]  # (frame_index, slot)
    last_box: BBox
    last_mask: RleMask | None = None


@dataclass(frozen=True)
class TrackState:
    live: tuple[TrackRecord, ...] = ()
    retired: tuple[TrackRecord, ...] = ()
    next_id: int = 0


@dataclass(frozen=True)
class FrameAssignments:
    frame_index: int
    assignments: tuple[tuple[int, int], ...]  # (slot, track_id), sorted by slot


@dataclass(frozen=True)
class TrackSummary:
    track_id: int
    observations: tuple[tuple[int, int], ...]
    mean_probs: tuple[float, ...]

    @property
    def first_frame(self) -> int:
        return self.observations[0][0]

    @property
    def last_frame(self) -> int:
        return self.observations[-1][0]

    @property
    def frame_count(self) -> int:
        return len(self.observations)


@dataclass(frozen=True)
class TrackingOutput:
    frames: tuple[FrameAssignments, ...]
    tracks: tuple[TrackSummary, ...]
    config: tuple[tuple[str, object], ...]

    def config_dict(self) -> dict:
        return dict(self.config)


def cosine_similarity(a: Iterable[float], b: Iterable[float]) -> float:
    """Cosine of the angle between two vectors; 0 if either is near-null."""
    va = np.asarray(tuple(a), dtype=np.float64)
    vb = np.asarray(tuple(b), dtype=np.float64)
    if va.shape != vb.shape:
        raise DataError(f"vector lengths differ: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na < _ZERO_NORM or nb < _ZERO_NORM:
        return 0.0
    sim = float(np.dot(va, vb) / (na * nb))
    return max(-1.0, min(1.0, sim))


def _normalized_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    out = np.zeros_like(mat)
    ok = norms[:, 0] >= _ZERO_NORM
    out[ok] = mat[ok] / norms[ok]
    return out


def build_cost_matrix(prev: np.ndarray, curr: np.ndarray) -> assignment.CostMatrix:
    """Negated cosine similarities: the solver minimizes, matching maximizes."""
    if curr.shape[0] == 0:
        raise DataError("current frame has no query slots")
    if prev.shape[0] and prev.shape[1] != curr.shape[1]:
        raise DataError(
            f"embedding dims differ: {prev.shape[1]} vs {curr.shape[1]}"
        )
    sims = _normalized_rows(prev) @ _normalized_rows(curr).T
    np.clip(sims, -1.0, 1.0, out=sims)
    return assignment.CostMatrix(tuple(tuple(row) for row in (-sims)))


def _detection_iou(track: TrackRecord, slot: QuerySlot) -> float:
    if track.last_mask is not None and slot.mask is not None:
        return mask_iou(track.last_mask, slot.mask)
    return box_iou(track.last_box, slot.box)


def _step_impl(state: TrackState, frame: FramePrediction, cfg: TrackerConfig,
               baseline_iou_floor: float | None) -> tuple[TrackState, FrameAssignments]:
    tau = cfg.empty_threshold
    slots = frame.slots
    nonempty = [j for j, s in enumerate(slots) if not s.is_empty(tau)]
    live = list(state.live)

    if baseline_iou_floor is None:
        cols = list(range(len(slots)))
        scores = None
        if live and cols:
            prev = np.asarray([t.last_embedding for t in live], dtype=np.float64)
            cost = build_cost_matrix(prev, embeddings_matrix(slots))
            scores = [[-v for v in row] for row in cost.values]
            matched = assignment.solve(cost).as_dict()
        else:
            matched = {}
    else:
        cols = nonempty
        scores = [[_detection_iou(t, slots[j]) for j in cols] for t in live]
        if live and cols:
            cost = assignment.CostMatrix(
                tuple(tuple(-s for s in row) for row in scores)
            )
            matched = assignment.solve(cost).as_dict()
        else:
            matched = {}

    taken: dict[int, int] = {}  # slot -> track_id
    new_live: list[TrackRecord] = []
    for i, track in enumerate(live):
        col = matched.get(i)
        slot_index = cols[col] if col is not None else None
        accept = False
        if slot_index is not None and slot_index in nonempty:
            if baseline_iou_floor is not None:
                accept = scores[i][col] >= baseline_iou_floor
            elif cfg.similarity_floor is not None:
                accept = scores[i][col] >= cfg.similarity_floor
            else:
                accept = True
        if accept:
            slot = slots[slot_index]
            new_live.append(replace(
                track,
                last_embedding=slot.embedding,
                empty_streak=0,
                observations=track.observations + ((frame.frame_index, slot_index),),
                last_box=slot.box,
                last_mask=slot.mask,
            ))
            taken[slot_index] = track.track_id
        else:
            new_live.append(replace(track, empty_streak=track.empty_streak + 1))

    patience = cfg.death_patience if cfg.carry_forward else 0
    survivors = [t for t in new_live if t.empty_streak <= patience]
    retired = state.retired + tuple(
        t for t in new_live if t.empty_streak > patience
    )

    next_id = state.next_id
    for j in nonempty:
        if j in taken:
            continue
        slot = slots[j]
        survivors.append(TrackRecord(
            track_id=next_id,
            last_embedding=slot.embedding,
            empty_streak=0,
            observations=((frame.frame_index, j),),
            last_box=slot.box,
            last_mask=slot.mask,
        ))
        taken[j] = next_id
        next_id += 1

    new_state = TrackState(live=tuple(survivors), retired=retired, next_id=next_id)
    frame_out = FrameAssignments(
        frame_index=frame.frame_index,
        assignments=tuple(sorted(taken.items())),
    )
    return new_state, frame_out


def step(state: TrackState, frame: FramePrediction,
         cfg: TrackerConfig = TrackerConfig()) -> tuple[TrackState, FrameAssignments]:
    """Advance query-space tracking by one frame; state is never mutated."""
    return _step_impl(state, frame, cfg, baseline_iou_floor=None)


def _summaries(state: TrackState, stream: VideoStream) -> tuple[TrackSummary, ...]:
    by_frame = {f.frame_index: f for f in stream.frames}
    records = sorted(state.live + state.retired, key=lambda t: t.track_id)
    out = []
    for track in records:
        probs = np.asarray(
            [by_frame[f].slots[s].classes.probs for f, s in track.observations],
            dtype=np.float64,
        )
        out.append(TrackSummary(
            track_id=track.track_id,
            observations=track.observations,
            mean_probs=tuple(float(x) for x in probs.mean(axis=0)),
        ))
    return tuple(out)


def _run(stream: VideoStream, cfg: TrackerConfig,
         baseline_iou_floor: float | None) -> TrackingOutput:
    violations = validate_stream(stream)
    if violations:
        raise DataError("invalid stream: " + "; ".join(violations[:3]))
    state = TrackState()
    frames = []
    for frame in stream.frames:
        state, out = _step_impl(state, frame, cfg, baseline_iou_floor)
        frames.append(out)
    config = dict(cfg.as_dict())
    config["algorithm"] = "query" if baseline_iou_floor is None else "iou_baseline"
    if baseline_iou_floor is not None:
        config["iou_floor"] = baseline_iou_floor
    return TrackingOutput(
        frames=tuple(frames),
        tracks=_summaries(state, stream),
        config=tuple(sorted(config.items())),
    )


def track_video(stream: VideoStream, cfg: TrackerConfig = TrackerConfig()) -> TrackingOutput:
    """Fold step() over the whole stream."""
    return _run(stream, cfg, baseline_iou_floor=None)


def iou_baseline_track(stream: VideoStream, iou_floor: float = 0.1,
                       cfg: TrackerConfig = TrackerConfig()) -> TrackingOutput:
    """Heuristic baseline: associate detections by box (or mask) overlap."""
    return _run(stream, cfg, baseline_iou_floor=iou_floor)
