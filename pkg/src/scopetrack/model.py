"""Domain types for detection streams plus mask codec and box/mask geometry.

All types are immutable value objects; the operations below are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, MaskFormatError

PROB_SLACK = 1e-9


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in absolute pixel coordinates, x1y1x2y2."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise DimensionError(f"box coordinates must be finite, got {coords}")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise DimensionError(f"box corners out of order: {coords}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class RleMask:
    """Binary mask as row-major run lengths, first run is background.

    The leading background run may be zero; every later run must be
    positive and the runs must sum to height*width.
    """

    height: int
    width: int
    runs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.height <= 0 or self.width <= 0:
            raise MaskFormatError(
                f"mask dimensions must be positive, got {self.height}x{self.width}"
            )
        object.__setattr__(self, "runs", tuple(int(r) for r in self.runs))
        if not self.runs:
            raise MaskFormatError("mask needs at least one run")
        if any(r < 0 for r in self.runs):
            raise MaskFormatError(f"negative run length in {self.runs}")
        if any(r == 0 for r in self.runs[1:]):
            raise MaskFormatError("only the leading background run may be zero")
        total = sum(self.runs)
        if total != self.height * self.width:
            raise MaskFormatError(
                f"runs sum to {total}, expected {self.height * self.width}"
            )

    @property
    def area(self) -> int:
        """Number of foreground pixels."""
        return sum(self.runs[1::2])

    def foreground_intervals(self) -> list[tuple[int, int]]:
        """Half-open [start, end) foreground intervals in flat row-major order."""
        intervals = []
        pos = 0
        for i, run in enumerate(self.runs):
            if i % 2 == 1 and run > 0:
                intervals.append((pos, pos + run))
            pos += run
        return intervals


@dataclass(frozen=True)
class ClassDistribution:
    """Foreground class probabilities; the leftover mass means 'no object'."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if any(not math.isfinite(p) or p < -PROB_SLACK or p > 1 + PROB_SLACK for p in self.probs):
            raise DimensionError(f"class probabilities out of [0,1]: {self.probs}")
        if sum(self.probs) > 1 + PROB_SLACK:
            raise DimensionError(f"class probabilities sum beyond 1: {self.probs}")

    @property
    def no_object_mass(self) -> float:
        return max(0.0, 1.0 - sum(self.probs))

    @property
    def max_prob(self) -> float:
        return max(self.probs, default=0.0)

    def argmax(self) -> int:
        best = 0
        for i, p in enumerate(self.probs):
            if p > self.probs[best]:
                best = i
        return best


@dataclass(frozen=True)
class QuerySlot:
    """One object-query slot: embedding plus its decoded head outputs."""

    embedding: tuple[float, ...]
    box: BBox
    classes: ClassDistribution
    mask: RleMask | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "embedding", tuple(float(v) for v in self.embedding))
        if any(not math.isfinite(v) for v in self.embedding):
            raise DimensionError("slot embedding has non-finite values")

    def is_empty(self, tau: float) -> bool:
        """A slot is 'no object' when no foreground class reaches tau."""
        return self.classes.max_prob < tau


@dataclass(frozen=True)
class FramePrediction:
    """All N query slots of one frame."""

    frame_index: int
    slots: tuple[QuerySlot, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "slots", tuple(self.slots))
        if self.frame_index < 0:
            raise DimensionError(f"frame_index must be >= 0, got {self.frame_index}")


@dataclass(frozen=True)
class GroundTruthObject:
    """One annotated object with a stable ground-truth track identity."""

    gt_track_id: int
    box: BBox
    class_label: str
    mask: RleMask | None = None


@dataclass(frozen=True)
class GroundTruthFrame:
    frame_index: int
    objects: tuple[GroundTruthObject, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class StreamHeader:
    """First line of every stream file; fixes N, C, H, W and the class set."""

    n_queries: int
    embed_dim: int
    frame_height: int
    frame_width: int
    classes: tuple[str, ...]
    version: int = 1
    video_id: str = ""
    extra: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class VideoStream:
    header: StreamHeader
    frames: tuple[FramePrediction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "frames", tuple(self.frames))


@dataclass(frozen=True)
class GroundTruthStream:
    header: StreamHeader
    frames: tuple[GroundTruthFrame, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "frames", tuple(self.frames))


def rle_encode(bitmap: np.ndarray | Sequence[Sequence[int]]) -> RleMask:
    """Encode a HxW binary grid as row-major run lengths."""
    grid = np.asarray(bitmap)
    if grid.ndim != 2 or grid.shape[0] == 0 or grid.shape[1] == 0:
        raise DimensionError(f"expected a non-empty 2-D grid, got shape {grid.shape}")
    flat = (grid != 0).astype(np.int8).ravel()
    # run boundaries: indices where the value changes
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0] != 0:
        runs.insert(0, 0)
    h, w = grid.shape
    return RleMask(height=int(h), width=int(w), runs=tuple(int(r) for r in runs))


def rle_decode(mask: RleMask) -> np.ndarray:
    """Decode back to a HxW uint8 grid; exact inverse of rle_encode."""
    flat = np.zeros(mask.height * mask.width, dtype=np.uint8)
    for start, end in mask.foreground_intervals():
        flat[start:end] = 1
    return flat.reshape(mask.height, mask.width)


def box_iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; degenerate boxes score 0."""
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    inter = max(0.0, iw) * max(0.0, ih)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def mask_iou(a: RleMask, b: RleMask) -> float:
    """IoU of two masks, computed on the runs without decoding."""
    if (a.height, a.width) != (b.height, b.width):
        raise DimensionError(
            f"mask dimensions differ: {a.height}x{a.width} vs {b.height}x{b.width}"
        )
    ia = a.foreground_intervals()
    ib = b.foreground_intervals()
    inter = 0
    i = j = 0
    while i < len(ia) and j < len(ib):
        lo = max(ia[i][0], ib[j][0])
        hi = min(ia[i][1], ib[j][1])
        if hi > lo:
            inter += hi - lo
        if ia[i][1] <= ib[j][1]:
            i += 1
        else:
            j += 1
    union = a.area + b.area - inter
    if union == 0:
        return 0.0
    return inter / union


def _check_slot(header: StreamHeader, frame_index: int, slot_index: int,
                slot: QuerySlot, out: list[str]) -> None:
    if len(slot.embedding) != header.embed_dim:
        out.append(
            f"frame {frame_index} slot {slot_index}: embedding length "
            f"{len(slot.embedding)} != C={header.embed_dim}"
        )
    if len(slot.classes.probs) != len(header.classes):
        out.append(
            f"frame {frame_index} slot {slot_index}: {len(slot.classes.probs)} class "
            f"probs for {len(header.classes)} classes"
        )
    if slot.mask is not None and (slot.mask.height, slot.mask.width) != (
            header.frame_height, header.frame_width):
        out.append(
            f"frame {frame_index} slot {slot_index}: mask is "
            f"{slot.mask.height}x{slot.mask.width}, frame is "
            f"{header.frame_height}x{header.frame_width}"
        )


def _check_header(header: StreamHeader, out: list[str]) -> None:
    if header.n_queries <= 0:
        out.append(f"header: n_queries must be positive, got {header.n_queries}")
    if header.embed_dim <= 0:
        out.append(f"header: embed_dim must be positive, got {header.embed_dim}")
    if header.frame_height <= 0 or header.frame_width <= 0:
        out.append(
            f"header: frame size must be positive, got "
            f"{header.frame_height}x{header.frame_width}"
        )
    if not header.classes:
        out.append("header: class set is empty")


def validate_stream(stream: VideoStream) -> list[str]:
    """Check stream-level invariants; violations are data, not exceptions."""
    out: list[str] = []
    _check_header(stream.header, out)
    prev_index = None
    for frame in stream.frames:
        if prev_index is not None and frame.frame_index <= prev_index:
            out.append(
                f"frame {frame.frame_index}: frame_index not strictly increasing "
                f"(previous {prev_index})"
            )
        prev_index = frame.frame_index
        if len(frame.slots) != stream.header.n_queries:
            out.append(
                f"frame {frame.frame_index}: {len(frame.slots)} slots, "
                f"header declares N={stream.header.n_queries}"
            )
        for j, slot in enumerate(frame.slots):
            _check_slot(stream.header, frame.frame_index, j, slot, out)
    return out


def validate_ground_truth(stream: GroundTruthStream) -> list[str]:
    """Ground-truth counterpart of validate_stream."""
    out: list[str] = []
    _check_header(stream.header, out)
    prev_index = None
    for frame in stream.frames:
        if prev_index is not None and frame.frame_index <= prev_index:
            out.append(
                f"gt frame {frame.frame_index}: frame_index not strictly increasing "
                f"(previous {prev_index})"
            )
        prev_index = frame.frame_index
        seen: set[int] = set()
        for obj in frame.objects:
            if obj.gt_track_id in seen:
                out.append(
                    f"gt frame {frame.frame_index}: duplicate gt_track_id "
                    f"{obj.gt_track_id}"
                )
            seen.add(obj.gt_track_id)
            if obj.class_label not in stream.header.classes:
                out.append(
                    f"gt frame {frame.frame_index}: unknown class "
                    f"{obj.class_label!r}"
                )
            if obj.mask is not None and (obj.mask.height, obj.mask.width) != (
                    stream.header.frame_height, stream.header.frame_width):
                out.append(
                    f"gt frame {frame.frame_index}: object {obj.gt_track_id} mask is "
                    f"{obj.mask.height}x{obj.mask.width}, frame is "
                    f"{stream.header.frame_height}x{stream.header.frame_width}"
                )
    return out


def embeddings_matrix(slots: Iterable[QuerySlot]) -> np.ndarray:
    """Stack slot embeddings into an (n, C) float array."""
    return np.asarray([s.embedding for s in slots], dtype=np.float64)
