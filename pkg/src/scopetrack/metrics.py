"""Detection, segmentation, classification and tracking metrics.

Tracking metrics follow the published reference procedures: HOTA with the
two-pass global-alignment matching averaged over a 19-point localization
threshold grid, CLEAR-style MOTA with match persistence, and IDF1 from a
global trajectory-level assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import assignment
from .errors import FrameAlignmentError, UndefinedMetricError, UnknownClassError
from .model import (
    BBox,
    GroundTruthStream,
    RleMask,
    VideoStream,
    box_iou,
    mask_iou,
    rle_decode,
)
from .tracker import TrackingOutput

HOTA_ALPHAS = tuple(i / 100 for i in range(5, 100, 5))
# mirrors the reference implementation's epsilon guard on the threshold test
ALPHA_MARGIN = 1e-12


@dataclass(frozen=True)
class DetEvalResult:
    dice: float
    iou: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class TrackEvalResult:
    hota: float
    deta: float
    assa: float
    mota: float
    idf1: float


@dataclass(frozen=True)
class TrackedDet:
    track_id: int
    box: BBox
    mask: RleMask | None = None


@dataclass(frozen=True)
class MatchingAtAlpha:
    """Per-frame detection matching at one localization threshold.

    Pairs are (gt det index, pred det index) within each frame; every
    detection is matched at most once per frame.
    """

    alpha: float
    pairs_per_frame: tuple[tuple[tuple[int, int], ...], ...]
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class TrackedSequence:
    """Per-frame tracked detections, aligned by explicit frame indices."""

    frame_indices: tuple[int, ...]
    frames: tuple[tuple[TrackedDet, ...], ...]

    @classmethod
    def from_ground_truth(cls, gt: GroundTruthStream) -> "TrackedSequence":
        return cls(
            frame_indices=tuple(f.frame_index for f in gt.frames),
            frames=tuple(
                tuple(TrackedDet(o.gt_track_id, o.box, o.mask) for o in f.objects)
                for f in gt.frames
            ),
        )

    @classmethod
    def from_tracking(cls, tracking: TrackingOutput,
                      stream: VideoStream) -> "TrackedSequence":
        by_frame = {f.frame_index: f for f in stream.frames}
        frames = []
        for fa in tracking.frames:
            if fa.frame_index not in by_frame:
                raise FrameAlignmentError(
                    f"tracked frame {fa.frame_index} missing from stream"
                )
            slots = by_frame[fa.frame_index].slots
            frames.append(tuple(
                TrackedDet(tid, slots[slot].box, slots[slot].mask)
                for slot, tid in fa.assignments
            ))
        return cls(
            frame_indices=tuple(f.frame_index for f in tracking.frames),
            frames=tuple(frames),
        )


def similarity(a: TrackedDet, b: TrackedDet) -> float:
    """Box IoU, upgraded to mask IoU when both detections carry masks."""
    if a.mask is not None and b.mask is not None:
        return mask_iou(a.mask, b.mask)
    return box_iou(a.box, b.box)


def _check_aligned(gt: TrackedSequence, pred: TrackedSequence) -> None:
    if gt.frame_indices != pred.frame_indices:
        raise FrameAlignmentError(
            f"frame indices differ: {gt.frame_indices[:5]}... vs "
            f"{pred.frame_indices[:5]}..."
        )


def _id_tables(seq: TrackedSequence) -> tuple[dict[int, int], list[int]]:
    """Map raw track ids to dense indices and count detections per id."""
    index: dict[int, int] = {}
    counts: list[int] = []
    for frame in seq.frames:
        for det in frame:
            if det.track_id not in index:
                index[det.track_id] = len(counts)
                counts.append(0)
            counts[index[det.track_id]] += 1
    return index, counts


def _sim_matrix(gt_frame, pred_frame) -> np.ndarray:
    return np.asarray(
        [[similarity(g, p) for p in pred_frame] for g in gt_frame],
        dtype=np.float64,
    )


def _max_match(sims: np.ndarray, feasible: np.ndarray,
               weights: np.ndarray) -> list[tuple[int, int]]:
    """Match maximizing feasible-pair count first, then total weight.

    Infeasible pairs cost nothing, so the solver never prefers them over a
    feasible pair; ties fall back to the solver's lexicographic rule.
    """
    n_rows, n_cols = sims.shape
    if n_rows == 0 or n_cols == 0:
        return []
    big = 4.0 * (min(n_rows, n_cols) + 1)
    cost = np.where(feasible, -(big + weights), 0.0)
    result = assignment.solve(assignment.CostMatrix(tuple(map(tuple, cost))))
    return [(r, c) for r, c in result.pairs if feasible[r, c]]


def hota_components(gt: TrackedSequence, pred: TrackedSequence):
    """Per-alpha (deta, assa, hota) triples over the threshold grid."""
    _check_aligned(gt, pred)
    gt_index, gt_counts = _id_tables(gt)
    pr_index, pr_counts = _id_tables(pred)
    n_g, n_p = len(gt_counts), len(pr_counts)

    sims_per_frame = [
        _sim_matrix(gf, pf) for gf, pf in zip(gt.frames, pred.frames)
    ]

    potential = np.zeros((n_g, n_p), dtype=np.float64)
    for gf, pf, sims in zip(gt.frames, pred.frames, sims_per_frame):
        if not len(gf) or not len(pf):
            continue
        denom = sims.sum(axis=1, keepdims=True) + sims.sum(axis=0, keepdims=True) - sims
        jac = np.divide(sims, denom, out=np.zeros_like(sims), where=denom > ALPHA_MARGIN)
        for i, g in enumerate(gf):
            for j, p in enumerate(pf):
                potential[gt_index[g.track_id], pr_index[p.track_id]] += jac[i, j]

    gc = np.asarray(gt_counts, dtype=np.float64)
    pc = np.asarray(pr_counts, dtype=np.float64)
    if n_g and n_p:
        ga = potential / (gc[:, None] + pc[None, :] - potential)
    else:
        ga = np.zeros((n_g, n_p))

    def match_at(alpha: float) -> MatchingAtAlpha:
        per_frame = []
        tp = fp = fn = 0
        for gf, pf, sims in zip(gt.frames, pred.frames, sims_per_frame):
            if len(gf) and len(pf):
                gids = [gt_index[g.track_id] for g in gf]
                pids = [pr_index[p.track_id] for p in pf]
                weights = ga[np.ix_(gids, pids)] * sims
                feasible = sims >= alpha - ALPHA_MARGIN
                pairs = tuple(_max_match(sims, feasible, weights))
                tp += len(pairs)
                fn += len(gf) - len(pairs)
                fp += len(pf) - len(pairs)
            else:
                pairs = ()
                fn += len(gf)
                fp += len(pf)
            per_frame.append(pairs)
        return MatchingAtAlpha(alpha=alpha, pairs_per_frame=tuple(per_frame),
                               tp=tp, fp=fp, fn=fn)

    out = []
    for alpha in HOTA_ALPHAS:
        matching = match_at(alpha)
        matches = np.zeros((n_g, n_p), dtype=np.int64)
        for gf, pf, pairs in zip(gt.frames, pred.frames, matching.pairs_per_frame):
            for r, c in pairs:
                matches[gt_index[gf[r].track_id], pr_index[pf[c].track_id]] += 1
        deta = matching.tp / max(1, matching.tp + matching.fn + matching.fp)
        # sequential row-major accumulation keeps the result order-defined
        num = 0.0
        for gi in range(n_g):
            for pj in range(n_p):
                m = int(matches[gi, pj])
                if m:
                    num += m * (m / (gt_counts[gi] + pr_counts[pj] - m))
        assa = num / max(1, matching.tp)
        out.append((deta, assa, math.sqrt(deta * assa)))
    return out


def eval_hota(gt: TrackedSequence, pred: TrackedSequence) -> tuple[float, float, float]:
    """(hota, deta, assa) averaged over the localization threshold grid."""
    comps = hota_components(gt, pred)
    n = len(comps)
    deta = sum(c[0] for c in comps) / n
    assa = sum(c[1] for c in comps) / n
    hota = sum(c[2] for c in comps) / n
    return hota, deta, assa


def eval_mota(gt: TrackedSequence, pred: TrackedSequence, alpha: float = 0.5) -> float:
    """CLEAR accuracy with previous-frame match persistence."""
    _check_aligned(gt, pred)
    total_gt = sum(len(f) for f in gt.frames)
    if total_gt == 0:
        raise UndefinedMetricError("MOTA undefined: ground truth has no detections")
    fn = fp = idsw = 0
    prev_match: dict[int, int] = {}  # gt id -> pred id in previous frame
    last_match: dict[int, int] = {}  # gt id -> last matched pred id ever
    for gf, pf in zip(gt.frames, pred.frames):
        sims = _sim_matrix(gf, pf)
        gt_ids = [d.track_id for d in gf]
        pr_ids = [d.track_id for d in pf]
        matched_g: set[int] = set()
        matched_p: set[int] = set()
        pairs: list[tuple[int, int]] = []
        # keep surviving matches from the previous frame first
        for i, g in enumerate(gt_ids):
            want = prev_match.get(g)
            if want is None or want not in pr_ids:
                continue
            j = pr_ids.index(want)
            if j not in matched_p and sims[i, j] >= alpha - ALPHA_MARGIN:
                pairs.append((i, j))
                matched_g.add(i)
                matched_p.add(j)
        rest_g = [i for i in range(len(gf)) if i not in matched_g]
        rest_p = [j for j in range(len(pf)) if j not in matched_p]
        if rest_g and rest_p:
            sub = sims[np.ix_(rest_g, rest_p)]
            feasible = sub >= alpha - ALPHA_MARGIN
            for r, c in _max_match(sub, feasible, sub):
                pairs.append((rest_g[r], rest_p[c]))
        prev_match = {}
        for i, j in pairs:
            g, p = gt_ids[i], pr_ids[j]
            if g in last_match and last_match[g] != p:
                idsw += 1
            last_match[g] = p
            prev_match[g] = p
        fn += len(gf) - len(pairs)
        fp += len(pf) - len(pairs)
    return 1.0 - (fn + fp + idsw) / total_gt


def eval_idf1(gt: TrackedSequence, pred: TrackedSequence, alpha: float = 0.5) -> float:
    """F1 over identity-consistent matches under a global trajectory pairing."""
    _check_aligned(gt, pred)
    gt_index, gt_counts = _id_tables(gt)
    pr_index, pr_counts = _id_tables(pred)
    total_gt = sum(gt_counts)
    total_pred = sum(pr_counts)
    if total_gt + total_pred == 0:
        return 1.0
    if not gt_counts or not pr_counts:
        return 0.0
    overlap = np.zeros((len(gt_counts), len(pr_counts)), dtype=np.int64)
    for gf, pf in zip(gt.frames, pred.frames):
        sims = _sim_matrix(gf, pf)
        for i, g in enumerate(gf):
            for j, p in enumerate(pf):
                if sims[i, j] >= alpha - ALPHA_MARGIN:
                    overlap[gt_index[g.track_id], pr_index[p.track_id]] += 1
    cost = tuple(tuple(float(-v) for v in row) for row in overlap)
    result = assignment.solve(assignment.CostMatrix(cost))
    idtp = sum(int(overlap[r, c]) for r, c in result.pairs)
    return 2.0 * idtp / (total_gt + total_pred)


def evaluate_tracking(gt: TrackedSequence, pred: TrackedSequence,
                      alpha: float = 0.5) -> TrackEvalResult:
    hota, deta, assa = eval_hota(gt, pred)
    return TrackEvalResult(
        hota=hota,
        deta=deta,
        assa=assa,
        mota=eval_mota(gt, pred, alpha=alpha),
        idf1=eval_idf1(gt, pred, alpha=alpha),
    )


def _streams_aligned(preds: VideoStream, gts: GroundTruthStream) -> None:
    ph, gh = preds.header, gts.header
    if (ph.frame_height, ph.frame_width, ph.classes) != (
            gh.frame_height, gh.frame_width, gh.classes):
        raise FrameAlignmentError(
            "prediction and ground-truth headers disagree on frame size or classes"
        )
    pred_idx = tuple(f.frame_index for f in preds.frames)
    gt_idx = tuple(f.frame_index for f in gts.frames)
    if pred_idx != gt_idx:
        raise FrameAlignmentError(
            f"prediction frames {pred_idx[:5]}... do not align with "
            f"ground truth {gt_idx[:5]}..."
        )


def _detections(preds: VideoStream, tau: float):
    """Per frame: non-empty slots sorted by confidence (desc, slot order ties)."""
    out = []
    for frame in preds.frames:
        dets = [
            (slot.classes.max_prob, j, slot)
            for j, slot in enumerate(frame.slots)
            if not slot.is_empty(tau)
        ]
        dets.sort(key=lambda t: (-t[0], t[1]))
        out.append(dets)
    return out


def eval_segmentation(preds: VideoStream, gts: GroundTruthStream,
                      tau: float = 0.5, match_iou: float = 0.5) -> DetEvalResult:
    """Image-wise dice/IoU on mask unions plus box-level precision/recall."""
    _streams_aligned(preds, gts)
    h, w = gts.header.frame_height, gts.header.frame_width
    dets_per_frame = _detections(preds, tau)
    dice_vals = []
    iou_vals = []
    tp = fp = fn = 0
    for dets, gt_frame in zip(dets_per_frame, gts.frames):
        pred_union = np.zeros((h, w), dtype=bool)
        for _, _, slot in dets:
            if slot.mask is not None:
                pred_union |= rle_decode(slot.mask).astype(bool)
        gt_union = np.zeros((h, w), dtype=bool)
        for obj in gt_frame.objects:
            if obj.mask is not None:
                gt_union |= rle_decode(obj.mask).astype(bool)
        inter = int((pred_union & gt_union).sum())
        p_area = int(pred_union.sum())
        g_area = int(gt_union.sum())
        dice_vals.append(2.0 * inter / (p_area + g_area) if p_area + g_area else 1.0)
        union = p_area + g_area - inter
        iou_vals.append(inter / union if union else 1.0)

        unmatched = list(range(len(gt_frame.objects)))
        for _, _, slot in dets:
            best = None
            best_iou = -1.0
            for gi in unmatched:
                iou = box_iou(slot.box, gt_frame.objects[gi].box)
                if iou >= match_iou and iou > best_iou:
                    best, best_iou = gi, iou
            if best is None:
                fp += 1
            else:
                tp += 1
                unmatched.remove(best)
        fn += len(unmatched)
    n_frames = max(1, len(dice_vals))
    return DetEvalResult(
        dice=sum(dice_vals) / n_frames,
        iou=sum(iou_vals) / n_frames,
        precision=tp / (tp + fp) if tp + fp else 1.0,
        recall=tp / (tp + fn) if tp + fn else 1.0,
        tp=tp, fp=fp, fn=fn,
    )


def eval_classification_f1(preds: VideoStream, gts: GroundTruthStream,
                           tau: float = 0.5, match_iou: float = 0.5) -> float:
    """F1 where a true positive needs box IoU >= 0.5 and the right class."""
    _streams_aligned(preds, gts)
    classes = gts.header.classes
    tp = fp = fn = 0
    for dets, gt_frame in zip(_detections(preds, tau), gts.frames):
        for obj in gt_frame.objects:
            if obj.class_label not in classes:
                raise UnknownClassError(
                    f"ground-truth class {obj.class_label!r} not in {classes}"
                )
        unmatched = list(range(len(gt_frame.objects)))
        for _, _, slot in dets:
            pred_label = classes[slot.classes.argmax()]
            best = None
            best_iou = -1.0
            for gi in unmatched:
                obj = gt_frame.objects[gi]
                if obj.class_label != pred_label:
                    continue
                iou = box_iou(slot.box, obj.box)
                if iou >= match_iou and iou > best_iou:
                    best, best_iou = gi, iou
            if best is None:
                fp += 1
            else:
                tp += 1
                unmatched.remove(best)
        fn += len(unmatched)
    if tp + fp == 0 and tp + fn == 0:
        return 1.0
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)
