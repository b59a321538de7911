"""Frame-level and pixel-level ROC evaluation.

Frame level: a frame is flagged when its score (the max over features
covering it) reaches the threshold. Pixel level: an abnormal frame counts
as detected only when the flagged features' footprints cover at least a
fraction ``overlap`` (default 0.4) of its true anomaly pixels; a normal
frame is a false positive as soon as any feature covering it is flagged.

Thresholds are swept over the distinct score values with ``score >=
threshold`` counting as flagged, and the (0, 0) and (1, 1) endpoints are
always present.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from sparsead.errors import DimensionError, MissingDataError


@dataclass
class GroundTruth:
    """Frame labels (True = abnormal) and optional per-frame pixel masks."""

    frame_labels: dict[int, bool]
    pixel_masks: dict[int, np.ndarray] | None = None

    def __post_init__(self):
        if self.pixel_masks is not None:
            for f, mask in self.pixel_masks.items():
                if bool(np.any(mask)) != bool(self.frame_labels.get(f, False)):
                    raise ValueError(f"frame {f}: label disagrees with its pixel mask")

    @classmethod
    def from_masks(cls, masks):
        """Build from a T x H x W boolean array; non-empty mask = abnormal frame."""
        masks = np.asarray(masks, dtype=bool)
        labels = {f: bool(masks[f].any()) for f in range(masks.shape[0])}
        return cls(labels, {f: masks[f] for f in range(masks.shape[0])})


@dataclass
class EvalReport:
    """ROC curve and summary numbers for one evaluation level.

    ``eer`` is the false positive rate at the point where it equals the
    miss rate; ``edr`` (pixel level only) is the detection rate there.
    ``eq_point`` holds both coordinates ``(fpr, tpr)`` of that point.
    """

    level: str
    roc: list[tuple[float, float, float]]
    auc: float
    eer: float
    edr: float | None = None
    eq_point: tuple[float, float] = (0.0, 0.0)

    def to_dict(self):
        def thr(t):
            return None if math.isinf(t) else t

        return {
            "level": self.level,
            "auc": self.auc,
            "eer": self.eer,
            "edr": self.edr,
            "eq_fpr": self.eq_point[0],
            "eq_tpr": self.eq_point[1],
            "roc": [{"threshold": thr(t), "fpr": f, "tpr": p} for t, f, p in self.roc],
        }


def _with_endpoints(points):
    pts = [(float(f), float(t)) for f, t in points]
    if len(pts) < 2:
        raise ValueError("degenerate ROC: need at least two points")
    if (0.0, 0.0) not in pts:
        pts.append((0.0, 0.0))
    if (1.0, 1.0) not in pts:
        pts.append((1.0, 1.0))
    return sorted(pts)


def auc(points) -> float:
    """Trapezoidal area under ``(fpr, tpr)`` points."""
    pts = np.array(_with_endpoints(points))
    f, t = pts[:, 0], pts[:, 1]
    return float(np.sum(np.diff(f) * (t[1:] + t[:-1]) / 2.0))


def equal_error_point(points):
    """``(fpr, tpr)`` where ``fpr == 1 - tpr``, linearly interpolated."""
    pts = _with_endpoints(points)
    g = [f + t - 1.0 for f, t in pts]
    for i in range(len(pts) - 1):
        if g[i] == 0.0:
            return pts[i]
        if g[i] < 0.0 <= g[i + 1]:
            s = -g[i] / (g[i + 1] - g[i])
            f = pts[i][0] + s * (pts[i + 1][0] - pts[i][0])
            t = pts[i][1] + s * (pts[i + 1][1] - pts[i][1])
            return (f, t)
    return pts[-1]


def eer(points) -> float:
    """Equal error rate: the false positive rate at the equal error point."""
    return equal_error_point(points)[0]


def _sweep(crit_pos, crit_neg, thresholds):
    """ROC from per-item critical scores.

    An item is flagged at threshold ``t`` iff its critical score is ``>= t``
    (``-inf`` = never flagged). Returns ``(threshold, fpr, tpr)`` rows in
    decreasing threshold order including both endpoints.
    """
    pos = np.sort(np.asarray(crit_pos, dtype=np.float64))
    neg = np.sort(np.asarray(crit_neg, dtype=np.float64))
    if pos.size == 0 or neg.size == 0:
        raise MissingDataError("evaluation needs both normal and abnormal frames")
    thr = np.unique(np.asarray(thresholds, dtype=np.float64))[::-1]
    thr = thr[np.isfinite(thr)]
    tp = pos.size - np.searchsorted(pos, thr, side="left")
    fp = neg.size - np.searchsorted(neg, thr, side="left")
    rows = [(math.inf, 0.0, 0.0)]
    rows += [(float(t), float(fp_ / neg.size), float(tp_ / pos.size)) for t, fp_, tp_ in zip(thr, fp, tp)]
    if rows[-1][1:] != (1.0, 1.0):
        rows.append((-math.inf, 1.0, 1.0))
    return rows


def _report(level, rows, pixel=False):
    pts = [(f, t) for _, f, t in rows]
    fpr_eq, tpr_eq = equal_error_point(pts)
    return EvalReport(level, rows, auc(pts), fpr_eq, tpr_eq if pixel else None, (fpr_eq, tpr_eq))


def _labelled_frames(scores, gt):
    frames = sorted(gt.frame_labels)
    missing = [f for f in frames if f not in scores.per_frame]
    if missing:
        shown = ", ".join(map(str, missing[:20])) + (" ..." if len(missing) > 20 else "")
        raise MissingDataError(f"no score for labelled frame(s): {shown}")
    return frames


def roc_frame(scores, gt: GroundTruth) -> EvalReport:
    frames = _labelled_frames(scores, gt)
    s = np.array([scores.per_frame[f] for f in frames])
    lab = np.array([gt.frame_labels[f] for f in frames], dtype=bool)
    return _report("frame", _sweep(s[lab], s[~lab], s))


def _covering(scores, frames):
    by_frame = {f: [] for f in frames}
    for s, pv in zip(scores.per_feature, scores.provenance):
        for f in pv.frames():
            if f in by_frame:
                by_frame[f].append((float(s), pv.pixel_rect))
    return by_frame


def pixel_critical_scores(scores, gt: GroundTruth, overlap=0.40):
    """Per-frame critical thresholds for the pixel-level rule.

    For an abnormal frame: the largest threshold at which the union of
    flagged footprints covers ``>= overlap`` of its truth mask. For a
    normal frame: the largest score among features covering it. ``-inf``
    when the frame can never be flagged.
    """
    if gt.pixel_masks is None:
        raise MissingDataError("pixel-level evaluation needs pixel masks")
    frames = _labelled_frames(scores, gt)
    need = Fraction(overlap).limit_denominator(10**9)
    by_frame = _covering(scores, frames)
    pos, neg = [], []
    for f in frames:
        feats = by_frame[f]
        if not gt.frame_labels[f]:
            neg.append(max((s for s, _ in feats), default=-math.inf))
            continue
        truth = np.asarray(gt.pixel_masks[f], dtype=bool)
        total = int(truth.sum())
        covered = np.zeros_like(truth)
        crit = -math.inf
        feats.sort(key=lambda e: -e[0])
        i = 0
        while i < len(feats):
            level = feats[i][0]
            while i < len(feats) and feats[i][0] == level:
                x, y, w, h = feats[i][1]
                covered[y:y + h, x:x + w] = True
                i += 1
            hits = int(np.count_nonzero(covered & truth))
            if hits * need.denominator >= need.numerator * total:
                crit = level
                break
        pos.append(crit)
    return np.array(pos), np.array(neg)


def roc_pixel(scores, gt: GroundTruth, overlap=0.40) -> EvalReport:
    pos, neg = pixel_critical_scores(scores, gt, overlap)
    return _report("pixel", _sweep(pos, neg, scores.per_feature), pixel=True)


# --- output -----------------------------------------------------------------

def write_report(reports, path):
    """JSON: one report object, or a list when several levels are given."""
    if isinstance(reports, EvalReport):
        payload = reports.to_dict()
    else:
        payload = [r.to_dict() for r in reports]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, allow_nan=False)
        fh.write("\n")


def write_roc_csv(report: EvalReport, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in report.roc:
            w.writerow([repr(float(t)), repr(float(f)), repr(float(p))])


# --- mask files -------------------------------------------------------------

MASK_MAGIC = b"SAMSK001"


def save_masks(masks, path):
    """Layout: magic ``SAMSK001``, u32 T, H, W; per frame u32 run count then
    that many (u32 start, u32 length) runs of set pixels in row-major order.
    """
    import struct

    masks = np.asarray(masks, dtype=bool)
    T, H, W = masks.shape
    buf = bytearray(MASK_MAGIC + struct.pack("<III", T, H, W))
    for f in range(T):
        flat = np.concatenate([[False], masks[f].ravel(), [False]]).astype(np.int8)
        edges = np.flatnonzero(np.diff(flat))
        starts, stops = edges[0::2], edges[1::2]
        buf += struct.pack("<I", starts.size)
        runs = np.empty(starts.size * 2, dtype="<u4")
        runs[0::2] = starts
        runs[1::2] = stops - starts
        buf += runs.tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(buf))


def load_masks(path):
    import struct

    from sparsead.errors import FormatError

    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MASK_MAGIC:
        raise FormatError(f"{path}: bad magic", code="bad_magic")
    try:
        T, H, W = struct.unpack_from("<III", raw, 8)
        off = 20
        masks = np.zeros((T, H * W), dtype=bool)
        for f in range(T):
            (n,) = struct.unpack_from("<I", raw, off)
            off += 4
            runs = np.frombuffer(raw, dtype="<u4", count=2 * n, offset=off)
            off += 8 * n
            for s, ln in zip(runs[0::2], runs[1::2]):
                if s + ln > H * W:
                    raise FormatError(f"{path}: run outside frame", code="dimension_mismatch")
                masks[f, s:s + ln] = True
    except (struct.error, ValueError) as exc:
        raise FormatError(f"{path}: truncated mask data", code="truncated") from exc
    if off != len(raw):
        raise FormatError(f"{path}: trailing bytes", code="dimension_mismatch")
    return masks.reshape(T, H, W)
