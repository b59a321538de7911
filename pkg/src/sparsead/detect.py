"""Anomaly scores from sparse codes, and their per-frame aggregation.

All four measurements follow one convention: a higher score is more
anomalous.

RE   squared reconstruction error ``||y - D a||^2`` of the actual code.
ARE  least-squares projection residual ``||y - D D^+ y||`` (no code needed).
MC   ``1 - max|a_j| / ||a||_1``: low when one coefficient dominates.
NC   ``1 - max_b ||a_b||_1 / ||a||_1``: low when one atom block holds the mass.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from sparsead.errors import BlockPartitionError, DimensionError, FormatError

log = logging.getLogger(__name__)

METHODS = ("re", "are", "mc", "nc")


def _atoms(D):
    return np.asarray(getattr(D, "atoms", D), dtype=np.float64)


def _coeffs(code):
    return np.asarray(getattr(code, "coeffs", code), dtype=np.float64)


def score_re(y, code, D) -> float:
    A = _atoms(D)
    a = _coeffs(code)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.shape[0],) or a.shape != (A.shape[1],):
        raise DimensionError(f"RE operands disagree: y {y.shape}, code {a.shape}, D {A.shape}")
    r = y - A @ a
    return float(r @ r)


def range_basis(A, tol=1e-10):
    """Orthonormal basis for the column space of ``A`` (via SVD)."""
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    rank = int(np.sum(s > tol * s[0]))
    return U[:, :rank]


def _projection_residual(Y, U):
    R = Y - (Y @ U) @ U.T
    return np.linalg.norm(R, axis=1)


def score_are(y, D, blockwise=False) -> float:
    """Projection residual of ``y`` on the span of ``D``.

    Equals ``||y - D (D^T D)^{-1} D^T y||`` when ``D^T D`` is invertible;
    otherwise the pseudo-inverse is used. For an overcomplete dictionary of
    full row rank the span is everything and the score is zero, so
    ``blockwise=True`` takes the minimum residual over the atom blocks.
    """
    return float(are_scores(np.asarray(y, dtype=np.float64)[None, :], D, blockwise)[0])


def are_scores(Y, D, blockwise=False):
    A = _atoms(D)
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if Y.shape[1] != A.shape[0]:
        raise DimensionError(f"features have dimension {Y.shape[1]}, dictionary expects {A.shape[0]}")
    if not blockwise:
        return _projection_residual(Y, range_basis(A))
    blocks = getattr(D, "block_indices", lambda: None)()
    if blocks is None:
        raise BlockPartitionError("blockwise ARE requires blocked dictionary")
    res = np.stack([_projection_residual(Y, range_basis(A[:, idx])) for idx in blocks])
    return res.min(axis=0)


def full_span_warning(D) -> str | None:
    """Message when plain ARE is identically zero for this dictionary."""
    A = _atoms(D)
    p, m = A.shape
    if m > p and range_basis(A).shape[1] == p:
        return (f"dictionary has rank {p} = feature dimension with {m} > {p} atoms: "
                "plain ARE is zero for every feature; use blockwise ARE")
    return None


def score_mc(code) -> float:
    a = np.abs(_coeffs(code))
    total = a.sum()
    if total == 0:
        return 1.0
    return float(1.0 - a.max() / total)


def score_nc(code, D) -> float:
    blocks = getattr(D, "block_indices", lambda: None)()
    if blocks is None:
        raise BlockPartitionError("NC requires blocked dictionary")
    a = np.abs(_coeffs(code))
    if a.shape[0] != sum(len(b) for b in blocks):
        raise DimensionError("code length does not match dictionary")
    total = a.sum()
    if total == 0:
        return 1.0
    return float(1.0 - max(a[b].sum() for b in blocks) / total)


def score_features(Y, codes, D, method, blockwise_are=False):
    """Vector of per-feature scores for one method.

    ``codes`` may be ``None`` for ARE. ``blockwise_are`` applies only to
    ARE and uses the block minimum when the dictionary carries blocks.
    """
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"unknown detector {method!r}; choose from {', '.join(METHODS)}")
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if method == "are":
        use_blocks = blockwise_are and getattr(D, "blocks", None) is not None
        if not use_blocks:
            msg = full_span_warning(D)
            if msg:
                log.warning(msg)
        return are_scores(Y, D, use_blocks)
    if codes is None or len(codes) != Y.shape[0]:
        raise DimensionError("need one code per feature")
    if method == "re":
        return np.array([score_re(y, c, D) for y, c in zip(Y, codes)])
    if method == "mc":
        return np.array([score_mc(c) for c in codes])
    if getattr(D, "blocks", None) is None:
        raise BlockPartitionError("NC requires blocked dictionary")
    return np.array([score_nc(c, D) for c in codes])


@dataclass
class ScoreSet:
    """Per-feature scores, their per-frame maxima and feature provenance.

    A feature contributes to every frame its cube spans.
    """

    per_feature: np.ndarray
    per_frame: dict[int, float]
    method: str
    provenance: list = field(default_factory=list)


def aggregate_frames(per_feature, provenance, method="re") -> ScoreSet:
    """Frame score = max over the scores of features covering the frame."""
    scores = np.asarray(per_feature, dtype=np.float64)
    if len(provenance) != scores.shape[0]:
        raise DimensionError("every feature needs provenance with a frame index")
    per_frame = {}
    for s, pv in zip(scores, provenance):
        for f in pv.frames():
            if f not in per_frame or s > per_frame[f]:
                per_frame[f] = float(s)
    return ScoreSet(scores, dict(sorted(per_frame.items())), method, list(provenance))


# --- CSV files ---------------------------------------------------------------

SCORE_HEADER = ["feature_id", "frame", "patch_row", "patch_col", "score"]
FRAME_HEADER = ["frame", "score"]


def save_scores(ss: ScoreSet, path, frames_path=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCORE_HEADER)
        for i, (s, pv) in enumerate(zip(ss.per_feature, ss.provenance)):
            w.writerow([i, pv.frame_index, pv.patch_row, pv.patch_col, repr(float(s))])
    if frames_path is not None:
        with open(frames_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(FRAME_HEADER)
            for f, s in ss.per_frame.items():
                w.writerow([f, repr(float(s))])


def load_scores(path, patch_w, patch_h, depth, stride=None, method="re") -> ScoreSet:
    """Read a scores CSV; pixel footprints are rebuilt from the patch geometry."""
    from sparsead.features import Provenance

    sx, sy, _ = stride if stride is not None else (patch_w, patch_h, depth)
    scores, prov = [], []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != SCORE_HEADER:
            raise FormatError(f"{path}: expected header {','.join(SCORE_HEADER)}", code="bad_header")
        for row in r:
            try:
                _, frame, prow, pcol, score = row
                prow, pcol = int(prow), int(pcol)
                prov.append(Provenance(int(frame), depth, prow, pcol,
                                       (pcol * sx, prow * sy, patch_w, patch_h)))
                scores.append(float(score))
            except ValueError as exc:
                raise FormatError(f"{path}: malformed row {row}", code="bad_header") from exc
    return aggregate_frames(np.array(scores), prov, method)
