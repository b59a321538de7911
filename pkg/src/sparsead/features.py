"""Spatio-temporal cube features from grayscale video.

Frames are tiled into ``patch_h x patch_w`` patches; ``depth`` consecutive
frames of one patch form a cube. Each cube is described by the mean
absolute x, y and t gradients over a fixed cell grid, and the descriptors
are reduced with PCA.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sparsead.errors import DimensionError, FormatError, MissingDataError

VIDEO_MAGIC = b"SAVID001"
FEATURE_MAGIC = b"SAFEA001"

PATCH_W = 23
PATCH_H = 15
DEPTH = 5
CELL_GRID = (3, 7, 8)  # cells along (t, y, x)
RAW_DIM = 500


@dataclass
class VideoTensor:
    """``frames`` is a T x H x W array with intensities in [0, 1]."""

    frames: np.ndarray
    fps: float | None = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 3:
            raise DimensionError(f"video must be T x H x W, got shape {self.frames.shape}")

    @property
    def shape(self):
        return self.frames.shape


@dataclass(frozen=True)
class Provenance:
    """Where a feature came from.

    ``frame_index`` is the first frame of the cube and ``frame_count`` the
    number of frames it spans. ``pixel_rect`` is ``(x, y, w, h)``.
    """

    frame_index: int
    frame_count: int
    patch_row: int
    patch_col: int
    pixel_rect: tuple[int, int, int, int]

    def frames(self):
        return range(self.frame_index, self.frame_index + self.frame_count)


@dataclass
class FeatureMatrix:
    """``vectors`` is n x dim, one feature per row, with per-row provenance."""

    vectors: np.ndarray
    provenance: list[Provenance] = field(default_factory=list)

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=np.float64))
        if self.provenance and len(self.provenance) != self.vectors.shape[0]:
            raise DimensionError("provenance length does not match feature count")

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]


@dataclass
class Cube:
    data: np.ndarray  # depth x patch_h x patch_w
    provenance: Provenance


def extract_cubes(video, patch_w=PATCH_W, patch_h=PATCH_H, depth=DEPTH, stride=None):
    """Tile the video into cubes, discarding partial border patches.

    ``stride`` is ``(x, y, t)`` and defaults to the cube size
    (non-overlapping tiling). Cubes are ordered by start frame, then patch
    row, then patch column.
    """
    frames = video.frames if isinstance(video, VideoTensor) else np.asarray(video)
    if frames.ndim != 3:
        raise DimensionError(f"video must be T x H x W, got shape {frames.shape}")
    T, H, W = frames.shape
    sx, sy, st = stride if stride is not None else (patch_w, patch_h, depth)
    if T < depth:
        raise ValueError(f"video has {T} frames, fewer than cube depth {depth}")
    if H < patch_h or W < patch_w:
        raise ValueError(f"frame {H}x{W} smaller than patch {patch_h}x{patch_w}")
    cubes = []
    for t0 in range(0, T - depth + 1, st):
        for r, y0 in enumerate(range(0, H - patch_h + 1, sy)):
            for c, x0 in enumerate(range(0, W - patch_w + 1, sx)):
                data = frames[t0:t0 + depth, y0:y0 + patch_h, x0:x0 + patch_w]
                prov = Provenance(t0, depth, r, c, (x0, y0, patch_w, patch_h))
                cubes.append(Cube(np.asarray(data, dtype=np.float64), prov))
    return cubes


def _cell_edges(n, cells):
    return [len(a) for a in np.array_split(np.arange(n), cells)]


def gradient_descriptor(cube, shape=(DEPTH, PATCH_H, PATCH_W), cells=CELL_GRID, raw_dim=RAW_DIM):
    """Mean absolute 3D gradients over a cell grid.

    Gradients are central differences inside the cube and one-sided
    differences on its faces. The cube is cut into ``cells`` (t, y, x)
    near-equal cells; each cell contributes ``(|Gx|, |Gy|, |Gt|)`` means, in
    t-major, then y, then x cell order. The concatenation is truncated to
    ``raw_dim`` entries (the default 3x7x8 grid gives 504).
    """
    data = cube.data if isinstance(cube, Cube) else np.asarray(cube, dtype=np.float64)
    if data.shape != tuple(shape):
        raise DimensionError(f"cube shape {data.shape} != expected {tuple(shape)}")
    gt, gy, gx = np.gradient(data)
    mags = np.stack([np.abs(gx), np.abs(gy), np.abs(gt)], axis=-1)
    et, ey, ex = (np.cumsum([0] + _cell_edges(n, k)) for n, k in zip(data.shape, cells))
    out = np.empty((cells[0], cells[1], cells[2], 3))
    for i in range(cells[0]):
        for j in range(cells[1]):
            for k in range(cells[2]):
                block = mags[et[i]:et[i + 1], ey[j]:ey[j + 1], ex[k]:ex[k + 1]]
                out[i, j, k] = block.reshape(-1, 3).mean(axis=0)
    flat = out.ravel()
    if raw_dim > flat.size:
        raise DimensionError(f"cell grid yields {flat.size} values, fewer than raw_dim {raw_dim}")
    return flat[:raw_dim].copy()


def extract_features(video, patch_w=PATCH_W, patch_h=PATCH_H, depth=DEPTH, stride=None,
                     cells=CELL_GRID, raw_dim=RAW_DIM) -> FeatureMatrix:
    cubes = extract_cubes(video, patch_w, patch_h, depth, stride)
    shape = (depth, patch_h, patch_w)
    vecs = np.array([gradient_descriptor(c, shape, cells, raw_dim) for c in cubes])
    return FeatureMatrix(vecs, [c.provenance for c in cubes])


@dataclass
class PcaModel:
    """Mean, orthonormal basis (dim x k) and per-component variances."""

    mean: np.ndarray
    basis: np.ndarray
    explained_variance: np.ndarray
    total_variance: float

    @property
    def k(self):
        return self.basis.shape[1]

    def explained_ratio(self):
        if self.total_variance == 0:
            return 1.0
        return float(self.explained_variance.sum() / self.total_variance)


def pca_fit(features, k=100) -> PcaModel:
    """Principal directions from the eigen-decomposition of the covariance.

    The covariance is normalized by n, so the mean squared reconstruction
    error on the training rows equals the sum of discarded eigenvalues.
    Each basis vector is signed so its largest-magnitude entry is positive.
    """
    X = features.vectors if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=np.float64)
    n, dim = X.shape
    if n < 2:
        raise MissingDataError("PCA needs at least two rows")
    if not 1 <= k <= min(n, dim):
        raise ValueError(f"k={k} must be in 1..{min(n, dim)}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / n
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(-vals, kind="stable")
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order[:k]]
    lead = np.argmax(np.abs(vecs), axis=0)
    vecs *= np.where(vecs[lead, np.arange(k)] < 0, -1.0, 1.0)
    return PcaModel(mean, vecs, vals[:k].copy(), float(vals.sum()))


def pca_apply(model: PcaModel, features):
    """Project rows onto the basis: ``(x - mean) @ basis``. Provenance is kept."""
    if isinstance(features, FeatureMatrix):
        X, prov = features.vectors, features.provenance
    else:
        X, prov = np.atleast_2d(np.asarray(features, dtype=np.float64)), []
    if X.shape[1] != model.mean.shape[0]:
        raise DimensionError(f"features have dimension {X.shape[1]}, PCA model expects {model.mean.shape[0]}")
    return FeatureMatrix((X - model.mean) @ model.basis, list(prov))


def save_pca(model: PcaModel, path):
    with open(path, "wb") as fh:
        np.savez(fh, mean=model.mean, basis=model.basis,
                 explained_variance=model.explained_variance,
                 total_variance=np.array(model.total_variance))


def load_pca(path) -> PcaModel:
    try:
        with np.load(path) as z:
            return PcaModel(z["mean"], z["basis"], z["explained_variance"], float(z["total_variance"]))
    except (KeyError, ValueError, OSError) as exc:
        raise FormatError(f"{path}: not a PCA model ({exc})", code="bad_header") from exc


# --- file formats -----------------------------------------------------------

def save_video(video, path):
    """Layout: magic ``SAVID001``, u32 T, H, W, then T*H*W float32 (little-endian)."""
    frames = video.frames if isinstance(video, VideoTensor) else np.asarray(video)
    T, H, W = frames.shape
    with open(path, "wb") as fh:
        fh.write(VIDEO_MAGIC + struct.pack("<III", T, H, W))
        fh.write(np.ascontiguousarray(frames, dtype="<f4").tobytes())


def load_video(path) -> VideoTensor:
    raw = Path(path).read_bytes()
    if raw[:8] != VIDEO_MAGIC:
        raise FormatError(f"{path}: bad magic", code="bad_magic")
    if len(raw) < 20:
        raise FormatError(f"{path}: truncated header", code="bad_header")
    T, H, W = struct.unpack_from("<III", raw, 8)
    if len(raw) != 20 + 4 * T * H * W:
        raise FormatError(f"{path}: payload size does not match {T}x{H}x{W}", code="dimension_mismatch")
    frames = np.frombuffer(raw, dtype="<f4", offset=20).reshape(T, H, W).astype(np.float32)
    return VideoTensor(frames)


def _read_pgm(path):
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header", code="bad_header")
        tokens.append(data[start:pos])
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == b"P5":
        dtype = ">u2" if maxval > 255 else "u1"
        body = data[pos + 1:]
        img = np.frombuffer(body, dtype=dtype, count=w * h)
    elif magic == b"P2":
        img = np.array(data[pos:].split()[:w * h], dtype=np.int64)
    else:
        raise FormatError(f"{path}: not a PGM file", code="bad_magic")
    if img.size != w * h:
        raise FormatError(f"{path}: PGM pixel count mismatch", code="dimension_mismatch")
    return img.reshape(h, w).astype(np.float64) / maxval


def load_pgm_sequence(directory) -> VideoTensor:
    """Load ``*.pgm`` files in name order, scaling each by its maxval."""
    paths = sorted(Path(directory).glob("*.pgm"))
    if not paths:
        raise MissingDataError(f"no .pgm files in {directory}")
    frames = [_read_pgm(p) for p in paths]
    if len({f.shape for f in frames}) != 1:
        raise DimensionError("PGM frames have differing sizes")
    return VideoTensor(np.stack(frames).astype(np.float32))


_PROV = np.dtype([("frame", "<u4"), ("count", "<u4"), ("row", "<u4"), ("col", "<u4"),
                  ("x", "<u4"), ("y", "<u4"), ("w", "<u4"), ("h", "<u4")])


def save_features(fm: FeatureMatrix, path):
    """Layout: magic ``SAFEA001``, u32 n, u32 dim, n*dim float64 row-major, then
    n provenance records of u32 (frame_index, frame_count, patch_row,
    patch_col, x, y, w, h). Rows without provenance store all zeros.
    """
    n, dim = fm.vectors.shape
    rec = np.zeros(n, dtype=_PROV)
    for i, pv in enumerate(fm.provenance):
        rec[i] = (pv.frame_index, pv.frame_count, pv.patch_row, pv.patch_col, *pv.pixel_rect)
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC + struct.pack("<II", n, dim))
        fh.write(np.ascontiguousarray(fm.vectors, dtype="<f8").tobytes())
        fh.write(rec.tobytes())


def load_features(path) -> FeatureMatrix:
    raw = Path(path).read_bytes()
    if raw[:8] != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic", code="bad_magic")
    if len(raw) < 16:
        raise FormatError(f"{path}: truncated header", code="bad_header")
    n, dim = struct.unpack_from("<II", raw, 8)
    if len(raw) != 16 + 8 * n * dim + n * _PROV.itemsize:
        raise FormatError(f"{path}: size does not match {n}x{dim}", code="dimension_mismatch")
    vecs = np.frombuffer(raw, dtype="<f8", count=n * dim, offset=16).reshape(n, dim).copy()
    rec = np.frombuffer(raw, dtype=_PROV, count=n, offset=16 + 8 * n * dim)
    prov = [Provenance(int(r["frame"]), int(r["count"]), int(r["row"]), int(r["col"]),
                       (int(r["x"]), int(r["y"]), int(r["w"]), int(r["h"]))) for r in rec]
    if n and all(p.frame_count == 0 for p in prov):
        prov = []
    return FeatureMatrix(vecs, prov)
