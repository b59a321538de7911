"""Sparse code container and the binary codes file."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sparsead.errors import FormatError

MAGIC = b"SACODE01"
ZERO_TOL = 1e-10


@dataclass
class SparseCode:
    """Coefficients of one feature over a dictionary.

    ``support`` lists column indices in the order the coder selected them
    and always contains every index with a non-zero coefficient (it may
    also contain indices whose coefficient came out exactly zero).
    ``residual_norm`` is ``||y - D @ coeffs||_2`` recomputed from the final
    coefficients. ``history`` holds the per-iteration residual norm (greedy
    coders) or objective (convex coders) when available.
    """

    coeffs: np.ndarray
    support: tuple[int, ...]
    residual_norm: float
    iterations: int
    flags: tuple[str, ...] = ()
    history: np.ndarray | None = field(default=None, repr=False)

    @property
    def m(self):
        return self.coeffs.shape[0]

    def nnz(self, tol=0.0) -> int:
        """Number of entries with magnitude above ``tol``."""
        if tol == 0.0:
            return int(np.count_nonzero(self.coeffs))
        return int(np.count_nonzero(np.abs(self.coeffs) >= tol))

    def density(self, truncate=True) -> float:
        """Fraction of non-zero coefficients.

        With ``truncate`` values below 1e-10 in magnitude count as zero;
        otherwise every raw numerical non-zero counts.
        """
        return self.nnz(ZERO_TOL if truncate else 0.0) / self.m


def make_code(D, y, coeffs, support, iterations, flags=(), history=None) -> SparseCode:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    resid = float(np.linalg.norm(y - D @ coeffs))
    hist = None if history is None else np.asarray(history, dtype=np.float64)
    return SparseCode(coeffs, tuple(int(j) for j in support), resid, int(iterations), tuple(flags), hist)


def save_codes(codes, path, m: int | None = None) -> None:
    """Write codes in the binary codes layout.

    Layout (little-endian): magic ``SACODE01``; u32 n, u32 m; then per code
    u32 nnz, nnz pairs of (u32 index, float64 value) and a float64 residual
    norm. Only raw numerical non-zeros are stored.
    """
    codes = list(codes)
    if m is None:
        if not codes:
            raise ValueError("cannot infer m from an empty code list")
        m = codes[0].m
    buf = bytearray(MAGIC + struct.pack("<II", len(codes), m))
    for c in codes:
        if c.m != m:
            raise ValueError(f"code length {c.m} != {m}")
        idx = np.flatnonzero(c.coeffs)
        buf += struct.pack("<I", idx.size)
        rec = np.empty(idx.size, dtype=[("i", "<u4"), ("v", "<f8")])
        rec["i"] = idx
        rec["v"] = c.coeffs[idx]
        buf += rec.tobytes()
        buf += struct.pack("<d", c.residual_norm)
    Path(path).write_bytes(bytes(buf))


def load_codes(path) -> list[SparseCode]:
    """Read a codes file. Support is restored as the sorted non-zero indices."""
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic", code="bad_magic")
    if len(raw) < 16:
        raise FormatError(f"{path}: truncated header", code="bad_header")
    n, m = struct.unpack_from("<II", raw, 8)
    off = 16
    rec_t = np.dtype([("i", "<u4"), ("v", "<f8")])
    out = []
    try:
        for _ in range(n):
            (nnz,) = struct.unpack_from("<I", raw, off)
            off += 4
            if nnz > m:
                raise FormatError(f"{path}: record with {nnz} > {m} entries", code="dimension_mismatch")
            rec = np.frombuffer(raw, dtype=rec_t, count=nnz, offset=off)
            off += nnz * rec_t.itemsize
            (resid,) = struct.unpack_from("<d", raw, off)
            off += 8
            if nnz and rec["i"].max() >= m:
                raise FormatError(f"{path}: index out of range", code="dimension_mismatch")
            coeffs = np.zeros(m)
            coeffs[rec["i"]] = rec["v"]
            out.append(SparseCode(coeffs, tuple(int(i) for i in rec["i"]), float(resid), 0))
    except struct.error as exc:
        raise FormatError(f"{path}: truncated record", code="truncated") from exc
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: truncated record", code="truncated") from exc
    if off != len(raw):
        raise FormatError(f"{path}: {len(raw) - off} trailing bytes", code="dimension_mismatch")
    return out


def export_csv(codes, path) -> None:
    """Debug export: ``row,index,value`` per non-zero."""
    with open(path, "w") as fh:
        fh.write("row,index,value\n")
        for r, c in enumerate(codes):
            for j in np.flatnonzero(c.coeffs):
                fh.write(f"{r},{j},{float(c.coeffs[j])!r}\n")
