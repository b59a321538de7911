"""Overcomplete dictionaries: K-SVD training, atom normalization, persistence.

A dictionary is stored column-wise: ``atoms[:, j]`` is atom ``j``. Training
features arrive row-wise (one feature vector per row), matching the feature
file layout.
"""

from __future__ import annotations

import logging
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sparsead.errors import DimensionError, FormatError, MissingDataError

log = logging.getLogger(__name__)

MAGIC = b"SADICT01"
UNIT_NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Column dictionary with an optional contiguous block partition.

    Parameters
    ----------
    atoms : ndarray, shape (p, m)
        One atom per column.
    blocks : tuple of (start, length) pairs, optional
        Disjoint contiguous column ranges covering ``0..m-1``. Needed by the
        non-zero concentration detector and blockwise ARE.
    """

    atoms: np.ndarray
    blocks: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=np.float64, copy=True)
        if atoms.ndim != 2 or atoms.shape[0] < 1 or atoms.shape[1] < 1:
            raise DimensionError(f"dictionary must be a non-empty p x m matrix, got shape {atoms.shape}")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        if self.blocks is not None:
            blocks = tuple((int(s), int(n)) for s, n in self.blocks)
            _check_blocks(blocks, atoms.shape[1])
            object.__setattr__(self, "blocks", blocks)

    @property
    def p(self) -> int:
        return self.atoms.shape[0]

    @property
    def m(self) -> int:
        return self.atoms.shape[1]

    def block_indices(self):
        """List of index arrays, one per block."""
        if self.blocks is None:
            return None
        return [np.arange(s, s + n) for s, n in self.blocks]

    def with_blocks(self, blocks) -> "Dictionary":
        return Dictionary(self.atoms, blocks)

    def is_normalized(self, tol=UNIT_NORM_TOL) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.atoms, axis=0) - 1.0) <= tol))

    def __eq__(self, other):
        if not isinstance(other, Dictionary):
            return NotImplemented
        return (self.atoms.shape == other.atoms.shape
                and np.array_equal(self.atoms, other.atoms)
                and self.blocks == other.blocks)

    __hash__ = None


def _check_blocks(blocks, m):
    covered = np.zeros(m, dtype=int)
    for start, length in blocks:
        if length < 1 or start < 0 or start + length > m:
            raise DimensionError(f"block ({start}, {length}) outside 0..{m - 1}")
        covered[start:start + length] += 1
    if not np.all(covered == 1):
        raise DimensionError("blocks must be disjoint and cover every atom")


def equal_blocks(m: int, count: int) -> tuple[tuple[int, int], ...]:
    """Split ``m`` columns into ``count`` contiguous, near-equal ranges."""
    if count < 1 or count > m:
        raise ValueError(f"cannot split {m} atoms into {count} blocks")
    sizes = [len(a) for a in np.array_split(np.arange(m), count)]
    starts = np.cumsum([0] + sizes[:-1])
    return tuple((int(s), int(n)) for s, n in zip(starts, sizes))


@dataclass
class TrainConfig:
    """K-SVD settings.

    ``sparsity`` is the number of non-zeros allowed per training code and
    must satisfy ``1 <= sparsity < p`` (checked against the data). ``blocks``
    is the number of equal contiguous atom groups recorded on the result,
    capped at ``atom_count``; ``None`` leaves the dictionary unblocked.
    """

    atom_count: int = 1000
    sparsity: int = 5
    sweeps: int = 20
    seed: int = 0
    tol: float = 1e-8
    blocks: int | None = 10

    def __post_init__(self):
        if self.atom_count < 1:
            raise ValueError("atom_count must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.sparsity < 1:
            raise ValueError("sparsity must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")


def _random_unit_vectors(rng, p, count):
    v = rng.standard_normal((p, count))
    v /= np.linalg.norm(v, axis=0)
    return v


def normalize_atoms(D, seed: int = 0) -> Dictionary:
    """Scale every atom to unit L2 norm.

    Zero columns cannot be scaled; each is replaced with a random unit
    vector drawn from a generator seeded with ``seed`` and a warning is
    logged. ``D`` may be a :class:`Dictionary` or a bare ``p x m`` array.
    """
    blocks = D.blocks if isinstance(D, Dictionary) else None
    atoms = np.array(D.atoms if isinstance(D, Dictionary) else D, dtype=np.float64)
    if atoms.ndim != 2:
        raise DimensionError("expected a p x m matrix")
    norms = np.linalg.norm(atoms, axis=0)
    zero = np.flatnonzero(norms == 0)
    ok = norms > 0
    # Already-unit columns are left untouched so normalization is idempotent.
    scale = ok & (np.abs(norms - 1.0) > 1e-12)
    atoms[:, scale] /= norms[scale]
    if zero.size:
        rng = np.random.default_rng(seed)
        atoms[:, zero] = _random_unit_vectors(rng, atoms.shape[0], zero.size)
        log.warning("replaced %d zero atom(s) with random unit vectors: %s", zero.size, zero.tolist())
    return Dictionary(atoms, blocks)


def _sign_fix(d):
    nz = np.flatnonzero(np.abs(d) > 1e-12)
    if nz.size and d[nz[0]] < 0:
        return -1.0
    return 1.0


def _code_rows(D, Y, sparsity):
    from sparsead.pursuit import PursuitConfig, omp_encode

    cfg = PursuitConfig(max_iter=sparsity, residual_tol=1e-12)
    X = np.zeros((Y.shape[0], D.shape[1]))
    for i, y in enumerate(Y):
        X[i] = omp_encode(D, y, cfg).coeffs
    return X


def ksvd_train(features, cfg: TrainConfig, init: Dictionary | None = None, return_history=False):
    """Learn a dictionary with K-SVD.

    Each sweep codes every training row with OMP (``cfg.sparsity`` atoms),
    then revisits the atoms in index order, replacing each atom and its
    coefficient row by the leading singular pair of the residual restricted
    to the rows that use it. Atoms no row uses are replaced by the
    worst-reconstructed training rows.

    A freshly computed OMP code is only accepted for a row when it does not
    increase that row's error under the current dictionary, which makes the
    total squared error non-increasing from sweep to sweep.

    Parameters
    ----------
    features : array_like, shape (n, p)
        Training vectors, one per row.
    cfg : TrainConfig
    init : Dictionary, optional
        Warm-start atoms; must have ``cfg.atom_count`` columns of length p.
    return_history : bool
        Also return the total squared error after each sweep.

    Returns
    -------
    Dictionary, or (Dictionary, list of float)
    """
    Y = np.asarray(features, dtype=np.float64)
    if Y.size == 0:
        raise MissingDataError("no training data")
    if Y.ndim != 2:
        raise DimensionError(f"features must be an n x p matrix, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise ValueError("training features contain non-finite values")
    n, p = Y.shape
    m = cfg.atom_count
    if p > 1 and not cfg.sparsity < p:
        raise ValueError(f"sparsity {cfg.sparsity} must be < feature dimension {p}")
    T = min(cfg.sparsity, p, m)

    rng = np.random.default_rng(cfg.seed)
    if init is not None:
        if init.p != p or init.m != m:
            raise DimensionError(f"initial dictionary is {init.p}x{init.m}, expected {p}x{m}")
        D = np.array(init.atoms)
    else:
        norms = np.linalg.norm(Y, axis=1)
        usable = np.flatnonzero(norms > 0)
        take = rng.permutation(usable)[:m]
        D = np.empty((p, m))
        D[:, :take.size] = (Y[take] / norms[take, None]).T
        if take.size < m:
            D[:, take.size:] = _random_unit_vectors(rng, p, m - take.size)
    D = normalize_atoms(D, seed=cfg.seed).atoms.copy()

    X = None
    history = []
    for sweep in range(cfg.sweeps):
        X_new = _code_rows(D, Y, T)
        if X is None:
            X = X_new
        else:
            err_old = np.sum((Y - X @ D.T) ** 2, axis=1)
            err_new = np.sum((Y - X_new @ D.T) ** 2, axis=1)
            keep = err_new <= err_old
            X[keep] = X_new[keep]

        dead = []
        for k in range(m):
            omega = np.flatnonzero(X[:, k])
            if omega.size == 0:
                dead.append(k)
                continue
            E = Y[omega] - X[omega] @ D.T + np.outer(X[omega, k], D[:, k])
            U, S, Vt = np.linalg.svd(E, full_matrices=False)
            d = Vt[0]
            xk = S[0] * U[:, 0]
            sgn = _sign_fix(d)
            D[:, k] = sgn * d
            X[omega, k] = sgn * xk

        if dead:
            row_err = np.sum((Y - X @ D.T) ** 2, axis=1)
            order = np.argsort(-row_err, kind="stable")
            order = order[np.linalg.norm(Y[order], axis=1) > 0]
            for k, i in zip(dead, order):
                D[:, k] = Y[i] / np.linalg.norm(Y[i])
            log.debug("sweep %d: replaced %d unused atom(s)", sweep, min(len(dead), order.size))

        err = float(np.sum((Y - X @ D.T) ** 2))
        history.append(err)
        log.debug("sweep %d: total squared error %.6g", sweep, err)
        if err <= cfg.tol:
            break

    blocks = equal_blocks(m, min(cfg.blocks, m)) if cfg.blocks else None
    result = Dictionary(D, blocks)
    if return_history:
        return result, history
    return result


def save_dictionary(D: Dictionary, path) -> None:
    """Write ``D`` in the binary dictionary layout.

    Layout (little-endian): magic ``SADICT01``; u32 p, m, B; B pairs of
    u32 (block start, block length); p*m float64 in column-major order; u32
    CRC32 of every byte between the magic and the checksum.
    """
    blocks = D.blocks or ()
    payload = bytearray(struct.pack("<III", D.p, D.m, len(blocks)))
    for start, length in blocks:
        payload += struct.pack("<II", start, length)
    payload += np.asarray(D.atoms, dtype="<f8").tobytes(order="F")
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    Path(path).write_bytes(MAGIC + bytes(payload) + struct.pack("<I", crc))


def load_dictionary(path) -> Dictionary:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic", code="bad_magic")
    if len(raw) < 8 + 12 + 4:
        raise FormatError(f"{path}: truncated header", code="bad_header")
    p, m, nb = struct.unpack_from("<III", raw, 8)
    if p == 0 or m == 0:
        raise FormatError(f"{path}: header declares empty dictionary", code="bad_header")
    off = 20
    expected = off + 8 * nb + 8 * p * m + 4
    if len(raw) != expected:
        raise FormatError(f"{path}: size {len(raw)} does not match {p}x{m} with {nb} blocks",
                          code="dimension_mismatch")
    payload = raw[8:-4]
    (crc,) = struct.unpack_from("<I", raw, len(raw) - 4)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise FormatError(f"{path}: checksum failure", code="checksum")
    blocks = [struct.unpack_from("<II", raw, off + 8 * i) for i in range(nb)]
    off += 8 * nb
    atoms = np.frombuffer(raw, dtype="<f8", count=p * m, offset=off).reshape((p, m), order="F")
    try:
        return Dictionary(atoms, tuple(blocks) if nb else None)
    except DimensionError as exc:
        raise FormatError(f"{path}: {exc}", code="dimension_mismatch") from exc


def export_csv(D: Dictionary, path) -> None:
    """Debug export: one atom per line."""
    np.savetxt(path, D.atoms.T, delimiter=",", fmt="%.17g")
