"""Greedy sparse coders: Matching Pursuit, Orthogonal MP and Stagewise OMP.

All coders take a dictionary (``Dictionary`` or a ``p x m`` array with unit
norm columns), a feature vector ``y`` of length p and a
:class:`PursuitConfig`. Argmax ties resolve to the lowest column index.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from sparsead.codes import SparseCode, make_code
from sparsead.errors import DimensionError

log = logging.getLogger(__name__)

RANK_TOL = 1e-10


@dataclass
class PursuitConfig:
    """Stopping rules and StOMP parameters.

    ``max_iter=None`` picks the per-coder default: ``m`` for MP and
    ``min(p, m)`` for OMP. StOMP ignores it and runs at most
    ``stomp_stages`` stages.
    """

    max_iter: int | None = None
    residual_tol: float = 1e-6
    stomp_threshold: float = 2.5
    stomp_stages: int = 10

    def __post_init__(self):
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.residual_tol < 0:
            raise ValueError("residual_tol must be >= 0")
        if self.stomp_threshold <= 0:
            raise ValueError("stomp_threshold must be > 0")
        if self.stomp_stages < 1:
            raise ValueError("stomp_stages must be >= 1")


def _operands(D, y):
    A = np.asarray(getattr(D, "atoms", D), dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != A.shape[0]:
        raise DimensionError(f"feature has shape {y.shape}, dictionary expects ({A.shape[0]},)")
    return A, y


def mp_encode(D, y, cfg: PursuitConfig | None = None) -> SparseCode:
    """Matching Pursuit.

    Starting from a zero code and residual ``y``, each step picks the atom
    with the largest absolute correlation to the residual and adds that
    correlation to its coefficient. Atoms may be picked again. Stops once
    the residual norm reaches ``residual_tol`` or after ``max_iter`` steps.
    """
    cfg = cfg or PursuitConfig()
    A, y = _operands(D, y)
    m = A.shape[1]
    max_iter = cfg.max_iter if cfg.max_iter is not None else m
    x = np.zeros(m)
    r = y.copy()
    rnorm = np.linalg.norm(r)
    floor = 1e-14 * max(1.0, rnorm)
    order = []
    seen = set()
    history = [rnorm]
    k = 0
    while k < max_iter and rnorm > cfg.residual_tol:
        c = A.T @ r
        j = int(np.argmax(np.abs(c)))
        if abs(c[j]) <= floor:
            break
        x[j] += c[j]
        r -= c[j] * A[:, j]
        rnorm = np.linalg.norm(r)
        history.append(rnorm)
        if j not in seen:
            seen.add(j)
            order.append(j)
        k += 1
    return make_code(A, y, x, order, k, history=history)


def omp_encode(D, y, cfg: PursuitConfig | None = None) -> SparseCode:
    """Orthogonal Matching Pursuit.

    Each iteration adds the not-yet-selected atom most correlated with the
    residual, then refits all selected coefficients by least squares, so
    the residual stays orthogonal to every selected atom. The fit uses an
    incrementally grown QR factorization (Gram-Schmidt with one
    reorthogonalization pass). An atom that is numerically dependent on the
    selected ones is dropped and the iteration stops with flag
    ``"rank_deficient"``.
    """
    cfg = cfg or PursuitConfig()
    A, y = _operands(D, y)
    p, m = A.shape
    max_iter = cfg.max_iter if cfg.max_iter is not None else min(p, m)
    if max_iter > p:
        raise ValueError(f"OMP max_iter {max_iter} exceeds feature dimension {p}")
    max_iter = min(max_iter, m)

    Q = np.zeros((p, max_iter))
    R = np.zeros((max_iter, max_iter))
    qty = np.zeros(max_iter)
    selected = np.zeros(m, dtype=bool)
    support = []
    flags = []
    r = y.copy()
    rnorm = np.linalg.norm(r)
    floor = 1e-14 * max(1.0, rnorm)
    history = [rnorm]
    k = 0
    while k < max_iter and rnorm > cfg.residual_tol:
        c = np.abs(A.T @ r)
        c[selected] = -1.0
        j = int(np.argmax(c))
        if c[j] <= floor:
            break
        a = A[:, j]
        Qk = Q[:, :k]
        h = Qk.T @ a
        q = a - Qk @ h
        h2 = Qk.T @ q
        q -= Qk @ h2
        h += h2
        rkk = np.linalg.norm(q)
        if rkk <= RANK_TOL:
            log.info("OMP: atom %d is dependent on the selected set, stopping", j)
            flags.append("rank_deficient")
            break
        q /= rkk
        Q[:, k] = q
        R[:k, k] = h
        R[k, k] = rkk
        qty[k] = q @ y
        r -= (q @ r) * q
        selected[j] = True
        support.append(j)
        k += 1
        rnorm = np.linalg.norm(r)
        history.append(rnorm)

    x = np.zeros(m)
    if k:
        coef = _back_substitute(R[:k, :k], qty[:k])
        x[support] = coef
    return make_code(A, y, x, support, k, flags, history)


def _back_substitute(R, b):
    from scipy.linalg import solve_triangular

    return solve_triangular(R, b, lower=False)


def stomp_encode(D, y, cfg: PursuitConfig | None = None) -> SparseCode:
    """Stagewise OMP.

    At each stage every atom whose absolute correlation with the residual
    exceeds ``stomp_threshold * ||r|| / sqrt(p)`` joins the support, and
    all coefficients are refit by least squares over the whole support.
    Stops when a stage adds nothing, when the residual reaches
    ``residual_tol``, or after ``stomp_stages`` stages. If the first stage
    selects nothing the zero code is returned with flag
    ``"no atoms above threshold"``.
    """
    cfg = cfg or PursuitConfig()
    A, y = _operands(D, y)
    p, m = A.shape
    x = np.zeros(m)
    r = y.copy()
    rnorm = np.linalg.norm(r)
    history = [rnorm]
    support = []
    in_support = np.zeros(m, dtype=bool)
    flags = []
    stages = 0
    while stages < cfg.stomp_stages and rnorm > cfg.residual_tol:
        c = np.abs(A.T @ r)
        sigma = rnorm / np.sqrt(p)
        new = np.flatnonzero((c > cfg.stomp_threshold * sigma) & ~in_support)
        if new.size == 0:
            if stages == 0:
                flags.append("no atoms above threshold")
            break
        support.extend(int(j) for j in new)
        in_support[new] = True
        cols = A[:, support]
        coef, *_ = np.linalg.lstsq(cols, y, rcond=RANK_TOL)
        x[:] = 0.0
        x[support] = coef
        r = y - cols @ coef
        rnorm = np.linalg.norm(r)
        history.append(rnorm)
        stages += 1
    return make_code(A, y, x, support, stages, flags, history)
