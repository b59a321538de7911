"""Batch encoding front end shared by the CLI and the benchmarks."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from sparsead.convex import ConvexConfig, _BPFactor, bp_encode, lasso_encode
from sparsead.errors import DimensionError
from sparsead.pursuit import PursuitConfig, mp_encode, omp_encode, stomp_encode

SOLVERS = ("mp", "omp", "stomp", "bp", "lasso")
GREEDY = {"mp": mp_encode, "omp": omp_encode, "stomp": stomp_encode}


def encode(D, y, solver, cfg=None):
    """Encode one feature with the named solver."""
    return encode_batch(D, np.asarray(y)[None, :], solver, cfg)[0]


def _encode_chunk(args):
    A, Y, solver, cfg = args
    if solver in GREEDY:
        fn = GREEDY[solver]
        return [fn(A, y, cfg) for y in Y]
    if solver == "lasso":
        G = A.T @ A
        return [lasso_encode(A, y, cfg, gram=G) for y in Y]
    F = _BPFactor(A)
    return [bp_encode(A, y, cfg, factor=F) for y in Y]


def default_config(solver):
    if solver in GREEDY:
        return PursuitConfig()
    if solver in ("bp", "lasso"):
        return ConvexConfig()
    raise ValueError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")


def encode_batch(D, Y, solver, cfg=None, workers=1, chunk=64):
    """Encode every row of ``Y``.

    With ``workers > 1`` rows are split into fixed chunks and coded in a
    process pool; results come back in row order, so the output does not
    depend on scheduling.
    """
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
    cfg = cfg if cfg is not None else default_config(solver)
    A = np.asarray(getattr(D, "atoms", D), dtype=np.float64)
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if Y.shape[1] != A.shape[0]:
        raise DimensionError(f"features have dimension {Y.shape[1]}, dictionary expects {A.shape[0]}")
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or Y.shape[0] <= chunk:
        return _encode_chunk((A, Y, solver, cfg))
    jobs = [(A, Y[i:i + chunk], solver, cfg) for i in range(0, Y.shape[0], chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_encode_chunk, jobs))
    return [c for part in parts for c in part]
