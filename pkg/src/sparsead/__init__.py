"""Sparse codes for abnormal-event detection.

Dictionary learning (K-SVD), greedy and L1 sparse coders, four code-based
anomaly measurements, spatio-temporal gradient features, and frame/pixel
level ROC evaluation.
"""

from sparsead.errors import (
    SparseAdError,
    FormatError,
    DimensionError,
    ConvergenceError,
    InfeasibleError,
    BlockPartitionError,
)
from sparsead.dictionary import (
    Dictionary,
    TrainConfig,
    ksvd_train,
    normalize_atoms,
    save_dictionary,
    load_dictionary,
    equal_blocks,
)
from sparsead.codes import SparseCode, save_codes, load_codes
from sparsead.pursuit import PursuitConfig, mp_encode, omp_encode, stomp_encode
from sparsead.convex import ConvexConfig, lasso_encode, bp_encode, soft_threshold
from sparsead.encode import SOLVERS, encode, encode_batch

__version__ = "0.1.0"

__all__ = [
    "SparseAdError", "FormatError", "DimensionError", "ConvergenceError",
    "InfeasibleError", "BlockPartitionError",
    "Dictionary", "TrainConfig", "ksvd_train", "normalize_atoms",
    "save_dictionary", "load_dictionary", "equal_blocks",
    "SparseCode", "save_codes", "load_codes",
    "PursuitConfig", "mp_encode", "omp_encode", "stomp_encode",
    "ConvexConfig", "lasso_encode", "bp_encode", "soft_threshold",
    "SOLVERS", "encode", "encode_batch",
]
