"""Independent reference computations used by the tests.

Nothing here imports the solvers under test; each oracle takes a slower,
more direct route to the same quantity.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog


def lp_min_l1(D, y):
    """min ||x||_1 s.t. D x = y as an LP over x = x+ - x-, x+/- >= 0."""
    p, m = D.shape
    res = linprog(np.ones(2 * m), A_eq=np.hstack([D, -D]), b_eq=y, bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun), res.x[:m] - res.x[m:]


def lasso_projected_gradient(D, y, lam, iters=20000):
    """Lasso via accelerated projected gradient on the split x = x+ - x-.

    With both halves constrained to be non-negative the objective
    0.5 ||D (x+ - x-) - y||^2 + lam * sum(x+ + x-) is smooth, so projection
    onto the orthant after each gradient step converges to the minimizer.
    """
    p, m = D.shape
    B = np.hstack([D, -D])
    L = np.linalg.norm(B, 2) ** 2
    w = np.zeros(2 * m)
    z = w.copy()
    t = 1.0
    for _ in range(iters):
        g = B.T @ (B @ z - y) + lam
        w_new = np.maximum(z - g / L, 0.0)
        t_new = (1 + math.sqrt(1 + 4 * t * t)) / 2
        z = w_new + ((t - 1) / t_new) * (w_new - w)
        w, t = w_new, t_new
    x = w[:m] - w[m:]
    r = D @ x - y
    return 0.5 * float(r @ r) + lam * float(np.abs(x).sum()), x


def best_support(D, y, k):
    """Exhaustive search for the k columns with the smallest LS residual."""
    best, best_err = None, math.inf
    for cols in itertools.combinations(range(D.shape[1]), k):
        sub = D[:, cols]
        coef = np.linalg.solve(sub.T @ sub, sub.T @ y)
        err = float(np.sum((y - sub @ coef) ** 2))
        if err < best_err:
            best, best_err = set(cols), err
    return best, best_err


def normal_equations_ls(D, y):
    """Coefficients from (D^T D) c = D^T y."""
    return np.linalg.solve(D.T @ D, D.T @ y)


def mann_whitney_auc(pos, neg):
    """Probability a positive outscores a negative; ties count one half."""
    wins = 0.0
    for a in pos:
        for b in neg:
            wins += 1.0 if a > b else 0.5 if a == b else 0.0
    return wins / (len(pos) * len(neg))


def pca_tail_mse(X, k):
    """Mean squared rank-k PCA reconstruction error from singular values."""
    Xc = X - X.mean(axis=0)
    s = np.linalg.svd(Xc, compute_uv=False)
    return float(np.sum(s[k:] ** 2) / X.shape[0])


def brute_pixel_roc(features, frame_masks, overlap):
    """Pixel-level ROC by recomputing pixel unions at every threshold.

    ``features`` is a list of ``(score, frames, (x, y, w, h))``;
    ``frame_masks`` maps every labelled frame to its truth mask.
    """
    frames = sorted(frame_masks)
    abn = [f for f in frames if frame_masks[f].any()]
    nrm = [f for f in frames if not frame_masks[f].any()]
    rows = [(math.inf, 0.0, 0.0)]
    for thr in sorted({s for s, _, _ in features}, reverse=True):
        tp = fp = 0
        for f in frames:
            truth = frame_masks[f]
            hit = np.zeros_like(truth)
            any_flag = False
            for s, fr, (x, y, w, h) in features:
                if s >= thr and f in fr:
                    hit[y:y + h, x:x + w] = True
                    any_flag = True
            if f in abn:
                # overlap in whole percent; integer test avoids rounding at 40%
                hits = int(np.count_nonzero(hit & truth))
                tp += hits * 100 >= round(overlap * 100) * int(truth.sum())
            else:
                fp += any_flag
        rows.append((thr, fp / len(nrm), tp / len(abn)))
    if rows[-1][1:] != (1.0, 1.0):
        rows.append((-math.inf, 1.0, 1.0))
    return rows
