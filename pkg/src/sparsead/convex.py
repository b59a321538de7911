"""L1 sparse coders: Lasso by coordinate descent and Basis Pursuit by ADMM.

Lasso solves ``min_x 0.5 * ||D x - y||^2 + lam * ||x||_1``.
Basis Pursuit solves ``min_x ||x||_1  s.t.  ||D x - y||_2 <= epsilon``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from sparsead.codes import SparseCode, make_code
from sparsead.errors import ConvergenceError, InfeasibleError
from sparsead.pursuit import _operands

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_FRACTION = 0.1


@dataclass
class ConvexConfig:
    """Settings for both convex coders.

    ``lam=None`` means ``0.1 * ||D^T y||_inf`` per feature. For the Lasso
    ``max_iter`` counts full coordinate sweeps and ``tol`` bounds both the
    largest coordinate change in the final sweep and the optimality
    violation. For Basis Pursuit ``max_iter`` counts ADMM iterations and
    ``tol`` sets the primal/dual residual targets.
    """

    lam: float | None = None
    epsilon: float = 0.0
    max_iter: int = 5000
    tol: float = 1e-6
    rho: float = 1.0

    def __post_init__(self):
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lam must be > 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.rho <= 0:
            raise ValueError("rho must be > 0")


def soft_threshold(z, a):
    """Proximal map of ``a * |.|``: ``sign(z) * max(|z| - a, 0)``."""
    if np.any(np.asarray(a) < 0):
        raise ValueError("threshold must be >= 0")
    return np.sign(z) * np.maximum(np.abs(z) - a, 0.0)


def lasso_objective(A, y, x, lam):
    r = y - A @ x
    return 0.5 * float(r @ r) + lam * float(np.abs(x).sum())


def lasso_gap(A, y, x, lam):
    """Duality gap of the Lasso at ``x`` using the scaled residual as dual point."""
    r = y - A @ x
    corr = np.abs(A.T @ r).max() if A.shape[1] else 0.0
    theta = r * min(1.0, lam / corr) if corr > 0 else r
    dual = 0.5 * float(y @ y) - 0.5 * float((y - theta) @ (y - theta))
    return lasso_objective(A, y, x, lam) - dual


def _kkt_violation(g, x, lam):
    on = x != 0
    v = np.maximum(np.abs(g) - lam, 0.0)
    v[on] = np.abs(g[on] - lam * np.sign(x[on]))
    return float(v.max()) if v.size else 0.0


def lasso_encode(D, y, cfg: ConvexConfig | None = None, gram=None) -> SparseCode:
    """Lasso by cyclic coordinate descent with soft-thresholding.

    Keeps the correlation vector ``g = D^T (y - D x)`` current through the
    Gram matrix. After each full sweep, the coordinates that are non-zero
    are cycled on their own until they settle, then another full sweep
    checks the rest. Converged when a full sweep moves no coordinate by more
    than ``tol`` and the optimality conditions hold within ``tol``.

    ``gram`` may pass a precomputed ``D^T D`` when coding many features.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` full sweeps, carrying the last iterate and its
        duality gap.
    """
    cfg = cfg or ConvexConfig()
    A, y = _operands(D, y)
    m = A.shape[1]
    G = A.T @ A if gram is None else gram
    diag = np.diag(G).copy()
    g = A.T @ y
    lam = cfg.lam if cfg.lam is not None else DEFAULT_LAMBDA_FRACTION * float(np.abs(g).max())
    x = np.zeros(m)
    if lam <= 0:
        # y orthogonal to every atom: zero is optimal for any weight.
        return make_code(A, y, x, (), 0, ("zero signal",), [0.5 * float(y @ y)])

    def sweep(idx):
        biggest = 0.0
        for j in idx:
            if diag[j] == 0:
                continue
            old = x[j]
            z = g[j] + diag[j] * old
            new = np.sign(z) * max(abs(z) - lam, 0.0) / diag[j]
            delta = new - old
            if delta != 0.0:
                x[j] = new
                g[:] -= G[:, j] * delta
                biggest = max(biggest, abs(delta))
        return biggest

    everything = range(m)
    history = [lasso_objective(A, y, x, lam)]
    for it in range(1, cfg.max_iter + 1):
        change = sweep(everything)
        history.append(lasso_objective(A, y, x, lam))
        if change <= cfg.tol and _kkt_violation(g, x, lam) <= cfg.tol:
            support = tuple(np.flatnonzero(x))
            return make_code(A, y, x, support, it, (), history)
        active = np.flatnonzero(x)
        for _ in range(10 * cfg.max_iter):
            if sweep(active) <= cfg.tol * 1e-2:
                break
    gap = lasso_gap(A, y, x, lam)
    raise ConvergenceError(
        f"lasso did not converge in {cfg.max_iter} sweeps (duality gap {gap:.3g})",
        last_iterate=x.copy(), gap=gap, history=np.asarray(history))


class _BPFactor:
    """Cached solver for ``(I + D^T D) x = b`` through the p x p system.

    By the Woodbury identity the inverse is ``I - D^T (I + D D^T)^-1 D``.
    ``I + D D^T`` has every eigenvalue >= 1, so its explicit inverse is
    safe and keeps each solve down to three matrix-vector products.
    """

    def __init__(self, A):
        self.A = A
        self.At = np.ascontiguousarray(A.T)
        p = A.shape[0]
        self.K = cho_solve(cho_factor(np.eye(p) + A @ A.T), np.eye(p))

    def solve(self, b):
        return b - self.At @ (self.K @ (self.A @ b))


def bp_encode(D, y, cfg: ConvexConfig | None = None, factor=None) -> SparseCode:
    """Basis Pursuit (``epsilon = 0``) or its noise-aware form by ADMM.

    Splits the problem as ``min ||z||_1 + indicator(||v - y|| <= epsilon)``
    subject to ``x = z`` and ``D x = v``. One iteration solves a ridge
    system for ``x``, soft-thresholds for ``z`` and projects onto the ball
    around ``y`` for ``v``, then updates the scaled duals, stopping on the
    usual primal and dual residual tests. The returned coefficients are the
    ``x`` iterate: feasible to within the primal residual, and numerically
    non-zero on (almost) every coordinate.

    On near-degenerate problems (``y`` almost a single atom, or several
    supports with almost equal L1 norm) convergence can be very slow.

    Raises
    ------
    InfeasibleError
        If the least-squares residual of ``y`` on ``D`` already exceeds
        ``epsilon + tol``.
    ConvergenceError
        After ``max_iter`` iterations; ``history`` holds the primal residual
        sequence.
    """
    cfg = cfg or ConvexConfig()
    A, y = _operands(D, y)
    p, m = A.shape
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0 or ynorm <= cfg.epsilon:
        return make_code(A, y, np.zeros(m), (), 0, ("zero signal",), [0.0])

    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    ls_resid = float(np.linalg.norm(y - A @ coef))
    if ls_resid > cfg.epsilon + cfg.tol * max(1.0, ynorm):
        raise InfeasibleError(
            f"infeasible: least-squares residual {ls_resid:.3g} exceeds epsilon {cfg.epsilon:.3g}")

    F = factor if factor is not None else _BPFactor(A)
    At = F.At
    rho = cfg.rho
    thresh = 1.0 / rho
    x = np.zeros(m)
    z = np.zeros(m)
    v = y.copy()
    u = np.zeros(m)
    w = np.zeros(p)
    history = []
    abs_pri = np.sqrt(m + p) * cfg.tol
    abs_dual = np.sqrt(m) * cfg.tol
    for it in range(1, cfg.max_iter + 1):
        x = F.solve((z - u) + At @ (v - w))
        Ax = A @ x
        z_old, v_old = z, v
        q = x + u
        z = np.sign(q) * np.maximum(np.abs(q) - thresh, 0.0)
        v = _project_ball(Ax + w, y, cfg.epsilon)
        rx, rv = x - z, Ax - v
        u += rx
        w += rv
        prim = np.sqrt(rx @ rx + rv @ rv)
        history.append(prim)
        eps_pri = abs_pri + cfg.tol * np.sqrt(max(x @ x + Ax @ Ax, z @ z + v @ v))
        if prim > eps_pri:
            continue
        dz = (z - z_old) + At @ (v - v_old)
        if rho * np.sqrt(dz @ dz) <= abs_dual + cfg.tol * rho * np.sqrt(u @ u + w @ w):
            support = tuple(np.flatnonzero(x))
            return make_code(A, y, x, support, it, (), history)
    raise ConvergenceError(
        f"basis pursuit did not converge in {cfg.max_iter} iterations (primal residual {history[-1]:.3g})",
        last_iterate=x.copy(), gap=history[-1], history=np.asarray(history))


def _project_ball(v, center, radius):
    if radius == 0.0:
        return center.copy()
    d = v - center
    n = np.sqrt(d @ d)
    if n <= radius:
        return v
    return center + d * (radius / n)
