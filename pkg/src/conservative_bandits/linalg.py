"""Small dense SPD linear algebra: Gram-matrix state, weighted norms, eigen-solves.

Dimensions here are small (d <= ~32), so the symmetric eigenproblem is solved
with a cyclic Jacobi iteration; it gives eigenvalues and eigenvectors in one
pass, which is what both the eigenvalue gate and ``V^{-1/2}`` need.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .errors import ContractViolation, NumericalDegeneracyError

REFRESH_EVERY = 64
SM_DENOMINATOR_FLOOR = 1e-14
SYMMETRY_RTOL = 1e-10


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _check_symmetric(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    if float(np.max(np.abs(m - m.T))) > SYMMETRY_RTOL * scale:
        raise ContractViolation("matrix is not symmetric within tolerance")


def jacobi_eigh(m: np.ndarray, tol: float = 1e-12, max_sweeps: int = 64):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns,
    eigenvalues in ascending order.  Sweeps stop once the off-diagonal
    Frobenius norm falls to ``tol`` times the matrix Frobenius norm.
    Works on Python floats: for the small matrices seen here that beats
    per-rotation numpy calls by a wide margin.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    a = (0.5 * (m + m.T)).tolist()
    q = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    total = sum(v * v for row in a for v in row)
    if total == 0.0:
        return np.zeros(n), np.eye(n)
    threshold = (tol * math.sqrt(total)) ** 2
    for _ in range(max_sweeps):
        off = sum(a[i][j] * a[i][j] for i in range(n) for j in range(n) if i != j)
        if off <= threshold:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p][r]
                if abs(apr) <= 1e-300:
                    continue
                theta = (a[r][r] - a[p][p]) / (2.0 * apr)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for row in a:
                    xp, xr = row[p], row[r]
                    row[p] = c * xp - s * xr
                    row[r] = s * xp + c * xr
                ap, ar = a[p], a[r]
                for k in range(n):
                    xp, xr = ap[k], ar[k]
                    ap[k] = c * xp - s * xr
                    ar[k] = s * xp + c * xr
                ap[r] = ar[p] = 0.0
                for row in q:
                    xp, xr = row[p], row[r]
                    row[p] = c * xp - s * xr
                    row[r] = s * xp + c * xr
    evals = np.array([a[i][i] for i in range(n)])
    order = np.argsort(evals, kind="stable")
    return evals[order], np.array(q)[:, order]


def min_eigenvalue(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=float)
    _check_symmetric(m)
    evals, _ = jacobi_eigh(m)
    return float(evals[0])


def inv_sqrt_from_eigh(evals: np.ndarray, evecs: np.ndarray) -> np.ndarray:
    if evals.min() <= 0.0:
        raise NumericalDegeneracyError(f"non-positive eigenvalue {evals.min():.3e} in inverse square root")
    w = (evecs * (1.0 / np.sqrt(evals))) @ evecs.T
    return symmetrize(w)


def inv_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric W with W @ W equal to the inverse of the SPD matrix ``m``."""
    m = np.asarray(m, dtype=float)
    _check_symmetric(m)
    return inv_sqrt_from_eigh(*jacobi_eigh(m))


def weighted_norm(m: np.ndarray, x: np.ndarray) -> float:
    """sqrt(x^T m x) for a positive semi-definite ``m``."""
    x = np.asarray(x, dtype=float)
    q = float(x @ m @ x)
    if q < 0.0:
        if q < -1e-12:
            raise ContractViolation(f"negative quadratic form {q:.3e}; matrix is not PSD")
        q = 0.0
    return math.sqrt(q)


class GramState:
    """Regularised design matrix ``V = lam*I + sum x x^T`` and response sums.

    ``v_inv`` is maintained by Sherman-Morrison rank-1 updates and recomputed
    from ``v`` every :data:`REFRESH_EVERY` updates.  ``b_constraint`` exists
    only when the state was created with ``track_constraint=True``.
    """

    def __init__(self, d: int, lam: float, track_constraint: bool = False):
        if lam <= 0:
            raise ContractViolation("regulariser must be > 0")
        self.d = d
        self.lam = float(lam)
        self.v = lam * np.eye(d)
        self.v_inv = np.eye(d) / lam
        self.b_reward = np.zeros(d)
        self.b_constraint: Optional[np.ndarray] = np.zeros(d) if track_constraint else None
        self.count = 0
        self.constraint_count = 0

    def copy(self) -> "GramState":
        new = GramState.__new__(GramState)
        new.d, new.lam, new.count = self.d, self.lam, self.count
        new.constraint_count = self.constraint_count
        new.v = self.v.copy()
        new.v_inv = self.v_inv.copy()
        new.b_reward = self.b_reward.copy()
        new.b_constraint = None if self.b_constraint is None else self.b_constraint.copy()
        return new

    def update(self, x: np.ndarray, y: float, w: Optional[float] = None) -> "GramState":
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,) or not np.all(np.isfinite(x)):
            raise ContractViolation(f"action must be a finite vector of length {self.d}")
        vx = self.v_inv @ x
        denom = 1.0 + float(x @ vx)
        if denom <= SM_DENOMINATOR_FLOOR:
            raise NumericalDegeneracyError(f"Sherman-Morrison denominator {denom:.3e}; Gram state is corrupted")
        self.v += np.outer(x, x)
        self.b_reward += y * x
        if w is not None:
            if self.b_constraint is None:
                self.b_constraint = np.zeros(self.d)
            self.b_constraint += w * x
            self.constraint_count += 1
        self.count += 1
        if self.count % REFRESH_EVERY == 0:
            self.v_inv = symmetrize(np.linalg.inv(self.v))
        else:
            self.v_inv -= np.outer(vx, vx) / denom
        return self


def gram_update(state: GramState, x: np.ndarray, y: float, w: Optional[float] = None) -> GramState:
    """Apply one observation to ``state`` in place and return it."""
    return state.update(x, y, w)
