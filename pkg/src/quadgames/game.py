"""Data model for convex quadratic games and their equilibrium conditions.

A game couples N quadratic programs through a pseudo-gradient ``W x + f`` and
a shared feasible set ``{x : A x + b >= 0, G x + h = 0}``.  This module holds
the container types, per-player block assembly, problem rescaling, the
monotonicity/regularity eigenvalue checks, and the residuals used to measure
distance from an equilibrium and from the solver's central path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .sparse import SparseMatrix, hstack, vstack, zeros

__all__ = [
    "QuadraticGame",
    "PlayerBlock",
    "KktPoint",
    "ScalingRecord",
    "assemble",
    "monotonicity_constant",
    "regularity_check",
    "rescale",
    "vi_residual",
    "kkt_residual",
    "recover_multipliers",
]

# Dense symmetric eigensolves are used up to this dimension; beyond it a
# shifted Lanczos iteration keeps the cost manageable.
DENSE_EIG_LIMIT = 200


@dataclass(frozen=True)
class QuadraticGame:
    """Full problem data (W, f, A, b, G, h) plus the per-player block layout.

    ``block_dims[i]`` is the decision dimension of player i; the blocks of W,
    f and the columns of A, G follow that partition.  At least one inequality
    row is required (the interior point method tracks a log-domain barrier on
    the inequality slacks); equality rows are optional.
    """

    block_dims: tuple
    W: SparseMatrix
    f: np.ndarray
    A: SparseMatrix
    b: np.ndarray
    G: SparseMatrix = None
    h: np.ndarray = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.block_dims)
        if not dims or any(d <= 0 for d in dims):
            raise ValueError("block_dims must be a nonempty tuple of positive ints")
        object.__setattr__(self, "block_dims", dims)
        n = sum(dims)
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float).reshape(-1))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(-1))
        G = self.G if self.G is not None else zeros(0, n)
        h = self.h if self.h is not None else np.zeros(0)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", np.asarray(h, dtype=float).reshape(-1))
        if self.W.shape != (n, n):
            raise ValueError(f"W must be {n}x{n}, got {self.W.shape}")
        if self.f.shape != (n,):
            raise ValueError(f"f must have length {n}, got {self.f.shape}")
        if self.A.ncols != n:
            raise ValueError(f"A must have {n} columns, got {self.A.ncols}")
        if self.A.nrows < 1:
            raise ValueError("at least one inequality row is required")
        if self.b.shape != (self.A.nrows,):
            raise ValueError("b must match the number of inequality rows")
        if self.G.ncols != n:
            raise ValueError(f"G must have {n} columns, got {self.G.ncols}")
        if self.h.shape != (self.G.nrows,):
            raise ValueError("h must match the number of equality rows")

    @property
    def num_players(self):
        return len(self.block_dims)

    @property
    def dim(self):
        return sum(self.block_dims)

    @property
    def m_ineq(self):
        return self.A.nrows

    @property
    def m_eq(self):
        return self.G.nrows

    def block_slice(self, i):
        start = sum(self.block_dims[:i])
        return slice(start, start + self.block_dims[i])

    def pseudo_gradient(self, x):
        """The concatenated pseudo-gradient ``W x + f``."""
        return self.W.matvec(x) + self.f


@dataclass(frozen=True)
class PlayerBlock:
    """One player's data: own Hessian block Q, couplings S to opponents, and
    linear term p.  ``S[j]`` maps opponent index j to the (n_i x n_j) block."""

    Q: SparseMatrix
    p: np.ndarray
    S: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(-1))
        n = self.Q.nrows
        if self.Q.shape != (n, n):
            raise ValueError("Q must be square")
        if self.p.shape != (n,):
            raise ValueError("p must match the dimension of Q")

    @property
    def dim(self):
        return self.Q.nrows

    def check_psd(self, tol=1e-8):
        """Warn if Q is not positive semidefinite within ``tol``.

        Advisory only: the solver itself needs the regularity condition, not
        per-player convexity.
        """
        Qd = self.Q.to_dense()
        lam = float(np.linalg.eigvalsh(0.5 * (Qd + Qd.T)).min())
        if lam < -tol:
            warnings.warn(
                f"player block Q has eigenvalue {lam:.3e} below -{tol:.0e}",
                stacklevel=2,
            )
        return lam >= -tol


@dataclass(frozen=True)
class KktPoint:
    """Primal x, inequality multipliers nu, equality multipliers lam, slacks s."""

    x: np.ndarray
    nu: np.ndarray
    lam: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        for name in ("x", "nu", "lam", "s"):
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1)
            )
        if self.nu.shape != self.s.shape:
            raise ValueError("nu and s must have equal length")


def assemble(blocks, A, b, G=None, h=None):
    """Build a QuadraticGame from per-player blocks and shared constraints.

    W gets ``blocks[i].Q`` as its i-th diagonal block and ``blocks[i].S[j]``
    at block (i, j); missing couplings are zero.  f concatenates the p_i.
    """
    dims = [blk.dim for blk in blocks]
    rows = []
    for i, blk in enumerate(blocks):
        row = []
        for j in range(len(blocks)):
            if i == j:
                row.append(blk.Q)
                continue
            Sij = blk.S.get(j)
            if Sij is None:
                row.append(zeros(dims[i], dims[j]))
            else:
                if Sij.shape != (dims[i], dims[j]):
                    raise ValueError(
                        f"coupling block ({i}, {j}) has shape {Sij.shape}, "
                        f"expected {(dims[i], dims[j])}"
                    )
                row.append(Sij)
        rows.append(hstack(row))
    W = vstack(rows)
    f = np.concatenate([blk.p for blk in blocks])
    return QuadraticGame(tuple(dims), W, f, A, np.asarray(b, dtype=float), G, h)


def _min_symmetric_eigenvalue(S):
    """Smallest eigenvalue of a symmetric scipy sparse matrix."""
    n = S.shape[0]
    if n <= DENSE_EIG_LIMIT:
        return float(np.linalg.eigvalsh(np.asarray(S.todense())).min())
    # Shifted Lanczos: c >= lambda_max by Gershgorin, so cI - S is PSD and its
    # largest eigenvalue (which ARPACK finds quickly) gives lambda_min(S).
    c = float(np.abs(S).sum(axis=1).max())
    if c == 0.0:
        return 0.0
    shifted = (c * sps.identity(n, format="csr")) - S.tocsr()
    try:
        top = spla.eigsh(shifted, k=1, which="LA", tol=1e-9,
                         return_eigenvectors=False)
        return float(c - top[0])
    except spla.ArpackError:
        return float(np.linalg.eigvalsh(np.asarray(S.todense())).min())


def monotonicity_constant(game):
    """Smallest eigenvalue of the symmetric part of W.

    Nonnegative values make the game's variational inequality monotone, so
    the KKT conditions are sufficient for a variational equilibrium.
    """
    W = game.W.to_scipy()
    return _min_symmetric_eigenvalue(0.5 * (W + W.T))


def regularity_check(game):
    """Smallest eigenvalue of sym(W) + A^T A.

    The interior point method is globally convergent when this is positive;
    a nonpositive value is a warning for the caller, not an error.
    """
    W = game.W.to_scipy()
    A = game.A.to_scipy()
    return _min_symmetric_eigenvalue(0.5 * (W + W.T) + (A.T @ A))


@dataclass(frozen=True)
class ScalingRecord:
    """Divisors applied by ``rescale``; maps multipliers back to original units.

    The primal x is unaffected.  A scaled-game multiplier pair (nu', lam')
    corresponds to nu = f_div * nu' / b_div and lam = f_div * lam' / h_div on
    the original game, and scaled slacks map back as s = b_div * s'.
    """

    f_div: float
    b_div: np.ndarray
    h_div: np.ndarray

    def unscale_multipliers(self, nu, lam):
        return self.f_div * nu / self.b_div, self.f_div * lam / self.h_div

    def unscale_slacks(self, s):
        return self.b_div * s

    @property
    def max_divisor(self):
        divisors = [self.f_div]
        if self.b_div.size:
            divisors.append(float(self.b_div.max()))
        if self.h_div.size:
            divisors.append(float(self.h_div.max()))
        return max(divisors)


def rescale(game):
    """Scale (W, f) by 1/(||f||_inf + 1) and each constraint row i by
    1/(|b_i| + 1) (and likewise for G, h).  Returns the scaled game and the
    record of divisors.  The solution set in x is unchanged."""
    f_div = float(np.abs(game.f).max(initial=0.0)) + 1.0
    b_div = np.abs(game.b) + 1.0
    h_div = np.abs(game.h) + 1.0

    W = SparseMatrix.from_scipy(game.W.to_scipy() / f_div)
    f = game.f / f_div
    A = SparseMatrix.from_scipy(
        sps.diags(1.0 / b_div) @ game.A.to_scipy() if game.m_ineq else game.A.to_scipy()
    )
    b = game.b / b_div
    if game.m_eq:
        G = SparseMatrix.from_scipy(sps.diags(1.0 / h_div) @ game.G.to_scipy())
    else:
        G = game.G
    h = game.h / h_div
    scaled = QuadraticGame(game.block_dims, W, f, A, b, G, h)
    return scaled, ScalingRecord(f_div, b_div, h_div)


def recover_multipliers(v, mu):
    """Multipliers and slacks from the log-domain variable:
    nu = sqrt(mu) e^{v}, s = sqrt(mu) e^{-v}.

    Both are strictly positive for any v, and nu * s = mu holds identically;
    positivity and complementarity-at-mu are enforced by construction rather
    than by projection.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    root = np.sqrt(mu)
    v = np.asarray(v, dtype=float)
    return root * np.exp(v), root * np.exp(-v)


def vi_residual(game, x, v, lam, mu):
    """Distance from the central path at barrier parameter mu.

    2-norm of the stacked central-path equation residuals:
    ``W x + f - sqrt(mu) A^T e^v - G^T lam``, ``A x + b - sqrt(mu) e^{-v}``
    and ``G x + h``.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    root = np.sqrt(mu)
    ev = np.exp(v)
    r1 = game.W.matvec(x) + game.f - root * (game.A.to_scipy().T @ ev)
    if game.m_eq:
        r1 = r1 - game.G.to_scipy().T @ lam
    r2 = game.A.matvec(x) + game.b - root * np.exp(-v)
    parts = [r1, r2]
    if game.m_eq:
        parts.append(game.G.matvec(x) + game.h)
    return float(np.linalg.norm(np.concatenate(parts)))


def kkt_residual(game, point):
    """Max-norm violation of the equilibrium KKT system at a point.

    Takes the worst of stationarity, primal inequality feasibility, dual
    feasibility, complementarity, and equality feasibility.
    """
    x, nu, lam = point.x, point.nu, point.lam
    slack = game.A.matvec(x) + game.b
    terms = [
        np.abs(game.W.matvec(x) + game.f
               - game.A.to_scipy().T @ nu
               - (game.G.to_scipy().T @ lam if game.m_eq else 0.0)).max(initial=0.0),
        np.abs(np.minimum(slack, 0.0)).max(initial=0.0),
        np.abs(np.minimum(nu, 0.0)).max(initial=0.0),
        np.abs(nu * slack).max(initial=0.0),
    ]
    if game.m_eq:
        terms.append(np.abs(game.G.matvec(x) + game.h).max(initial=0.0))
    return float(max(terms))
