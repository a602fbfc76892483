"""Matrix-free annihilator ``M = I - P (P'P)^{-1} P'`` built from one QR factorization.

The basis is scaled to unit column norms and factorized with column-pivoted
Householder QR.  Only the ``n x K`` orthonormal factor is kept; ``M`` is never
formed.  Everything downstream (residualization, leverage complements, the
off-diagonal bilinear forms of the V-statistic decomposition) routes through
:class:`ProjectionWorkspace`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .basis import BasisMatrix
from .errors import DimensionError, RankDeficient

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_LEVERAGE_FLOOR = 1e-3


@dataclass(frozen=True)
class ProjectionWorkspace:
    """Orthonormal basis of ``col(P)``; immutable and safe to share across threads.

    Attributes
    ----------
    ortho : ndarray, shape (n, K)
        Columns are orthonormal and span the column space of ``P``.
    n, K : int
        Sample size and numerical rank.
    tol : float
        Relative rank tolerance used by :func:`factorize`.
    column_scale : ndarray
        Euclidean norms of the original columns (the scaling that was removed).
    dropped : tuple of int
        Original column indices discarded as redundant (permissive mode only).
    """

    ortho: NDArray[np.float64]
    n: int
    K: int
    tol: float
    column_scale: NDArray[np.float64] = field(repr=False)
    dropped: tuple[int, ...] = ()

    @property
    def n_columns(self) -> int:
        return self.K + len(self.dropped)


@dataclass(frozen=True)
class LeverageComplements:
    """Diagonal of ``M``.  ``flagged`` is set when ``min(m_diag) < floor``."""

    m_diag: NDArray[np.float64]
    floor: float = DEFAULT_LEVERAGE_FLOOR

    @property
    def min(self) -> float:
        return float(self.m_diag.min())

    @property
    def flagged(self) -> bool:
        return self.min < self.floor


def factorize(P: BasisMatrix | ArrayLike, tol: float = DEFAULT_TOL, strict: bool = True) -> ProjectionWorkspace:
    """Rank-revealing factorization of a basis (or instrument) matrix.

    Parameters
    ----------
    P : BasisMatrix or array_like, shape (n, K)
    tol : float
        A pivot ``|R_kk|`` counts toward the rank when it exceeds
        ``tol * |R_00|`` for the unit-norm-scaled matrix.
    strict : bool
        Raise :class:`RankDeficient` on a rank drop.  Otherwise the workspace
        spans the detected rank and records the dropped column indices.

    Raises
    ------
    DimensionError
        If ``n <= K``.
    RankDeficient
        In strict mode, when the numerical rank is below ``K``.
    """
    values = P.values if isinstance(P, BasisMatrix) else np.asarray(P, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if values.ndim != 2:
        raise DimensionError("basis must be a 2-d array")
    n, K = values.shape
    if K < 1:
        raise DimensionError("basis needs at least one column")
    if n <= K:
        raise DimensionError(f"need n > K, got n={n}, K={K}")
    if not np.all(np.isfinite(values)):
        raise DimensionError("basis contains NaN or Inf")

    scale = np.linalg.norm(values, axis=0)
    zero = scale == 0.0
    safe = np.where(zero, 1.0, scale)
    Q, R, piv = scipy.linalg.qr(values / safe, mode="economic", pivoting=True)
    pivots = np.abs(np.diag(R))
    ref = pivots[0] if pivots.size else 0.0
    rank = int(np.count_nonzero(pivots > tol * ref)) if ref > 0 else 0
    dropped = tuple(sorted(int(j) for j in piv[rank:]))
    if rank < K:
        msg = f"numerical rank {rank} < {K} columns (redundant columns: {list(dropped)})"
        if strict or rank == 0:
            raise RankDeficient(msg, rank=rank, dropped=dropped)
        log.warning("permissive mode: %s", msg)
    return ProjectionWorkspace(
        ortho=np.ascontiguousarray(Q[:, :rank]),
        n=n,
        K=rank,
        tol=tol,
        column_scale=scale,
        dropped=dropped if rank < K else (),
    )


def _check_rows(w: ProjectionWorkspace, A: NDArray[np.float64], name: str = "A") -> None:
    if A.shape[0] != w.n:
        raise DimensionError(f"{name} has {A.shape[0]} rows; workspace has n={w.n}")


def apply_annihilator(w: ProjectionWorkspace, A: ArrayLike) -> NDArray[np.float64]:
    """Return ``M @ A`` as ``A - U (U' A)``; accepts vectors or matrices."""
    A = np.asarray(A, dtype=np.float64)
    _check_rows(w, A)
    return A - w.ortho @ (w.ortho.T @ A)


def apply_projection(w: ProjectionWorkspace, A: ArrayLike) -> NDArray[np.float64]:
    """Return ``Q @ A`` where ``Q = I - M`` is the orthogonal projector onto ``col(P)``."""
    A = np.asarray(A, dtype=np.float64)
    _check_rows(w, A)
    return w.ortho @ (w.ortho.T @ A)


def leverage_complements(w: ProjectionWorkspace, floor: float = DEFAULT_LEVERAGE_FLOOR) -> LeverageComplements:
    """``M_ii = 1 - sum_k U_ik^2``.

    A small ``min M_ii`` means some observation is nearly interpolated by the
    basis, i.e. the leverage bound on ``M_ii`` is violated; a warning is logged.
    """
    m_diag = 1.0 - np.einsum("ik,ik->i", w.ortho, w.ortho)
    out = LeverageComplements(m_diag, floor)
    if out.flagged:
        log.warning("min M_ii = %.3g below floor %.3g: leverage bound violated", out.min, floor)
    return out


def offdiag_cross(w: ProjectionWorkspace, a: ArrayLike, b: ArrayLike, m_diag: NDArray[np.float64] | None = None) -> float:
    """``sum_{i != j} M_ij a_i b_j``, computed as ``a'Mb - sum_i M_ii a_i b_i``.

    ``m_diag`` may be passed to avoid recomputing the leverage complements.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise DimensionError("offdiag_cross takes vectors")
    _check_rows(w, a, "a")
    _check_rows(w, b, "b")
    if m_diag is None:
        m_diag = leverage_complements(w).m_diag
    return float(a @ apply_annihilator(w, b) - np.sum(m_diag * a * b))
