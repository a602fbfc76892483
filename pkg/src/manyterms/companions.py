"""Two estimators with the same V-statistic structure as the series estimator.

* JIVE2, the jackknife IV estimator that drops own-observation terms of the
  instrument projector ``Q = Z(Z'Z)^{-1}Z'``.
* The leave-one-out kernel estimator of the integrated squared density
  ``int f^2``, with its small-bandwidth variance term and oracle decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import pdist
from scipy.special import ndtr

from .errors import DimensionError, OracleUnavailable, SingularDesign
from .projection import DEFAULT_TOL, ProjectionWorkspace, factorize, leverage_complements

# -- JIVE2 ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class IvSample:
    y: NDArray[np.float64]
    X: NDArray[np.float64]
    Z: NDArray[np.float64]

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=np.float64)
        X = np.asarray(self.X, dtype=np.float64)
        Z = np.asarray(self.Z, dtype=np.float64)
        X = X.reshape(-1, 1) if X.ndim == 1 else X
        Z = Z.reshape(-1, 1) if Z.ndim == 1 else Z
        if y.ndim != 1 or X.shape[0] != y.shape[0] or Z.shape[0] != y.shape[0]:
            raise DimensionError("y, X and Z must have the same number of rows")
        if Z.shape[0] <= Z.shape[1]:
            raise DimensionError(f"need n > K instruments, got n={Z.shape[0]}, K={Z.shape[1]}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)

    @property
    def n(self) -> int:
        return self.y.shape[0]


class Jive2Fit(NamedTuple):
    beta_hat: NDArray[np.float64]
    gamma_hat: NDArray[np.float64]


def jive2_fit(s: IvSample, tol: float = DEFAULT_TOL, workspace: ProjectionWorkspace | None = None) -> Jive2Fit:
    """JIVE2: ``(sum_{i!=j} Q_ij x_i x_j')^{-1} sum_{i!=j} Q_ij x_i y_j``.

    The leave-own-out sums are ``X'QX - sum_i Q_ii x_i x_i'`` and likewise for
    ``y``, evaluated through the orthonormal factor of ``Z`` so ``Q`` is never
    formed.  ``gamma_hat`` is the first sum divided by ``n``.

    Raises
    ------
    RankDeficient
        If the instruments are collinear.
    SingularDesign
        If the leave-own-out moment matrix is singular.
    """
    w = workspace if workspace is not None else factorize(s.Z, tol=tol, strict=True)
    q_diag = 1.0 - leverage_complements(w).m_diag
    UX = w.ortho.T @ s.X
    Uy = w.ortho.T @ s.y
    A = UX.T @ UX - (s.X * q_diag[:, None]).T @ s.X
    b = UX.T @ Uy - (s.X * q_diag[:, None]).T @ s.y
    scale = max(float(np.max(np.abs(UX.T @ UX))), np.finfo(float).tiny)
    if np.linalg.cond(A) > 1e12 or np.max(np.abs(A)) <= 1e-12 * scale:
        raise SingularDesign("leave-own-out moment matrix sum_{i!=j} Q_ij x_i x_j' is singular")
    beta = np.linalg.solve(A, b)
    return Jive2Fit(beta, A / s.n)


def projector_offdiag_cross(w: ProjectionWorkspace, a: ArrayLike, b: ArrayLike) -> float:
    """``sum_{i != j} Q_ij a_i b_j`` for the projector ``Q = I - M``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    q_diag = 1.0 - leverage_complements(w).m_diag
    return float((w.ortho.T @ a) @ (w.ortho.T @ b) - np.sum(q_diag * a * b))


def jive2_u_statistic(w: ProjectionWorkspace, v: ArrayLike, eps: ArrayLike) -> NDArray[np.float64]:
    """``n^{-1/2} sum_{j<i} Q_ij (v_i eps_j + v_j eps_i)`` per column of ``v``."""
    V = np.asarray(v, dtype=np.float64)
    V = V.reshape(-1, 1) if V.ndim == 1 else V
    return np.array([projector_offdiag_cross(w, V[:, k], eps) for k in range(V.shape[1])]) / math.sqrt(w.n)


# -- integrated squared density ---------------------------------------------------------------

KernelFamily = Literal["gaussian", "epanechnikov"]


@dataclass(frozen=True)
class KernelSpec:
    """Product kernel of ``p`` identical univariate kernels with bandwidth ``h``."""

    family: KernelFamily
    p: int
    h: float

    def __post_init__(self) -> None:
        if self.family not in ("gaussian", "epanechnikov"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if not self.h > 0:
            raise ValueError("bandwidth must be positive")

    @property
    def roughness(self) -> float:
        """``int K(u)^2 du``."""
        if self.family == "gaussian":
            return (2.0 * math.sqrt(math.pi)) ** (-self.p)
        return 0.6**self.p

    def with_bandwidth(self, h: float) -> "KernelSpec":
        return KernelSpec(self.family, self.p, h)


def _as_points(x: ArrayLike, p: int) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[1] != p:
        raise DimensionError(f"x has shape {x.shape}; kernel expects p={p} columns")
    return x


def pairwise_kernel(x: ArrayLike, k: KernelSpec) -> NDArray[np.float64]:
    """``K_h(x_i - x_j)`` for every unordered pair ``i < j`` (condensed ``pdist`` order)."""
    x = _as_points(x, k.p)
    if k.family == "gaussian":
        sq = pdist(x, "sqeuclidean") / (k.h * k.h)
        return np.exp(-0.5 * sq) / ((2.0 * math.pi) ** (k.p / 2.0) * k.h**k.p)
    out = np.ones(x.shape[0] * (x.shape[0] - 1) // 2)
    for l in range(k.p):
        u2 = pdist(x[:, l : l + 1], "sqeuclidean") / (k.h * k.h)
        out *= np.where(u2 < 1.0, 0.75 * (1.0 - u2), 0.0)
    return out / k.h**k.p


def kernel_at(u: ArrayLike, k: KernelSpec) -> NDArray[np.float64]:
    """``K_h(u)`` for an array of ``p``-vectors."""
    u = _as_points(u, k.p) / k.h
    if k.family == "gaussian":
        return np.exp(-0.5 * np.sum(u * u, axis=1)) / ((2.0 * math.pi) ** (k.p / 2.0) * k.h**k.p)
    return np.prod(np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0), axis=1) / k.h**k.p


def isd_estimate(x: ArrayLike, k: KernelSpec) -> float:
    """Leave-one-out estimate ``sum_{i != j} K_h(x_i - x_j) / (n (n - 1))``."""
    x = _as_points(x, k.p)
    n = x.shape[0]
    if n < 2:
        raise DimensionError("need at least two observations")
    return float(2.0 * pairwise_kernel(x, k).sum() / (n * (n - 1)))


def isd_delta(beta_hat: float, k: KernelSpec) -> float:
    """Plug-in limit of ``n^2 h^p Var(U_n)``: ``beta_hat * int K^2``."""
    return beta_hat * k.roughness


def isd_small_bandwidth_variance(beta_hat: float, k: KernelSpec, n: int) -> float:
    """Estimated ``Var(U_n)``: ``isd_delta / (n^2 h^p)``."""
    return isd_delta(beta_hat, k) / (n * n * k.h**k.p)


@dataclass(frozen=True)
class DensityOracle:
    """Known density with its kernel-smoothed version.

    ``f_h(x) = int K(u) f0(x + h u) du`` and ``beta_h = int f_h f0``.
    """

    f_h: Callable[[NDArray[np.float64]], NDArray[np.float64]] | None
    beta_h: float | None
    beta0: float


def gaussian_density_oracle(k: KernelSpec) -> DensityOracle:
    """Standard normal ``f0`` in ``p`` dimensions; closed form for the Gaussian kernel only."""
    p, h = k.p, k.h
    beta0 = (4.0 * math.pi) ** (-p / 2.0)
    if k.family != "gaussian":
        return DensityOracle(None, None, beta0)
    var = 1.0 + h * h

    def f_h(x: NDArray[np.float64]) -> NDArray[np.float64]:
        x = _as_points(x, p)
        return np.exp(-0.5 * np.sum(x * x, axis=1) / var) / (2.0 * math.pi * var) ** (p / 2.0)

    beta_h = (2.0 * math.pi * (2.0 + h * h)) ** (-p / 2.0)
    return DensityOracle(f_h, beta_h, beta0)


def uniform_density_oracle(k: KernelSpec) -> DensityOracle:
    """``f0 = 1`` on ``[0, 1]^p`` with a Gaussian kernel (``beta0 = 1``)."""
    p, h = k.p, k.h
    if k.family != "gaussian":
        return DensityOracle(None, None, 1.0)

    def f_h(x: NDArray[np.float64]) -> NDArray[np.float64]:
        x = _as_points(x, p)
        return np.prod(ndtr((1.0 - x) / h) - ndtr(-x / h), axis=1)

    # per coordinate: int_{-1}^{1} (1 - |d|) phi_h(d) dd
    t = 1.0 / h
    one_dim = (2.0 * ndtr(t) - 1.0) - 2.0 * h * (_std_normal_pdf(0.0) - _std_normal_pdf(t))
    return DensityOracle(f_h, one_dim**p, 1.0)


def _std_normal_pdf(u: float) -> float:
    return math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


class IsdComponents(NamedTuple):
    B_n: float
    Psi_n: float
    U_n: float


def isd_decompose(x: ArrayLike, k: KernelSpec, oracle: DensityOracle) -> IsdComponents:
    """Realized decomposition of ``sqrt(n)(beta_hat - beta0)``.

    ``B_n = sqrt(n)(beta_h - beta0)``, ``Psi_n = n^{-1/2} sum_i 2(f_h(x_i) - beta_h)``
    and ``U_n = 2 / (sqrt(n)(n-1)) sum_{j<i} (K_h(x_i - x_j) - f_h(x_i) - f_h(x_j) + beta_h)``.
    """
    if oracle.f_h is None or oracle.beta_h is None:
        raise OracleUnavailable(f"no smoothed density available for the {k.family} kernel")
    x = _as_points(x, k.p)
    n = x.shape[0]
    if n < 2:
        raise DimensionError("need at least two observations")
    fh = np.asarray(oracle.f_h(x), dtype=np.float64)
    root_n = math.sqrt(n)
    B = root_n * (oracle.beta_h - oracle.beta0)
    Psi = 2.0 * float(np.sum(fh - oracle.beta_h)) / root_n
    i, j = np.triu_indices(n, k=1)
    pair = pairwise_kernel(x, k) - fh[i] - fh[j] + oracle.beta_h
    U = 2.0 * float(pair.sum()) / (root_n * (n - 1))
    return IsdComponents(B, Psi, U)
