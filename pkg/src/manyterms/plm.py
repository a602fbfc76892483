"""Series estimation of the partially linear model ``y = x'b + g(z) + e``.

The coefficient is obtained by residual regression: ``My`` on ``MX`` with
``M`` the annihilator of the series basis.  Inference is homoskedastic, with
and without the degrees-of-freedom divisor ``n - d - K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtri

from .errors import DimensionError, SingularGamma
from .projection import ProjectionWorkspace, apply_annihilator, leverage_complements

# relative eigenvalue floor for the residualized second-moment matrix
GAMMA_RTOL = 1e-10


@dataclass(frozen=True)
class PlmFit:
    """Result of :func:`fit_plm`.

    ``gamma_hat`` is ``X'MX / n``; ``s2`` divides the residual sum of squares
    by ``n - d - K`` and ``sigma2_hat`` by ``n``.
    """

    beta_hat: NDArray[np.float64]
    gamma_hat: NDArray[np.float64]
    resid: NDArray[np.float64]
    s2: float
    sigma2_hat: float
    n: int
    d: int
    K: int
    min_leverage_complement: float

    @property
    def dof(self) -> int:
        return self.n - self.d - self.K

    @property
    def gamma_inv(self) -> NDArray[np.float64]:
        return np.linalg.inv(self.gamma_hat)

    @property
    def se0(self) -> NDArray[np.float64]:
        """Standard errors of ``beta_hat`` without the degrees-of-freedom correction."""
        return np.sqrt(self.sigma2_hat * np.diag(self.gamma_inv) / self.n)

    @property
    def se1(self) -> NDArray[np.float64]:
        """Standard errors of ``beta_hat`` using ``s2``."""
        return np.sqrt(self.s2 * np.diag(self.gamma_inv) / self.n)


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    level: float
    corrected: bool

    @property
    def width(self) -> NDArray[np.float64]:
        return self.upper - self.lower

    def covers(self, value: ArrayLike) -> NDArray[np.bool_]:
        value = np.asarray(value, dtype=np.float64)
        return (self.lower <= value) & (value <= self.upper)


def _as_matrix(X: ArrayLike) -> NDArray[np.float64]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DimensionError("X must be 1-d or 2-d")
    return X


def _check_gamma(gamma: NDArray[np.float64], scale: float) -> None:
    eig = np.linalg.eigvalsh(gamma)
    if not np.all(np.isfinite(eig)) or eig[0] <= GAMMA_RTOL * max(scale, np.finfo(float).tiny):
        raise SingularGamma(
            f"X'MX/n is numerically singular (min eigenvalue {eig[0]:.3g}); "
            "the regressors are (nearly) spanned by the basis"
        )


def fit_plm(y: ArrayLike, X: ArrayLike, w: ProjectionWorkspace) -> PlmFit:
    """Fit the partially linear model given the factorized basis ``w``.

    Parameters
    ----------
    y : array_like, shape (n,)
    X : array_like, shape (n, d) or (n,)
    w : ProjectionWorkspace
        Factorization of the series basis evaluated at the covariates.

    Raises
    ------
    DimensionError
        On shape mismatch or when ``n <= d + K``.
    SingularGamma
        When ``X'MX`` is numerically singular.
    """
    y = np.asarray(y, dtype=np.float64)
    X = _as_matrix(X)
    if y.ndim != 1:
        raise DimensionError("y must be a vector")
    n, d = X.shape
    if y.shape[0] != n or n != w.n:
        raise DimensionError(f"row counts differ: y={y.shape[0]}, X={n}, basis={w.n}")
    if n <= d + w.K:
        raise DimensionError(f"need n > d + K, got n={n}, d={d}, K={w.K}")

    MX = apply_annihilator(w, X)
    My = apply_annihilator(w, y)
    gamma = MX.T @ MX / n
    gamma = 0.5 * (gamma + gamma.T)
    _check_gamma(gamma, float(np.max(np.linalg.eigvalsh(X.T @ X / n))))
    beta, *_ = np.linalg.lstsq(MX, My, rcond=None)
    resid = My - MX @ beta
    rss = float(resid @ resid)
    dof = n - d - w.K
    s2 = rss / dof
    return PlmFit(
        beta_hat=beta,
        gamma_hat=gamma,
        resid=resid,
        s2=s2,
        sigma2_hat=dof * s2 / n,
        n=n,
        d=d,
        K=w.K,
        min_leverage_complement=leverage_complements(w).min,
    )


def gamma_population_limit(sigma_v2: float, K: int, n: int, d: int = 1) -> NDArray[np.float64]:
    """``(1 - K/n) * sigma_v2 * I_d``: the target of ``X'MX/n`` under homoskedastic ``v``."""
    return (1.0 - K / n) * sigma_v2 * np.eye(d)


def omega_hom(fit: PlmFit, corrected: bool = True) -> NDArray[np.float64]:
    """Homoskedastic asymptotic variance of ``sqrt(n)(beta_hat - beta)``.

    ``s2 * Gamma^-1`` when ``corrected``; ``sigma2_hat * Gamma^-1`` otherwise.
    """
    try:
        ginv = np.linalg.inv(fit.gamma_hat)
    except np.linalg.LinAlgError as exc:
        raise SingularGamma(str(exc)) from exc
    return (fit.s2 if corrected else fit.sigma2_hat) * ginv


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


def confidence_interval(fit: PlmFit, level: float = 0.95, corrected: bool = True) -> ConfidenceInterval:
    """``beta_hat -/+ q * sigma * sqrt((Gamma^-1)_kk) / sqrt(n)`` per coordinate.

    ``corrected=False`` uses ``sigma_hat`` (CI0); ``corrected=True`` uses ``s`` (CI1).
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    q = normal_quantile(1.0 - (1.0 - level) / 2.0)
    half = q * (fit.se1 if corrected else fit.se0)
    return ConfidenceInterval(fit.beta_hat - half, fit.beta_hat + half, level, corrected)
