"""Hoeffding-type decomposition ``S_n = B_n + Psi_n + U_n`` of V-statistics.

Two realizations live here.  :func:`decompose_plm` evaluates the components of
the series partially-linear-model statistic for a simulated sample whose
regression functions and errors are known.  :func:`hoeffding_decompose_discrete`
is the generic version for an arbitrary kernel ``u_ij^n`` under i.i.d.
sampling from a finite distribution, with every conditional expectation
obtained by exact enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, SupportTooLarge
from .projection import ProjectionWorkspace, apply_annihilator, leverage_complements

MAX_SUPPORT = 100


def _as_matrix(a: ArrayLike) -> NDArray[np.float64]:
    a = np.asarray(a, dtype=np.float64)
    return a.reshape(-1, 1) if a.ndim == 1 else a


@dataclass(frozen=True)
class OracleData:
    """Known pieces of a simulated partially linear sample.

    ``g`` is ``g(z_i)``, ``h`` is ``E[x_i | z_i]``, ``v = x - h`` and ``eps``
    the structural error, so ``x = h + v`` and ``y = x'b + g + eps``.
    """

    g: NDArray[np.float64]
    h: NDArray[np.float64]
    v: NDArray[np.float64]
    eps: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "g", np.asarray(self.g, dtype=np.float64))
        object.__setattr__(self, "eps", np.asarray(self.eps, dtype=np.float64))
        object.__setattr__(self, "h", _as_matrix(self.h))
        object.__setattr__(self, "v", _as_matrix(self.v))
        n = self.g.shape[0]
        if self.eps.shape != (n,) or self.h.shape[0] != n or self.h.shape != self.v.shape:
            raise DimensionError("oracle arrays have inconsistent shapes")

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def x(self) -> NDArray[np.float64]:
        return self.h + self.v

    def outcome(self, beta0: ArrayLike) -> NDArray[np.float64]:
        return self.x @ np.atleast_1d(np.asarray(beta0, dtype=np.float64)) + self.g + self.eps


@dataclass(frozen=True)
class DecompositionReport:
    """Realized components, each a ``d``-vector.

    ``Psi_n = diag_term + R_n`` and ``S_n = B_n + Psi_n + U_n``.
    """

    S_n: NDArray[np.float64]
    B_n: NDArray[np.float64]
    Psi_n: NDArray[np.float64]
    R_n: NDArray[np.float64]
    U_n: NDArray[np.float64]
    diag_term: NDArray[np.float64]

    FIELDS = ("S_n", "B_n", "Psi_n", "R_n", "U_n", "diag_term")

    def identity_gap(self) -> float:
        """Largest relative violation of ``S_n = B_n + Psi_n + U_n``."""
        total = self.B_n + self.Psi_n + self.U_n
        scale = max(1.0, float(np.max(np.abs(self.S_n))))
        return float(np.max(np.abs(self.S_n - total))) / scale


def decompose_plm(w: ProjectionWorkspace, oracle: OracleData, beta0: ArrayLike | None = None) -> DecompositionReport:
    """Split ``S_n = n^{-1/2} X'M(g + eps)`` into bias, linear and degenerate parts.

    ``B_n = H'Mg``, ``R_n = V'Mg + H'M eps``, ``diag_term = sum_i M_ii v_i eps_i``
    and ``U_n = sum_{i != j} M_ij v_i eps_j``, all scaled by ``n^{-1/2}``.
    ``beta0`` does not enter the components (``S_n`` does not depend on it);
    it is accepted so callers can pass the full model description.
    """
    if oracle.n != w.n:
        raise DimensionError(f"oracle has n={oracle.n}; workspace has n={w.n}")
    root_n = np.sqrt(w.n)
    m_diag = leverage_complements(w).m_diag
    Mg = apply_annihilator(w, oracle.g)
    Meps = apply_annihilator(w, oracle.eps)
    H, V = oracle.h, oracle.v

    S = oracle.x.T @ (Mg + Meps) / root_n
    B = H.T @ Mg / root_n
    R = (V.T @ Mg + H.T @ Meps) / root_n
    diag = (V * (m_diag * oracle.eps)[:, None]).sum(axis=0) / root_n
    U = (V.T @ Meps - (V * (m_diag * oracle.eps)[:, None]).sum(axis=0)) / root_n
    return DecompositionReport(S_n=S, B_n=B, Psi_n=diag + R, R_n=R, U_n=U, diag_term=diag)


def oracle_sigma_n_hom(
    w: ProjectionWorkspace, sigma_eps2: float, cond_var_v: ArrayLike, d: int = 1
) -> NDArray[np.float64]:
    """``sigma_eps2 * n^{-1} sum_i M_ii E[v_i v_i' | z_i]`` with ``E[vv'|z_i] = c_i I_d``.

    Under homoskedastic errors the off-diagonal contributions collapse onto the
    diagonal because ``sum_j M_ij^2 = M_ii``.
    """
    c = np.broadcast_to(np.asarray(cond_var_v, dtype=np.float64), (w.n,))
    m_diag = leverage_complements(w).m_diag
    return sigma_eps2 * float(np.mean(m_diag * c)) * np.eye(d)


def u_statistic_variance_hom(w: ProjectionWorkspace, sigma_eps2: float, cond_var_v: ArrayLike) -> float:
    """Conditional variance of the scalar ``U_n`` given the covariates.

    With ``v`` independent of ``eps``, ``Var(U_n | Z) = sigma_eps2 n^{-1}
    sum_{i != j} M_ij^2 c_i``, and ``sum_{j != i} M_ij^2 = M_ii - M_ii^2``.
    """
    c = np.broadcast_to(np.asarray(cond_var_v, dtype=np.float64), (w.n,))
    m_diag = leverage_complements(w).m_diag
    return float(sigma_eps2 * np.sum(c * (m_diag - m_diag**2)) / w.n)


# -- generic discrete decomposition ---------------------------------------------------------


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite support with probabilities (must be positive and sum to one)."""

    support: Sequence[Any]
    probs: NDArray[np.float64]

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        if len(self.support) != probs.shape[0]:
            raise ValueError("support and probabilities differ in length")
        if np.any(probs < 0) or not np.isclose(probs.sum(), 1.0, rtol=0, atol=1e-12):
            raise ValueError("probabilities must be non-negative and sum to 1")

    @property
    def size(self) -> int:
        return len(self.support)


class HoeffdingComponents(NamedTuple):
    B_n: Any
    Psi_n: Any
    U_n: Any


Kernel = Callable[[int, int, Any, Any], Any]


def hoeffding_decompose_discrete(
    kernel: Kernel, dist: DiscreteDistribution, sample: Sequence[Any]
) -> HoeffdingComponents:
    """Exact decomposition of ``S_n = sum_{i,j} u_ij(W_i, W_j)`` for an i.i.d. sample.

    Parameters
    ----------
    kernel : callable ``(i, j, w_i, w_j) -> float or array``
        The pair kernel; it may depend on the indices (and, through closure,
        on ``n``).  Indices are 0-based.
    dist : DiscreteDistribution
        Common law of every ``W_i``.  At most 100 support points.
    sample : sequence
        Realized ``W_1, ..., W_n``; each must be a support point.

    Returns
    -------
    HoeffdingComponents
        ``B_n = E[S_n]``, ``Psi_n = sum_i psi_i(W_i)`` and ``U_n = sum_i D_i``,
        which add up to the realized ``S_n``.
    """
    s = dist.size
    if s > MAX_SUPPORT:
        raise SupportTooLarge(f"support has {s} points; at most {MAX_SUPPORT} can be enumerated")
    n = len(sample)
    p = dist.probs
    index = {}
    for k, point in enumerate(dist.support):
        index.setdefault(_key(point), k)
    try:
        obs = [index[_key(wi)] for wi in sample]
    except KeyError as exc:
        raise ValueError(f"sample value {exc.args[0]!r} is not in the support") from None

    # table[i][j][a, b] = u_ij(support[a], support[b]); diagonal only needs a == b
    def table(i: int, j: int) -> NDArray[np.float64]:
        return np.array(
            [[np.asarray(kernel(i, j, dist.support[a], dist.support[b]), dtype=np.float64) for b in range(s)] for a in range(s)]
        )

    B = 0.0
    psi = 0.0
    U = 0.0
    for i in range(n):
        diag = np.array([np.asarray(kernel(i, i, x, x), dtype=np.float64) for x in dist.support])
        mean_diag = np.tensordot(p, diag, axes=1)
        B = B + mean_diag
        psi = psi + diag[obs[i]] - mean_diag
    for i in range(n):
        for j in range(i):
            t = table(i, j) + np.swapaxes(table(j, i), 0, 1)  # u_ij + u_ji indexed [w_i, w_j]
            mean = np.tensordot(p, np.tensordot(p, t, axes=(0, 1)), axes=1)
            given_i = np.tensordot(t, p, axes=(1, 0)) - mean  # E[u~ | W_i = a]
            given_j = np.tensordot(p, t, axes=1) - mean  # E[u~ | W_j = b]
            B = B + mean
            a, b = obs[i], obs[j]
            psi = psi + given_i[a] + given_j[b]
            U = U + (t[a, b] - mean) - given_i[a] - given_j[b]
    return HoeffdingComponents(_squeeze(B), _squeeze(psi), _squeeze(U))


def _key(point: Any) -> Any:
    arr = np.asarray(point)
    return arr.item() if arr.ndim == 0 else tuple(arr.ravel().tolist())


def _squeeze(x: Any) -> Any:
    arr = np.asarray(x, dtype=np.float64)
    return float(arr) if arr.ndim == 0 else arr
