from __future__ import annotations

import numpy as np
import pytest


def dense_annihilator(P: np.ndarray) -> np.ndarray:
    """Reference M = I - P (P'P)^+ P' built with an explicit pseudo-inverse."""
    P = np.asarray(P, dtype=np.float64)
    return np.eye(P.shape[0]) - P @ np.linalg.pinv(P.T @ P) @ P.T


def dense_offdiag(M: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Double loop over i != j; the slow path the fast formulas are checked against."""
    n = M.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += M[i, j] * a[i] * b[j]
    return total


def double_loop_components(M, o):
    """Sum u_ij over ordered pairs by explicit loops."""
    n = M.shape[0]
    S = B = R = diag = U = 0.0
    for i in range(n):
        for j in range(n):
            m = M[i, j]
            S += m * o.x[i, 0] * (o.g[j] + o.eps[j])
            B += m * o.h[i, 0] * o.g[j]
            R += m * (o.v[i, 0] * o.g[j] + o.h[i, 0] * o.eps[j])
            if i == j:
                diag += m * o.v[i, 0] * o.eps[j]
            else:
                U += m * o.v[i, 0] * o.eps[j]
    r = np.sqrt(n)
    return {"S_n": S / r, "B_n": B / r, "R_n": R / r, "diag_term": diag / r, "U_n": U / r, "Psi_n": (R + diag) / r}


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
