"""Data generating processes for the Monte Carlo design.

Six models cross two forms of ``Var(v | z)`` with three error laws:

=========================  ========  ==========  =======
``Var(v | z)``             Gaussian  Asymmetric  Bimodal
=========================  ========  ==========  =======
1                          Model 1   Model 3     Model 5
c (1 + |z|^2)^2            Model 2   Model 4     Model 6
=========================  ========  ==========  =======

``z`` is Uniform(-1, 1)^5 and ``g(z) = h(z) = exp(|z|^2)``.  Both error
terms are drawn independently from the model's law, standardized to mean 0
and variance 1; the constant ``c`` makes ``E[v^2] = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Literal, NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.special import ndtri

from ..errors import ConfigError, NonpositiveVariance
from ..vstat import OracleData
from . import rng as _rng

MixtureLabel = Literal["gaussian", "asymmetric", "bimodal"]
Regression = Literal["exp_sqnorm", "sqnorm"]

Component = tuple[float, float, float]  # (weight, mean, variance)


@dataclass(frozen=True)
class MixtureSpec:
    """Normal mixture with zero mean and unit variance."""

    components: tuple[Component, ...]
    label: str = "custom"

    def __post_init__(self) -> None:
        comps = tuple((float(w), float(m), float(v)) for w, m, v in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("mixture needs at least one component")
        w = np.array([c[0] for c in comps])
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be positive and sum to 1")
        if any(c[2] <= 0 for c in comps):
            raise NonpositiveVariance("component variances must be positive")
        mean, var = mixture_moments(comps)
        if abs(mean) > 1e-12 or abs(var - 1.0) > 1e-12:
            raise ValueError(f"mixture is not standardized (mean={mean:.3g}, var={var:.3g})")

    @property
    def weights(self) -> NDArray[np.float64]:
        return np.array([c[0] for c in self.components])

    @property
    def means(self) -> NDArray[np.float64]:
        return np.array([c[1] for c in self.components])

    @property
    def sds(self) -> NDArray[np.float64]:
        return np.sqrt([c[2] for c in self.components])

    def pdf(self, x) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=np.float64)[..., None]
        z = (x - self.means) / self.sds
        dens = np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * self.sds)
        return dens @ self.weights

    def sample(self, gen: np.random.Generator, size: int) -> NDArray[np.float64]:
        """Component by uniform draw against cumulative weights, then inverse-CDF normal."""
        u_comp = gen.random(size)
        normals = ndtri(_rng.open_uniform(gen, size))
        if len(self.components) == 1:
            return self.means[0] + self.sds[0] * normals
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, u_comp, side="right")
        return self.means[idx] + self.sds[idx] * normals

    def describe(self) -> str:
        return "; ".join(f"{w!r}:{m!r}:{v!r}" for w, m, v in self.components)


def mixture_moments(components: Sequence[Component]) -> tuple[float, float]:
    w = np.array([c[0] for c in components], dtype=np.float64)
    m = np.array([c[1] for c in components], dtype=np.float64)
    v = np.array([c[2] for c in components], dtype=np.float64)
    mean = float(w @ m)
    return mean, float(w @ (v + m * m) - mean * mean)


def standardize_mixture(raw: Sequence[Component], label: str = "custom") -> MixtureSpec:
    """Shift and scale a normal mixture to mean 0 and variance 1.

    Weights are renormalized to sum to one.

    Raises
    ------
    NonpositiveVariance
        If any component variance is not positive.
    """
    raw = [(float(w), float(m), float(v)) for w, m, v in raw]
    if not raw:
        raise ValueError("mixture needs at least one component")
    if any(w <= 0 for w, _, _ in raw):
        raise ValueError("mixture weights must be positive")
    if any(v <= 0 for _, _, v in raw):
        raise NonpositiveVariance("component variances must be positive")
    total = sum(w for w, _, _ in raw)
    raw = [(w / total, m, v) for w, m, v in raw]
    mean, var = mixture_moments(raw)
    sd = math.sqrt(var)
    comps = tuple((w, (m - mean) / sd, v / var) for w, m, v in raw)
    # exact re-centering so the mean constraint holds to rounding
    mean2, var2 = mixture_moments(comps)
    comps = tuple((w, m - mean2, v) for w, m, v in comps)
    return MixtureSpec(comps, label)


def _asymmetric_raw() -> list[Component]:
    w1, m1, v1 = 0.3, -1.0, 0.5
    w2, m2 = 0.7, 3.0 / 7.0
    v2 = (1.0 - w1 * (v1 + m1 * m1) - w2 * m2 * m2) / w2
    if v2 <= 0:
        raise NonpositiveVariance("unit-variance constraint forces a nonpositive variance")
    return [(w1, m1, v1), (w2, m2, v2)]


DEFAULT_MIXTURES: dict[str, list[Component]] = {
    "gaussian": [(1.0, 0.0, 1.0)],
    "asymmetric": _asymmetric_raw(),
    "bimodal": [(0.5, -0.9, 0.19), (0.5, 0.9, 0.19)],
}


def default_mixture(label: MixtureLabel) -> MixtureSpec:
    if label not in DEFAULT_MIXTURES:
        raise ValueError(f"unknown mixture {label!r}")
    return standardize_mixture(DEFAULT_MIXTURES[label], label)


def density_grid(m: MixtureSpec, start: float = -6.0, stop: float = 6.0, step: float = 0.01) -> NDArray[np.float64]:
    """Rows ``(x, f(x))`` on an evenly spaced grid including both endpoints."""
    if step <= 0 or stop <= start:
        raise ValueError("need start < stop and step > 0")
    count = int(round((stop - start) / step)) + 1
    x = np.linspace(start, start + (count - 1) * step, count)
    return np.column_stack([x, m.pdf(x)])


def varsigma(d_z: int = 5) -> float:
    """Normalizer ``1 / E[(1 + |z|^2)^2]`` for ``z`` uniform on ``(-1, 1)^d_z``.

    With ``E[z^2] = 1/3`` and ``E[z^4] = 1/5`` the moment is
    ``1 + 2 d/3 + d/5 + d(d-1)/9``; for ``d_z = 5`` this gives 9/68.
    """
    d = Fraction(d_z)
    moment = 1 + 2 * d / 3 + d / 5 + d * (d - 1) / 9
    return float(1 / moment)


MODEL_TABLE: dict[int, tuple[str, bool]] = {
    1: ("gaussian", False),
    2: ("gaussian", True),
    3: ("asymmetric", False),
    4: ("asymmetric", True),
    5: ("bimodal", False),
    6: ("bimodal", True),
}


@dataclass(frozen=True)
class DgpSpec:
    model_id: int
    n: int = 500
    d_z: int = 5
    beta0: float = 1.0
    eps_dist: MixtureSpec = field(default_factory=lambda: default_mixture("gaussian"))
    v_dist: MixtureSpec = field(default_factory=lambda: default_mixture("gaussian"))
    hetero_v: bool = False
    varsigma: float = 1.0
    regression: Regression = "exp_sqnorm"

    @classmethod
    def for_model(
        cls,
        model_id: int,
        n: int = 500,
        mixtures: dict[str, MixtureSpec] | None = None,
        regression: Regression = "exp_sqnorm",
        d_z: int = 5,
    ) -> "DgpSpec":
        if model_id not in MODEL_TABLE:
            raise ConfigError(f"model must be one of 1..6, got {model_id}", key="model")
        label, hetero = MODEL_TABLE[model_id]
        dist = (mixtures or {}).get(label) or default_mixture(label)  # type: ignore[arg-type]
        return cls(
            model_id=model_id,
            n=n,
            d_z=d_z,
            eps_dist=dist,
            v_dist=dist,
            hetero_v=hetero,
            varsigma=varsigma(d_z) if hetero else 1.0,
            regression=regression,
        )

    def with_n(self, n: int) -> "DgpSpec":
        return replace(self, n=n)

    def cond_var_v(self, Z: NDArray[np.float64]) -> NDArray[np.float64]:
        """``E[v^2 | z_i]`` for each row of ``Z``."""
        if not self.hetero_v:
            return np.ones(Z.shape[0])
        q = np.sum(Z * Z, axis=1)
        return self.varsigma * (1.0 + q) ** 2

    def regression_function(self, Z: NDArray[np.float64]) -> NDArray[np.float64]:
        q = np.sum(Z * Z, axis=1)
        if self.regression == "exp_sqnorm":
            return np.exp(q)
        if self.regression == "sqnorm":
            return q
        raise ConfigError(f"unknown regression function {self.regression!r}", key="regression")


class SimSample(NamedTuple):
    y: NDArray[np.float64]
    X: NDArray[np.float64]
    Z: NDArray[np.float64]
    oracle: OracleData


def draw_sample(dgp: DgpSpec, rep_seed: int) -> SimSample:
    """One replication's data from a 64-bit replication seed.

    Draw order is fixed: ``z`` (row-major), then ``v``'s standardized errors,
    then ``eps``.  Output depends only on ``(dgp, rep_seed)``; see
    :func:`manyterms.simulation.rng.rep_seed` for deriving the seed.
    """
    gen = _rng.generator(rep_seed)
    n = dgp.n
    Z = _rng.uniform(gen, -1.0, 1.0, (n, dgp.d_z))
    e_v = dgp.v_dist.sample(gen, n)
    eps = dgp.eps_dist.sample(gen, n)
    g = dgp.regression_function(Z)
    h = g.copy()
    v = np.sqrt(dgp.cond_var_v(Z)) * e_v
    x = h + v
    y = x * dgp.beta0 + g + eps
    oracle = OracleData(g=g, h=h, v=v, eps=eps)
    return SimSample(y=y, X=x.reshape(-1, 1), Z=Z, oracle=oracle)
