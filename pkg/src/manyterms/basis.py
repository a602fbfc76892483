"""Power-series approximating functions with interaction-order truncation.

Terms are monomials ``prod_l z_l ** e_l`` identified by their exponent vector
``e``.  The ladder grows the basis one block at a time: after the constant and
the linear terms, each degree ``d`` contributes its pure powers and then, while
``d`` does not exceed the interaction cap, every mixed monomial of total degree
``d``.  A "k-th order interaction" is a mixed monomial of total degree k + 1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError

Exponent = tuple[int, ...]


@dataclass(frozen=True)
class BasisSpec:
    """Ordered list of monomial exponent vectors.

    The first term is always the constant.  Specs produced by :func:`ladder`
    are nested: each is a prefix of the next.
    """

    d_z: int
    terms: tuple[Exponent, ...]

    def __post_init__(self) -> None:
        if self.d_z < 1:
            raise ValueError("d_z must be at least 1")
        terms = tuple(tuple(int(e) for e in t) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("a basis needs at least one term")
        if any(len(t) != self.d_z for t in terms):
            raise ValueError("every exponent vector must have length d_z")
        if any(e < 0 for t in terms for e in t):
            raise ValueError("exponents must be non-negative")
        if terms[0] != (0,) * self.d_z:
            raise ValueError("the first term must be the constant")
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate exponent vectors")

    @property
    def K(self) -> int:
        return len(self.terms)

    @property
    def max_exponent(self) -> int:
        return max(max(t) for t in self.terms)

    def prefix(self, K: int) -> "BasisSpec":
        """The basis made of the first ``K`` terms."""
        if not 1 <= K <= self.K:
            raise ValueError(f"K={K} outside 1..{self.K}")
        return BasisSpec(self.d_z, self.terms[:K])

    def is_prefix_of(self, other: "BasisSpec") -> bool:
        return self.d_z == other.d_z and other.terms[: self.K] == self.terms

    def to_text(self) -> str:
        """One term per line, exponents separated by single spaces."""
        return "".join(" ".join(str(e) for e in t) + "\n" for t in self.terms)

    @classmethod
    def from_text(cls, text: str) -> "BasisSpec":
        rows = [line.split() for line in text.splitlines() if line.strip()]
        if not rows:
            raise ValueError("empty basis listing")
        terms = tuple(tuple(int(tok) for tok in row) for row in rows)
        return cls(len(terms[0]), terms)


@dataclass(frozen=True)
class BasisMatrix:
    """The ``n x K`` design ``P_K`` together with the BasisSpec that produced it."""

    values: NDArray[np.float64]
    spec: BasisSpec

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]


def _unit(d_z: int, index: int, power: int) -> Exponent:
    e = [0] * d_z
    e[index] = power
    return tuple(e)


def _lex_desc(terms: Iterable[Exponent]) -> list[Exponent]:
    # lexicographic monomial order with z_1 > z_2 > ... (z_1^d comes first)
    return sorted(terms, reverse=True)


def mixed_monomials(d_z: int, degree: int) -> list[Exponent]:
    """All exponent vectors of total ``degree`` with at least two nonzero entries."""
    out = []
    for combo in itertools.combinations_with_replacement(range(d_z), degree):
        e = [0] * d_z
        for idx in combo:
            e[idx] += 1
        if sum(1 for x in e if x) >= 2:
            out.append(tuple(e))
    return _lex_desc(out)


def ladder(d_z: int, max_degree: int = 10, max_interaction_degree: int = 5) -> list[BasisSpec]:
    """Nested sequence of power-series bases.

    Parameters
    ----------
    d_z : int
        Number of covariates.
    max_degree : int
        Highest pure power included.
    max_interaction_degree : int
        Highest total degree of mixed monomials.  The default (5) stops after
        fourth-order interactions.

    Returns
    -------
    list of BasisSpec
        Constant plus linear terms first; then, for each degree ``d >= 2``,
        one spec adding the pure powers ``z_l ** d`` followed (when
        ``d <= max_interaction_degree`` and ``d_z > 1``) by one spec adding
        all mixed monomials of degree ``d``.

    Examples
    --------
    >>> [s.K for s in ladder(5)]
    [6, 11, 21, 26, 56, 61, 126, 131, 252, 257, 262, 267, 272, 277]
    """
    if d_z < 1 or max_degree < 1:
        raise ValueError("d_z and max_degree must be at least 1")
    terms: list[Exponent] = [(0,) * d_z]
    terms += [_unit(d_z, l, 1) for l in range(d_z)]
    specs = [BasisSpec(d_z, tuple(terms))]
    for degree in range(2, max_degree + 1):
        terms += [_unit(d_z, l, degree) for l in range(d_z)]
        specs.append(BasisSpec(d_z, tuple(terms)))
        if degree <= max_interaction_degree:
            mixed = mixed_monomials(d_z, degree)
            if mixed:
                terms += mixed
                specs.append(BasisSpec(d_z, tuple(terms)))
    return specs


def ladder_spec(d_z: int, K: int, max_degree: int = 10, max_interaction_degree: int = 5) -> BasisSpec:
    """The ladder spec with exactly ``K`` terms; raises ``ValueError`` if there is none."""
    for spec in ladder(d_z, max_degree, max_interaction_degree):
        if spec.K == K:
            return spec
    valid = [s.K for s in ladder(d_z, max_degree, max_interaction_degree)]
    raise ValueError(f"K={K} is not on the ladder for d_z={d_z}; valid values: {valid}")


def build_basis(Z: ArrayLike, spec: BasisSpec) -> BasisMatrix:
    """Evaluate every term of ``spec`` at every row of ``Z``.

    Powers are formed by repeated multiplication and each column is the
    product of its per-coordinate powers taken in coordinate order, so the
    output is bit-reproducible.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z.reshape(-1, 1) if spec.d_z == 1 else Z.reshape(1, -1)
    if Z.ndim != 2 or Z.shape[1] != spec.d_z:
        raise DimensionError(f"Z has shape {Z.shape}; expected (n, {spec.d_z})")
    n = Z.shape[0]
    powers = [np.ones_like(Z)]
    for _ in range(spec.max_exponent):
        powers.append(powers[-1] * Z)
    out = np.empty((n, spec.K), dtype=np.float64)
    for j, term in enumerate(spec.terms):
        col = np.ones(n, dtype=np.float64)
        for l, e in enumerate(term):
            if e:
                col = col * powers[e][:, l]
        out[:, j] = col
    return BasisMatrix(out, spec)


def constant_spec(d_z: int) -> BasisSpec:
    return BasisSpec(d_z, ((0,) * d_z,))

