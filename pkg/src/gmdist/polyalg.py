"""Exponent indexing and sparse polynomial arithmetic for bivariate moment problems.

Everything in this package that touches moments indexes bivariate monomials in
graded-lexicographic order: sort by total degree first, then by decreasing
power of the first variable, so the sequence starts

    (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), (3,0), ...

Moment vectors, moment-matrix rows/columns and SDP layouts all share this
order, which keeps every matrix block deterministic and test-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

Exponent = tuple[int, int]

#: Recognized variable pairs: the transport plane (x, y) and the
#: mixing-parameter plane (m, sigma).
VAR_PAIRS = ("xy", "ms")


def basis_size(max_degree: int) -> int:
    """Number of bivariate monomials of total degree <= max_degree."""
    if max_degree < 0:
        return 0
    return (max_degree + 1) * (max_degree + 2) // 2


def graded_index(exponent: Exponent, order: int) -> int:
    """Position of x^i y^j in graded-lex order over {(i, j): i + j <= 2*order}.

    The map is a bijection onto {0, ..., basis_size(2*order) - 1}; exponents
    beyond total degree 2*order raise IndexError.
    """
    i, j = exponent
    if i < 0 or j < 0:
        raise UsageError(f"exponents must be nonnegative, got {(i, j)}")
    degree = i + j
    if degree > 2 * order:
        raise IndexError(
            f"exponent {(i, j)} has total degree {degree}, out of range for order {order}"
        )
    return degree * (degree + 1) // 2 + j


def exponent_at(position: int) -> Exponent:
    """Inverse of graded_index: the exponent pair stored at a given position."""
    if position < 0:
        raise UsageError(f"position must be nonnegative, got {position}")
    degree = (math.isqrt(8 * position + 1) - 1) // 2
    j = position - degree * (degree + 1) // 2
    return (degree - j, j)


def graded_basis(max_degree: int) -> list[Exponent]:
    """All exponent pairs of total degree <= max_degree, in graded-lex order."""
    return [exponent_at(k) for k in range(basis_size(max_degree))]


@dataclass
class SparsePoly:
    """Sparse real polynomial in a tagged variable pair.

    ``terms`` maps exponent pairs to nonzero coefficients; zero coefficients
    are dropped on construction.  Instances are treated as immutable.
    """

    varpair: str
    terms: dict[Exponent, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.varpair not in VAR_PAIRS:
            raise UsageError(f"unknown varpair {self.varpair!r}, expected one of {VAR_PAIRS}")
        cleaned: dict[Exponent, float] = {}
        for exp, coeff in self.terms.items():
            i, j = exp
            if i < 0 or j < 0:
                raise UsageError(f"negative exponent {exp} in polynomial")
            c = float(coeff)
            if c != 0.0:
                cleaned[(int(i), int(j))] = c
        self.terms = cleaned

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, varpair: str) -> "SparsePoly":
        return cls(varpair, {})

    @classmethod
    def constant(cls, varpair: str, value: float) -> "SparsePoly":
        return cls(varpair, {(0, 0): value})

    @classmethod
    def variable(cls, varpair: str, which: int) -> "SparsePoly":
        """The first (which=0) or second (which=1) variable of the pair."""
        if which not in (0, 1):
            raise UsageError("which must be 0 or 1")
        return cls(varpair, {(1, 0) if which == 0 else (0, 1): 1.0})

    # -- queries ------------------------------------------------------------

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial reports -1."""
        if not self.terms:
            return -1
        return max(i + j for i, j in self.terms)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def coeff(self, exponent: Exponent) -> float:
        return self.terms.get(exponent, 0.0)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "SparsePoly") -> "SparsePoly":
        self._check_pair(other)
        out = dict(self.terms)
        for exp, c in other.terms.items():
            out[exp] = out.get(exp, 0.0) + c
        return SparsePoly(self.varpair, out)

    def __sub__(self, other: "SparsePoly") -> "SparsePoly":
        return self + other.scaled(-1.0)

    def __mul__(self, other: "SparsePoly") -> "SparsePoly":
        self._check_pair(other)
        out: dict[Exponent, float] = {}
        for (i1, j1), c1 in self.terms.items():
            for (i2, j2), c2 in other.terms.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0.0) + c1 * c2
        return SparsePoly(self.varpair, out)

    def scaled(self, factor: float) -> "SparsePoly":
        return SparsePoly(self.varpair, {e: c * factor for e, c in self.terms.items()})

    def substitute_scaled_vars(self, factor: float) -> "SparsePoly":
        """Substitute (u, v) -> (factor*u, factor*v)."""
        return SparsePoly(
            self.varpair, {(i, j): c * factor ** (i + j) for (i, j), c in self.terms.items()}
        )

    def affine_substitute(
        self, first: tuple[float, float], second: tuple[float, float]
    ) -> "SparsePoly":
        """Substitute each variable v -> a*v + b, given (a, b) per variable."""
        out: dict[Exponent, float] = {}
        a1, b1 = first
        a2, b2 = second
        for (i, j), c in self.terms.items():
            for k in range(i + 1):
                c1 = c * math.comb(i, k) * a1**k * b1 ** (i - k)
                for l in range(j + 1):
                    c2 = c1 * math.comb(j, l) * a2**l * b2 ** (j - l)
                    key = (k, l)
                    out[key] = out.get(key, 0.0) + c2
        return SparsePoly(self.varpair, out)

    def _check_pair(self, other: "SparsePoly") -> None:
        if self.varpair != other.varpair:
            raise UsageError(
                f"variable pairs differ: {self.varpair!r} vs {other.varpair!r}"
            )

    def __call__(self, point: tuple[float, float]) -> float:
        return poly_eval(self, point)

    def __repr__(self) -> str:  # debugging aid only
        names = {"xy": ("x", "y"), "ms": ("m", "s")}[self.varpair]
        parts = []
        for (i, j) in sorted(self.terms, key=lambda e: (e[0] + e[1], e[1])):
            mono = "".join(
                f"{n}^{p}" for n, p in zip(names, (i, j)) if p
            ) or "1"
            parts.append(f"{self.terms[(i, j)]:+g}*{mono}")
        return f"SparsePoly({' '.join(parts) or '0'})"


def poly_eval(p: SparsePoly, point: tuple[float, float]) -> float:
    """Evaluate a polynomial at a point, accumulating terms in graded order."""
    a, b = point
    total = 0.0
    for (i, j) in sorted(p.terms, key=lambda e: (e[0] + e[1], e[1])):
        total += p.terms[(i, j)] * a**i * b**j
    return total


def poly_mul(p: SparsePoly, q: SparsePoly) -> SparsePoly:
    """Product of two polynomials over the same variable pair."""
    return p * q


@dataclass
class SymMatrix:
    """Dense symmetric matrix; the upper triangle is mirrored on construction."""

    mat: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise UsageError(f"expected a square matrix, got shape {m.shape}")
        upper = np.triu(m)
        self.mat = upper + np.triu(m, 1).T

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __getitem__(self, key):
        return self.mat[key]
