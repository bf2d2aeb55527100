"""Moment polynomials of Gaussian measures and truncated moments of input measures.

The raw moments of a normal law N(mean, std^2) are polynomials in (mean, std):
the degree-j moment is obtained by expanding (u + mean)^j against the central
moments of N(0, std^2), which vanish for odd degree and equal
std^j * (j-1)!! for even degree.  That single expansion also covers the
degenerate std = 0 case, where the law collapses to a point mass and the
moment polynomial reduces to mean^j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, UsageError
from .polyalg import Exponent, SparsePoly, basis_size, poly_eval

__all__ = [
    "MeasureSpec",
    "MomentVector",
    "central_moment",
    "double_factorial",
    "gaussian_moment_poly",
    "moment_poly_bound",
    "moments_of_measure",
    "read_samples",
]


def double_factorial(k: int) -> float:
    """k!! as a float, with the conventions (-1)!! = 1 and 0!! = 1."""
    if k < -1:
        raise UsageError(f"double factorial undefined for {k}")
    out = 1.0
    while k > 1:
        out *= k
        k -= 2
    return out


def central_moment(j: int, sigma: float) -> float:
    """Central moment of order j of a normal law with standard deviation sigma."""
    if j < 0:
        raise UsageError(f"moment degree must be nonnegative, got {j}")
    if sigma < 0:
        raise UsageError(f"standard deviation must be nonnegative, got {sigma}")
    if j % 2 == 1:
        return 0.0
    return sigma**j * double_factorial(j - 1)


def gaussian_moment_poly(j: int) -> SparsePoly:
    """Polynomial p with p(mean, std) = E[X^j] for X ~ N(mean, std^2).

    Built by binomially expanding (u + mean)^j against central moments, so
    only even powers of the second variable appear and the total degree is j.
    """
    if j < 0:
        raise UsageError(f"moment degree must be nonnegative, got {j}")
    terms: dict[Exponent, float] = {}
    for k in range(0, j + 1, 2):
        terms[(j - k, k)] = math.comb(j, k) * double_factorial(k - 1)
    return SparsePoly("ms", terms)


def moment_poly_bound(j: int, bound: float) -> float:
    """Strict upper bound (bound*j)^j on the even moment polynomial of degree j
    over the square {|mean| < bound, 0 <= std < bound}."""
    if j % 2 != 0 or j <= 0:
        raise UsageError(f"bound is stated for positive even degrees, got {j}")
    if bound <= 0:
        raise UsageError(f"bound parameter must be positive, got {bound}")
    return (bound * j) ** j


@dataclass(frozen=True)
class MomentVector:
    """Truncated moment sequence, graded-indexed.

    ``order`` is the largest total degree stored.  Univariate vectors hold
    order+1 values; bivariate vectors hold one value per exponent pair of
    total degree <= order, in graded-lex order.
    """

    order: int
    values: np.ndarray
    nvars: int = 2

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if self.nvars not in (1, 2):
            raise UsageError("nvars must be 1 or 2")
        expected = self.order + 1 if self.nvars == 1 else basis_size(self.order)
        if vals.shape != (expected,):
            raise UsageError(
                f"expected {expected} moment values for order {self.order}, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise UsageError("moment values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __getitem__(self, key) -> float:
        if self.nvars == 1:
            if not isinstance(key, (int, np.integer)):
                raise UsageError("univariate moment vectors are indexed by degree")
            if key < 0 or key > self.order:
                raise IndexError(f"degree {key} outside stored range 0..{self.order}")
            return float(self.values[key])
        i, j = key
        if i + j > self.order:
            raise IndexError(f"exponent {key} outside stored range (order {self.order})")
        degree = i + j
        return float(self.values[degree * (degree + 1) // 2 + j])

    def truncated(self, new_order: int) -> "MomentVector":
        if new_order > self.order:
            raise UsageError(f"cannot extend order {self.order} to {new_order}")
        n = new_order + 1 if self.nvars == 1 else basis_size(new_order)
        return MomentVector(new_order, self.values[:n], self.nvars)


_VARIANTS = ("gaussian-mixture", "dirac-mixture", "uniform-interval", "raw-moments", "samples")


@dataclass(frozen=True)
class MeasureSpec:
    """Description of the input probability measure.

    Use the classmethod constructors; ``payload`` layout depends on the
    variant (component tuples, interval endpoints, raw moments, or a sample
    file path).
    """

    variant: str
    components: tuple = ()
    interval: tuple[float, float] | None = None
    raw: tuple[float, ...] | None = None
    path: str | None = None

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise UsageError(f"unknown measure variant {self.variant!r}")
        if self.variant in ("gaussian-mixture", "dirac-mixture"):
            if not self.components:
                raise UsageError("mixture needs at least one component")
            weights = [c[0] for c in self.components]
            if any(w < 0 for w in weights):
                raise UsageError("mixture weights must be nonnegative")
            if abs(sum(weights) - 1.0) > 1e-12:
                raise UsageError(f"mixture weights sum to {sum(weights)}, expected 1")
            if self.variant == "gaussian-mixture" and any(c[2] < 0 for c in self.components):
                raise UsageError("component standard deviations must be nonnegative")
        elif self.variant == "uniform-interval":
            a, b = self.interval
            if not a < b:
                raise UsageError(f"uniform interval needs a < b, got [{a}, {b}]")
        elif self.variant == "raw-moments":
            if not self.raw:
                raise UsageError("raw moment list is empty")
            if abs(self.raw[0] - 1.0) > 1e-12:
                raise UsageError("raw moments must start with total mass 1")
        elif self.variant == "samples":
            if not self.path:
                raise UsageError("samples variant needs a file path")

    @classmethod
    def gaussian_mixture(cls, components) -> "MeasureSpec":
        """components: iterable of (weight, mean, std)."""
        comps = tuple((float(w), float(m), float(s)) for w, m, s in components)
        return cls("gaussian-mixture", components=comps)

    @classmethod
    def single_gaussian(cls, mean: float, std: float) -> "MeasureSpec":
        return cls.gaussian_mixture([(1.0, mean, std)])

    @classmethod
    def dirac_mixture(cls, atoms) -> "MeasureSpec":
        """atoms: iterable of (weight, location)."""
        comps = tuple((float(w), float(a)) for w, a in atoms)
        return cls("dirac-mixture", components=comps)

    @classmethod
    def point_mass(cls, location: float) -> "MeasureSpec":
        return cls.dirac_mixture([(1.0, location)])

    @classmethod
    def uniform(cls, a: float, b: float) -> "MeasureSpec":
        return cls("uniform-interval", interval=(float(a), float(b)))

    @classmethod
    def raw_moments(cls, values) -> "MeasureSpec":
        return cls("raw-moments", raw=tuple(float(v) for v in values))

    @classmethod
    def samples(cls, path: str) -> "MeasureSpec":
        return cls("samples", path=str(path))


def read_samples(path: str) -> np.ndarray:
    """Read one real per line; blank lines and '#' comments are skipped."""
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: not a number: {text!r}") from exc
    if not values:
        raise UsageError(f"{path}: no samples found")
    data = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(data)):
        raise UsageError(f"{path}: samples contain non-finite values")
    return data


def moments_of_measure(spec: MeasureSpec, max_degree: int) -> MomentVector:
    """Raw moments of the specified measure up to max_degree (univariate)."""
    if max_degree < 0:
        raise UsageError(f"max_degree must be nonnegative, got {max_degree}")
    out = np.empty(max_degree + 1)
    if spec.variant == "gaussian-mixture":
        for j in range(max_degree + 1):
            poly = gaussian_moment_poly(j)
            out[j] = sum(w * poly_eval(poly, (m, s)) for w, m, s in spec.components)
    elif spec.variant == "dirac-mixture":
        for j in range(max_degree + 1):
            out[j] = sum(w * a**j for w, a in spec.components)
    elif spec.variant == "uniform-interval":
        a, b = spec.interval
        for j in range(max_degree + 1):
            out[j] = (b ** (j + 1) - a ** (j + 1)) / ((j + 1) * (b - a))
    elif spec.variant == "raw-moments":
        if len(spec.raw) < max_degree + 1:
            raise InsufficientDataError(
                f"need moments up to degree {max_degree}, got only {len(spec.raw) - 1}"
            )
        out[:] = spec.raw[: max_degree + 1]
    elif spec.variant == "samples":
        data = read_samples(spec.path)
        for j in range(max_degree + 1):
            out[j] = float(np.mean(data**j))
    else:  # pragma: no cover - guarded in MeasureSpec
        raise UsageError(f"unknown variant {spec.variant!r}")
    return MomentVector(max_degree, out, nvars=1)
