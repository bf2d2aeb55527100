"""Compact semialgebraic description of the admissible mixing parameters.

A parameter set S collects polynomial inequalities u_k(mean, std) >= 0
together with a redundant ball constraint R^2 - mean^2 - std^2 >= 0 that
witnesses compactness.  The minimal relaxation order and the rank-condition
offset are both the largest half-degree of the stored inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import UsageError
from .polyalg import SparsePoly, poly_eval

#: Relative margin added to the tight enclosing radius by make_box.
BALL_MARGIN = 1.001


def _ball_poly(radius: float) -> SparsePoly:
    return SparsePoly("ms", {(0, 0): radius * radius, (2, 0): -1.0, (0, 2): -1.0})


@dataclass(frozen=True)
class SemialgebraicSet:
    """Inequality description of the parameter set, ball constraint included."""

    inequalities: tuple[SparsePoly, ...]
    radius: float
    sigma_zero_allowed: bool = False
    box: tuple[float, float, float, float] | None = None
    half_degrees: tuple[int, ...] = field(init=False)
    v: int = field(init=False)
    n0: int = field(init=False)

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise UsageError(f"ball radius must be positive, got {self.radius}")
        if not self.inequalities:
            raise UsageError("parameter set needs at least the ball inequality")
        ball = _ball_poly(self.radius)
        if not any(_same_poly(u, ball) for u in self.inequalities):
            raise UsageError("the ball inequality is missing from the description")
        for u in self.inequalities:
            if not u.terms:
                raise UsageError("zero polynomial among the inequalities")
            if u.varpair != "ms":
                raise UsageError("set inequalities must use the (m, sigma) variables")
        halves = tuple(max(1, math.ceil(u.degree / 2)) for u in self.inequalities)
        object.__setattr__(self, "half_degrees", halves)
        object.__setattr__(self, "v", max(halves))
        object.__setattr__(self, "n0", max(halves))


def _same_poly(p: SparsePoly, q: SparsePoly, tol: float = 1e-12) -> bool:
    keys = set(p.terms) | set(q.terms)
    return all(abs(p.coeff(k) - q.coeff(k)) <= tol * max(1.0, abs(q.coeff(k)))
               for k in keys)


def make_box(m_lo: float, m_hi: float, sigma_lo: float, sigma_hi: float) -> SemialgebraicSet:
    """Axis-aligned box of means and standard deviations, plus its ball.

    The enclosing radius gets a 0.1% margin so the ball constraint stays
    strictly redundant.  A box reaching sigma = 0 is accepted but flagged,
    since it admits purely discrete "mixtures".
    """
    if not m_lo < m_hi:
        raise UsageError(f"mean bounds inverted: [{m_lo}, {m_hi}]")
    if not sigma_lo < sigma_hi:
        raise UsageError(f"std bounds inverted: [{sigma_lo}, {sigma_hi}]")
    if sigma_lo < 0:
        raise UsageError(f"std lower bound must be nonnegative, got {sigma_lo}")
    radius = BALL_MARGIN * math.sqrt(max(m_lo * m_lo, m_hi * m_hi) + sigma_hi * sigma_hi)
    ineqs = (
        SparsePoly("ms", {(1, 0): 1.0, (0, 0): -m_lo}),       # m - m_lo
        SparsePoly("ms", {(0, 0): m_hi, (1, 0): -1.0}),       # m_hi - m
        SparsePoly("ms", {(0, 1): 1.0, (0, 0): -sigma_lo}),   # sigma - sigma_lo
        SparsePoly("ms", {(0, 0): sigma_hi, (0, 1): -1.0}),   # sigma_hi - sigma
        _ball_poly(radius),
    )
    return SemialgebraicSet(
        inequalities=ineqs,
        radius=radius,
        sigma_zero_allowed=sigma_lo <= 0.0,
        box=(m_lo, m_hi, sigma_lo, sigma_hi),
    )


def from_inequalities(polys, radius: float) -> SemialgebraicSet:
    """General set from explicit inequalities; the ball for ``radius`` is appended.

    Compactness of the described set is the caller's responsibility; the ball
    only has to be a valid enclosing constraint.
    """
    ineqs = tuple(polys) + (_ball_poly(radius),)
    sigma_zero = contains_sigma_zero_point(ineqs, radius)
    return SemialgebraicSet(inequalities=ineqs, radius=radius,
                            sigma_zero_allowed=sigma_zero)


def contains_sigma_zero_point(ineqs, radius: float, grid: int = 201) -> bool:
    """Coarse check whether some (m, 0) satisfies every inequality."""
    for k in range(grid):
        m = -radius + 2 * radius * k / (grid - 1)
        if all(poly_eval(u, (m, 0.0)) >= -1e-10 for u in ineqs):
            return True
    return False


def contains(S: SemialgebraicSet, point: tuple[float, float], tol: float = 1e-10) -> bool:
    """Membership test: every inequality evaluates >= -tol at the point."""
    return all(poly_eval(u, point) >= -tol for u in S.inequalities)
