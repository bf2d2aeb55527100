"""Rank test and atom extraction for mixing-measure pseudo-moments.

When the moment matrix of the solved mixing sequence has the same numerical
rank r at two consecutive matrix orders, the sequence is (numerically) the
moment vector of an r-atomic measure, and the atoms can be read off with
linear algebra: factor the smaller moment matrix, build the two shifted
(multiplication) operators on its column space, diagonalize a random real
combination, and recover weights by a Vandermonde least-squares fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExtractionFailedError, UsageError
from .gaussmoments import MomentVector
from .polyalg import SparsePoly, basis_size, exponent_at, graded_basis
from .relaxation import localizing_matrix, moment_matrix
from .semialg import SemialgebraicSet, contains

__all__ = [
    "AtomicMeasure",
    "FlatnessReport",
    "check_flatness",
    "extract_atoms",
    "recompute_moments",
]

#: Eigenvalue-gap threshold below which a random combination is retried.
_CLUSTER_GAP = 1e-8
#: Fresh random combinations tried after the first clustered one.
_RETRIES = 3


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite support {(mean_k, std_k)} with weights summing to one."""

    atoms: tuple[tuple[float, float], ...]
    weights: tuple[float, ...]
    inside_support: tuple[bool, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.atoms) != len(self.weights) or not self.atoms:
            raise UsageError("need one weight per atom and at least one atom")
        if any(w < 0 for w in self.weights):
            raise UsageError("weights must be nonnegative")

    @property
    def size(self) -> int:
        return len(self.atoms)


@dataclass(frozen=True)
class FlatnessReport:
    """Numerical ranks of the two nested moment matrices."""

    rank_low: int
    rank_high: int
    singular_values_low: np.ndarray
    singular_values_high: np.ndarray
    flat: bool
    r: int | None

    def __str__(self) -> str:
        tag = f"flat, r={self.r}" if self.flat else "not flat"
        return f"rank {self.rank_low}/{self.rank_high} ({tag})"


def _numerical_rank(sv: np.ndarray, eps_rank: float) -> int:
    if sv.size == 0 or sv[0] <= 0.0:
        return 0
    return int(np.sum(sv > eps_rank * sv[0]))


def check_flatness(phi: MomentVector, n: int, v: int, eps_rank: float) -> FlatnessReport:
    """Compare numerical ranks of the order-(n-v) and order-n moment matrices."""
    if v < 1:
        raise UsageError(f"rank offset v must be >= 1, got {v}")
    if phi.order < 2 * n:
        raise UsageError(f"moment vector of order {phi.order} too short for order {n}")
    sv_low = np.linalg.svd(moment_matrix(phi, n - v).mat, compute_uv=False)
    sv_high = np.linalg.svd(moment_matrix(phi, n).mat, compute_uv=False)
    rank_low = _numerical_rank(sv_low, eps_rank)
    rank_high = _numerical_rank(sv_high, eps_rank)
    flat = rank_low == rank_high
    return FlatnessReport(rank_low, rank_high, sv_low, sv_high, flat,
                          rank_low if flat else None)


def extract_atoms(phi: MomentVector, n: int, eps_rank: float, v: int = 1,
                  seed: int = 0, support: SemialgebraicSet | None = None,
                  support_tol: float = 1e-6) -> AtomicMeasure:
    """Recover the atoms and weights of a flat mixing-moment vector.

    Raises if the flatness precondition fails, if every random combination has
    clustered eigenvalues, or if a clearly negative weight appears.  Atoms
    slightly outside the support are only flagged, never moved.
    """
    report = check_flatness(phi, n, v, eps_rank)
    if not report.flat:
        raise UsageError(f"moment vector is not flat ({report})")
    r = report.r
    if r == 0:
        raise ExtractionFailedError("zero moment matrix carries no atoms")

    base = moment_matrix(phi, n - v).mat
    eigval, eigvec = np.linalg.eigh(base)
    order = np.argsort(eigval)[::-1]
    lead = eigval[order[:r]]
    if np.min(lead) <= 0:
        raise ExtractionFailedError("leading moment-matrix eigenvalues are not positive")
    basis_vecs = eigvec[:, order[:r]]
    # Pseudo-inverse of the rank-r factor Q_r diag(lead)^{1/2}.
    pinv = (basis_vecs / np.sqrt(lead)[None, :]).T

    shift_mean = localizing_matrix(phi, SparsePoly.variable("ms", 0), n - v).mat
    shift_std = localizing_matrix(phi, SparsePoly.variable("ms", 1), n - v).mat
    op_mean = pinv @ shift_mean @ pinv.T
    op_std = pinv @ shift_std @ pinv.T

    rng = np.random.default_rng(seed)
    atoms: list[tuple[float, float]] | None = None
    for _ in range(1 + _RETRIES):
        theta = rng.uniform(0.25, 1.0) * (1 if rng.random() < 0.5 else -1)
        combo = theta * op_mean + np.sqrt(1 - theta * theta) * op_std
        combo = 0.5 * (combo + combo.T)
        w, vecs = np.linalg.eigh(combo)
        scale = max(1.0, float(np.max(np.abs(w))))
        if r == 1 or np.min(np.diff(np.sort(w))) > _CLUSTER_GAP * scale:
            atoms = [
                (float(vecs[:, k] @ op_mean @ vecs[:, k]),
                 float(vecs[:, k] @ op_std @ vecs[:, k]))
                for k in range(r)
            ]
            break
    if atoms is None:
        raise ExtractionFailedError(
            f"eigenvalues stayed clustered after {_RETRIES + 1} random combinations")

    # Vandermonde least squares on every stored degree the flat part reproduces.
    degrees = graded_basis(2 * (n - v))
    vand = np.empty((len(degrees), r))
    target = np.empty(len(degrees))
    for row, (i, j) in enumerate(degrees):
        target[row] = phi[(i, j)]
        for k, (mk, sk) in enumerate(atoms):
            vand[row, k] = mk**i * sk**j
    weights, *_ = np.linalg.lstsq(vand, target, rcond=None)
    if np.min(weights) < -1e-6:
        raise ExtractionFailedError(f"negative weight {np.min(weights):.3e} in extraction")
    weights = np.clip(weights, 0.0, None)

    inside = None
    if support is not None:
        inside = tuple(contains(support, atom, tol=support_tol) for atom in atoms)
    return AtomicMeasure(atoms=tuple(atoms), weights=tuple(float(w) for w in weights),
                         inside_support=inside)


def recompute_moments(measure: AtomicMeasure, max_degree: int) -> MomentVector:
    """Exact bivariate moments of a finite atomic measure up to max_degree."""
    vals = np.zeros(basis_size(max_degree))
    for pos in range(len(vals)):
        i, j = exponent_at(pos)
        vals[pos] = sum(w * m**i * s**j
                        for w, (m, s) in zip(measure.weights, measure.atoms))
    return MomentVector(max_degree, vals, nvars=2)
