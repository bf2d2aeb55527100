"""Assembly of the order-n semidefinite relaxation of the transport problem.

The decision vector stacks two (or, in the split-cost mode, three) truncated
pseudo-moment sequences: the transport-plan moments over (x, y) and the
mixing-measure moments over (m, sigma), each to total degree 2n.  Equality
rows pin the x-marginal to the input moments and couple the y-marginal to the
mixing measure through the Gaussian moment polynomials; positive
semidefiniteness is imposed on the moment matrix of each sequence and on one
localizing matrix per set inequality.

All assembly happens after a change of variables that rescales both planes by
a common factor c >= 1 chosen so the enclosing ball and the input moments fit
inside [-1, 1]; this keeps moment magnitudes near one at high degree.  The
moments transform by binomial convolution (a pure power scaling when no shift
is used, which is the default here), Gaussian parameters transform into
Gaussian parameters, and the objective carries c^2 (quadratic cost) or c
(absolute cost) so reported optimal values are already in original units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotConvergedError, UsageError
from .gaussmoments import MomentVector, gaussian_moment_poly
from .polyalg import (
    Exponent,
    SparsePoly,
    SymMatrix,
    basis_size,
    exponent_at,
    graded_basis,
    graded_index,
)
from .semialg import SemialgebraicSet

__all__ = [
    "BlockMap",
    "DualCertificate",
    "EqConstraint",
    "PseudoMomentLayout",
    "SDPProblem",
    "affine_pushforward_moments",
    "assemble_mixing_refinement",
    "assemble_w1",
    "assemble_w2",
    "constraint_residuals",
    "dump_problem",
    "extract_dual",
    "localizing_matrix",
    "moment_matrix",
]


# ---------------------------------------------------------------------------
# moment and localizing matrices
# ---------------------------------------------------------------------------

def moment_matrix(seq: MomentVector, k: int) -> SymMatrix:
    """Moment matrix of order k: entry (r, c) is the moment at e_r + e_c."""
    if seq.nvars != 2:
        raise UsageError("moment matrices need a bivariate moment vector")
    if seq.order < 2 * k:
        raise UsageError(f"moment vector of order {seq.order} too short for matrix order {k}")
    basis = graded_basis(k)
    dim = len(basis)
    out = np.empty((dim, dim))
    for r, (ir, jr) in enumerate(basis):
        for c in range(r, dim):
            ic, jc = basis[c]
            out[r, c] = seq[(ir + ic, jr + jc)]
            out[c, r] = out[r, c]
    return SymMatrix(out)


def localizing_matrix(seq: MomentVector, g: SparsePoly, k: int) -> SymMatrix:
    """Moment matrix of the g-shifted sequence, order k."""
    if seq.nvars != 2:
        raise UsageError("localizing matrices need a bivariate moment vector")
    if seq.order < 2 * k + g.degree:
        raise UsageError(
            f"moment vector of order {seq.order} too short for order {k} and shift degree {g.degree}"
        )
    basis = graded_basis(k)
    dim = len(basis)
    out = np.empty((dim, dim))
    for r, (ir, jr) in enumerate(basis):
        for c in range(r, dim):
            ic, jc = basis[c]
            val = 0.0
            for (gi, gj), coeff in g.terms.items():
                val += coeff * seq[(ir + ic + gi, jr + jc + gj)]
            out[r, c] = val
            out[c, r] = val
    return SymMatrix(out)


# ---------------------------------------------------------------------------
# problem containers
# ---------------------------------------------------------------------------

@dataclass
class BlockMap:
    """Sparse linear map from the decision vector to one symmetric block.

    ``rows/cols/zidx/vals`` enumerate every nonzero of the map over the full
    square (both triangles), so scatter-adding values of the decision vector
    produces an exactly symmetric matrix.
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    zidx: np.ndarray
    vals: np.ndarray
    label: str = ""

    def apply(self, z: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        np.add.at(out, (self.rows, self.cols), self.vals * z[self.zidx])
        return out

    def adjoint(self, S: np.ndarray, num_vars: int) -> np.ndarray:
        return np.bincount(self.zidx, weights=self.vals * S[self.rows, self.cols],
                           minlength=num_vars)


@dataclass
class EqConstraint:
    """One sparse equality row <coeffs, z> = rhs."""

    idx: np.ndarray
    coeffs: np.ndarray
    rhs: float
    label: str = ""


@dataclass
class SDPProblem:
    """Linear objective over a free decision vector with equality rows and
    PSD constraints on linear matrix images."""

    num_vars: int
    objective: np.ndarray
    constraints: list[EqConstraint]
    blocks: list[BlockMap]

    def __post_init__(self) -> None:
        if self.objective.shape != (self.num_vars,):
            raise UsageError("objective length does not match the decision vector")
        for con in self.constraints:
            if np.any(con.idx < 0) or np.any(con.idx >= self.num_vars):
                raise UsageError(f"constraint {con.label!r} references an invalid index")
        for blk in self.blocks:
            if np.any(blk.zidx < 0) or np.any(blk.zidx >= self.num_vars):
                raise UsageError(f"block {blk.label!r} references an invalid index")

    @property
    def block_dims(self) -> list[int]:
        return [b.dim for b in self.blocks]

    def constraint_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense stacked equality system (B, d)."""
        B = np.zeros((len(self.constraints), self.num_vars))
        d = np.zeros(len(self.constraints))
        for i, con in enumerate(self.constraints):
            np.add.at(B[i], con.idx, con.coeffs)
            d[i] = con.rhs
        return B, d


@dataclass
class PseudoMomentLayout:
    """Where each pseudo-moment sequence lives inside the decision vector,
    plus everything needed to map a solution back to original units."""

    order: int
    mode: str                                # "w2" or "w1"
    scale: float
    num_vars: int
    transport_offsets: tuple[int, ...]       # one offset (w2) or two (w1)
    mixing_offset: int
    marginal_rows: tuple[int, ...]
    coupling_rows: tuple[int, ...]
    transport_mass_row: int
    mixing_mass_row: int
    set_inequalities: tuple[SparsePoly, ...]     # original coordinates
    scaled_inequalities: tuple[SparsePoly, ...]  # scaled and sup-normalized
    ineq_normalizers: tuple[float, ...]
    y_box: float | None = None

    @property
    def seq_length(self) -> int:
        return basis_size(2 * self.order)

    def _unscale_block(self, z: np.ndarray, offset: int) -> MomentVector:
        vals = np.array(z[offset:offset + self.seq_length])
        for pos in range(self.seq_length):
            i, j = exponent_at(pos)
            vals[pos] *= self.scale ** (i + j)
        return MomentVector(2 * self.order, vals, nvars=2)

    def mixing_moments(self, z: np.ndarray) -> MomentVector:
        """Mixing-measure pseudo-moments in original units."""
        return self._unscale_block(z, self.mixing_offset)

    def transport_moments(self, z: np.ndarray, which: int = 0) -> MomentVector:
        return self._unscale_block(z, self.transport_offsets[which])

    def pack(self, transport: "MomentVector | list[MomentVector]",
             mixing: MomentVector) -> np.ndarray:
        """Scale original-unit moment vectors into a decision vector (tests)."""
        parts = transport if isinstance(transport, list) else [transport]
        if len(parts) != len(self.transport_offsets):
            raise UsageError(f"expected {len(self.transport_offsets)} transport sequences")
        z = np.zeros(self.num_vars)
        for off, mv in zip(self.transport_offsets, parts):
            z[off:off + self.seq_length] = self._scale_values(mv)
        z[self.mixing_offset:self.mixing_offset + self.seq_length] = self._scale_values(mixing)
        return z

    def _scale_values(self, mv: MomentVector) -> np.ndarray:
        if mv.nvars != 2 or mv.order < 2 * self.order:
            raise UsageError("need a bivariate moment vector of order >= 2n")
        out = np.empty(self.seq_length)
        for pos in range(self.seq_length):
            i, j = exponent_at(pos)
            out[pos] = mv[(i, j)] / self.scale ** (i + j)
        return out


# ---------------------------------------------------------------------------
# scaling helpers
# ---------------------------------------------------------------------------

def affine_pushforward_moments(moments: np.ndarray, shift: float, scale: float) -> np.ndarray:
    """Moments of (X - shift)/scale from the moments of X, by binomial convolution."""
    if scale <= 0:
        raise UsageError(f"scale must be positive, got {scale}")
    moments = np.asarray(moments, dtype=float)
    out = np.empty_like(moments)
    for j in range(len(moments)):
        acc = 0.0
        for k in range(j + 1):
            acc += math.comb(j, k) * (-shift) ** (j - k) * moments[k]
        out[j] = acc / scale**j
    return out


def pick_scale(mu_moments: MomentVector, S: SemialgebraicSet, extra: float = 0.0) -> float:
    """Common dilation factor mapping the enclosing ball and the input moments
    into the unit range; never below 1 so small problems are left alone."""
    c = max(1.0, S.radius, extra)
    for j in range(1, mu_moments.order + 1):
        mj = abs(mu_moments[j])
        if mj > 0:
            c = max(c, mj ** (1.0 / j))
    return c


def _scaled_inequalities(S: SemialgebraicSet, c: float):
    scaled, normalizers = [], []
    for u in S.inequalities:
        v = u.substitute_scaled_vars(c)
        a = v.max_abs_coeff()
        scaled.append(v.scaled(1.0 / a))
        normalizers.append(a)
    return tuple(scaled), tuple(normalizers)


# ---------------------------------------------------------------------------
# block builders
# ---------------------------------------------------------------------------

def _moment_block(offset: int, k: int, order: int, label: str) -> BlockMap:
    basis = graded_basis(k)
    dim = len(basis)
    rows, cols, zidx = [], [], []
    for r, (ir, jr) in enumerate(basis):
        for c, (ic, jc) in enumerate(basis):
            rows.append(r)
            cols.append(c)
            zidx.append(offset + graded_index((ir + ic, jr + jc), order))
    n = len(rows)
    return BlockMap(dim, np.array(rows), np.array(cols), np.array(zidx),
                    np.ones(n), label)


def _localizing_block(offset: int, g: SparsePoly, k: int, order: int, label: str) -> BlockMap:
    basis = graded_basis(k)
    dim = len(basis)
    rows, cols, zidx, vals = [], [], [], []
    for r, (ir, jr) in enumerate(basis):
        for c, (ic, jc) in enumerate(basis):
            for (gi, gj), coeff in g.terms.items():
                rows.append(r)
                cols.append(c)
                zidx.append(offset + graded_index((ir + ic + gi, jr + jc + gj), order))
                vals.append(coeff)
    return BlockMap(dim, np.array(rows), np.array(cols), np.array(zidx),
                    np.array(vals), label)


def _mixing_blocks(mixing_offset: int, scaled_ineqs, half_degrees, n: int):
    blocks = [_moment_block(mixing_offset, n, n, "mixing")]
    for k, (u, d) in enumerate(zip(scaled_ineqs, half_degrees), start=1):
        blocks.append(_localizing_block(mixing_offset, u, n - d, n, f"mixing:u{k}"))
    return blocks


def _coupling_row(lam_offsets, mixing_offset, j: int, n: int) -> EqConstraint:
    idx = [off + graded_index((0, j), n) for off in lam_offsets]
    coeffs = [1.0] * len(lam_offsets)
    for exp, coeff in gaussian_moment_poly(j).terms.items():
        idx.append(mixing_offset + graded_index(exp, n))
        coeffs.append(-coeff)
    return EqConstraint(np.array(idx), np.array(coeffs), 0.0, f"couple:{j}")


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def assemble_w2(mu_moments: MomentVector, S: SemialgebraicSet, n: int
                ) -> tuple[SDPProblem, PseudoMomentLayout]:
    """Order-n relaxation of the quadratic-cost problem.

    Objective value is the quadratic transport cost in original units; no
    support constraints are placed on the plan beyond its moment matrix.
    """
    if n < S.n0:
        raise UsageError(f"relaxation order {n} below the minimal order {S.n0}")
    if mu_moments.nvars != 1 or mu_moments.order < 2 * n:
        raise UsageError(f"need input moments to degree {2 * n}")

    c = pick_scale(mu_moments, S, extra=0.0)
    mu_scaled = affine_pushforward_moments(mu_moments.values[: 2 * n + 1], 0.0, c)
    scaled_ineqs, normalizers = _scaled_inequalities(S, c)

    seq_len = basis_size(2 * n)
    lam_off, phi_off = 0, seq_len
    num_vars = 2 * seq_len

    objective = np.zeros(num_vars)
    objective[lam_off + graded_index((2, 0), n)] += c * c
    objective[lam_off + graded_index((1, 1), n)] += -2.0 * c * c
    objective[lam_off + graded_index((0, 2), n)] += c * c

    constraints: list[EqConstraint] = []
    for j in range(2 * n + 1):
        pos = lam_off + graded_index((j, 0), n)
        constraints.append(EqConstraint(np.array([pos]), np.array([1.0]),
                                        float(mu_scaled[j]), f"marginal:{j}"))
    for j in range(2 * n + 1):
        constraints.append(_coupling_row((lam_off,), phi_off, j, n))
    mass_lam = len(constraints)
    constraints.append(EqConstraint(np.array([lam_off]), np.array([1.0]), 1.0, "mass:plan"))
    mass_phi = len(constraints)
    constraints.append(EqConstraint(np.array([phi_off]), np.array([1.0]), 1.0, "mass:mixing"))

    blocks = [_moment_block(lam_off, n, n, "plan")]
    blocks += _mixing_blocks(phi_off, scaled_ineqs, S.half_degrees, n)

    problem = SDPProblem(num_vars, objective, constraints, blocks)
    layout = PseudoMomentLayout(
        order=n, mode="w2", scale=c, num_vars=num_vars,
        transport_offsets=(lam_off,), mixing_offset=phi_off,
        marginal_rows=tuple(range(0, 2 * n + 1)),
        coupling_rows=tuple(range(2 * n + 1, 4 * n + 2)),
        transport_mass_row=mass_lam, mixing_mass_row=mass_phi,
        set_inequalities=S.inequalities,
        scaled_inequalities=scaled_ineqs, ineq_normalizers=normalizers,
    )
    return problem, layout


def assemble_w1(mu_moments: MomentVector, S: SemialgebraicSet, n: int,
                y_box: float) -> tuple[SDPProblem, PseudoMomentLayout]:
    """Order-n relaxation of the absolute-cost problem.

    The plan splits into two sequences supported on the half-planes where the
    cost is linear; box localizers with half-width ``y_box`` keep both
    sequences compactly supported, a deliberate strengthening needed to make
    the truncated problem well-posed on the whole plane.
    """
    if n < max(S.n0, 1):
        raise UsageError(f"relaxation order {n} below the minimal order {S.n0}")
    if mu_moments.nvars != 1 or mu_moments.order < 2 * n:
        raise UsageError(f"need input moments to degree {2 * n}")
    if y_box <= 0:
        raise UsageError(f"y_box must be positive, got {y_box}")

    c = pick_scale(mu_moments, S, extra=y_box)
    mu_scaled = affine_pushforward_moments(mu_moments.values[: 2 * n + 1], 0.0, c)
    scaled_ineqs, normalizers = _scaled_inequalities(S, c)
    box = y_box / c

    seq_len = basis_size(2 * n)
    lam1_off, lam2_off, phi_off = 0, seq_len, 2 * seq_len
    num_vars = 3 * seq_len

    objective = np.zeros(num_vars)
    objective[lam1_off + graded_index((0, 1), n)] += c     # y - x on the left plan
    objective[lam1_off + graded_index((1, 0), n)] += -c
    objective[lam2_off + graded_index((1, 0), n)] += c     # x - y on the right plan
    objective[lam2_off + graded_index((0, 1), n)] += -c

    constraints: list[EqConstraint] = []
    for j in range(2 * n + 1):
        p1 = lam1_off + graded_index((j, 0), n)
        p2 = lam2_off + graded_index((j, 0), n)
        constraints.append(EqConstraint(np.array([p1, p2]), np.array([1.0, 1.0]),
                                        float(mu_scaled[j]), f"marginal:{j}"))
    for j in range(2 * n + 1):
        constraints.append(_coupling_row((lam1_off, lam2_off), phi_off, j, n))
    mass_lam = len(constraints)
    constraints.append(EqConstraint(np.array([lam1_off, lam2_off]),
                                    np.array([1.0, 1.0]), 1.0, "mass:plan"))
    mass_phi = len(constraints)
    constraints.append(EqConstraint(np.array([phi_off]), np.array([1.0]), 1.0, "mass:mixing"))

    y_minus_x = SparsePoly("xy", {(0, 1): 1.0, (1, 0): -1.0})
    x_minus_y = SparsePoly("xy", {(1, 0): 1.0, (0, 1): -1.0})
    box_x = SparsePoly("xy", {(0, 0): box * box, (2, 0): -1.0})
    box_y = SparsePoly("xy", {(0, 0): box * box, (0, 2): -1.0})

    blocks = [
        _moment_block(lam1_off, n, n, "plan-left"),
        _moment_block(lam2_off, n, n, "plan-right"),
        _localizing_block(lam1_off, y_minus_x, n - 1, n, "plan-left:halfplane"),
        _localizing_block(lam2_off, x_minus_y, n - 1, n, "plan-right:halfplane"),
        _localizing_block(lam1_off, box_x, n - 1, n, "plan-left:boxx"),
        _localizing_block(lam1_off, box_y, n - 1, n, "plan-left:boxy"),
        _localizing_block(lam2_off, box_x, n - 1, n, "plan-right:boxx"),
        _localizing_block(lam2_off, box_y, n - 1, n, "plan-right:boxy"),
    ]
    blocks += _mixing_blocks(phi_off, scaled_ineqs, S.half_degrees, n)

    problem = SDPProblem(num_vars, objective, constraints, blocks)
    layout = PseudoMomentLayout(
        order=n, mode="w1", scale=c, num_vars=num_vars,
        transport_offsets=(lam1_off, lam2_off), mixing_offset=phi_off,
        marginal_rows=tuple(range(0, 2 * n + 1)),
        coupling_rows=tuple(range(2 * n + 1, 4 * n + 2)),
        transport_mass_row=mass_lam, mixing_mass_row=mass_phi,
        set_inequalities=S.inequalities,
        scaled_inequalities=scaled_ineqs, ineq_normalizers=normalizers,
        y_box=y_box,
    )
    return problem, layout


def assemble_mixing_refinement(mu_moments: MomentVector, S: SemialgebraicSet,
                               n: int) -> tuple[SDPProblem, PseudoMomentLayout]:
    """Candidate-proposal problem: the mixing sequence alone, with every
    coupling pinned directly to the input moments.

    At a zero-cost optimum the transport plan's second marginal ideally
    reproduces the input moments degree by degree, but at finite solver
    accuracy the high-degree entries drift (the column-equality argument
    degrades like the square root of the optimal value).  This auxiliary
    program restores the idealized coupling and minimizes the moment-matrix
    trace, the standard convex surrogate that favors low-rank (atomic)
    representatives.  Its solutions are only ever used as candidates; the
    moment-match verification remains the acceptance gate.
    """
    if n < S.n0:
        raise UsageError(f"relaxation order {n} below the minimal order {S.n0}")
    if mu_moments.nvars != 1 or mu_moments.order < 2 * n:
        raise UsageError(f"need input moments to degree {2 * n}")

    c = pick_scale(mu_moments, S, extra=0.0)
    mu_scaled = affine_pushforward_moments(mu_moments.values[: 2 * n + 1], 0.0, c)
    scaled_ineqs, normalizers = _scaled_inequalities(S, c)
    num_vars = basis_size(2 * n)

    objective = np.zeros(num_vars)
    for i, j in graded_basis(n):
        objective[graded_index((2 * i, 2 * j), n)] += 1.0

    constraints: list[EqConstraint] = []
    for j in range(2 * n + 1):
        idx, coeffs = [], []
        for exp, coeff in gaussian_moment_poly(j).terms.items():
            idx.append(graded_index(exp, n))
            coeffs.append(coeff)
        constraints.append(EqConstraint(np.array(idx), np.array(coeffs),
                                        float(mu_scaled[j]), f"couple:{j}"))

    blocks = _mixing_blocks(0, scaled_ineqs, S.half_degrees, n)
    problem = SDPProblem(num_vars, objective, constraints, blocks)
    layout = PseudoMomentLayout(
        order=n, mode="mixing", scale=c, num_vars=num_vars,
        transport_offsets=(), mixing_offset=0,
        marginal_rows=(), coupling_rows=tuple(range(2 * n + 1)),
        transport_mass_row=-1, mixing_mass_row=0,
        set_inequalities=S.inequalities,
        scaled_inequalities=scaled_ineqs, ineq_normalizers=normalizers,
    )
    return problem, layout


def constraint_residuals(problem: SDPProblem, z: np.ndarray) -> np.ndarray:
    """Absolute equality-row residuals |<coeffs, z> - rhs| (testing helper)."""
    B, d = problem.constraint_matrix()
    return np.abs(B @ z - d)


# ---------------------------------------------------------------------------
# dual certificate
# ---------------------------------------------------------------------------

@dataclass
class DualCertificate:
    """Optimal dual data mapped back to original coordinates.

    ``q`` and ``g`` are univariate coefficient arrays (degree 2n); the Gram
    matrices certify the two polynomial identities

        q(x) + g(y) + <v, plan_gram v>(x, y)  =  (x - y)^2
        sum_k g_k p_k(m, s)  =  sum_j <v, support_grams[j] v>(m, s) * u_j(m, s)

    whose coefficientwise residuals are reported alongside.
    """

    q: np.ndarray
    g: np.ndarray
    plan_gram: SymMatrix
    support_grams: list[SymMatrix]
    dual_objective: float
    cost_identity_residual: float
    support_identity_residual: float


def _gram_poly(gram: np.ndarray, max_degree: int, varpair: str) -> SparsePoly:
    basis = graded_basis(max_degree)
    terms: dict[Exponent, float] = {}
    for r, (ir, jr) in enumerate(basis):
        for c, (ic, jc) in enumerate(basis):
            key = (ir + ic, jr + jc)
            terms[key] = terms.get(key, 0.0) + gram[r, c]
    return SparsePoly(varpair, terms)


def extract_dual(solution, layout: PseudoMomentLayout) -> DualCertificate:
    """Read the dual multipliers of a converged quadratic-cost solve as a
    polynomial certificate and verify its two identities."""
    if layout.mode != "w2":
        raise UsageError("dual certificates are produced for the quadratic-cost mode only")
    if getattr(solution, "status", None) != "optimal":
        raise NotConvergedError(f"no certificate from a solve with status {solution.status!r}")

    n = layout.order
    c = layout.scale
    y = solution.dual_vector
    a = np.array([y[r] for r in layout.marginal_rows])
    b = np.array([y[r] for r in layout.coupling_rows])
    mass_plan = y[layout.transport_mass_row]
    mass_mix = y[layout.mixing_mass_row]

    q = np.array(a)
    q[0] += mass_plan + mass_mix
    g = np.array(b)
    g[0] -= mass_mix
    powers = c ** np.arange(2 * n + 1)
    q /= powers
    g /= powers

    deg_scale = np.array([c ** -(i + j) for i, j in graded_basis(n)])
    plan_gram = SymMatrix(deg_scale[:, None] * solution.dual_blocks[0].mat * deg_scale[None, :])

    support_grams: list[SymMatrix] = []
    set_polys = [SparsePoly.constant("ms", 1.0)] + list(layout.set_inequalities)
    normalizers = (1.0,) + layout.ineq_normalizers
    for j, alpha in enumerate(normalizers):
        Z = solution.dual_blocks[1 + j].mat
        k = n if j == 0 else n - _half_degree(layout.set_inequalities[j - 1])
        scale_vec = np.array([c ** -(i + jj) for i, jj in graded_basis(k)])
        support_grams.append(SymMatrix(scale_vec[:, None] * Z * scale_vec[None, :] / alpha))

    # identity 1: q(x) + g(y) + sigma(x, y) == (x - y)^2
    ident = _gram_poly(plan_gram.mat, n, "xy")
    ident = ident + SparsePoly("xy", {(k, 0): q[k] for k in range(2 * n + 1)})
    ident = ident + SparsePoly("xy", {(0, k): g[k] for k in range(2 * n + 1)})
    ident = ident - SparsePoly("xy", {(2, 0): 1.0, (1, 1): -2.0, (0, 2): 1.0})
    cost_residual = ident.max_abs_coeff()

    # identity 2: sum_k g_k p_k == sum_j theta_j u_j
    lhs = SparsePoly.zero("ms")
    for k in range(2 * n + 1):
        if g[k]:
            lhs = lhs + gaussian_moment_poly(k).scaled(g[k])
    rhs = SparsePoly.zero("ms")
    for j, u in enumerate(set_polys):
        k = n if j == 0 else n - _half_degree(u)
        rhs = rhs + _gram_poly(support_grams[j].mat, k, "ms") * u
    support_residual = (lhs - rhs).max_abs_coeff()

    return DualCertificate(
        q=q, g=g, plan_gram=plan_gram, support_grams=support_grams,
        dual_objective=float(solution.dual_obj),
        cost_identity_residual=float(cost_residual),
        support_identity_residual=float(support_residual),
    )


def _half_degree(u: SparsePoly) -> int:
    return max(1, math.ceil(u.degree / 2))


# ---------------------------------------------------------------------------
# debug dump
# ---------------------------------------------------------------------------

def dump_problem(problem: SDPProblem, stream) -> None:
    """Plain-text sparse dump for cross-checking against external solvers.

    Layout: block dimensions first, then one line per nonzero.  Objective
    lines are ``OBJ var value``; equality lines are ``EQ constraint var
    value`` with right-hand sides in ``RHS constraint value`` lines; PSD-map
    lines are ``PSD block row col var value``.
    """
    stream.write(f"VARS {problem.num_vars}\n")
    stream.write("BLOCKS " + " ".join(str(d) for d in problem.block_dims) + "\n")
    for pos in np.nonzero(problem.objective)[0]:
        stream.write(f"OBJ {pos} {problem.objective[pos]:.17g}\n")
    for i, con in enumerate(problem.constraints):
        for pos, coeff in zip(con.idx, con.coeffs):
            stream.write(f"EQ {i} {pos} {coeff:.17g}\n")
        stream.write(f"RHS {i} {con.rhs:.17g}\n")
    for b, blk in enumerate(problem.blocks):
        for r, cc, zi, v in zip(blk.rows, blk.cols, blk.zidx, blk.vals):
            if r <= cc:
                stream.write(f"PSD {b} {r} {cc} {zi} {v:.17g}\n")
