"""Dense primal-dual interior-point solver for the assembled relaxations.

Problem form (free decision vector z, equality rows, PSD linear images):

    minimize    f' z
    subject to  B z = d
                X_b := A_b(z)  is PSD for every block b.

The KKT system couples (z, X, y, Z) where y multiplies the equality rows and
Z_b are the dual blocks:  B z = d,  A(z) = X,  B' y + A*(Z) = f,  X_b Z_b = 0.

Each iteration computes the Nesterov-Todd scaling of (X_b, Z_b) through the
SVD trick: with Cholesky factors X = L L' and Z = R R' and the SVD
R' L = U S V', the matrix G = L V S^{-1/2} satisfies

    G^{-1} X G^{-T}  =  G' Z G  =  S   (diagonal, the shared NT spectrum)

and G^{-1} = S^{-1/2} U' R' needs no inversion.  In the scaled space the
linearized centrality condition is a diagonal Lyapunov equation, so the
Mehrotra second-order corrector is exact and cheap:

    Dx + Dz = Rv,   Rv_ij = 2 T_ij / (s_i + s_j),
    T = sigma*mu*I - S^2 - sym(Dx_aff Dz_aff).

Eliminating the block directions leaves an N x N positive definite system
with matrix  M[a, b] = sum_b <G^{-1} A_a G^{-T}, G^{-1} A_b G^{-T}>  and a
small Schur complement B M^{-1} B' over the multipliers; both are factored by
Cholesky with diagonal regularization, with an equilibrated pivoted solve of
the full saddle system as fallback once their conditioning (which grows like
1/mu^2 near degenerate optima) defeats the Cholesky route.

The relaxations this solver exists for are frequently degenerate: the primal
optimal face can have empty interior and the dual need not be attained, so
the final answer is assembled from a pool of bookmarked iterates.  Each is
polished (equality projection, PSD clipping, multiplier refit, and
dual-feasibility restoration through the constant adjoint Gram), candidates
are scored against the best certified dual bound, and the primal and dual
sides may come from different iterates.  A short deterministic schedule of
initial-iterate scales supplies independent pools when the first attempt
stalls.  No randomness is consumed anywhere, so two runs on identical inputs
produce bitwise-identical results; the ``seed`` argument is accepted for
interface uniformity with the stochastic parts of the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .polyalg import SymMatrix
from .relaxation import SDPProblem

__all__ = ["SDPSolution", "solve", "SCALING"]

#: Scaling recorded in build metadata (design choice: NT rather than HKM).
SCALING = "nesterov-todd"

_STEP_SHRINK = 0.98
_TINY_STEP = 1e-10
#: Initial-iterate scales tried in order until the tolerance is met.
_INIT_SCHEDULE = (1.0, 0.1, 100.0)


@dataclass
class SDPSolution:
    """Primal-dual outcome of one solve.

    ``primal_vector`` is the free decision vector (the pseudo-moments);
    ``primal_blocks`` are the PSD block iterates, ``dual_vector`` the equality
    multipliers and ``dual_blocks`` the dual PSD blocks (Gram matrices).
    """

    status: str
    iterations: int
    primal_obj: float
    dual_obj: float
    primal_vector: np.ndarray
    primal_blocks: list[SymMatrix]
    dual_vector: np.ndarray
    dual_blocks: list[SymMatrix]
    primal_infeas: float
    dual_infeas: float
    rel_gap: float
    mu: float

    @property
    def converged(self) -> bool:
        return self.status == "optimal"


class _Blocks:
    """Per-block constant data: entry lists and the dense coefficient tensor."""

    def __init__(self, problem: SDPProblem):
        self.maps = problem.blocks
        self.support: list[np.ndarray] = []
        self.tensor: list[np.ndarray] = []
        for blk in problem.blocks:
            sup = np.unique(blk.zidx)
            loc = np.searchsorted(sup, blk.zidx)
            C = np.zeros((len(sup), blk.dim, blk.dim))
            np.add.at(C, (loc, blk.rows, blk.cols), blk.vals)
            self.support.append(sup)
            self.tensor.append(C)

    def apply(self, z: np.ndarray, b: int) -> np.ndarray:
        return np.tensordot(z[self.support[b]], self.tensor[b], axes=1)

    def adjoint_all(self, mats: list[np.ndarray], num_vars: int) -> np.ndarray:
        out = np.zeros(num_vars)
        for b, S in enumerate(mats):
            out[self.support[b]] += np.tensordot(self.tensor[b], S, axes=([1, 2], [0, 1]))
        return out


def _chol(mat: np.ndarray) -> np.ndarray | None:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return None


def _regularized_cholesky(mat: np.ndarray, base_reg: float = 1e-12
                          ) -> tuple[np.ndarray, np.ndarray] | None:
    """Cholesky of mat + reg*I, escalating reg until it succeeds.

    The first attempt uses the absolute base regularization so well-scaled
    systems see (almost) no bias; escalation is relative to the diagonal
    scale.  Returns the factor and the matrix actually factored so refinement
    can run against a consistent system.
    """
    scale = max(1.0, float(np.max(np.diag(mat))) if mat.size else 1.0)
    reg = base_reg
    while reg <= 1e-4 * scale:
        shifted = mat + reg * np.eye(mat.shape[0])
        L = _chol(shifted)
        if L is not None:
            return L, shifted
        reg = max(reg * 100.0, 1e-14 * scale)
    return None


def _chol_solve(L: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return np.linalg.solve(L.T, np.linalg.solve(L, rhs))


def _refined_solve(mat: np.ndarray, L: np.ndarray, rhs: np.ndarray,
                   sweeps: int = 2) -> np.ndarray:
    """Cholesky solve with iterative refinement against the true matrix; the
    normal systems get very ill-conditioned near the central-path limit."""
    x = _chol_solve(L, rhs)
    for _ in range(sweeps):
        x = x + _chol_solve(L, rhs - mat @ x)
    return x


def _independent_rows(B: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """Greedy selection of a maximal linearly independent subset of rows.

    The assembled problems deliberately carry a couple of redundant equality
    rows (mass normalizations restating a marginal); keeping an independent
    subset makes the Schur complement positive definite.
    """
    kept: list[int] = []
    basis: list[np.ndarray] = []
    for i in range(B.shape[0]):
        v = B[i].copy()
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0:
            continue
        for _ in range(2):  # two orthogonalization passes for accuracy
            for u in basis:
                v -= (u @ v) * u
        if np.linalg.norm(v) > rel_tol * norm0:
            basis.append(v / np.linalg.norm(v))
            kept.append(i)
    return np.array(kept, dtype=int)


def _max_step(spectrum: np.ndarray, direction: np.ndarray) -> float:
    """Largest a with diag(spectrum) + a*direction PSD."""
    half = 1.0 / np.sqrt(spectrum)
    scaled = half[:, None] * direction * half[None, :]
    lo = float(np.min(np.linalg.eigvalsh(scaled))) if scaled.size else 0.0
    return np.inf if lo >= 0.0 else 1.0 / (-lo)


class _Context:
    """Problem-level constants shared by iteration, polish and selection."""

    def __init__(self, problem: SDPProblem):
        self.N = problem.num_vars
        self.f = problem.objective
        self.B, self.d = problem.constraint_matrix()
        self.p = self.B.shape[0]
        self.blocks = _Blocks(problem)
        self.nblocks = len(self.blocks.maps)
        self.dims = problem.block_dims
        self.total_dim = max(1, sum(self.dims))
        # Newton systems run on an independent subset of the equality rows;
        # residuals are still reported against all of them and the dropped
        # rows keep zero multipliers (a valid dual completion).
        self.keep = _independent_rows(self.B) if self.p else np.zeros(0, dtype=int)
        self.Bk = self.B[self.keep] if self.p else self.B
        self.dk = self.d[self.keep] if self.p else self.d
        self.pk = len(self.keep)
        self.d_norm = 1.0 + (float(np.max(np.abs(self.d))) if self.p else 0.0)
        self.f_norm = 1.0 + float(np.max(np.abs(self.f)))
        self._LG = None

    def evaluate(self, z, y, X, Z) -> dict:
        blocks, p = self.blocks, self.p
        Az = [blocks.apply(z, b) for b in range(self.nblocks)]
        R_link = [X[b] - Az[b] for b in range(self.nblocks)]
        r_p = self.d - self.B @ z if p else np.zeros(0)
        r_d = self.f - (self.B.T @ y if p else 0.0) - blocks.adjoint_all(Z, self.N)
        pobj = float(self.f @ z)
        dobj = float(self.d @ y) if p else 0.0
        link_err = max(
            (np.linalg.norm(R_link[b], "fro") / (1.0 + np.linalg.norm(X[b], "fro"))
             for b in range(self.nblocks)), default=0.0)
        prim_inf = max(float(np.linalg.norm(r_p)) / self.d_norm, link_err)
        dual_inf = float(np.linalg.norm(r_d)) / self.f_norm
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        mu = sum(float(np.sum(X[b] * Z[b])) for b in range(self.nblocks)) / self.total_dim
        return dict(R_link=R_link, r_p=r_p, r_d=r_d, pobj=pobj, dobj=dobj,
                    prim=prim_inf, dual=dual_inf, gap=gap, mu=mu,
                    err=max(prim_inf, dual_inf, gap))

    def adjoint_gram_factor(self) -> np.ndarray:
        """Cholesky factor of the constant Gram A A* (positive definite since
        the block map is injective); used for dual restoration."""
        if self._LG is None:
            G0 = np.zeros((self.N, self.N))
            for b in range(self.nblocks):
                Psi0 = self.blocks.tensor[b].reshape(self.blocks.tensor[b].shape[0], -1)
                sup = self.blocks.support[b]
                G0[np.ix_(sup, sup)] += Psi0 @ Psi0.T
            self._LG = np.linalg.cholesky(G0 + 1e-12 * np.eye(self.N))
        return self._LG


def _iterate(ctx: _Context, tol: float, tol_inner: float, max_iter: int,
             init_scale: float, verbose: bool) -> tuple[str, int, list[dict]]:
    """One interior-point run; returns the loop status, the iteration count
    and the bookmarked iterates worth polishing."""
    N, p, pk = ctx.N, ctx.p, ctx.pk
    f, B, d = ctx.f, ctx.B, ctx.d
    Bk, keep = ctx.Bk, ctx.keep
    blocks, nblocks, dims = ctx.blocks, ctx.nblocks, ctx.dims

    eta = init_scale * ctx.d_norm
    z = np.zeros(N)
    y = np.zeros(p)
    X = [eta * np.eye(dim) for dim in dims]
    Z = [eta * np.eye(dim) for dim in dims]

    best = best_gap = best_bound = best_push = None
    status = "max-iterations"
    iterations = 0
    tiny_steps = 0

    for it in range(max_iter):
        iterations = it + 1
        ev = ctx.evaluate(z, y, X, Z)
        R_link, r_p, r_d = ev["R_link"], ev["r_p"], ev["r_d"]
        r_pk = r_p[keep] if p else r_p
        pobj, dobj = ev["pobj"], ev["dobj"]
        prim_inf, dual_inf, gap, mu = ev["prim"], ev["dual"], ev["gap"], ev["mu"]
        err = ev["err"]
        if verbose:
            print(f"  it {it:3d}  pobj {pobj:+.9e}  dobj {dobj:+.9e}  "
                  f"prim {prim_inf:.2e}  dual {dual_inf:.2e}  gap {gap:.2e}  mu {mu:.2e}")

        def snapshot():
            return dict(err=err, z=z.copy(), y=y.copy(),
                        X=[x.copy() for x in X], Z=[w.copy() for w in Z],
                        pobj=pobj, dobj=dobj, prim=prim_inf, dual=dual_inf,
                        gap=gap, mu=mu, it=it)

        if best is None or err < best["err"]:
            best = snapshot()
        # The dual side drifts late while the gap keeps improving; the polish
        # can repair the dual, so bookmark the best-gap iterate separately.
        if best_gap is None or max(gap, prim_inf) < max(best_gap["gap"], best_gap["prim"]):
            best_gap = snapshot()
        # Strongest valid objective bound from a dual-feasible iterate.
        if dual_inf <= tol and (best_bound is None or dobj > best_bound["dobj"]):
            best_bound = snapshot()
        # Late iterates push the dual objective further while their
        # feasibility drifts at a level the polish may still repair.
        if dual_inf <= 1e-5 and (best_push is None or dobj > best_push["dobj"]):
            best_push = snapshot()

        if prim_inf <= tol_inner and dual_inf <= tol_inner and gap <= tol_inner:
            status = "converged"
            break
        if p and dobj > 1.0 / tol:
            status = "infeasible-suspected"
            break
        if mu < 1e-17 * (1.0 + abs(pobj)):
            # Complementarity exhausted double precision without feasibility
            # catching up; further iterations cannot improve the iterate.
            status = "numerical-failure"
            break

        # Nesterov-Todd scaling of every block.
        Gs, Gis, lams, fail = [], [], [], False
        for b in range(nblocks):
            Lx = _chol(X[b])
            Lz = _chol(Z[b])
            if Lx is None or Lz is None:
                jitter = 1e-14 * max(1.0, np.trace(X[b]) / dims[b])
                Lx = _chol(X[b] + jitter * np.eye(dims[b])) if Lx is None else Lx
                Lz = _chol(Z[b] + jitter * np.eye(dims[b])) if Lz is None else Lz
            if Lx is None or Lz is None:
                fail = True
                break
            U, s, Vt = np.linalg.svd(Lz.T @ Lx)
            if np.min(s) <= 0 or not np.all(np.isfinite(s)):
                fail = True
                break
            sq = np.sqrt(s)
            Gs.append(Lx @ Vt.T / sq[None, :])
            Gis.append((U / sq[None, :]).T @ Lz.T)
            lams.append(s)
        if fail:
            status = "numerical-failure"
            break

        # Scaled constraint stack and normal matrix.
        Atils, Psis = [], []
        M = np.zeros((N, N))
        for b in range(nblocks):
            Atil = np.matmul(np.matmul(Gis[b], blocks.tensor[b]), Gis[b].T)
            Psi = Atil.reshape(Atil.shape[0], -1)
            sup = blocks.support[b]
            M[np.ix_(sup, sup)] += Psi @ Psi.T
            Atils.append(Atil)
            Psis.append(Psi)

        # Factorizations; conditioning grows like 1/mu^2 near degenerate
        # optima, so an equilibrated pivoted solve of the full saddle system
        # takes over once the Cholesky route breaks down or loses the
        # equality rows.
        LM = LS = schur_reg = None
        factored = _regularized_cholesky(M)
        if factored is not None:
            LM, _ = factored
            if pk:
                MinvBT = _refined_solve(M, LM, Bk.T)
                factored_s = _regularized_cholesky(Bk @ MinvBT)
                if factored_s is not None:
                    LS, schur_reg = factored_s
        use_schur = LM is not None and (pk == 0 or LS is not None)

        saddle: dict = {}

        def saddle_solve(r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            # [-M  Bk'; Bk  0] [dz; dy] = [r1; r2], Jacobi-equilibrated.
            if not saddle:
                K = np.zeros((N + pk, N + pk))
                K[:N, :N] = -M
                if pk:
                    K[:N, N:] = Bk.T
                    K[N:, :N] = Bk
                sv = np.sqrt(np.maximum(np.abs(np.diagonal(K)), 1.0))
                saddle["Ks"] = K / sv[:, None] / sv[None, :]
                saddle["sv"] = sv
            Ks, sv = saddle["Ks"], saddle["sv"]
            rhs = np.concatenate([r1, r2]) / sv
            sol = np.linalg.solve(Ks, rhs)
            for _ in range(2):
                sol = sol + np.linalg.solve(Ks, rhs - Ks @ sol)
            sol = sol / sv
            return sol[:N], sol[N:]

        Rl_scaled = [Gis[b] @ R_link[b] @ Gis[b].T for b in range(nblocks)]

        def direction(Rv: list[np.ndarray]):
            H = [Rv[b] + Rl_scaled[b] for b in range(nblocks)]
            w = np.zeros(N)
            for b in range(nblocks):
                w[blocks.support[b]] += Psis[b] @ H[b].ravel()
            r_tilde = r_d - w
            dz = dy = None
            if use_schur:
                if pk:
                    rhs = r_pk + Bk @ _refined_solve(M, LM, r_tilde)
                    dy = _refined_solve(schur_reg, LS, rhs)
                    dz = _refined_solve(M, LM, Bk.T @ dy - r_tilde)
                    res1 = np.linalg.norm(-(M @ dz) + Bk.T @ dy - r_tilde)
                    res2 = np.linalg.norm(Bk @ dz - r_pk)
                    scale = 1.0 + np.linalg.norm(r_tilde) + np.linalg.norm(r_pk)
                    if max(res1, res2) > 1e-9 * scale:
                        dz = None
                else:
                    dy = np.zeros(0)
                    dz = _refined_solve(M, LM, -r_tilde)
            if dz is None:
                try:
                    dz, dy = saddle_solve(r_tilde, r_pk)
                except np.linalg.LinAlgError:
                    return None
            Dx, Dz = [], []
            for b in range(nblocks):
                Da = np.tensordot(dz[blocks.support[b]], Atils[b], axes=1)
                Dx.append(Da - Rl_scaled[b])
                Dz.append(H[b] - Da)
            return dz, dy, Dx, Dz

        # Predictor (affine scaling).
        got = direction([-np.diag(lams[b]) for b in range(nblocks)])
        if got is None:
            status = "numerical-failure"
            break
        dz_a, dy_a, Dx_a, Dz_a = got
        a_p = min(1.0, min((_max_step(lams[b], Dx_a[b]) for b in range(nblocks)),
                           default=np.inf))
        a_d = min(1.0, min((_max_step(lams[b], Dz_a[b]) for b in range(nblocks)),
                           default=np.inf))
        mu_aff = sum(
            float(np.sum((np.diag(lams[b]) + a_p * Dx_a[b])
                         * (np.diag(lams[b]) + a_d * Dz_a[b])))
            for b in range(nblocks)) / ctx.total_dim
        expon = max(1.0, 3.0 * min(a_p, a_d) ** 2)
        sigma = min(1.0, max(0.0, mu_aff / mu) ** expon) if mu > 0 else 0.0

        # Corrector with the exact second-order term in the scaled space.
        Rv = []
        for b in range(nblocks):
            lam = lams[b]
            T = sigma * mu * np.eye(dims[b]) - np.diag(lam * lam)
            T -= 0.5 * (Dx_a[b] @ Dz_a[b] + Dz_a[b] @ Dx_a[b])
            Rv.append(2.0 * T / (lam[:, None] + lam[None, :]))
        got = direction(Rv)
        if got is None:
            status = "numerical-failure"
            break
        dz, dy, Dx, Dz = got
        if not all(np.all(np.isfinite(m)) for m in Dx + Dz) or not np.all(np.isfinite(dz)):
            status = "numerical-failure"
            break

        a_p = min(1.0, _STEP_SHRINK * min(
            (_max_step(lams[b], Dx[b]) for b in range(nblocks)), default=np.inf))
        a_d = min(1.0, _STEP_SHRINK * min(
            (_max_step(lams[b], Dz[b]) for b in range(nblocks)), default=np.inf))
        if max(a_p, a_d) < _TINY_STEP:
            tiny_steps += 1
            if tiny_steps >= 3:
                status = "numerical-failure"
                break
        else:
            tiny_steps = 0

        # The linear form A(dz) - R_link keeps the linking residual
        # contracting exactly; the scaled step bound still applies since the
        # two expressions agree to rounding.
        dX = [blocks.apply(dz, b) - R_link[b] for b in range(nblocks)]
        dZ = [Gis[b].T @ Dz[b] @ Gis[b] for b in range(nblocks)]

        # Accept the step, backtracking if it wrecks an already-good iterate
        # (rare late-stage directions explode when conditioning is extreme).
        for _ in range(5):
            z_new = z + a_p * dz
            y_new = y.copy()
            if pk:
                y_new[keep] = y[keep] + a_d * dy
            X_new = [0.5 * ((X[b] + a_p * dX[b]) + (X[b] + a_p * dX[b]).T)
                     for b in range(nblocks)]
            Z_new = [0.5 * ((Z[b] + a_d * dZ[b]) + (Z[b] + a_d * dZ[b]).T)
                     for b in range(nblocks)]
            ev_new = ctx.evaluate(z_new, y_new, X_new, Z_new)
            if mu > 1e-4 or ev_new["err"] <= 10.0 * max(err, tol):
                break
            a_p *= 0.3
            a_d *= 0.3
        z, y, X, Z = z_new, y_new, X_new, Z_new

    pool = [c for c in (best, best_gap, best_bound, best_push) if c is not None]
    unique: list[dict] = []
    for c in pool:
        if all(c["it"] != u["it"] for u in unique):
            unique.append(c)
    return status, iterations, unique


def _polish(ctx: _Context, cand: dict) -> list[dict]:
    """Closed-form cleanups of a bookmarked iterate.

    Projects the decision vector onto the equality rows, replaces the primal
    blocks by the PSD part of their linear images, refits the multipliers by
    least squares, and restores dual feasibility by min-norm adjoint
    corrections (full-space with PSD clipping, then once more inside the
    strictly positive eigenspace where clipping cannot undo it).  Every
    returned candidate is re-evaluated honestly.
    """
    N, p, pk = ctx.N, ctx.p, ctx.pk
    f, B, Bk, keep = ctx.f, ctx.B, ctx.Bk, ctx.keep
    blocks = ctx.blocks
    try:
        LG = ctx.adjoint_gram_factor()
        z = cand["z"].copy()
        if pk:
            corr = np.linalg.solve(Bk @ Bk.T, ctx.dk - Bk @ z)
            z = z + Bk.T @ corr
        X = []
        for b in range(ctx.nblocks):
            img = blocks.apply(z, b)
            w, V = np.linalg.eigh(0.5 * (img + img.T))
            X.append((V * np.clip(w, 0.0, None)) @ V.T)

        y_starts = [cand["y"]]
        if pk:
            rhs = f - blocks.adjoint_all(cand["Z"], N)
            refit, *_ = np.linalg.lstsq(Bk.T, rhs, rcond=None)
            y_free = np.zeros(p)
            y_free[keep] = refit
            y_starts.append(y_free)

        out = []
        for y0 in y_starts:
            y = y0.copy()
            Zc = [m.copy() for m in cand["Z"]]
            for round_ in range(3):
                for _ in range(8):
                    resid = f - (B.T @ y if p else 0.0) - blocks.adjoint_all(Zc, N)
                    if np.linalg.norm(resid) < 1e-13 * (1.0 + np.linalg.norm(f)):
                        break
                    wvec = _chol_solve(LG, resid)
                    for b in range(ctx.nblocks):
                        mat = Zc[b] + blocks.apply(wvec, b)
                        ww, V = np.linalg.eigh(0.5 * (mat + mat.T))
                        Zc[b] = (V * np.clip(ww, 0.0, None)) @ V.T
                else:
                    if pk and round_ < 2:
                        refit, *_ = np.linalg.lstsq(
                            Bk.T, f - blocks.adjoint_all(Zc, N), rcond=None)
                        y = np.zeros(p)
                        y[keep] = refit
                        continue
                break
            resid = f - (B.T @ y if p else 0.0) - blocks.adjoint_all(Zc, N)
            if np.linalg.norm(resid) > 1e-13 * (1.0 + np.linalg.norm(f)):
                Zc = _projected_restoration(ctx, y, Zc, resid)
            ev = ctx.evaluate(z, y, X, Zc)
            out.append(dict(err=ev["err"], z=z, y=y, X=X, Z=Zc,
                            pobj=ev["pobj"], dobj=ev["dobj"], prim=ev["prim"],
                            dual=ev["dual"], gap=ev["gap"], mu=ev["mu"],
                            it=cand["it"]))
        return out
    except np.linalg.LinAlgError:
        return []


def _projected_restoration(ctx: _Context, y: np.ndarray, Zc: list[np.ndarray],
                           resid: np.ndarray) -> list[np.ndarray]:
    """Attack leftover dual residual inside each block's strictly positive
    eigenspace, where corrections survive the PSD projection."""
    try:
        projs = []
        for b in range(ctx.nblocks):
            ww, V = np.linalg.eigh(Zc[b])
            lead = V[:, ww > 1e-7 * max(1.0, float(ww.max()))]
            projs.append(lead @ lead.T)
        Gp = np.zeros((ctx.N, ctx.N))
        for b in range(ctx.nblocks):
            CtP = np.matmul(np.matmul(projs[b], ctx.blocks.tensor[b]), projs[b])
            Psi = CtP.reshape(CtP.shape[0], -1)
            sup = ctx.blocks.support[b]
            Gp[np.ix_(sup, sup)] += Psi @ Psi.T
        wvec = np.linalg.lstsq(Gp, resid, rcond=1e-12)[0]
        out = []
        for b in range(ctx.nblocks):
            mat = Zc[b] + projs[b] @ ctx.blocks.apply(wvec, b) @ projs[b]
            ww, V = np.linalg.eigh(0.5 * (mat + mat.T))
            out.append((V * np.clip(ww, 0.0, None)) @ V.T)
        return out
    except np.linalg.LinAlgError:
        return Zc


def _select(ctx: _Context, pool: list[dict], tol: float) -> dict:
    """Pick the final answer from raw and polished candidates.

    A feasible but suboptimal primal point can masquerade as converged when
    judged by its own residuals alone (tiny clipped infeasibility hiding a
    large objective error), so primal candidates are scored against the best
    certified dual bound, and the two sides of the answer may come from
    different iterates.
    """
    dual_ok = [c for c in pool if c["dual"] <= tol]
    dstar = max(dual_ok, key=lambda c: c["dobj"]) if dual_ok \
        else min(pool, key=lambda c: c["dual"])

    def primal_score(c):
        return max(c["prim"], abs(c["pobj"] - dstar["dobj"]) / (1.0 + abs(c["pobj"])))

    pstar = min(pool, key=primal_score)
    if pstar is dstar:
        return pstar
    ev = ctx.evaluate(pstar["z"], dstar["y"], pstar["X"], dstar["Z"])
    return dict(err=ev["err"], z=pstar["z"], y=dstar["y"], X=pstar["X"],
                Z=dstar["Z"], pobj=ev["pobj"], dobj=ev["dobj"], prim=ev["prim"],
                dual=ev["dual"], gap=ev["gap"], mu=ev["mu"], it=pstar["it"])


def solve(problem: SDPProblem, tol: float = 1e-8, max_iter: int = 200,
          seed: int = 0, verbose: bool = False) -> SDPSolution:
    """Solve the problem to relative tolerance ``tol``.

    On success every residual (equality, linking, dual) and the relative
    objective gap are below ``tol``.  Non-optimal statuses still carry the
    best candidate assembled from the iterate pool so callers can inspect it.
    """
    if not 1e-12 <= tol <= 1e-2:
        raise UsageError(f"tol must lie in [1e-12, 1e-2], got {tol}")
    if max_iter < 1:
        raise UsageError("max_iter must be positive")
    # The loop aims one digit below the requested tolerance: the extra
    # iterations land better pool candidates, and the reported status is
    # still judged against the caller's tolerance.
    tol_inner = max(1e-12, 0.1 * tol)

    ctx = _Context(problem)
    pool: list[dict] = []
    statuses: list[str] = []
    iterations = 0
    final = None
    for init_scale in _INIT_SCHEDULE:
        status, iters, marked = _iterate(ctx, tol, tol_inner, max_iter,
                                         init_scale, verbose)
        statuses.append(status)
        iterations += iters
        pool.extend(marked)
        for cand in marked:
            pool.extend(_polish(ctx, cand))
        final = _select(ctx, pool, tol)
        if max(final["prim"], final["dual"], final["gap"]) <= tol:
            break

    assert final is not None
    if max(final["prim"], final["dual"], final["gap"]) <= tol:
        status = "optimal"
    elif "infeasible-suspected" in statuses:
        status = "infeasible-suspected"
    elif "numerical-failure" in statuses:
        status = "numerical-failure"
    else:
        status = "max-iterations"

    return SDPSolution(
        status=status,
        iterations=iterations,
        primal_obj=final["pobj"],
        dual_obj=final["dobj"],
        primal_vector=final["z"],
        primal_blocks=[SymMatrix(m) for m in final["X"]],
        dual_vector=final["y"],
        dual_blocks=[SymMatrix(m) for m in final["Z"]],
        primal_infeas=final["prim"],
        dual_infeas=final["dual"],
        rel_gap=final["gap"],
        mu=final["mu"],
    )
