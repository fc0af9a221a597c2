"""Numerical Lyapunov-Schmidt reduction around the two-peak ansatz.

All orthogonality is in the discrete H^1 pairing. For a tangent family
``b_k`` (orthonormal) the projection is ``P x = x - sum_k <b_k, x> b_k`` and
the linearised operator on the complement is ``L = P S^-1 H P`` where ``H``
is the Hessian stencil and ``S = I - Laplacian``. In Euclidean coordinates
``L z = r`` becomes the symmetric system ``P^T H P z = S r`` which MINRES
solves with ``S^-1`` as preconditioner (so its residual norm is the H^1 norm).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from . import ansatz as anz
from . import field
from .potentials import GammaKind, PotentialSet, gamma, landscape_value
from .profile import GroundStateProfile, c0_candidates

log = logging.getLogger(__name__)


class LinearSolveError(RuntimeError):
    pass


class ContractionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReductionConfig:
    beta: float = -1.0
    p: float = 2.0
    h: float = 0.25
    margin: float | None = None       # default 4 eps^-1/4
    corrector_tol: float = 1e-8       # H^1 norm of the projected gradient
    corrector_maxiter: int = 60
    linear_tol: float = 1e-8
    linear_maxiter: int = 3000
    fd_step: float | None = None      # default sqrt(eps)/8
    relinearize: bool = False
    relative_modes: bool = False      # also project out opposite translations of the two peaks
    max_nodes: float = 2e7

    def margin_for(self, eps):
        return self.margin if self.margin is not None else 4.0 * eps ** -0.25


# --------------------------------------------------------------------------
# projection


class Projector:
    """H^1-orthogonal projection onto the complement of an orthonormal family."""

    def __init__(self, basis):
        self.basis = list(basis)
        if not self.basis:
            raise ValueError("empty basis")
        g = self.basis[0].grid
        self.grid = g
        self._B = np.array([b.flat() for b in self.basis])
        self._SB = np.array([field.h1_apply(b).flat() for b in self.basis]) * g.vol

    def __len__(self):
        return len(self.basis)

    def P(self, x):
        return x - self._B.T @ (self._SB @ x)

    def PT(self, y):
        return y - self._SB.T @ (self._B @ y)

    def components(self, x):
        return self._SB @ x

    def __call__(self, fp):
        return field.FieldPair.from_flat(self.P(fp.flat()), fp.grid)


def orthonormalize(vectors, against=()):
    """Modified Gram-Schmidt in H^1 (two passes); drops nothing, raises on dependence."""
    out = list(against)
    n0 = len(out)
    for v in vectors:
        e = v.copy()
        for _ in range(2):
            for q in out:
                e = e.axpy(-field.inner(q, e), q)
        n = field.norm(e)
        if n < 1e-10 * max(field.norm(v), 1e-300):
            raise anz.BasisError("dependent direction in orthonormalisation")
        out.append(e * (1.0 / n))
    return out[n0:]


def project(fp: field.FieldPair, basis) -> field.FieldPair:
    """Remove the H^1 components of ``fp`` along an orthonormal basis."""
    out = fp.copy()
    for b in basis:
        out = out.axpy(-field.inner(b, out), b)
    return out


# --------------------------------------------------------------------------
# setup at one (Q, eps)


def relative_directions(placement, pset, profile, grid, step):
    """Raw central differences moving P_i and P'_i in opposite directions."""
    out = []
    eps = placement.epsilon
    for i in range(placement.dim):
        def at(d):
            Q = np.array(placement.Q)
            pl = anz.place(Q, eps, e1=placement.e1)
            U, V, jv, kv = anz.profiles_at(pset, profile, pl)
            cu = np.array(pl.P)
            cv = np.array(pl.Pprime)
            cu[i] += d
            cv[i] -= d
            U = type(U)(U.base, U.amplitude, U.width, cu)
            V = type(V)(V.base, V.amplitude, V.width, cv)
            return anz.build_ansatz(U, V, pl, grid, jv, kv).fields
        out.append((at(step) - at(-step)) * (0.5 / step))
    return out


class Reduction:
    """Ansatz, tangent basis and linearisation at one admissible Q."""

    def __init__(self, pset: PotentialSet, profile: GroundStateProfile, Q, epsilon: float,
                 config: ReductionConfig = ReductionConfig(), grid: field.Grid | None = None):
        placement = anz.place(Q, epsilon)
        if grid is None:
            grid = field.make_grid(placement, config.margin_for(epsilon), config.h,
                                   config.max_nodes)
        pair = anz.ansatz(pset, profile, placement, grid)
        tangent = anz.tangent_basis(placement, pset, profile, grid)
        extra = []
        if config.relative_modes:
            extra = relative_directions(placement, pset, profile, grid, 0.05 * grid.h)
        self._setup(pset, profile, float(epsilon), config, grid, pair, tangent, extra)

    @classmethod
    def from_parts(cls, pset, profile, epsilon, config, pair: anz.AnsatzPair,
                   tangent: anz.TangentBasis, extra=()):
        """Reduction around an arbitrary trial pair with a given tangent family."""
        self = cls.__new__(cls)
        self._setup(pset, profile, float(epsilon), config, pair.fields.grid, pair, tangent, extra)
        return self

    def _setup(self, pset, profile, epsilon, config, grid, pair, tangent, extra):
        self.pset, self.profile, self.config = pset, profile, config
        self.epsilon = epsilon
        self.placement = pair.placement
        self.grid = grid
        self.problem = field.problem(grid, pset, epsilon, float(config.beta), float(config.p))
        self.ansatz = pair
        self.tangent = tangent
        basis = list(tangent.elements)
        if len(extra):
            basis += orthonormalize(extra, basis)
        self.projector = Projector(basis)
        self._base = pair.fields

    @property
    def fields(self):
        return self.ansatz.fields

    def set_base(self, fp):
        """Linearisation point of L (the ansatz unless relinearising)."""
        self._base = fp

    # L and its Euclidean form

    def apply_L(self, d: field.FieldPair) -> field.FieldPair:
        pd = self.projector(d)
        return self.projector(field.riesz(self.problem.hess_apply(self._base, pd)))

    def _A(self, x):
        g = self.grid
        d = field.FieldPair.from_flat(self.projector.P(x), g)
        # boundary entries are not unknowns; zeroing them keeps the operator symmetric
        d.u[g.boundary_mask] = 0.0
        d.v[g.boundary_mask] = 0.0
        return self.projector.PT(self.problem.hess_apply(self._base, d).flat())

    def projected_gradient(self, fp: field.FieldPair) -> field.FieldPair:
        """H^1 representative of the gradient at ``fp``, projected onto the complement."""
        return self.projector(field.riesz(self.problem.grad(fp)))

    def solve(self, rhs: field.FieldPair, tol: float | None = None, maxiter: int | None = None):
        return solve_projected_linear(self, rhs, tol, maxiter)


# --------------------------------------------------------------------------
# linear solve


@dataclass
class LinearSolveInfo:
    iterations: int
    restarts: int
    relative_residual: float


def pminres(A, b, M, x0=None, tol=1e-8, maxiter=3000, project=None, plateau=50):
    """Preconditioned MINRES stopping on the M-norm of the residual only.

    ``A`` symmetric, ``M`` applies the SPD preconditioner inverse. ``project``
    is applied to every search direction so iterates never leave a subspace.
    Returns (x, iterations, estimated relative residual); raises
    LinearSolveError on a plateau of ``plateau`` iterations or on the cap.
    """
    x = np.zeros_like(b) if x0 is None else x0.copy()
    v = b - A(x) if x0 is not None else b.copy()
    z = M(v)
    gamma = math.sqrt(max(float(v @ z), 0.0))
    bnorm = math.sqrt(max(float(b @ M(b)), 0.0)) if x0 is not None else gamma
    if bnorm == 0.0:
        return x, 0, 0.0
    if gamma <= tol * bnorm:
        return x, 0, gamma / bnorm
    v_old = np.zeros_like(b)
    w_old = np.zeros_like(b)
    w = np.zeros_like(b)
    gamma_old, eta = 1.0, gamma
    c_old = c = 1.0
    s_old = s = 0.0
    best, best_it = math.inf, 0
    for j in range(1, maxiter + 1):
        z = z / gamma
        Az = A(z)
        delta = float(Az @ z)
        v_new = Az - (delta / gamma) * v - (gamma / gamma_old) * v_old
        z_new = M(v_new)
        gamma_new = math.sqrt(max(float(v_new @ z_new), 0.0))
        a0 = c * delta - c_old * s * gamma
        a1 = math.hypot(a0, gamma_new)
        a2 = s * delta + c_old * c * gamma
        a3 = s_old * gamma
        c_new, s_new = a0 / a1, gamma_new / a1
        w_new = (z - a3 * w_old - a2 * w) / a1
        if project is not None:
            w_new = project(w_new)
        x = x + (c_new * eta) * w_new
        eta = -s_new * eta
        rel = abs(eta) / bnorm
        if rel <= tol or gamma_new == 0.0:
            return x, j, rel
        if rel < 0.999 * best:
            best, best_it = rel, j
        elif j - best_it >= plateau:
            raise LinearSolveError(f"MINRES residual plateau at {rel:.3g} after {j} iterations")
        v_old, v, z = v, v_new, z_new
        w_old, w = w, w_new
        gamma_old, gamma = gamma, gamma_new
        c_old, c = c, c_new
        s_old, s = s, s_new
    raise LinearSolveError(f"MINRES hit the cap of {maxiter} iterations at {rel:.3g}")


def solve_projected_linear(red: Reduction, rhs: field.FieldPair, tol: float | None = None,
                           maxiter: int | None = None):
    """MINRES for L z = rhs on the complement; returns (z, LinearSolveInfo).

    The true residual is checked after the run; if rounding drift left it
    above ``tol`` the solve restarts from its own result (at most 3 times).
    """
    cfg = red.config
    tol = cfg.linear_tol if tol is None else tol
    maxiter = cfg.linear_maxiter if maxiter is None else maxiter
    g = red.grid
    rhs = red.projector(rhs)
    rn = field.norm(rhs)
    if rn == 0.0:
        return field.FieldPair.zeros(g), LinearSolveInfo(0, 0, 0.0)

    def M(y):
        return field.riesz(field.FieldPair.from_flat(y, g)).flat()

    b = field.h1_apply(rhs).flat()
    x = None
    total = 0
    for restart in range(4):
        x, its, _ = pminres(red._A, b, M, x0=x, tol=0.5 * tol, maxiter=maxiter - total,
                            project=red.projector.P)
        total += its
        z = field.FieldPair.from_flat(red.projector.P(x), g)
        rel = field.norm(red.apply_L(z) - rhs) / rn
        if rel <= tol:
            return z, LinearSolveInfo(total, restart, rel)
    raise LinearSolveError(f"MINRES true residual {rel:.3g} above {tol:.3g} after restarts")


# --------------------------------------------------------------------------
# corrector


@dataclass
class CorrectorResult:
    w: field.FieldPair
    iterations: int
    residual_norm: float
    w_norm: float
    contraction_estimates: list
    linear_iterations: int = 0
    orthogonality: float = 0.0     # max |<w,b>| / (|w| |b|) over the tangent family

    def to_json(self):
        return {"iterations": self.iterations, "residual_norm": self.residual_norm,
                "w_norm": self.w_norm, "contraction_estimates": list(self.contraction_estimates),
                "linear_iterations": self.linear_iterations, "orthogonality": self.orthogonality}


def corrector(red: Reduction, w0: field.FieldPair | None = None, tol: float | None = None,
              maxiter: int | None = None) -> CorrectorResult:
    """Fixed point of w -> w - L^-1 P grad f(ansatz + w) in the complement."""
    cfg = red.config
    tol = cfg.corrector_tol if tol is None else tol
    maxiter = cfg.corrector_maxiter if maxiter is None else maxiter
    ans = red.ansatz.fields
    w = field.FieldPair.zeros(red.grid) if w0 is None else red.projector(w0)
    red.set_base(ans)
    ratios, lin_its, bad = [], 0, 0
    prev = None
    it = 0
    r = red.projected_gradient(ans + w)
    res = field.norm(r)
    while res > tol:
        if it >= maxiter:
            raise ContractionError(f"corrector hit the iteration cap with residual {res:.3g}")
        if cfg.relinearize:
            red.set_base(ans + w)
        # forcing term, floored where rounding stalls the projected solve
        lin_tol = max(min(cfg.linear_tol, 0.1 * tol / max(res, tol)), 1e-12)
        step, info = red.solve(-1.0 * r, tol=lin_tol)
        lin_its += info.iterations
        w = red.projector(w + step)
        sn = field.norm(step)
        if prev is not None and prev > 0:
            ratios.append(sn / prev)
            bad = bad + 1 if ratios[-1] >= 1.0 else 0
            if bad >= 3:
                raise ContractionError("step ratios >= 1 for three consecutive steps")
        prev = sn
        it += 1
        r = red.projected_gradient(ans + w)
        res = field.norm(r)
    red.set_base(ans)
    wn = field.norm(w)
    orth = 0.0
    if wn > 0:
        orth = max(abs(field.inner(w, b)) / wn for b in red.tangent.elements)
    return CorrectorResult(w, it, res, wn, ratios, lin_its, orth)


# --------------------------------------------------------------------------
# reduced functional


@dataclass
class ReducedSample:
    Q: tuple
    epsilon: float
    A_value: float
    gamma_value: float        # classic Gamma at Q
    landscape_value: float    # Gamma-bar(p, N) for the grid dimension (the scaling of A)
    discrepancy: dict         # candidate name -> A - c * landscape_value
    corrector: CorrectorResult | None = None

    def to_json(self):
        out = {"Q": list(self.Q), "epsilon": self.epsilon, "A_value": self.A_value,
               "gamma_value": self.gamma_value, "landscape_value": self.landscape_value,
               "discrepancy": dict(self.discrepancy)}
        if self.corrector is not None:
            out["corrector"] = self.corrector.to_json()
        return out


def candidates(profile):
    paper, nehari = c0_candidates(profile)
    return {"paper_half": paper, "nehari_quarter": nehari}


def reduced_energy(pset, profile, Q, epsilon, config=ReductionConfig(), red=None,
                   w0=None) -> ReducedSample:
    if red is None:
        red = Reduction(pset, profile, Q, epsilon, config)
    cr = corrector(red, w0)
    A = red.problem.energy(red.ansatz.fields + cr.w).total
    kind = GammaKind("general", config.p, pset.dim)
    lv = landscape_value(pset, red.placement.Q, kind)
    disc = {k: A - c * lv for k, c in candidates(profile).items()}
    return ReducedSample(tuple(red.placement.Q), float(epsilon), float(A),
                         float(gamma(pset, red.placement.Q)), float(lv), disc, cr)


def reduced_gradient(pset, profile, Q, epsilon, config=ReductionConfig(), fd_step=None):
    """Central differences of A_eps in Q; returns (gradient, centre sample)."""
    step = fd_step or config.fd_step or math.sqrt(epsilon) / 8.0
    Q = np.asarray(Q, dtype=float)
    g = np.zeros(Q.size)
    for i in range(Q.size):
        e = np.zeros(Q.size)
        e[i] = step
        ap = reduced_energy(pset, profile, Q + e, epsilon, config).A_value
        am = reduced_energy(pset, profile, Q - e, epsilon, config).A_value
        g[i] = (ap - am) / (2 * step)
    return g


@dataclass
class OptimizeResult:
    Q: tuple
    sample: ReducedSample
    gradient: np.ndarray
    iterations: int
    converged: bool
    status: str
    path: list = dc_field(default_factory=list)


def optimize_reduced(pset, profile, Q0, epsilon, mode="min", tol=1e-3, box=None,
                     config=ReductionConfig(), maxiter=30, max_step=0.1) -> OptimizeResult:
    """Projected gradient descent (or ascent) on A_eps with backtracking."""
    sign = 1.0 if mode == "min" else -1.0
    Q = np.asarray(Q0, dtype=float)
    if box is None:
        box = [(-np.inf, np.inf)] * Q.size
    b = np.asarray(box, dtype=float)
    sq = math.sqrt(epsilon)
    lo, hi = b[:, 0], b[:, 1].copy()
    hi[0] -= sq  # Q' = Q + sqrt(eps) e1 must stay inside

    def clip(x):
        return np.minimum(np.maximum(x, lo), hi)

    # flat landscape: nothing to optimise
    if _landscape_flat(pset, Q):
        s = reduced_energy(pset, profile, Q, epsilon, config)
        return OptimizeResult(tuple(Q), s, np.zeros(Q.size), 0, True, "degenerate landscape")
    cur = reduced_energy(pset, profile, Q, epsilon, config)
    path = [tuple(Q)]
    t = None
    for it in range(maxiter):
        g = reduced_gradient(pset, profile, Q, epsilon, config)
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            return OptimizeResult(tuple(Q), cur, g, it, True, "converged", path)
        if t is None:
            t = max_step / gn
        t = min(t, max_step / gn)
        while True:
            Qn = clip(Q - sign * t * g)
            if np.allclose(Qn, Q, atol=1e-12, rtol=0):
                return OptimizeResult(tuple(Q), cur, g, it, False, "stalled at box", path)
            new = reduced_energy(pset, profile, Qn, epsilon, config)
            if sign * (new.A_value - cur.A_value) <= -1e-4 * abs(float(g @ (Qn - Q))):
                break
            t *= 0.5
            if t * gn < 1e-8:
                return OptimizeResult(tuple(Q), cur, g, it, False, "line search failed", path)
        Q, cur = Qn, new
        path.append(tuple(Q))
        t *= 2.0
    g = reduced_gradient(pset, profile, Q, epsilon, config)
    ok = float(np.linalg.norm(g)) <= tol
    return OptimizeResult(tuple(Q), cur, g, maxiter, ok, "converged" if ok else "iteration cap",
                          path)


def _landscape_flat(pset, Q):
    from .potentials import landscape_gradient

    kind = GammaKind("general", 2.0, pset.dim)
    try:
        g = landscape_gradient(pset, Q, kind)
    except Exception:
        return False
    probe = [np.asarray(Q) + d for d in 0.25 * np.eye(len(Q))]
    gs = [np.linalg.norm(landscape_gradient(pset, q, kind)) for q in probe]
    return np.linalg.norm(g) < 1e-12 and max(gs) < 1e-12


# --------------------------------------------------------------------------
# spectral probe


@dataclass
class SpectralReport:
    Q: tuple
    epsilon: float
    ansatz_quotient: float
    random_min: float
    inverse_iteration: float
    lanczos_min: float
    opposite_quotient: float   # quotient of the projected (U, -V) direction
    min_quotient: float

    def to_json(self):
        return dict(self.__dict__, Q=list(self.Q))


def rayleigh(red: Reduction, d: field.FieldPair, base=None) -> float:
    """D^2 f[d, d] / |d|^2 at the ansatz."""
    base = red.ansatz.fields if base is None else base
    return field.node_pairing(red.problem.hess_apply(base, d), d) / field.inner(d, d)


def _smooth_random(rng, grid):
    fp = field.FieldPair(rng.standard_normal(grid.shape), rng.standard_normal(grid.shape), grid)
    fp.u[grid.boundary_mask] = 0.0
    fp.v[grid.boundary_mask] = 0.0
    return field.riesz(field.riesz(fp))


def spectral_probe(red: Reduction, samples: int = 8, inverse_steps: int = 4, seed: int = 0,
                   lanczos: bool = True) -> SpectralReport:
    """Rayleigh quotients along the ansatz and on the complement of tangent + ansatz directions."""
    ans = red.ansatz.fields
    qa = rayleigh(red, ans)
    extra = orthonormalize([ans], red.projector.basis)
    wide = Reduction.__new__(Reduction)
    wide.__dict__.update(red.__dict__)
    wide.projector = Projector(list(red.projector.basis) + extra)
    wide._base = ans
    rng = np.random.default_rng(seed)
    qs = []
    best, best_q = None, math.inf
    for _ in range(samples):
        d = wide.projector(_smooth_random(rng, red.grid))
        q = rayleigh(red, d)
        qs.append(q)
        if q < best_q:
            best, best_q = d, q
    x = best * (1.0 / field.norm(best))
    q_inv = best_q
    for _ in range(inverse_steps):
        try:
            y, _ = solve_projected_linear(wide, x, tol=1e-6)
        except LinearSolveError:
            break
        x = y * (1.0 / field.norm(y))
        q_inv = rayleigh(red, x)
    U, V = ans.u, ans.v
    opp = wide.projector(field.FieldPair(U, -V, red.grid))
    q_opp = rayleigh(red, opp)
    q_lz = math.nan
    if lanczos:
        q_lz = _lanczos_min(wide)
    allq = [q for q in (*qs, q_inv, q_opp, q_lz) if not math.isnan(q)]
    return SpectralReport(tuple(red.placement.Q), red.epsilon, float(qa), float(min(qs)),
                          float(q_inv), float(q_lz), float(q_opp), float(min(allq)))


def _lanczos_min(red: Reduction, shift: float = 50.0) -> float:
    """Smallest eigenvalue of the pencil (P^T H P + shift * removed part, S)."""
    g = red.grid
    n = 2 * g.size
    pr = red.projector

    def mv(x):
        y = red._A(x)
        # push the removed directions to +shift so they cannot pose as the minimum
        return y + shift * (pr._SB.T @ (pr._SB @ x)) / g.vol

    A = LinearOperator((n, n), matvec=mv, dtype=float)
    S = LinearOperator((n, n), matvec=lambda x: field.h1_apply(field.FieldPair.from_flat(x, g)).flat(),
                       dtype=float)
    Sinv = LinearOperator((n, n), matvec=lambda x: field.riesz(field.FieldPair.from_flat(x, g)).flat(),
                          dtype=float)
    try:
        vals = eigsh(A, k=1, M=S, Minv=Sinv, which="SA", tol=1e-6, maxiter=5000,
                     return_eigenvectors=False)
    except Exception as exc:  # ArpackNoConvergence
        log.warning("Lanczos estimate failed: %s", exc)
        return math.nan
    return float(vals[0])
