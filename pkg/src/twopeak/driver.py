"""Full solves, peak extraction, epsilon sweeps, multiplicity scan and the verification suite."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import ansatz as anz
from . import field
from .potentials import GammaKind, ParameterError, PotentialSet, find_critical_points, landscape_value
from .profile import solve_profile
from .reduction import (ContractionError, LinearSolveError, Reduction, ReductionConfig, candidates,
                        corrector, pminres, reduced_energy, spectral_probe)

log = logging.getLogger(__name__)


class NewtonError(RuntimeError):
    pass


class PeakError(ValueError):
    def __init__(self, message, locations=()):
        super().__init__(message)
        self.locations = list(locations)


# --------------------------------------------------------------------------
# Newton


@dataclass
class SolutionRecord:
    fields: field.FieldPair
    epsilon: float
    Q_eps: tuple | None
    Qprime_eps: tuple | None
    newton_iters: int
    grad_norm: float          # H^1-dual norm of the residual
    grad_max: float           # max-norm of the strong residual on interior nodes
    min_value: float
    energy: float
    status: str = "converged"
    history: list = dc_field(default_factory=list)

    def to_json(self):
        return {"epsilon": self.epsilon,
                "Q_eps": None if self.Q_eps is None else list(self.Q_eps),
                "Qprime_eps": None if self.Qprime_eps is None else list(self.Qprime_eps),
                "newton_iters": self.newton_iters, "grad_norm": self.grad_norm,
                "grad_max": self.grad_max, "min_value": self.min_value, "energy": self.energy,
                "status": self.status, "history": list(self.history)}


def newton_solve(init: field.FieldPair, pset, epsilon, beta, p=2.0, tol=1e-9, maxiter=30,
                 linear_tol=1e-6, linear_maxiter=3000, ref_amplitude=None,
                 ref_energy=None) -> SolutionRecord:
    """Damped Newton on grad = 0 with MINRES inner solves and Armijo backtracking on |grad|^2.

    Convergence requires both the H^1-dual norm and the interior max-norm of
    the strong residual to be at most ``tol``. A result with energy at most
    half of ``ref_energy`` (default: the energy of ``init``) and maximum
    below a tenth of ``ref_amplitude`` is flagged as collapsed.
    """
    g = init.grid
    prob = field.problem(g, pset, float(epsilon), float(beta), float(p))
    x = init.copy()
    x.u[g.boundary_mask] = 0.0
    x.v[g.boundary_mask] = 0.0
    e0 = prob.energy(x).total if ref_energy is None else float(ref_energy)

    def M(y):
        return field.riesz(field.FieldPair.from_flat(y, g)).flat()

    def measure(fp):
        r = prob.grad(fp)
        return r, field.dual_norm(r), float(max(np.abs(r.u).max(), np.abs(r.v).max()))

    r, gn, gm = measure(x)
    hist = [gn]
    growth = 0
    it = 0
    while gn > tol or gm > tol:
        if it >= maxiter:
            raise NewtonError(f"Newton hit the cap with |grad|={gn:.3g}")
        base = x

        def A(y, base=base):
            d = field.FieldPair.from_flat(y, g)
            d.u[g.boundary_mask] = 0.0
            d.v[g.boundary_mask] = 0.0
            return prob.hess_apply(base, d).flat()

        eta = min(linear_tol, 0.1 * gn) if gn < 1 else linear_tol
        try:
            s, _, _ = pminres(A, -r.flat(), M, tol=max(eta, 1e-12), maxiter=linear_maxiter)
        except LinearSolveError as exc:
            raise NewtonError(f"inner solve failed: {exc}") from exc
        step = field.FieldPair.from_flat(s, g)
        t = 1.0
        f0 = gn * gn
        while True:
            cand = x.axpy(t, step)
            rc, gc, mc = measure(cand)
            if gc * gc <= (1 - 1e-4 * t) * f0 or t < 1e-3:
                break
            t *= 0.5
        log.debug("newton %d: |grad| %.3e -> %.3e, t=%.3g, |step|=%.3e", it, gn, gc, t,
                  field.norm(step))
        x, r, gprev, gn, gm = cand, rc, gn, gc, mc
        it += 1
        hist.append(gn)
        growth = growth + 1 if gn > gprev else 0
        if growth >= 5:
            raise NewtonError("residual grew over 5 consecutive steps")
    e = prob.energy(x).total
    status = "converged"
    w0 = ref_amplitude or 1.0
    if e <= 0.5 * e0 and max(x.u.max(), x.v.max()) < 0.1 * w0:
        status = "collapsed to trivial/other branch"
    inner_sl = (slice(1, -1),) * g.dim
    mn = float(min(x.u[inner_sl].min(), x.v[inner_sl].min()))
    rec = SolutionRecord(x, float(epsilon), None, None, it, gn, gm, mn, float(e), status, hist)
    try:
        rec.Q_eps, rec.Qprime_eps = extract_peaks(x, epsilon)
    except PeakError as exc:
        rec.status = f"{status}; {exc}"
    return rec


# --------------------------------------------------------------------------
# peaks


def _refine(a, idx, grid):
    """Argmax node refined by a per-axis quadratic fit on the 2N+1 stencil."""
    pos = []
    for k in range(a.ndim):
        lo = list(idx)
        hi = list(idx)
        lo[k] -= 1
        hi[k] += 1
        fm, f0, fp = a[tuple(lo)], a[idx], a[tuple(hi)]
        den = fm - 2 * f0 + fp
        off = 0.5 * (fm - fp) / den if den < 0 else 0.0
        pos.append(grid.origin[k] + (idx[k] + off) * grid.h)
    return np.array(pos)


def _peak(a, grid, name):
    m = float(a.max())
    if not m > 0 or np.ptp(a) <= 1e-12 * max(abs(m), 1.0):
        raise PeakError(f"{name} is flat")
    flat = np.flatnonzero(a >= m * (1 - 1e-12))
    idxs = [np.unravel_index(i, a.shape) for i in flat]
    if len(idxs) > 1:
        span = max(max(abs(i - j) for i, j in zip(a_, b_)) for a_ in idxs for b_ in idxs)
        if span > 1:
            locs = [[grid.origin[k] + i[k] * grid.h for k in range(a.ndim)] for i in idxs]
            raise PeakError(f"{name} has {len(idxs)} separated maxima", locs)
    idx = idxs[0]
    if any(i <= 1 or i >= n - 2 for i, n in zip(idx, a.shape)):
        raise PeakError(f"{name} peaks on the window boundary")
    return _refine(a, idx, grid)


def extract_peaks(fp: field.FieldPair, epsilon: float):
    """(Q_eps, Q'_eps) in original coordinates from the maxima of u and v."""
    qu = _peak(fp.u, fp.grid, "u") * epsilon
    qv = _peak(fp.v, fp.grid, "v") * epsilon
    return tuple(float(x) for x in qu), tuple(float(x) for x in qv)


# --------------------------------------------------------------------------
# centre relaxation


@dataclass
class RelaxResult:
    fields: field.FieldPair
    cu: np.ndarray
    cv: np.ndarray
    forces: np.ndarray
    iterations: int
    converged: bool


def _center_state(pset, profile, eps, c, grid, cfg, w0=None):
    from .reduction import Reduction, corrector

    n = grid.dim
    pair = anz.pair_at_centers(pset, profile, c[:n], c[n:], eps, grid)
    raw = anz.center_directions(pair, 0.05 * grid.h)
    red = Reduction.from_parts(pset, profile, eps, cfg, pair, anz.orthonormal_basis(raw))
    cr = corrector(red, w0)
    x = pair.fields + cr.w
    g = red.problem.grad(x)
    F = np.array([field.node_pairing(g, t) / field.norm(t) for t in raw])
    return F, x, cr.w


def relax_centers(pset, profile, eps, cu, cv, grid, config, tol=1e-7, maxiter=25,
                  max_move=1.0, fd_step=0.05) -> RelaxResult:
    """Zero the forces on both peak centres.

    Each evaluation builds the pair at centres (cu, cv), removes every
    translation of either peak from the complement, solves for the corrector
    and reads off the residual force along each translation. The 2N-by-2N
    force Jacobian is formed by one-sided differences and the centre update
    is a least-squares Newton step capped at ``max_move`` rescaled units.
    """
    c = np.concatenate([np.asarray(cu, float), np.asarray(cv, float)])
    F, x, _ = _center_state(pset, profile, eps, c, grid, config)
    fn = float(np.linalg.norm(F))
    it = 0
    while fn > tol and it < maxiter:
        Jm = np.empty((c.size, c.size))
        for k in range(c.size):
            ck = c.copy()
            ck[k] += fd_step
            Fk, _, _ = _center_state(pset, profile, eps, ck, grid, config)
            Jm[:, k] = (Fk - F) / fd_step
        dc = -np.linalg.lstsq(Jm, F, rcond=1e-8)[0]
        mv = float(np.abs(dc).max())
        if mv > max_move:
            dc *= max_move / mv
        t = 1.0
        while True:
            cn = c + t * dc
            try:
                Fn, xn, _ = _center_state(pset, profile, eps, cn, grid, config)
                ok = np.linalg.norm(Fn) < (1 - 1e-4 * t) * fn
            except Exception as exc:  # corrector failure at the trial centres
                log.debug("relaxation trial failed: %s", exc)
                ok = False
            if ok or t < 1e-2:
                break
            t *= 0.5
        if not ok:
            break
        c, F, x = cn, Fn, xn
        fn = float(np.linalg.norm(F))
        it += 1
        log.debug("relax %d: |F| %.3e, centres %s", it, fn, np.round(c, 4))
    n = grid.dim
    return RelaxResult(x, c[:n], c[n:], F, it, fn <= tol)


# --------------------------------------------------------------------------
# run configuration

BUMP = "1.5 - 0.5*exp(-(x1^2+2*x2^2))"
DOUBLE_WELL = "1 + (x1^2-0.25)^2 + 2*x2^2"


@dataclass
class RunConfig:
    dim: int = 2
    p: float = 2.0
    beta: float = -1.0
    J1: str = BUMP
    J2: str = "1"
    K1: str = BUMP
    K2: str = "1"
    box: list = dc_field(default_factory=lambda: [[-1.0, 1.0], [-1.0, 1.0]])
    eps: list = dc_field(default_factory=lambda: [0.04, 0.02, 0.01, 0.005])
    h: float = 0.125
    margin: float | None = None
    corrector_tol: float = 1e-8
    newton_tol: float = 1e-9
    linear_tol: float = 1e-8
    seed: int = 0
    Q: list = dc_field(default_factory=lambda: [0.0, 0.0])
    probes: list = dc_field(default_factory=lambda: [[0.0, 0.0], [0.2, 0.0], [-0.2, 0.0],
                                                     [0.0, 0.2], [0.15, 0.15]])
    relative_modes: bool = False
    solve_eps: list = dc_field(default_factory=lambda: [0.02, 0.01, 0.005])
    spectral_eps: float = 0.01
    spectral_Q: list = dc_field(default_factory=lambda: [[0.0, 0.0], [0.2, 0.0], [0.0, 0.2]])
    full_solve: bool = False
    multiplicity: dict = dc_field(default_factory=lambda: {
        "J1": DOUBLE_WELL, "J2": "1", "K1": DOUBLE_WELL, "K2": "1", "eps": 0.01,
        "box": [[-1.0, 1.0], [-0.6, 0.6]], "tolerance": 0.15})

    def __post_init__(self):
        from .potentials import check_exponent

        if not self.beta < 0:
            raise ParameterError("beta must be negative (repulsive case)")
        check_exponent(self.p, self.dim)
        e = [float(x) for x in self.eps]
        if any(x <= 0 for x in e) or any(b >= a for a, b in zip(e, e[1:])):
            raise ParameterError("eps list must be positive and strictly decreasing")
        self.eps = e
        if len(self.box) != self.dim or len(self.Q) != self.dim:
            raise ParameterError("box and Q must match dim")

    def potentials(self):
        return PotentialSet.from_strings(self.J1, self.J2, self.K1, self.K2, dim=self.dim)

    def reduction(self, relative_modes=None):
        rm = self.relative_modes if relative_modes is None else relative_modes
        return ReductionConfig(beta=self.beta, p=self.p, h=self.h, margin=self.margin,
                               corrector_tol=self.corrector_tol, linear_tol=self.linear_tol,
                               relative_modes=rm)

    def to_json(self):
        return dict(self.__dict__)


# --------------------------------------------------------------------------
# slopes and sweeps


def fit_slope(pairs):
    """Least squares of log(value) on log(eps): (slope, intercept, 95% half-width)."""
    from scipy import stats

    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError("slope fits need at least 3 points")
    x = np.array([a for a, _ in pairs], dtype=float)
    y = np.array([b for _, b in pairs], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("slope fits need positive values")
    lx, ly = np.log(x), np.log(y)
    fit = stats.linregress(lx, ly)
    hw = float(stats.t.ppf(0.975, len(pairs) - 2)) * float(fit.stderr)
    return float(fit.slope), float(fit.intercept), hw


SWEEP_COLUMNS = ("epsilon", "grad_norm", "overlap_over_eps", "w_norm", "corrector_status",
                 "disc_paper_half", "disc_nehari_quarter", "sep", "sep_over_eps",
                 "dist_to_Q0", "solve_status")


@dataclass
class SweepRecord:
    rows: list                       # dicts keyed by SWEEP_COLUMNS
    slopes: dict                     # quantity -> (slope, intercept, half_width)
    Q: tuple
    relative_modes: bool = False

    def column(self, name):
        return [(r["epsilon"], r[name]) for r in self.rows
                if isinstance(r[name], (int, float)) and r[name] is not None
                and math.isfinite(r[name]) and r[name] > 0]

    def to_json(self):
        return {"Q": list(self.Q), "relative_modes": self.relative_modes, "rows": self.rows,
                "slopes": {k: list(v) for k, v in self.slopes.items()}}


def _ansatz_state(pset, prof, Q, eps, rcfg):
    pl = anz.place(Q, eps)
    grid = field.make_grid(pl, rcfg.margin_for(eps), rcfg.h, rcfg.max_nodes)
    return pl, grid, anz.ansatz(pset, prof, pl, grid)


def ansatz_diagnostics(pset, prof, Q, eps, rcfg):
    """|grad f(ansatz)| in the H^1-dual norm and the overlap integral."""
    pl, grid, pair = _ansatz_state(pset, prof, Q, eps, rcfg)
    g = field.grad(pair.fields, pset, eps, rcfg.beta, rcfg.p)
    return {"grad_norm": field.dual_norm(g), "overlap": field.overlap(pair.fields, rcfg.p),
            "grid": grid, "pair": pair}


def solve_at(pset, prof, Q, eps, rcfg, newton_tol=1e-9):
    """Ansatz at Q, centre relaxation, then Newton. Returns (SolutionRecord, RelaxResult)."""
    pl, grid, pair = _ansatz_state(pset, prof, Q, eps, rcfg)
    e_ans = field.energy(pair.fields, pset, eps, rcfg.beta, rcfg.p).total
    rr = relax_centers(pset, prof, eps, pl.P, pl.Pprime, grid, rcfg)
    amp = float(prof.shoot_amplitude)
    rec = newton_solve(rr.fields, pset, eps, rcfg.beta, rcfg.p, tol=newton_tol,
                       ref_amplitude=amp, ref_energy=e_ans)
    return rec, rr


def epsilon_sweep(config: RunConfig, prof=None, relative_modes=None, full_solve=None) -> SweepRecord:
    """Ansatz diagnostics, corrector and reduced energy at config.Q for every eps."""
    if len(config.eps) < 3:
        raise ValueError("a sweep needs at least 3 values of eps")
    pset = config.potentials()
    prof = prof or solve_profile(config.dim, config.p)
    rcfg = config.reduction(relative_modes)
    full = config.full_solve if full_solve is None else full_solve
    cands = candidates(prof)
    kind = GammaKind("general", config.p, config.dim)
    Q = tuple(float(x) for x in config.Q)
    rows = []
    for eps in config.eps:
        row = dict.fromkeys(SWEEP_COLUMNS)
        row["epsilon"] = eps
        d = ansatz_diagnostics(pset, prof, Q, eps, rcfg)
        row["grad_norm"] = d["grad_norm"]
        row["overlap_over_eps"] = d["overlap"] / eps
        pl = d["pair"].placement
        row["sep"] = float(np.linalg.norm(np.subtract(pl.Q, pl.Qprime)))
        row["sep_over_eps"] = row["sep"] / eps
        try:
            s = reduced_energy(pset, prof, Q, eps, rcfg)
            row["w_norm"] = s.corrector.w_norm
            row["corrector_status"] = "ok"
            lv = landscape_value(pset, Q, kind)
            row["disc_paper_half"] = abs(s.A_value - cands["paper_half"] * lv)
            row["disc_nehari_quarter"] = abs(s.A_value - cands["nehari_quarter"] * lv)
        except (ContractionError, LinearSolveError) as exc:
            row["corrector_status"] = f"failed: {exc}"
        if full:
            try:
                rec, _ = solve_at(pset, prof, Q, eps, rcfg, config.newton_tol)
                if rec.Q_eps is not None:
                    q, qp = np.array(rec.Q_eps), np.array(rec.Qprime_eps)
                    row["sep"] = float(np.linalg.norm(q - qp))
                    row["sep_over_eps"] = row["sep"] / eps
                    row["dist_to_Q0"] = float(np.linalg.norm(q - np.array(Q)))
                row["solve_status"] = rec.status
            except (NewtonError, ContractionError, LinearSolveError) as exc:
                row["solve_status"] = f"failed: {exc}"
        rows.append(row)
        log.info("sweep eps=%g: %s", eps, row)
    rec = SweepRecord(rows, {}, Q, rcfg.relative_modes)
    for name in ("grad_norm", "overlap_over_eps", "w_norm", "disc_paper_half",
                 "disc_nehari_quarter", "sep", "sep_over_eps", "dist_to_Q0"):
        pts = rec.column(name)
        if len(pts) >= 3:
            rec.slopes[name] = fit_slope(pts)
    return rec


# --------------------------------------------------------------------------
# multiplicity


def field_distance(a: field.FieldPair, b: field.FieldPair) -> float:
    """Relative L2 distance, each pair sampled on the other's nodes (zero outside its window)."""
    from scipy.interpolate import RegularGridInterpolator

    def sample(src, dst):
        axes = [src.grid.axis(k) for k in range(src.grid.dim)]
        pts = dst.grid.points.reshape(-1, dst.grid.dim)
        out = []
        for arr in (src.u, src.v):
            f = RegularGridInterpolator(axes, arr, bounds_error=False, fill_value=0.0)
            out.append(f(pts).reshape(dst.grid.shape))
        return out

    worst = 0.0
    for x, y in ((a, b), (b, a)):
        su, sv = sample(y, x)
        num = np.sum((x.u - su) ** 2 + (x.v - sv) ** 2)
        den = np.sum(x.u ** 2 + x.v ** 2)
        worst = max(worst, math.sqrt(num / den) if den > 0 else math.inf)
    return worst


@dataclass
class ScanResult:
    solutions: list        # SolutionRecord
    seeds: list            # landscape extrema used as seeds
    failures: list         # (seed, message)
    extrema_count: int
    status: str

    def to_json(self):
        return {"extrema_count": self.extrema_count, "status": self.status,
                "seeds": self.seeds, "failures": [list(f) for f in self.failures],
                "solutions": [s.to_json() for s in self.solutions]}


def multiplicity_scan(pset, prof, eps, box, rcfg, newton_tol=1e-9,
                      dedupe=0.1) -> ScanResult:
    """One full solve per isolated landscape extremum, then deduplication by field distance."""
    rep = find_critical_points(pset, box, GammaKind("general", rcfg.p, pset.dim))
    if rep.degenerate:
        return ScanResult([], [], [], 0, rep.status)
    seeds = [c.Q for c in rep.extrema()]
    sols, fails = [], []
    for q in seeds:
        try:
            rec, _ = solve_at(pset, prof, q, eps, rcfg, newton_tol)
        except Exception as exc:  # one bad seed must not end the scan
            fails.append((q, str(exc)))
            continue
        if not rec.status.startswith("converged") or rec.Q_eps is None:
            fails.append((q, rec.status))
            continue
        if all(field_distance(rec.fields, s.fields) > dedupe for s in sols):
            sols.append(rec)
    status = f"{len(sols)} solutions from {len(seeds)} extrema"
    return ScanResult(sols, seeds, fails, len(seeds), status)


# --------------------------------------------------------------------------
# verification suite


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict
    detail: str = ""
    supplementary: dict = dc_field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f} s)"

    def to_json(self):
        return dict(self.__dict__)


@dataclass
class VerifyContext:
    config: RunConfig
    profiles: dict = dc_field(default_factory=dict)
    sweeps: dict = dc_field(default_factory=dict)

    def profile(self, N=None, p=None, ode_step=5e-4):
        key = (N or self.config.dim, p or self.config.p, ode_step)
        if key not in self.profiles:
            self.profiles[key] = solve_profile(key[0], key[1], ode_step=ode_step)
        return self.profiles[key]

    def sweep(self, relative_modes=False):
        if relative_modes not in self.sweeps:
            self.sweeps[relative_modes] = epsilon_sweep(self.config, self.profile(),
                                                        relative_modes=relative_modes,
                                                        full_solve=False)
        return self.sweeps[relative_modes]


def _fmt(x, spec=".3g"):
    return "nan" if x is None else format(x, spec)


def _c1(ctx):
    from .profile import moment

    t = time.perf_counter()
    prof = solve_profile(1, 2.0)
    dt = time.perf_counter() - t
    r = prof.r_samples
    sel = r <= 10.0
    exact = math.sqrt(2.0) / np.cosh(r[sel])
    w0 = abs(prof.values[0] - math.sqrt(2.0))
    sup = float(np.abs(prof.values[sel] - exact).max())
    m2 = abs(moment(prof, 2) - 4.0) / 4.0
    m4 = abs(moment(prof, 4) - 16.0 / 3.0) / (16.0 / 3.0)
    ok = w0 <= 1e-6 and sup <= 1e-5 and m2 <= 1e-4 and m4 <= 1e-4 and dt < 1.0
    meas = {"W0_error": w0, "sup_error": sup, "moment2_rel": m2, "moment4_rel": m4,
            "solve_seconds": dt}
    return ok, meas, (f"|W(0)-sqrt2|={w0:.1e} sup={sup:.1e} "
                      f"rel(int W^2)={m2:.1e} rel(int W^4)={m4:.1e} solve {dt:.2f}s"), {}


def _c2(ctx):
    from .profile import moment

    t = time.perf_counter()
    a = solve_profile(3, 2.0, ode_step=5e-4)
    b = solve_profile(3, 2.0, ode_step=2.5e-4)
    dt = time.perf_counter() - t
    da = abs(a.shoot_amplitude - b.shoot_amplitude) / abs(b.shoot_amplitude)
    ma, mb = moment(a, 4), moment(b, 4)
    dm = abs(ma - mb) / abs(mb)
    ok = da < 5e-5 and dm < 5e-5 and dt < 10.0
    meas = {"amplitude": [a.shoot_amplitude, b.shoot_amplitude], "moment4": [ma, mb],
            "amplitude_rel": da, "moment4_rel": dm, "seconds": dt}
    return ok, meas, (f"W(0) {a.shoot_amplitude:.6f}/{b.shoot_amplitude:.6f} "
                      f"int W^4 {ma:.6f}/{mb:.6f} (rel {da:.1e}, {dm:.1e})"), {}


def _c3(ctx):
    from .profile import rescaled_residual

    prof = ctx.profile()
    steps = [0.05, 0.025, 0.0125]
    res = [rescaled_residual(prof, 4.0, 1.0, s) for s in steps]
    order = fit_slope(list(zip(steps, res)))[0]
    ok = abs(order - 2.0) <= 0.2
    return ok, {"steps": steps, "rms": res, "order": order}, f"order {order:.3f}", {}


def _smooth_direction(rng, grid):
    fp = field.FieldPair(rng.standard_normal(grid.shape), rng.standard_normal(grid.shape), grid)
    fp.u[grid.boundary_mask] = 0.0
    fp.v[grid.boundary_mask] = 0.0
    d = field.riesz(field.riesz(fp))
    return d * (1.0 / max(np.abs(d.u).max(), np.abs(d.v).max()))


def _c4(ctx):
    cfg = ctx.config
    t0 = time.perf_counter()
    pset = cfg.potentials()
    rcfg = cfg.reduction()
    eps = 0.01
    _, grid, pair = _ansatz_state(pset, ctx.profile(), cfg.Q, eps, rcfg)
    prob = field.problem(grid, pset, eps, cfg.beta, cfg.p)
    x = pair.fields
    rng = np.random.default_rng(cfg.seed)
    t = 1e-5
    e1, e2 = [], []
    g = prob.grad(x)
    for _ in range(10):
        d = _smooth_direction(rng, grid)
        fd = (prob.energy(x.axpy(t, d)).total - prob.energy(x.axpy(-t, d)).total) / (2 * t)
        an = field.node_pairing(g, d)
        e1.append(abs(fd - an) / abs(an))
        hd = (prob.grad(x.axpy(t, d)) - prob.grad(x.axpy(-t, d))) * (0.5 / t)
        ha = prob.hess_apply(x, d)
        den = math.sqrt(field.node_pairing(ha, ha))
        e2.append(math.sqrt(field.node_pairing(hd - ha, hd - ha)) / den)
    dt = time.perf_counter() - t0
    ok = max(e1) <= 1e-6 and max(e2) <= 1e-5 and dt < 30.0
    meas = {"grad_rel_errors": e1, "hess_rel_errors": e2, "grid": grid.to_json(), "seconds": dt}
    return ok, meas, f"max grad err {max(e1):.1e}, max hess err {max(e2):.1e}", {}


def _slope_line(sw, name):
    s = sw.slopes.get(name)
    return (math.nan, math.nan) if s is None else (s[0], s[2])


def _c5(ctx):
    sw = ctx.sweep(False)
    slope, hw = _slope_line(sw, "grad_norm")
    vals = [r["grad_norm"] for r in sw.rows]
    ok = slope >= 0.45
    return ok, {"values": vals, "slope": slope, "half_width": hw}, (
        f"slope {slope:.3f} +- {hw:.3f}, |grad| " + ", ".join(_fmt(v) for v in vals)), {}


def _c6(ctx):
    sw = ctx.sweep(False)
    vals = [r["overlap_over_eps"] for r in sw.rows]
    dec = all(b < a for a, b in zip(vals, vals[1:]))
    ok = dec and vals[-1] < 0.25 * vals[0]
    return ok, {"values": vals}, "overlap/eps " + ", ".join(_fmt(v) for v in vals), {}


def _corrector_rows(ctx, relative_modes):
    """Corrector at the sweep point for every eps: (w_norm or None, orthogonality, status)."""
    cfg = ctx.config
    pset = cfg.potentials()
    rcfg = cfg.reduction(relative_modes)
    out = []
    for eps in cfg.eps:
        try:
            red = Reduction(pset, ctx.profile(), cfg.Q, eps, rcfg)
            cr = corrector(red)
            orth = max(abs(field.inner(cr.w, b)) for b in red.projector.basis) / max(cr.w_norm,
                                                                                      1e-300)
            out.append((cr.w_norm, orth, "ok"))
        except (ContractionError, LinearSolveError) as exc:
            out.append((None, None, str(exc)))
    return out


def _c7(ctx):
    cfg = ctx.config

    def judge(rows):
        ws = [(e, r[0]) for e, r in zip(cfg.eps, rows) if r[0] is not None]
        slope = fit_slope(ws)[0] if len(ws) == len(rows) else math.nan
        orth = [r[1] for r in rows if r[1] is not None]
        ok = len(ws) == len(rows) and slope >= 0.45 and max(orth) <= 1e-9
        return ok, slope, orth

    rows = _corrector_rows(ctx, cfg.relative_modes)
    ok, slope, orth = judge(rows)
    meas = {"w_norm": [r[0] for r in rows], "orthogonality": [r[1] for r in rows],
            "status": [r[2] for r in rows], "slope": slope,
            "relative_modes": cfg.relative_modes}
    supp = {}
    if not cfg.relative_modes:
        alt = _corrector_rows(ctx, True)
        aok, aslope, aorth = judge(alt)
        supp = {"relative_modes": True, "w_norm": [r[0] for r in alt], "slope": aslope,
                "max_orthogonality": max(aorth) if aorth else None,
                "status": [r[2] for r in alt], "would_pass": aok}
    fails = sum(r[0] is None for r in rows)
    det = (f"slope {slope:.3f}, max orth {_fmt(max(orth) if orth else None, '.1e')}"
           if not fails else f"corrector failed at {fails}/{len(rows)} eps: {rows[-1][2]}")
    return ok, meas, det, supp


def _expansion_table(ctx, relative_modes):
    cfg = ctx.config
    pset = cfg.potentials()
    prof = ctx.profile()
    rcfg = cfg.reduction(relative_modes)
    kind = GammaKind("general", cfg.p, cfg.dim)
    cands = candidates(prof)
    table = {k: [] for k in cands}
    status = []
    for eps in cfg.eps:
        worst = dict.fromkeys(cands, 0.0)
        msg = "ok"
        for q in cfg.probes:
            try:
                s = reduced_energy(pset, prof, q, eps, rcfg)
            except (ContractionError, LinearSolveError) as exc:
                worst = dict.fromkeys(cands, math.nan)
                msg = f"Q={list(q)}: {exc}"
                break
            lv = landscape_value(pset, q, kind)
            for k, c in cands.items():
                worst[k] = max(worst[k], abs(s.A_value - c * lv))
        for k in cands:
            table[k].append(worst[k] / eps ** 0.25)
        status.append(msg)
    finite = {k: v for k, v in table.items() if math.isfinite(v[-1])}
    winner = min(finite, key=lambda k: finite[k][-1]) if finite else None
    mono = winner is not None and all(b < a for a, b in zip(table[winner], table[winner][1:]))
    return table, winner, mono, status


def _c8(ctx):
    cfg = ctx.config
    table, winner, mono, status = _expansion_table(ctx, cfg.relative_modes)
    meas = {"scaled_max_discrepancy": table, "winner": winner, "status": status,
            "relative_modes": cfg.relative_modes}
    supp = {}
    if not cfg.relative_modes:
        t2, w2, m2, s2 = _expansion_table(ctx, True)
        supp = {"relative_modes": True, "scaled_max_discrepancy": t2, "winner": w2,
                "monotone": m2, "status": s2}
    if winner is None:
        det = f"no reduced energies ({status[0]})"
        if supp:
            det += f"; winner with relative modes removed: {supp['winner']}"
    else:
        det = f"winner {winner}: " + ", ".join(_fmt(v) for v in table[winner])
    return mono, meas, det, supp


def _c9(ctx):
    cfg = ctx.config
    pset = cfg.potentials()
    rcfg = cfg.reduction(False)
    prof = ctx.profile()
    rows = []
    for eps in cfg.solve_eps:
        try:
            rec, rr = solve_at(pset, prof, [0.0] * cfg.dim, eps, rcfg, cfg.newton_tol)
            row = {"epsilon": eps, "status": rec.status, "newton_iters": rec.newton_iters,
                   "relax_iters": rr.iterations, "grad_norm": rec.grad_norm,
                   "grad_max": rec.grad_max, "min_value": rec.min_value}
            if rec.Q_eps is not None:
                q, qp = np.array(rec.Q_eps), np.array(rec.Qprime_eps)
                row.update(Q_eps=list(rec.Q_eps), Qprime_eps=list(rec.Qprime_eps),
                           dist=float(np.linalg.norm(q)), sep=float(np.linalg.norm(q - qp)))
                row["sep_over_eps"] = row["sep"] / eps
        except (NewtonError, ContractionError, LinearSolveError) as exc:
            row = {"epsilon": eps, "status": f"failed: {exc}"}
        rows.append(row)
    good = all("dist" in r for r in rows)
    ok = False
    det = "solve failed: " + "; ".join(r["status"] for r in rows if "dist" not in r)
    if good:
        d = [r["dist"] for r in rows]
        s = [r["sep"] for r in rows]
        se = [r["sep_over_eps"] for r in rows]
        ratio = se[-1] / se[0]
        checks = {"dist_decreasing": all(b < a for a, b in zip(d, d[1:])),
                  "final_dist": d[-1] <= 0.1,
                  "sep_decreasing": all(b < a for a, b in zip(s, s[1:])),
                  "sep_over_eps_increasing": all(b > a for a, b in zip(se, se[1:])),
                  "ratio": ratio >= 1.5}
        ok = all(checks.values())
        det = (f"|Q_eps| {', '.join(_fmt(v) for v in d)}; sep {', '.join(_fmt(v) for v in s)}; "
               f"sep/eps ratio {ratio:.3f}")
        if not ok:
            det += " (failed: " + ", ".join(k for k, v in checks.items() if not v) + ")"
        rows.append({"checks": checks})
    return ok, {"rows": rows}, det, {}


def _c10(ctx):
    cfg = ctx.config
    pset = cfg.potentials()
    rcfg = cfg.reduction(cfg.relative_modes)
    reps = []
    for q in cfg.spectral_Q:
        red = Reduction(pset, ctx.profile(), q, cfg.spectral_eps, rcfg)
        reps.append(spectral_probe(red, seed=cfg.seed))
    ok = all(r.ansatz_quotient < 0 and r.min_quotient > 0 for r in reps)
    meas = {"reports": [r.to_json() for r in reps]}
    det = "; ".join(f"Q={list(r.Q)}: ansatz {r.ansatz_quotient:.3g}, min {r.min_quotient:.3g}"
                    f" (opposite {r.opposite_quotient:.3g})" for r in reps)
    return ok, meas, det, {}


def _c11(ctx):
    cfg = ctx.config
    m = cfg.multiplicity
    pset = PotentialSet.from_strings(m["J1"], m["J2"], m["K1"], m["K2"], dim=cfg.dim)
    rcfg = cfg.reduction(False)
    scan = multiplicity_scan(pset, ctx.profile(), float(m["eps"]), m["box"], rcfg,
                             cfg.newton_tol)
    wells = [np.array(s) for s in scan.seeds]
    tol = float(m.get("tolerance", 0.15))
    used, near = set(), True
    for s in scan.solutions:
        q, qp = np.array(s.Q_eps), np.array(s.Qprime_eps)
        dists = [max(np.linalg.norm(q - w), np.linalg.norm(qp - w)) for w in wells]
        k = int(np.argmin(dists)) if dists else -1
        if k < 0 or dists[k] > tol or k in used:
            near = False
        used.add(k)
    ok = len(scan.solutions) == 2 and near
    det = scan.status + "; peaks " + "; ".join(
        f"{np.round(s.Q_eps, 3).tolist()}/{np.round(s.Qprime_eps, 3).tolist()}" for s in scan.solutions)
    return ok, scan.to_json(), det, {}


CRITERIA = (
    (1, "1D profile oracle", _c1),
    (2, "N=3 profile step stability", _c2),
    (3, "rescaling law residual order", _c3),
    (4, "variational consistency", _c4),
    (5, "ansatz gradient rate", _c5),
    (6, "overlap smallness", _c6),
    (7, "corrector rate and orthogonality", _c7),
    (8, "reduced expansion constant", _c8),
    (9, "concentration and separation", _c9),
    (10, "spectral dichotomy", _c10),
    (11, "multiplicity", _c11),
)


def run_criterion(number, ctx: VerifyContext) -> CriterionResult:
    _, title, fn = CRITERIA[number - 1]
    t = time.perf_counter()
    try:
        ok, meas, det, supp = fn(ctx)
    except Exception as exc:  # a crash is a failed entry, not a crashed report
        log.exception("criterion %d crashed", number)
        ok, meas, det, supp = False, {}, f"error: {type(exc).__name__}: {exc}", {}
    return CriterionResult(number, title, bool(ok), meas, det, supp, time.perf_counter() - t)


def verify_suite(config: RunConfig | None = None, only=None, echo=None) -> list:
    """Run the acceptance criteria (all, or the numbers in ``only``) and return their results."""
    ctx = VerifyContext(config or RunConfig())
    out = []
    for num, _, _ in CRITERIA:
        if only and num not in only:
            continue
        res = run_criterion(num, ctx)
        if echo:
            echo(res.line())
        out.append(res)
    return out
