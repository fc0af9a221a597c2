"""Box grids in rescaled coordinates and the discrete energy of a field pair.

Discretisation: fields live on nodes, the outermost node layer is the
homogeneous Dirichlet boundary, gradients are differences on edges and all
integrals are node sums times h^N. With these choices the strong-form
residual returned by :func:`grad` is exactly the node-wise derivative of
:func:`energy` divided by h^N (summation by parts holds to rounding).

Two pairings are used and kept apart: the plain node pairing
``h^N sum(a*b)`` turns a strong-form residual into a directional derivative,
and the discrete H^1_0 pairing :func:`inner` carries all orthogonality.
:func:`riesz` maps a residual to its H^1 representative.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft

from . import _kernels
from .potentials import ParameterError, PotentialSet, evaluate


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform node grid; ``origin`` is the first node, ``shape`` the node counts."""

    origin: tuple
    h: float
    shape: tuple

    def __post_init__(self):
        if self.h <= 0:
            raise ParameterError("grid spacing must be positive")
        if any(n < 10 for n in self.shape):
            raise GridError("need at least 8 interior nodes per axis")

    @property
    def dim(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def vol(self):
        return self.h ** self.dim

    @property
    def upper(self):
        return tuple(o + (n - 1) * self.h for o, n in zip(self.origin, self.shape))

    def axis(self, k):
        return self.origin[k] + self.h * np.arange(self.shape[k])

    @functools.cached_property
    def coords(self):
        """Tuple of node coordinate arrays (ij indexing)."""
        return tuple(np.meshgrid(*[self.axis(k) for k in range(self.dim)], indexing="ij"))

    @functools.cached_property
    def points(self):
        return np.stack(self.coords, axis=-1)

    @functools.cached_property
    def boundary_mask(self):
        m = np.ones(self.shape, dtype=bool)
        m[(slice(1, -1),) * self.dim] = False
        return m

    def index_of(self, x):
        return tuple(int(round((xi - o) / self.h)) for xi, o in zip(x, self.origin))

    @functools.cached_property
    def _riesz_symbol(self):
        sym = 1.0
        for k, n in enumerate(self.shape):
            m = n - 2
            lam = (2.0 - 2.0 * np.cos(np.pi * np.arange(1, m + 1) / (m + 1))) / self.h ** 2
            shp = [1] * self.dim
            shp[k] = m
            sym = sym + lam.reshape(shp)
        return 1.0 / sym

    def to_json(self):
        return {"origin": list(self.origin), "h": self.h, "shape": list(self.shape)}


def make_grid(placement, margin: float, h: float, max_nodes: float = 2e7) -> Grid:
    """Window ``[P - margin, P' + margin]`` on axis 1, ``P_k +- margin`` elsewhere.

    ``margin`` is rounded up to a multiple of ``h`` so that P sits on a node.
    """
    if h <= 0:
        raise ParameterError("grid spacing must be positive")
    outer = 2.0 * placement.epsilon ** -0.25
    if margin < outer:
        raise GridError(f"margin {margin} smaller than the cutoff support radius {outer:.3f}")
    m = math.ceil(margin / h - 1e-9) * h
    P, Pp = np.asarray(placement.P), np.asarray(placement.Pprime)
    lo = np.minimum(P, Pp) - m
    hi = np.maximum(P, Pp) + m
    # keep P on a node along every axis
    shape = tuple(int(math.ceil((b - a) / h - 1e-9)) + 1 for a, b in zip(lo, hi))
    if np.prod(shape, dtype=float) > max_nodes:
        raise GridError(f"grid of {np.prod(shape, dtype=float):.3g} nodes exceeds cap {max_nodes:.3g}")
    return Grid(tuple(float(a) for a in lo), float(h), shape)


@dataclass
class FieldPair:
    u: np.ndarray
    v: np.ndarray
    grid: Grid

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.shape), np.zeros(grid.shape), grid)

    @classmethod
    def from_flat(cls, x, grid):
        n = grid.size
        return cls(x[:n].reshape(grid.shape).copy(), x[n:].reshape(grid.shape).copy(), grid)

    def flat(self):
        return np.concatenate([self.u.ravel(), self.v.ravel()])

    def copy(self):
        return FieldPair(self.u.copy(), self.v.copy(), self.grid)

    def _check(self, other):
        if other.grid != self.grid:
            raise GridError("field pairs live on different grids")

    def __add__(self, other):
        self._check(other)
        return FieldPair(self.u + other.u, self.v + other.v, self.grid)

    def __sub__(self, other):
        self._check(other)
        return FieldPair(self.u - other.u, self.v - other.v, self.grid)

    def __mul__(self, c):
        return FieldPair(c * self.u, c * self.v, self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldPair(-self.u, -self.v, self.grid)

    def axpy(self, a, other):
        """self + a * other."""
        self._check(other)
        return FieldPair(self.u + a * other.u, self.v + a * other.v, self.grid)

    def boundary_max(self):
        m = self.grid.boundary_mask
        return float(max(np.abs(self.u[m]).max(), np.abs(self.v[m]).max()))


@dataclass(frozen=True)
class EnergyBreakdown:
    jpart: float
    kpart: float
    coupling: float
    total: float


# --------------------------------------------------------------------------
# problem coefficients


class Problem:
    """Potentials sampled at eps*x on a grid, plus the system parameters."""

    def __init__(self, grid: Grid, pset: PotentialSet, epsilon: float, beta: float, p: float = 2.0):
        if not beta < 0:
            raise ParameterError("beta must be negative (repulsive case)")
        if p < 2:
            raise ParameterError("grid problems need p >= 2")
        if pset.dim != grid.dim:
            raise ParameterError("potential and grid dimensions differ")
        self.grid, self.pset = grid, pset
        self.epsilon, self.beta, self.p = float(epsilon), float(beta), float(p)
        pts = [epsilon * c for c in grid.coords]
        self.coef = tuple(np.ascontiguousarray(np.broadcast_to(evaluate(t, pts), grid.shape),
                                               dtype=float) for t in pset.trees)
        nd = grid.dim
        self._grad = _kernels.kernel("grad", nd)
        self._hess = _kernels.kernel("hess", nd)
        self._energy = _kernels.kernel("energy", nd)

    def energy(self, fp: FieldPair) -> EnergyBreakdown:
        j, k, c = self._energy(fp.u, fp.v, *self.coef, self.beta, self.p, self.grid.h)
        return EnergyBreakdown(float(j), float(k), float(c), float(j) + float(k) + float(c))

    def grad(self, fp: FieldPair) -> FieldPair:
        gu, gv = self._grad(fp.u, fp.v, *self.coef, self.beta, self.p, self.grid.h)
        return FieldPair(gu, gv, self.grid)

    def hess_apply(self, fp: FieldPair, d: FieldPair) -> FieldPair:
        hu, hv = self._hess(fp.u, fp.v, d.u, d.v, *self.coef, self.beta, self.p, self.grid.h)
        return FieldPair(hu, hv, self.grid)


@functools.lru_cache(maxsize=16)
def problem(grid: Grid, pset: PotentialSet, epsilon: float, beta: float, p: float = 2.0) -> Problem:
    return Problem(grid, pset, epsilon, beta, p)


def energy(fp: FieldPair, pset, epsilon, beta, p=2.0) -> EnergyBreakdown:
    return problem(fp.grid, pset, float(epsilon), float(beta), float(p)).energy(fp)


def grad(fp: FieldPair, pset, epsilon, beta, p=2.0) -> FieldPair:
    """Strong-form residual of the Euler-Lagrange system (zero on the boundary)."""
    return problem(fp.grid, pset, float(epsilon), float(beta), float(p)).grad(fp)


def hess_apply(fp: FieldPair, d: FieldPair, pset, epsilon, beta, p=2.0) -> FieldPair:
    return problem(fp.grid, pset, float(epsilon), float(beta), float(p)).hess_apply(fp, d)


# --------------------------------------------------------------------------
# pairings and norms


def node_pairing(a: FieldPair, b: FieldPair) -> float:
    """h^N sum(a.u*b.u + a.v*b.v): residual paired with a direction."""
    a._check(b)
    return a.grid.vol * (float(np.vdot(a.u, b.u)) + float(np.vdot(a.v, b.v)))


def h1_apply(fp: FieldPair) -> FieldPair:
    """(I - Laplacian) applied to both components."""
    h = fp.grid.h
    return FieldPair(fp.u - _kernels.laplacian(fp.u, h), fp.v - _kernels.laplacian(fp.v, h), fp.grid)


def inner(a: FieldPair, b: FieldPair) -> float:
    """Discrete H^1_0 x H^1_0 pairing: sum over edges of difference products plus node products."""
    a._check(b)
    return node_pairing(a, h1_apply(b))


def norm(fp: FieldPair) -> float:
    return math.sqrt(max(inner(fp, fp), 0.0))


def _riesz_scalar(g, grid):
    inner_sl = (slice(1, -1),) * grid.dim
    out = np.zeros_like(g)
    c = fft.dstn(g[inner_sl], type=1)
    out[inner_sl] = fft.idstn(c * grid._riesz_symbol, type=1)
    return out


def riesz(g: FieldPair) -> FieldPair:
    """Solve (I - Laplacian) r = g with Dirichlet data: the H^1 representative of a residual."""
    return FieldPair(_riesz_scalar(g.u, g.grid), _riesz_scalar(g.v, g.grid), g.grid)


def dual_norm(g: FieldPair) -> float:
    """H^1 norm of the functional d -> h^N sum(g*d)."""
    return math.sqrt(max(node_pairing(g, riesz(g)), 0.0))


def overlap(fp: FieldPair, p: float = 2.0) -> float:
    """Quadrature of int |u|^p |v|^p."""
    return fp.grid.vol * float(np.sum(np.abs(fp.u) ** p * np.abs(fp.v) ** p))


# --------------------------------------------------------------------------
# snapshots


def save_snapshot(fp: FieldPair, path_stem, meta: dict | None = None) -> None:
    """Write ``<stem>.npz`` (arrays u, v) and ``<stem>.json`` (grid metadata and run parameters)."""
    import json
    from pathlib import Path

    stem = Path(path_stem)
    npz = stem.parent / (stem.name + ".npz")  # not with_suffix: stems like eps0.01 carry dots
    np.savez(npz, u=fp.u, v=fp.v)
    side = {"format": "twopeak-field-snapshot/1", "grid": fp.grid.to_json(),
            "arrays": {"file": npz.name, "order": "C", "dtype": "float64",
                       "names": ["u", "v"]}}
    side.update(meta or {})
    (stem.parent / (stem.name + ".json")).write_text(json.dumps(side, indent=2, sort_keys=True))


def load_snapshot(path_stem):
    import json
    from pathlib import Path

    stem = Path(path_stem)
    side = json.loads((stem.parent / (stem.name + ".json")).read_text())
    g = side["grid"]
    grid = Grid(tuple(g["origin"]), float(g["h"]), tuple(g["shape"]))
    with np.load(stem.parent / (stem.name + ".npz")) as z:
        fp = FieldPair(z["u"].copy(), z["v"].copy(), grid)
    return fp, side
