"""Two-peak trial pair: placement geometry, cutoff, ansatz fields, tangent basis."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import field
from .potentials import ParameterError, PotentialSet
from .profile import GroundStateProfile, RescaledProfile, rescale_profile


class PlacementError(ValueError):
    pass


class BasisError(RuntimeError):
    pass


@dataclass(frozen=True)
class Placement:
    epsilon: float
    Q: tuple
    Qprime: tuple
    P: tuple
    Pprime: tuple
    e1: tuple

    @property
    def dim(self):
        return len(self.Q)

    @property
    def separation(self):
        """|P - P'| in rescaled coordinates."""
        return float(np.linalg.norm(np.subtract(self.Pprime, self.P)))

    def to_json(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def place(Q, epsilon: float, box=None, e1=None) -> Placement:
    """P = Q/eps and P' = (Q + sqrt(eps) e1)/eps; ``box`` is a list of (lo, hi) per axis."""
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    Q = np.asarray(Q, dtype=float)
    if e1 is None:
        e1 = np.zeros(Q.size)
        e1[0] = 1.0
    e1 = np.asarray(e1, dtype=float)
    e1 = e1 / np.linalg.norm(e1)
    Qp = Q + math.sqrt(epsilon) * e1
    if box is not None:
        b = np.asarray(box, dtype=float)
        lo, hi = b[:, 0], b[:, 1]
        for name, pt in (("Q", Q), ("Q'", Qp)):
            if np.any(pt < lo) or np.any(pt > hi):
                raise PlacementError(f"{name}={pt.tolist()} outside the box")
    P = Q / epsilon
    # P' from P so that |P - P'| = eps^-1/2 holds to rounding
    Pp = P + e1 / math.sqrt(epsilon)
    t = lambda a: tuple(float(x) for x in a)  # noqa: E731
    return Placement(float(epsilon), t(Q), t(Qp), t(P), t(Pp), t(e1))


@dataclass(frozen=True)
class CutoffSpec:
    epsilon: float

    @property
    def inner_radius(self):
        return self.epsilon ** -0.25

    @property
    def outer_radius(self):
        return 2.0 * self.epsilon ** -0.25

    @staticmethod
    def bridge(t):
        """Quintic smoothstep, 0 -> 0, 1 -> 1, flat to second order at both ends."""
        t = np.clip(t, 0.0, 1.0)
        return t * t * t * (t * (6.0 * t - 15.0) + 10.0)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return 1.0 - self.bridge((r - self.inner_radius) / (self.outer_radius - self.inner_radius))

    def max_gradient(self):
        return 1.875 / (self.outer_radius - self.inner_radius)


def cutoff_value(x, spec: CutoffSpec):
    """chi at points ``x`` of shape (..., N); scalars are read as radii."""
    x = np.asarray(x, dtype=float)
    r = np.abs(x) if x.ndim == 0 else np.sqrt((x * x).sum(axis=-1))
    return spec.radial(r)


@dataclass
class AnsatzPair:
    fields: field.FieldPair
    placement: Placement
    jvals: tuple
    kvals: tuple
    profU: RescaledProfile
    profV: RescaledProfile


def profiles_at(pset: PotentialSet, profile: GroundStateProfile, placement: Placement):
    """Rescaled U^Q and V^Q (both generated by the potentials at Q) centred at P and P'."""
    J1, J2, K1, K2 = pset.values(placement.Q)
    U = rescale_profile(profile, J1, J2, center=placement.P)
    V = rescale_profile(profile, K1, K2, center=placement.Pprime)
    return U, V, (J1, J2), (K1, K2)


def _check_window(grid, placement):
    R = CutoffSpec(placement.epsilon).outer_radius
    lo = np.asarray(grid.origin) + grid.h
    hi = np.asarray(grid.upper) - grid.h
    for c in (placement.P, placement.Pprime):
        c = np.asarray(c)
        if np.any(c - R < lo - 1e-9) or np.any(c + R > hi + 1e-9):
            raise PlacementError("grid window clips a cutoff support")


def build_ansatz(profU: RescaledProfile, profV: RescaledProfile, placement: Placement,
                 grid: field.Grid, jvals=(), kvals=()) -> AnsatzPair:
    _check_window(grid, placement)
    spec = CutoffSpec(placement.epsilon)
    X = grid.points
    u = cutoff_value(X - profU.center, spec) * profU(X)
    v = cutoff_value(X - profV.center, spec) * profV(X)
    m = grid.boundary_mask
    u[m] = 0.0
    v[m] = 0.0
    return AnsatzPair(field.FieldPair(u, v, grid), placement, tuple(jvals), tuple(kvals), profU, profV)


def ansatz(pset: PotentialSet, profile: GroundStateProfile, placement: Placement, grid) -> AnsatzPair:
    U, V, jv, kv = profiles_at(pset, profile, placement)
    return build_ansatz(U, V, placement, grid, jv, kv)


@dataclass
class TangentBasis:
    elements: list       # H^1-orthonormal
    raw: list            # central differences before orthogonalisation
    raw_norms: list

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)


def _shift(placement, i, delta):
    """Placement with P moved by delta*e_i (Q moves by eps*delta*e_i, P' follows)."""
    eps = placement.epsilon
    Q = np.array(placement.Q)
    Q[i] += eps * delta
    return place(Q, eps, e1=placement.e1)


def tangent_basis(placement: Placement, pset: PotentialSet, profile: GroundStateProfile,
                  grid: field.Grid, step: float | None = None) -> TangentBasis:
    """Central differences of the ansatz in P_i, then modified Gram-Schmidt in H^1."""
    if step is None:
        step = 0.05 * grid.h
    raw = []
    for i in range(placement.dim):
        plus = ansatz(pset, profile, _shift(placement, i, step), grid).fields
        minus = ansatz(pset, profile, _shift(placement, i, -step), grid).fields
        raw.append((plus - minus) * (0.5 / step))
    return orthonormal_basis(raw)


# --------------------------------------------------------------------------
# free peak centres (used to relax a pair towards a true solution)


def pair_at_centers(pset: PotentialSet, profile: GroundStateProfile, cu, cv, epsilon: float,
                    grid: field.Grid) -> AnsatzPair:
    """Truncated profiles centred at rescaled points cu, cv, each scaled by its own local potentials."""
    cu = np.asarray(cu, dtype=float)
    cv = np.asarray(cv, dtype=float)
    J1, J2, _, _ = pset.values(tuple(epsilon * cu))
    _, _, K1, K2 = pset.values(tuple(epsilon * cv))
    U = rescale_profile(profile, J1, J2, center=cu)
    V = rescale_profile(profile, K1, K2, center=cv)
    Q = epsilon * cu
    Qp = epsilon * cv
    pl = Placement(float(epsilon), tuple(map(float, Q)), tuple(map(float, Qp)), tuple(map(float, cu)),
                   tuple(map(float, cv)), tuple(np.eye(cu.size)[0]))
    return build_ansatz(U, V, pl, grid, (J1, J2), (K1, K2))


def center_directions(pair: AnsatzPair, step: float):
    """Raw derivatives of the pair in each coordinate of u's centre, then of v's centre."""
    grid = pair.fields.grid
    out = []
    for which in ("u", "v"):
        prof = pair.profU if which == "u" else pair.profV
        for i in range(grid.dim):
            vals = []
            for d in (step, -step):
                c = np.array(prof.center)
                c[i] += d
                moved = RescaledProfile(prof.base, prof.amplitude, prof.width, c)
                a = cutoff_value(grid.points - c, CutoffSpec(pair.placement.epsilon)) * moved(grid.points)
                a[grid.boundary_mask] = 0.0
                vals.append(a)
            diff = (vals[0] - vals[1]) * (0.5 / step)
            zero = np.zeros(grid.shape)
            out.append(field.FieldPair(diff, zero, grid) if which == "u"
                       else field.FieldPair(zero, diff, grid))
    return out


def orthonormal_basis(raw) -> TangentBasis:
    """Two-pass modified Gram-Schmidt in the H^1 pairing."""
    norms = [field.norm(b) for b in raw]
    if min(norms) < 1e-12:
        raise BasisError("degenerate tangent basis: grid far too coarse")
    out = []
    for b in raw:
        e = b.copy()
        for _ in range(2):  # twice is enough
            for q in out:
                e = e.axpy(-field.inner(q, e), q)
        n = field.norm(e)
        if n < 1e-12 * max(norms):
            raise BasisError("tangent directions are linearly dependent")
        out.append(e * (1.0 / n))
    return TangentBasis(out, list(raw), norms)
