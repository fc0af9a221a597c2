"""Stencil kernels on Dirichlet grids.

Every kernel exists as a numpy implementation (``np_*``) and, for 2D and 3D,
a fused numba implementation (``nb_*``). The public names dispatch on
``_accel.USE_NUMBA``; the benchmark calls both variants directly.

Fields are full node arrays whose outermost layer is the Dirichlet boundary;
outputs are zero there. ``p`` is the nonlinearity exponent (p >= 2).
"""
import numpy as np

from . import _accel
from ._accel import njit

try:
    from numba import njit as _real_njit
except ImportError:  # pragma: no cover
    _real_njit = None


def _interior(ndim):
    return (slice(1, -1),) * ndim


# --------------------------------------------------------------------------
# numpy versions


def np_laplacian(u, h):
    out = np.zeros_like(u)
    inner = _interior(u.ndim)
    c = u[inner]
    acc = -2.0 * u.ndim * c
    for ax in range(u.ndim):
        lo = list(inner)
        hi = list(inner)
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        acc = acc + u[tuple(lo)] + u[tuple(hi)]
    out[inner] = acc / (h * h)
    return out


def _pw(a, e):
    """|a|^e, with the p=2 exponents special-cased."""
    if e == 0.0:
        return np.ones_like(a)
    if e == 1.0:
        return np.abs(a)
    if e == 2.0:
        return a * a
    return np.abs(a) ** e


def np_grad(u, v, J1, J2, K1, K2, beta, p, h):
    lu = np_laplacian(u, h)
    lv = np_laplacian(v, h)
    up, vp = _pw(u, p), _pw(v, p)
    up2, vp2 = _pw(u, p - 2.0), _pw(v, p - 2.0)
    gu = -lu + J1 * u - J2 * _pw(u, 2 * p - 2) * u - beta * up2 * u * vp
    gv = -lv + K1 * v - K2 * _pw(v, 2 * p - 2) * v - beta * vp2 * v * up
    inner = _interior(u.ndim)
    ou = np.zeros_like(u)
    ov = np.zeros_like(v)
    ou[inner] = gu[inner]
    ov[inner] = gv[inner]
    return ou, ov


def np_hess(u, v, du, dv, J1, J2, K1, K2, beta, p, h):
    up2, vp2 = _pw(u, p - 2.0), _pw(v, p - 2.0)
    up, vp = _pw(u, p), _pw(v, p)
    duu = J1 - (2 * p - 1) * J2 * _pw(u, 2 * p - 2) - beta * (p - 1) * up2 * vp
    dvv = K1 - (2 * p - 1) * K2 * _pw(v, 2 * p - 2) - beta * (p - 1) * vp2 * up
    duv = -beta * p * up2 * u * vp2 * v
    hu = -np_laplacian(du, h) + duu * du + duv * dv
    hv = -np_laplacian(dv, h) + dvv * dv + duv * du
    inner = _interior(u.ndim)
    ou = np.zeros_like(u)
    ov = np.zeros_like(v)
    ou[inner] = hu[inner]
    ov[inner] = hv[inner]
    return ou, ov


def np_edge_energy(u, h):
    """0.5 * sum over all grid edges of (difference/h)^2, times h^N."""
    s = 0.0
    for ax in range(u.ndim):
        d = np.diff(u, axis=ax)
        s += float(np.sum(d * d))
    return 0.5 * s * h ** (u.ndim - 2)


def np_energy(u, v, J1, J2, K1, K2, beta, p, h):
    vol = h ** u.ndim
    jpart = np_edge_energy(u, h) + vol * float(
        np.sum(0.5 * J1 * u * u - J2 * _pw(u, 2 * p) / (2 * p)))
    kpart = np_edge_energy(v, h) + vol * float(
        np.sum(0.5 * K1 * v * v - K2 * _pw(v, 2 * p) / (2 * p)))
    coupling = -beta / p * vol * float(np.sum(_pw(u, p) * _pw(v, p)))
    return jpart, kpart, coupling


# --------------------------------------------------------------------------
# numba versions (2D and 3D)


@njit(cache=True)
def _apow(a, e):
    if e == 0.0:
        return 1.0
    if e == 2.0:
        return a * a
    if e == 4.0:
        a2 = a * a
        return a2 * a2
    return abs(a) ** e


@njit(cache=True)
def nb_grad2(u, v, J1, J2, K1, K2, beta, p, h):
    n0, n1 = u.shape
    gu = np.zeros_like(u)
    gv = np.zeros_like(v)
    ih2 = 1.0 / (h * h)
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            a = u[i, j]
            b = v[i, j]
            la = (u[i - 1, j] + u[i + 1, j] + u[i, j - 1] + u[i, j + 1] - 4.0 * a) * ih2
            lb = (v[i - 1, j] + v[i + 1, j] + v[i, j - 1] + v[i, j + 1] - 4.0 * b) * ih2
            ap = _apow(a, p)
            bp = _apow(b, p)
            gu[i, j] = (-la + J1[i, j] * a - J2[i, j] * _apow(a, 2 * p - 2) * a
                        - beta * _apow(a, p - 2) * a * bp)
            gv[i, j] = (-lb + K1[i, j] * b - K2[i, j] * _apow(b, 2 * p - 2) * b
                        - beta * _apow(b, p - 2) * b * ap)
    return gu, gv


@njit(cache=True)
def nb_hess2(u, v, du, dv, J1, J2, K1, K2, beta, p, h):
    n0, n1 = u.shape
    hu = np.zeros_like(u)
    hv = np.zeros_like(v)
    ih2 = 1.0 / (h * h)
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            a = u[i, j]
            b = v[i, j]
            x = du[i, j]
            y = dv[i, j]
            lx = (du[i - 1, j] + du[i + 1, j] + du[i, j - 1] + du[i, j + 1] - 4.0 * x) * ih2
            ly = (dv[i - 1, j] + dv[i + 1, j] + dv[i, j - 1] + dv[i, j + 1] - 4.0 * y) * ih2
            ap = _apow(a, p)
            bp = _apow(b, p)
            ap2 = _apow(a, p - 2)
            bp2 = _apow(b, p - 2)
            duu = J1[i, j] - (2 * p - 1) * J2[i, j] * _apow(a, 2 * p - 2) - beta * (p - 1) * ap2 * bp
            dvv = K1[i, j] - (2 * p - 1) * K2[i, j] * _apow(b, 2 * p - 2) - beta * (p - 1) * bp2 * ap
            duv = -beta * p * ap2 * a * bp2 * b
            hu[i, j] = -lx + duu * x + duv * y
            hv[i, j] = -ly + dvv * y + duv * x
    return hu, hv


@njit(cache=True)
def nb_grad3(u, v, J1, J2, K1, K2, beta, p, h):
    n0, n1, n2 = u.shape
    gu = np.zeros_like(u)
    gv = np.zeros_like(v)
    ih2 = 1.0 / (h * h)
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            for k in range(1, n2 - 1):
                a = u[i, j, k]
                b = v[i, j, k]
                la = (u[i - 1, j, k] + u[i + 1, j, k] + u[i, j - 1, k] + u[i, j + 1, k]
                      + u[i, j, k - 1] + u[i, j, k + 1] - 6.0 * a) * ih2
                lb = (v[i - 1, j, k] + v[i + 1, j, k] + v[i, j - 1, k] + v[i, j + 1, k]
                      + v[i, j, k - 1] + v[i, j, k + 1] - 6.0 * b) * ih2
                ap = _apow(a, p)
                bp = _apow(b, p)
                gu[i, j, k] = (-la + J1[i, j, k] * a - J2[i, j, k] * _apow(a, 2 * p - 2) * a
                               - beta * _apow(a, p - 2) * a * bp)
                gv[i, j, k] = (-lb + K1[i, j, k] * b - K2[i, j, k] * _apow(b, 2 * p - 2) * b
                               - beta * _apow(b, p - 2) * b * ap)
    return gu, gv


@njit(cache=True)
def nb_hess3(u, v, du, dv, J1, J2, K1, K2, beta, p, h):
    n0, n1, n2 = u.shape
    hu = np.zeros_like(u)
    hv = np.zeros_like(v)
    ih2 = 1.0 / (h * h)
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            for k in range(1, n2 - 1):
                a = u[i, j, k]
                b = v[i, j, k]
                x = du[i, j, k]
                y = dv[i, j, k]
                lx = (du[i - 1, j, k] + du[i + 1, j, k] + du[i, j - 1, k] + du[i, j + 1, k]
                      + du[i, j, k - 1] + du[i, j, k + 1] - 6.0 * x) * ih2
                ly = (dv[i - 1, j, k] + dv[i + 1, j, k] + dv[i, j - 1, k] + dv[i, j + 1, k]
                      + dv[i, j, k - 1] + dv[i, j, k + 1] - 6.0 * y) * ih2
                ap = _apow(a, p)
                bp = _apow(b, p)
                ap2 = _apow(a, p - 2)
                bp2 = _apow(b, p - 2)
                duu = (J1[i, j, k] - (2 * p - 1) * J2[i, j, k] * _apow(a, 2 * p - 2)
                       - beta * (p - 1) * ap2 * bp)
                dvv = (K1[i, j, k] - (2 * p - 1) * K2[i, j, k] * _apow(b, 2 * p - 2)
                       - beta * (p - 1) * bp2 * ap)
                duv = -beta * p * ap2 * a * bp2 * b
                hu[i, j, k] = -lx + duu * x + duv * y
                hv[i, j, k] = -ly + dvv * y + duv * x
    return hu, hv


@njit(cache=True)
def nb_energy2(u, v, J1, J2, K1, K2, beta, p, h):
    n0, n1 = u.shape
    eu = 0.0
    ev = 0.0
    pu = 0.0
    pv = 0.0
    cp = 0.0
    # edges along axis 0, then axis 1; row partial sums keep the rounding small
    for i in range(n0 - 1):
        ru = 0.0
        rv = 0.0
        for j in range(n1):
            d = u[i + 1, j] - u[i, j]
            e = v[i + 1, j] - v[i, j]
            ru += d * d
            rv += e * e
        eu += ru
        ev += rv
    for i in range(n0):
        ru = 0.0
        rv = 0.0
        for j in range(n1 - 1):
            d = u[i, j + 1] - u[i, j]
            e = v[i, j + 1] - v[i, j]
            ru += d * d
            rv += e * e
        eu += ru
        ev += rv
    for i in range(n0):
        ru = 0.0
        rv = 0.0
        rc = 0.0
        for j in range(n1):
            a = u[i, j]
            b = v[i, j]
            ru += 0.5 * J1[i, j] * a * a - J2[i, j] * _apow(a, 2 * p) / (2 * p)
            rv += 0.5 * K1[i, j] * b * b - K2[i, j] * _apow(b, 2 * p) / (2 * p)
            rc += _apow(a, p) * _apow(b, p)
        pu += ru
        pv += rv
        cp += rc
    vol = h * h
    return 0.5 * eu + vol * pu, 0.5 * ev + vol * pv, -beta / p * vol * cp


@njit(cache=True)
def nb_energy3(u, v, J1, J2, K1, K2, beta, p, h):
    n0, n1, n2 = u.shape
    eu = 0.0
    ev = 0.0
    pu = 0.0
    pv = 0.0
    cp = 0.0
    for i in range(n0):
        for j in range(n1):
            ru = 0.0
            rv = 0.0
            rpu = 0.0
            rpv = 0.0
            rc = 0.0
            for k in range(n2):
                a = u[i, j, k]
                b = v[i, j, k]
                if k + 1 < n2:
                    d = u[i, j, k + 1] - a
                    e = v[i, j, k + 1] - b
                    ru += d * d
                    rv += e * e
                if i + 1 < n0:
                    d = u[i + 1, j, k] - a
                    e = v[i + 1, j, k] - b
                    ru += d * d
                    rv += e * e
                if j + 1 < n1:
                    d = u[i, j + 1, k] - a
                    e = v[i, j + 1, k] - b
                    ru += d * d
                    rv += e * e
                rpu += 0.5 * J1[i, j, k] * a * a - J2[i, j, k] * _apow(a, 2 * p) / (2 * p)
                rpv += 0.5 * K1[i, j, k] * b * b - K2[i, j, k] * _apow(b, 2 * p) / (2 * p)
                rc += _apow(a, p) * _apow(b, p)
            eu += ru
            ev += rv
            pu += rpu
            pv += rpv
            cp += rc
    vol = h * h * h
    return 0.5 * eu * h + vol * pu, 0.5 * ev * h + vol * pv, -beta / p * vol * cp


# --------------------------------------------------------------------------
# dispatch

_NB = {
    (2, "grad"): nb_grad2, (3, "grad"): nb_grad3,
    (2, "hess"): nb_hess2, (3, "hess"): nb_hess3,
    (2, "energy"): nb_energy2, (3, "energy"): nb_energy3,
}
_NP = {"grad": np_grad, "hess": np_hess, "energy": np_energy}


def kernel(name, ndim, use_numba=None):
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba and (ndim, name) in _NB:
        return _NB[(ndim, name)]
    return _NP[name]


def laplacian(u, h):
    return np_laplacian(u, h)
