"""Radial ground state of -W'' - (N-1)/r W' + W = W^(2p-1) and its rescalings."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator
from scipy.special import kve

from ._accel import njit
from .potentials import ParameterError, check_exponent


class ShootingError(RuntimeError):
    pass


SURFACE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}

# trajectory outcomes
OVERSHOOT = 1   # crossed zero: amplitude too large
UNDERSHOOT = -1  # turned back up before decaying: amplitude too small
SURVIVED = 0


@njit(cache=True)
def _rhs(r, w, dw, N, p):
    return dw, -(N - 1) / r * dw + w - abs(w) ** (2 * p - 2) * w


@njit(cache=True)
def _shoot(a, N, p, h, nsteps, W, dW):
    """RK4 from a two-term series start; fills W, dW; returns (status, last index)."""
    c2 = (a - a ** (2 * p - 1)) / N
    W[0] = a
    dW[0] = 0.0
    W[1] = a + 0.5 * c2 * h * h
    dW[1] = c2 * h
    w = W[1]
    dw = dW[1]
    for i in range(1, nsteps):
        r = i * h
        k1w, k1d = _rhs(r, w, dw, N, p)
        k2w, k2d = _rhs(r + 0.5 * h, w + 0.5 * h * k1w, dw + 0.5 * h * k1d, N, p)
        k3w, k3d = _rhs(r + 0.5 * h, w + 0.5 * h * k2w, dw + 0.5 * h * k2d, N, p)
        k4w, k4d = _rhs(r + h, w + h * k3w, dw + h * k3d, N, p)
        w = w + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        dw = dw + h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
        W[i + 1] = w
        dW[i + 1] = dw
        if w < 0.0:
            return 1, i + 1
        if dw > 0.0:
            return -1, i + 1
    return 0, nsteps


def _tail_shape(r, N):
    """Decaying solution of the linearised radial equation, scaled by e^r."""
    nu = N / 2.0 - 1.0
    return r ** (-nu) * kve(nu, r), -(r ** (-nu)) * kve(nu + 1.0, r)


@dataclass(frozen=True)
class GroundStateProfile:
    dim: int
    exponent: float
    r_samples: np.ndarray
    values: np.ndarray
    derivative_values: np.ndarray
    shoot_amplitude: float
    match_radius: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def p(self):
        return self.exponent

    @property
    def r_max(self):
        return float(self.r_samples[-1])

    @cached_property
    def _interp(self):
        return PchipInterpolator(self.r_samples, self.values, extrapolate=False)

    def __call__(self, r):
        """W at radii ``r`` (zero beyond r_max)."""
        r = np.abs(np.asarray(r, dtype=float))
        out = self._interp(np.minimum(r, self.r_max))
        return np.where(r > self.r_max, 0.0, out)

    def residual(self, order: int = 2) -> np.ndarray:
        """Finite-difference residual of the radial ODE at interior samples.

        ``order=2`` uses the three-point stencils for W'' and W'. ``order=4``
        uses five-point W'' and the integrator's own W', which removes the
        stencil truncation error that dominates near r = 0.
        """
        r, w, h = self.r_samples, self.values, self.r_samples[1] - self.r_samples[0]
        q = 2 * self.exponent - 1
        if order == 2:
            d2 = (w[2:] - 2 * w[1:-1] + w[:-2]) / h ** 2
            d1 = (w[2:] - w[:-2]) / (2 * h)
            wi, ri = w[1:-1], r[1:-1]
        elif order == 4:
            d2 = (-w[4:] + 16 * w[3:-1] - 30 * w[2:-2] + 16 * w[1:-3] - w[:-4]) / (12 * h ** 2)
            d1 = self.derivative_values[2:-2]
            wi, ri = w[2:-2], r[2:-2]
        else:
            raise ParameterError("order must be 2 or 4")
        return -d2 - (self.dim - 1) / ri * d1 + wi - wi ** q


def solve_profile(N: int, p: float = 2.0, decay_tol: float = 1e-8, ode_step: float = 5e-4,
                  r_max: float = 20.0, max_bisect: int = 200) -> GroundStateProfile:
    """Shoot for the positive radial ground state in dimension ``N``.

    Bisection on W(0) separates trajectories that cross zero from those that
    turn back up. Once the shot becomes unreliable (the growing mode takes
    over) the tail is continued by the decaying solution of the linearised
    equation, matched in value at the junction.
    """
    if N not in (1, 2, 3):
        raise ParameterError("N must be 1, 2 or 3")
    check_exponent(p, N)
    nsteps = int(round(r_max / ode_step))
    h = r_max / nsteps
    W = np.zeros(nsteps + 1)
    dW = np.zeros(nsteps + 1)
    W2 = np.zeros(nsteps + 1)
    dW2 = np.zeros(nsteps + 1)

    lo = 1.0 + 1e-9
    st, _ = _shoot(lo, N, p, h, nsteps, W, dW)
    if st != UNDERSHOOT:
        raise ShootingError("lower amplitude does not undershoot")
    hi = 2.0
    for _ in range(60):
        st, _ = _shoot(hi, N, p, h, nsteps, W, dW)
        if st == OVERSHOOT:
            break
        lo = hi if st == UNDERSHOOT else lo
        hi *= 2.0
    else:
        raise ShootingError("no overshooting amplitude found")

    for it in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        st, _ = _shoot(mid, N, p, h, nsteps, W, dW)
        if st == OVERSHOOT:
            hi = mid
        elif st == UNDERSHOOT:
            lo = mid
        else:
            lo = hi = mid
            break
    else:
        raise ShootingError("bisection did not converge")

    st_lo, n_lo = _shoot(lo, N, p, h, nsteps, W, dW)
    st_hi, n_hi = _shoot(hi, N, p, h, nsteps, W2, dW2)
    n = min(n_lo, n_hi)
    r = np.arange(nsteps + 1) * h
    # junction: before the two bracketing shots separate and while W is resolved
    scale = W[0]
    bad = (np.abs(W[:n] - W2[:n]) > 1e-10 * scale) | (W[:n] < 1e-6 * scale)
    bad[0] = False
    m = int(np.argmax(bad)) if bad.any() else n - 1
    m = max(m - 1, 2)
    values = W.copy()
    derivs = dW.copy()
    f, df = _tail_shape(r[m:], N)
    # e^r factors cancel in the ratio
    ratio = np.exp(-(r[m:] - r[m]))
    values[m:] = W[m] * f / f[0] * ratio
    derivs[m:] = W[m] * df / f[0] * ratio
    prof = GroundStateProfile(N, float(p), r, values, derivs, float(0.5 * (lo + hi)),
                              float(r[m]), {"ode_step": h, "decay_tol": decay_tol})
    if not np.all(np.diff(values) < 0):
        raise ShootingError("profile is not strictly decreasing")
    if values[-1] > decay_tol:
        raise ShootingError(f"W(r_max)={values[-1]:.3g} exceeds decay_tol; increase r_max")
    res = prof.residual(order=4)
    if np.sqrt(np.mean(res ** 2)) > 1e-6:
        raise ShootingError("profile residual above 1e-6; decrease ode_step")
    return prof


def moment(profile: GroundStateProfile, q: float) -> float:
    """Integral of W^q over R^N by Simpson's rule on the radial samples."""
    if q < 2:
        raise ParameterError("q must be >= 2")
    r = profile.r_samples
    return SURFACE[profile.dim] * simpson(profile.values ** q * r ** (profile.dim - 1), x=r)


def gradient_moment(profile: GroundStateProfile) -> float:
    r = profile.r_samples
    return SURFACE[profile.dim] * simpson(profile.derivative_values ** 2 * r ** (profile.dim - 1), x=r)


@dataclass(frozen=True)
class RescaledProfile:
    """x -> amplitude * W(width * |x - center|)."""

    base: GroundStateProfile
    amplitude: float
    width: float
    center: np.ndarray

    def __call__(self, x):
        """Evaluate at points ``x`` of shape (..., N)."""
        d = np.asarray(x, dtype=float) - self.center
        return self.amplitude * self.base(self.width * np.sqrt((d * d).sum(axis=-1)))

    def radial(self, r):
        return self.amplitude * self.base(self.width * np.asarray(r))


def rescale_profile(profile: GroundStateProfile, J1: float, J2: float, center=None) -> RescaledProfile:
    """Profile solving -Delta U + J1 U = J2 U^(2p-1) centred at ``center``."""
    if J1 <= 0 or J2 <= 0:
        raise ParameterError("potential values must be positive")
    p = profile.exponent
    amp = (J1 / J2) ** (1.0 / (2 * p - 2))
    if center is None:
        center = np.zeros(profile.dim)
    return RescaledProfile(profile, float(amp), float(np.sqrt(J1)), np.asarray(center, dtype=float))


def rescaled_residual(profile: GroundStateProfile, J1: float, J2: float, step: float,
                      r_lo: float = 0.5, r_hi: float = 6.0) -> float:
    """RMS of -Delta U + J1 U - J2 U^(2p-1) for the rescaled profile, by central differences.

    U is sampled on a radial grid of spacing ``step``; the residual is pure
    stencil truncation, so it falls like step^2.
    """
    U = rescale_profile(profile, J1, J2)
    q = 2 * profile.exponent - 1
    r = np.arange(r_lo, r_hi + 0.5 * step, step)
    um, u0, up = U.radial(r - step), U.radial(r), U.radial(r + step)
    lap = (up - 2 * u0 + um) / step ** 2 + (profile.dim - 1) / r * (up - um) / (2 * step)
    res = -lap + J1 * u0 - J2 * u0 ** q
    return float(np.sqrt(np.mean(res ** 2)))


@dataclass(frozen=True)
class LimitEnergy:
    quarter_value: float  # Nehari value (1/2 - 1/2p) J-scaling * int W^2p
    paper_value: float    # 1/2 J-scaling * int W^2p
    direct: float         # quadrature of the limit functional at the rescaled profile


def limit_energy(profile: GroundStateProfile, J1: float, J2: float) -> LimitEnergy:
    """Limit functional 1/2 int(|grad U|^2 + J1 U^2) - 1/(2p) int J2 U^2p at U = rescaled W."""
    from .potentials import gamma_bar_exponents

    p, N = profile.exponent, profile.dim
    U = rescale_profile(profile, J1, J2)
    a, b = U.amplitude, U.width
    # the rescaled profile lives on radii r/b
    r = profile.r_samples / b
    u = a * profile.values
    du = a * b * profile.derivative_values
    w = SURFACE[N] * r ** (N - 1)
    direct = (0.5 * simpson((du ** 2 + J1 * u ** 2) * w, x=r)
              - simpson(J2 * np.abs(u) ** (2 * p) * w, x=r) / (2 * p))
    ea, eb = gamma_bar_exponents(p, N)
    scale = J1 ** ea * J2 ** eb
    m = moment(profile, 2 * p)
    return LimitEnergy((0.5 - 0.5 / p) * scale * m, 0.5 * scale * m, float(direct))


def c0_candidates(profile: GroundStateProfile) -> tuple[float, float]:
    """(1/2 int W^2p, Nehari constant (1/2 - 1/2p) int W^2p); for p=2 these are 1/2 and 1/4 of int W^4."""
    m = moment(profile, 2 * profile.exponent)
    return 0.5 * m, (0.5 - 0.5 / profile.exponent) * m


def save_profile(profile: GroundStateProfile, path) -> None:
    header = (f"N={profile.dim} p={profile.exponent!r} "
              f"shoot_amplitude={profile.shoot_amplitude!r}\nr W")
    np.savetxt(path, np.column_stack([profile.r_samples, profile.values]), header=header,
               fmt="%.17e")


def load_profile_table(path):
    """Read a profile table; returns (header dict, r, W)."""
    with open(path) as fh:
        first = fh.readline().lstrip("# ").split()
    meta = dict(kv.split("=") for kv in first)
    data = np.loadtxt(path)
    return ({"N": int(meta["N"]), "p": float(meta["p"]),
             "shoot_amplitude": float(meta["shoot_amplitude"])}, data[:, 0], data[:, 1])
