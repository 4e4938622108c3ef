"""Riemann theta function with a certified truncation ellipsoid.

    theta(x | tau) = sum_m exp(pi i m.tau.m + 2 pi i m.x)

Terms are summed over the integer points m with
pi (m - c)^T Y (m - c) <= R^2, Y = Im(tau), where c = -Y^-1 Im(x) centres
the Gaussian envelope; R follows from the lattice tail bound of Deconinck,
Heil, Bobenko, van Hoeij and Schmies (Math. Comp. 73, 2004).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaincc, gammaln

from .errors import InvalidRiemannMatrix, ThetaZeroDivisor, TruncationRadiusOverflow

MAX_POINTS = 10**9
DEFAULT_EPS = 1e-10


@dataclass(frozen=True, eq=False)
class RiemannMatrix:
    tau: np.ndarray

    def __post_init__(self):
        tau = np.atleast_2d(np.asarray(self.tau, dtype=complex))
        if tau.shape[0] != tau.shape[1]:
            raise InvalidRiemannMatrix("tau must be square")
        if np.max(np.abs(tau - tau.T), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(tau))):
            raise InvalidRiemannMatrix("tau is not symmetric")
        tau = 0.5 * (tau + tau.T)
        try:
            chol = np.linalg.cholesky(tau.imag)
        except np.linalg.LinAlgError as exc:
            raise InvalidRiemannMatrix("Im(tau) is not positive definite") from exc
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "_chol", chol)

    @property
    def genus(self):
        return self.tau.shape[0]

    @property
    def Y(self):
        return self.tau.imag

    @property
    def cholesky(self):
        """Lower factor L with Y = L L^T."""
        return self._chol


@dataclass(frozen=True)
class ThetaValue:
    """theta = mantissa * exp(log_scale), |mantissa| in [1, e) or zero."""

    mantissa: complex
    log_scale: float

    @property
    def value(self):
        return self.mantissa * math.exp(self.log_scale)

    @classmethod
    def normalized(cls, raw, log_scale):
        a = abs(raw)
        if a == 0:
            return cls(0j, 0.0)
        shift = math.floor(math.log(a))
        return cls(raw * math.exp(-shift), log_scale + shift)


def _shortest_vector(T):
    """Length of the shortest nonzero vector of the lattice T Z^g (small g)."""
    g = T.shape[0]
    best = np.min(np.linalg.norm(T, axis=0))
    # enumerate a small box; adequate for the well-conditioned tau used here
    r = 2 if g <= 4 else 1
    for m in np.ndindex(*(2 * r + 1,) * g):
        v = np.array(m) - r
        if np.any(v):
            best = min(best, float(np.linalg.norm(T @ v)))
    return best


@lru_cache(maxsize=64)
def _radius(g, rho, eps):
    """Smallest R whose tail bound (g/2)(2/rho)^g Gamma(g/2, (R - rho/2)^2) is <= eps.

    The bound holds for R >= (sqrt(g) + rho)/2.
    """
    a = g / 2.0
    lo = (math.sqrt(g) + rho) / 2.0

    def excess(R):
        tail = gammaincc(a, (R - rho / 2.0) ** 2)
        return math.log(a) + g * math.log(2.0 / rho) + gammaln(a) + math.log(max(tail, 1e-300)) - math.log(eps)

    if excess(lo) <= 0:
        return lo
    hi = lo + 1.0
    while excess(hi) > 0:
        hi *= 1.5
    return brentq(excess, lo, hi)


def _enumerate(L, center, R2):
    """Integer vectors m with |L^T (m - center)|^2 <= R2, L lower-triangular.

    Fincke-Pohst style recursion on the last coordinate first.
    """
    g = L.shape[0]
    U = L.T  # upper triangular, Y = U^T U
    out = []

    def rec(i, partial, acc):
        # coordinate i; contributions from coordinates > i already fixed
        u_ii = U[i, i]
        shift = sum(U[i, j] * (partial[j] - center[j]) for j in range(i + 1, g))
        rem = R2 - acc
        if rem < 0:
            return
        half = math.sqrt(rem) / u_ii
        mid = center[i] - shift / u_ii
        for mi in range(math.ceil(mid - half), math.floor(mid + half) + 1):
            val = u_ii * (mi - center[i]) + shift
            partial[i] = mi
            if i == 0:
                out.append(tuple(partial))
            else:
                rec(i - 1, partial, acc + val * val)
            if len(out) > MAX_POINTS:
                raise TruncationRadiusOverflow("ellipsoid holds more than 1e9 points")
        partial[i] = 0

    rec(g - 1, [0] * g, 0.0)
    return np.array(out, dtype=np.int64).reshape(-1, g)


def _lattice(rm, center, eps, pad=0.0):
    g = rm.genus
    T = math.sqrt(math.pi) * rm.cholesky.T
    rho = _shortest_vector(T)
    R = _radius(g, rho, eps) + pad
    # sum over pi (m-c)^T Y (m-c) <= R^2  <=>  |L^T (m - c)|^2 <= R^2 / pi
    pts = _enumerate(rm.cholesky, list(center), R * R / math.pi)
    if pts.shape[0] > MAX_POINTS:
        raise TruncationRadiusOverflow("too many lattice points")
    q = np.einsum("ni,ij,nj->n", pts - center, rm.Y, pts - center)
    order = np.lexsort((*pts.T[::-1], q))
    return pts[order]


def _as_matrix(tau):
    return tau if isinstance(tau, RiemannMatrix) else RiemannMatrix(tau)


def theta(x, tau, eps=DEFAULT_EPS):
    """Overflow-safe theta(x | tau) for a single g-vector ``x``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    rm = _as_matrix(tau)
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    Y = rm.Y
    c = -np.linalg.solve(Y, x.imag)
    cr = np.round(c)
    pts = _lattice(rm, cr, eps, pad=_pad(rm, c - cr))
    # log of each term; subtract the envelope maximum pi Im(x).Y^-1.Im(x)
    log_scale = float(math.pi * x.imag @ np.linalg.solve(Y, x.imag))
    ph = np.einsum("ni,ij,nj->n", pts, rm.tau, pts) * (1j * math.pi) + 2j * math.pi * (pts @ x)
    terms = np.exp(ph - log_scale)
    raw = complex(math.fsum(terms.real), math.fsum(terms.imag))
    return ThetaValue.normalized(raw, log_scale)


def _pad(rm, frac):
    """Extra radius covering the offset between true and rounded centre."""
    return math.sqrt(math.pi) * float(np.linalg.norm(rm.cholesky.T @ frac))


def theta_ratio(x_num, x_den, tau, eps=DEFAULT_EPS):
    num = theta(x_num, tau, eps)
    den = theta(x_den, tau, eps)
    if abs(den.mantissa) <= eps:
        raise ThetaZeroDivisor("denominator is on (or within eps of) the theta divisor")
    return num.mantissa / den.mantissa * math.exp(num.log_scale - den.log_scale)


def theta_batch(x, tau, eps=DEFAULT_EPS):
    """Vectorized theta over an array of g-vectors (shape ``(..., g)``).

    Returns ``(mantissa, log_scale)`` arrays. Points are grouped by the
    rounded centre of their Gaussian envelope, and each group is summed over
    one shared lattice; for real arguments there is a single group.
    """
    rm = _as_matrix(tau)
    x = np.asarray(x, dtype=complex)
    shape = x.shape[:-1]
    g = rm.genus
    xf = x.reshape(-1, g)
    Yinv_im = np.linalg.solve(rm.Y, xf.imag.T).T
    c = -Yinv_im
    cr = np.round(c)
    log_scale = math.pi * np.einsum("ni,ni->n", xf.imag, Yinv_im)
    out = np.empty(xf.shape[0], dtype=complex)
    keys, inverse = np.unique(cr, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    for gi, key in enumerate(keys):
        idx = np.nonzero(inverse == gi)[0]
        frac = np.max(np.abs(c[idx] - key), axis=0)
        pts = _lattice(rm, key, eps, pad=_pad(rm, frac))
        quad = np.einsum("ni,ij,nj->n", pts, rm.tau, pts) * (1j * math.pi)
        ph = quad[None, :] + 2j * math.pi * (xf[idx] @ pts.T) - log_scale[idx, None]
        out[idx] = np.exp(ph).sum(axis=1)
    return out.reshape(shape), log_scale.reshape(shape)


def theta_ratio_batch(x_num, x_den, tau, eps=DEFAULT_EPS):
    mn, ln = theta_batch(x_num, tau, eps)
    md, ld = theta_batch(x_den, tau, eps)
    if np.any(np.abs(md) <= eps):
        raise ThetaZeroDivisor("denominator vanishes at some grid point")
    return mn / md * np.exp(ln - ld)


def _theta_jet(x, tau, dirs, eps=DEFAULT_EPS):
    """Scaled theta with first and second directional derivatives.

    ``dirs`` is a list of g-vectors d_i. Returns ``(th, d1, d2, log_scale)``
    where d1[i] = D_i theta and d2[i][j] = D_i D_j theta, all sharing the
    scale exp(log_scale). Used to pin the constant factors of the theta
    quotient solution; not part of the public surface.
    """
    rm = _as_matrix(tau)
    x = np.asarray(x, dtype=complex)
    g = rm.genus
    xf = x.reshape(-1, g)
    n = xf.shape[0]
    Yinv_im = np.linalg.solve(rm.Y, xf.imag.T).T
    c = -Yinv_im
    cr = np.round(c)
    log_scale = math.pi * np.einsum("ni,ni->n", xf.imag, Yinv_im)
    nd = len(dirs)
    th = np.empty(n, dtype=complex)
    d1 = np.empty((nd, n), dtype=complex)
    d2 = np.empty((nd, nd, n), dtype=complex)
    keys, inverse = np.unique(cr, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    for gi, key in enumerate(keys):
        idx = np.nonzero(inverse == gi)[0]
        frac = np.max(np.abs(c[idx] - key), axis=0)
        pts = _lattice(rm, key, eps * 1e-3, pad=_pad(rm, frac) + 1.0)
        quad = np.einsum("ni,ij,nj->n", pts, rm.tau, pts) * (1j * math.pi)
        terms = np.exp(quad[None, :] + 2j * math.pi * (xf[idx] @ pts.T) - log_scale[idx, None])
        fac = [2j * math.pi * (pts @ np.asarray(d, dtype=complex)) for d in dirs]
        th[idx] = terms.sum(axis=1)
        for i in range(nd):
            d1[i, idx] = terms @ fac[i]
            for j in range(i, nd):
                d2[i, j, idx] = d2[j, i, idx] = terms @ (fac[i] * fac[j])
    return th, d1, d2, log_scale


def theta_grid(u, v, tau, eps=DEFAULT_EPS):
    """theta(u_i + v_j | tau) on an outer-sum grid, as a complex matrix.

    ``u`` (n1, g) and ``v`` (n2, g) must give arguments whose imaginary
    part is the same at every grid point (the case for the real-linear
    phases of the theta quotient). The lattice sum then factorises into a
    matrix product, exp(2 pi i m.(u+v)) = exp(2 pi i m.u) exp(2 pi i m.v).
    Returns the plain value (no separate log scale).
    """
    rm = _as_matrix(tau)
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    v = np.atleast_2d(np.asarray(v, dtype=complex))
    im = u.imag[0] + v.imag[0]
    if np.ptp(u.imag, axis=0).max(initial=0) > 1e-12 or np.ptp(v.imag, axis=0).max(initial=0) > 1e-12:
        mant, ls = theta_batch(u[:, None, :] + v[None, :, :], rm, eps)
        return mant * np.exp(ls)
    c = -np.linalg.solve(rm.Y, im)
    cr = np.round(c)
    pts = _lattice(rm, cr, eps, pad=_pad(rm, c - cr))
    quad = np.exp(np.einsum("ni,ij,nj->n", pts, rm.tau, pts) * (1j * math.pi))
    eu = np.exp(2j * math.pi * (u @ pts.T))
    ev = np.exp(2j * math.pi * (v @ pts.T))
    return (eu * quad[None, :]) @ ev.T
