"""Hyperelliptic curve w^2 = P(lambda) of a main spectrum and its periods.

Branch cuts are the vertical segments joining each conjugate pair of branch
points. On these cuts ``w`` has a closed-form single-valued branch (a product
of per-cut square roots), so sheet bookkeeping along a path reduces to
flipping the sign whenever a segment crosses a cut.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AtBranchPoint,
    BasisConstructionFailed,
    DegenerateSpectrum,
    DivergentWithoutRegularization,
    IllConditionedA,
    OverlappingCuts,
    PathThroughBranchPoint,
)
from .quadrature import QuadratureSpec, integrate

log = logging.getLogger(__name__)

EPS_BP_REL = 1e-9


@dataclass(frozen=True)
class MainSpectrum:
    """Upper-half-plane main spectrum points; conjugates are implied."""

    points: tuple

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.points)
        if not pts:
            raise DegenerateSpectrum("spectrum is empty")
        for p in pts:
            if not p.imag > 0:
                raise DegenerateSpectrum(f"point {p} is not in the upper half plane")
        diam = max(abs(p - q) for p in pts for q in pts) if len(pts) > 1 else abs(pts[0])
        for i, p in enumerate(pts):
            for q in pts[i + 1 :]:
                if abs(p - q) <= EPS_BP_REL * max(diam, 1.0):
                    raise DegenerateSpectrum(f"coincident points {p} and {q}")
        object.__setattr__(self, "points", pts)

    @property
    def genus(self):
        return len(self.points) - 1

    def scaled(self, c):
        return MainSpectrum(tuple(c * p for p in self.points))

    def to_json(self):
        return json.dumps({"points": [[p.real, p.imag] for p in self.points]})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else text
        return cls(tuple(complex(re, im) for re, im in data["points"]))


@dataclass(frozen=True)
class HyperellipticCurve:
    spectrum: MainSpectrum
    genus: int
    centers: np.ndarray  # real part of each cut, sorted ascending
    heights: np.ndarray  # Im of the upper branch point of each cut
    eps_bp: float

    @property
    def branch_points(self):
        up = self.centers + 1j * self.heights
        return np.concatenate([up, up.conj()])

    @property
    def branch_cuts(self):
        """Oriented segments (lower end, upper end), one per conjugate pair."""
        return [(complex(m, -h), complex(m, h)) for m, h in zip(self.centers, self.heights)]

    def polynomial(self):
        """Coefficients of P, highest degree first (real to rounding)."""
        return np.real_if_close(np.poly(self.branch_points), tol=1e6)

    @property
    def diameter(self):
        bp = self.branch_points
        return float(np.max(np.abs(bp[:, None] - bp[None, :])))


def build_curve(spectrum):
    pts = sorted(spectrum.points, key=lambda p: (p.real, p.imag))
    centers = np.array([p.real for p in pts])
    heights = np.array([p.imag for p in pts])
    bp = np.concatenate([centers + 1j * heights, centers - 1j * heights])
    diam = float(np.max(np.abs(bp[:, None] - bp[None, :])))
    eps_bp = EPS_BP_REL * diam
    # all default cuts cross the real axis, so cuts sharing a real part overlap
    gaps = np.diff(centers)
    if np.any(gaps <= eps_bp):
        i = int(np.argmin(gaps))
        raise OverlappingCuts(
            f"cuts at Re = {centers[i]:.6g} and {centers[i + 1]:.6g} intersect; "
            "default vertical cuts require distinct real parts"
        )
    return HyperellipticCurve(
        spectrum=MainSpectrum(tuple(pts)),
        genus=len(pts) - 1,
        centers=centers,
        heights=heights,
        eps_bp=eps_bp,
    )


def sqrt_P(curve, lam, sheet=1):
    """Branch of w = sqrt(P(lam)) on the given sheet.

    Each factor (lam - m)*sqrt(1 + h^2/(lam - m)^2) is analytic off the cut
    {m + i y : |y| <= h} and behaves like lam at infinity, so on sheet +1
    w/lam^(g+1) -> 1.
    """
    lam = np.asarray(lam, dtype=complex)
    d = lam[..., None] - curve.centers
    bp = curve.branch_points
    near = np.min(np.abs(lam[..., None] - bp), axis=-1)
    if np.any(near <= curve.eps_bp):
        raise AtBranchPoint("evaluation point within tolerance of a branch point")
    with np.errstate(divide="ignore", invalid="ignore"):
        fac = d * np.sqrt(1.0 + (curve.heights / d) ** 2)
    # lam exactly on a cut's center line at the real axis: d == 0
    zero = d == 0
    if np.any(zero):
        fac = np.where(zero, 1j * curve.heights * np.ones_like(d), fac)
    return sheet * np.prod(fac, axis=-1)


# ---------------------------------------------------------------- paths


@dataclass(frozen=True)
class Segment:
    """Parametric piece of a path, t in [0, 1], lying on one sheet.

    kinds: "line" (p0 -> p1), "arc" (ellipse center + rx cos + i ry sin,
    angles th0 -> th1), "ray" (lam = p0 + d (1 - t)/t, so t -> 0 is the
    point at infinity in direction ``d``). A ray is traversed from infinity
    to p0 unless ``outgoing`` is set.
    """

    kind: str
    sheet: int
    p0: complex = 0j
    p1: complex = 0j
    rx: float = 0.0
    ry: float = 0.0
    th0: float = 0.0
    th1: float = 0.0
    direction: complex = 1 + 0j
    outgoing: bool = False

    def point(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "line":
            return self.p0 + (self.p1 - self.p0) * t
        if self.kind == "arc":
            th = self.th0 + (self.th1 - self.th0) * t
            return self.p0 + self.rx * np.cos(th) + 1j * self.ry * np.sin(th)
        if self.kind == "ray":
            with np.errstate(divide="ignore"):
                return self.p0 + self.direction * (1.0 - t) / t
        raise ValueError(self.kind)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "line":
            return np.full(t.shape, self.p1 - self.p0, dtype=complex)
        if self.kind == "arc":
            th = self.th0 + (self.th1 - self.th0) * t
            return (self.th1 - self.th0) * (-self.rx * np.sin(th) + 1j * self.ry * np.cos(th))
        if self.kind == "ray":
            with np.errstate(divide="ignore"):
                return -self.direction / t**2
        raise ValueError(self.kind)

    @property
    def is_infinite(self):
        return self.kind == "ray"


@dataclass(frozen=True)
class CyclePath:
    segments: tuple

    @property
    def closed(self):
        first, last = self.segments[0], self.segments[-1]
        return abs(complex(first.point(0.0)) - complex(last.point(1.0))) < 1e-12 * (
            1 + abs(complex(first.point(0.0)))
        )

    def polyline(self, n_per_segment=400):
        """Sampled points and per-piece sheet labels for crossing tests."""
        zs, sheets = [], []
        for seg in self.segments:
            if seg.is_infinite:
                raise ValueError("cannot sample a path through infinity")
            t = np.linspace(0.0, 1.0, n_per_segment + 1)
            z = seg.point(t)
            zs.append(z[:-1] if zs else z[:-1])
            sheets.append(np.full(n_per_segment, seg.sheet))
        last = self.segments[-1].point(1.0)
        return np.concatenate(zs + [np.atleast_1d(last)]), np.concatenate(sheets)


@dataclass(frozen=True)
class HomologyBasis:
    a_cycles: tuple
    b_cycles: tuple
    reference_cut: int


def _cut_crossing_sheets(curve, segments):
    """Check that sheet labels flip exactly at cut crossings."""
    for prev, nxt in zip(segments, segments[1:] + segments[:1]):
        z = complex(prev.point(1.0))
        on_cut = np.any(
            (np.abs(z.real - curve.centers) < 1e-12 * (1 + abs(z)))
            & (np.abs(z.imag) < curve.heights)
        )
        flipped = prev.sheet != nxt.sheet
        if on_cut != flipped:
            raise BasisConstructionFailed(f"inconsistent sheet labels at {z}")


def _gap_geometry(curve):
    m = curve.centers
    g = curve.genus
    gaps = np.diff(m)
    dmin = float(np.min(gaps)) if g > 0 else 1.0
    margin = 0.25 * dmin
    return m, gaps, dmin, margin


def _a_cycle(curve, j, margin):
    m, h = curve.centers[j], curve.heights[j]
    rx = margin
    ry = h + margin
    return CyclePath(
        (Segment("arc", 1, p0=complex(m, 0.0), rx=rx, ry=ry, th0=0.0, th1=2 * np.pi),)
    )


def _b_cycle(curve, j, margin):
    """Loop crossing the reference cut 0 and cut j once each, on sheets +/-.

    It runs along height ``c`` through both cuts, dips below every cut in
    between and returns above everything; loops with larger j enclose the
    ones with smaller j, so different b-cycles never meet. Traversed
    clockwise so that a_j . b_j = +1.
    """
    m, h = curve.centers, curve.heights
    g = curve.genus
    hmax = float(np.max(h))
    frac = j / (g + 1)
    c = -0.5 * frac * float(min(h[0], np.min(h[1:]))) if g else 0.0
    left = m[0] - margin * (2.0 + frac)
    right = m[j] + 1.5 * margin
    top = hmax + margin * (2.0 + frac)
    deep = -(hmax + margin * (2.0 + frac))
    # counter-clockwise vertex list with sheets, reversed at the end
    verts = [complex(left, c), complex(m[0], c)]
    sheets = [1, -1]
    if j > 1:
        # outer loops dip further left so nested loops never share an edge
        mid_lo = 0.5 * (m[0] + m[1]) - 0.2 * frac * (m[1] - m[0])
        mid_hi = 0.5 * (m[j - 1] + m[j])
        verts += [complex(mid_lo, c), complex(mid_lo, deep), complex(mid_hi, deep), complex(mid_hi, c)]
        sheets += [-1, -1, -1, -1]
    verts += [complex(m[j], c)]
    sheets += [1]
    verts += [complex(right, c), complex(right, top), complex(left, top)]
    sheets += [1, 1, 1]
    segs = []
    n = len(verts)
    for i in range(n):
        segs.append(Segment("line", sheets[i], p0=verts[i], p1=verts[(i + 1) % n]))
    # clockwise: reverse order and endpoints, keep each segment's sheet
    segs = [Segment("line", s.sheet, p0=s.p1, p1=s.p0) for s in reversed(segs)]
    # drop zero-length pieces produced by consecutive dips
    segs = [s for s in segs if abs(s.p1 - s.p0) > 0]
    return CyclePath(tuple(segs))


def canonical_homology_basis(curve):
    """a_j encircles cut j (j = 1..g); b_j joins the leftmost cut to cut j."""
    g = curve.genus
    if g == 0:
        return HomologyBasis((), (), 0)
    m, gaps, dmin, margin = _gap_geometry(curve)
    if dmin <= 10 * curve.eps_bp:
        raise BasisConstructionFailed("cuts too close for default contours")
    a = tuple(_a_cycle(curve, j, margin) for j in range(1, g + 1))
    b = tuple(_b_cycle(curve, j, margin) for j in range(1, g + 1))
    for cyc in b:
        _cut_crossing_sheets(curve, list(cyc.segments))
    basis = HomologyBasis(a, b, 0)
    M = intersection_matrix(basis)
    J = np.block([[np.zeros((g, g), int), np.eye(g, dtype=int)], [-np.eye(g, dtype=int), np.zeros((g, g), int)]])
    if not np.array_equal(M, J):
        raise BasisConstructionFailed(f"intersection matrix\n{M}\nis not canonical")
    return basis


def intersection_number(c1, c2, n_per_segment=400):
    """Signed count of same-sheet crossings of two closed cycles.

    A crossing counts +1 when the tangent of ``c2`` points to the left of
    the tangent of ``c1`` (positively oriented pair), -1 otherwise.
    """
    z1, s1 = c1.polyline(n_per_segment)
    z2, s2 = c2.polyline(n_per_segment)
    p, r = z1[:-1], np.diff(z1)
    q, s = z2[:-1], np.diff(z2)

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    rxs = cross(r[:, None], s[None, :])
    qp = q[None, :] - p[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross(qp, s[None, :]) / rxs
        u = cross(qp, r[:, None]) / rxs
    hit = (rxs != 0) & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
    same = s1[:, None] == s2[None, :]
    return int(np.sum(np.sign(rxs[hit & same])))


def intersection_matrix(basis):
    cycles = list(basis.a_cycles) + list(basis.b_cycles)
    n = len(cycles)
    M = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in range(i + 1, n):
            M[i, j] = intersection_number(cycles[i], cycles[j])
            M[j, i] = -M[i, j]
    return M


# ------------------------------------------------------------ integrals


@dataclass(frozen=True)
class DifferentialSpec:
    """Differentials sum_n coeffs[i, n] lam^n dlam / w, one per row.

    Rows whose numerator degree reaches g have poles at infinity; integrals
    to infinity then need ``regularize=True``, which subtracts the principal
    part (including the logarithmic term) and returns the finite part.
    """

    coeffs: np.ndarray
    regularize: bool = False

    @classmethod
    def holomorphic(cls, genus, normalization=None):
        C = np.eye(genus, dtype=complex)
        if normalization is not None:
            C = np.asarray(normalization, dtype=complex)
        return cls(C)

    @property
    def degree(self):
        nz = np.nonzero(np.any(self.coeffs != 0, axis=0))[0]
        return int(nz[-1]) if nz.size else 0


def _integrand(curve, seg, coeffs):
    powers = np.arange(coeffs.shape[1])

    def f(t):
        lam = seg.point(t)
        w = sqrt_P(curve, lam, seg.sheet)
        num = (lam[:, None] ** powers) @ coeffs.T
        return num / w[:, None] * seg.deriv(t)[:, None]

    return f


def _infinity_expansion(curve, n_terms):
    """Coefficients e_k with lam^(g+1)/w = sum_k e_k lam^-k on sheet +."""
    # P(lam)/lam^(2g+2) = prod (1 - b/lam) as a polynomial in u = 1/lam
    q = np.array([1.0 + 0j])
    for b in curve.branch_points:
        q = np.convolve(q, [1.0, -b])
    q = q[:n_terms]
    q = np.pad(q, (0, max(0, n_terms - q.size)))
    # (1 + x)^(-1/2) with x = q - 1, power series in u
    x = q.copy()
    x[0] = 0.0
    out = np.zeros(n_terms, dtype=complex)
    out[0] = 1.0
    term = np.zeros(n_terms, dtype=complex)
    term[0] = 1.0
    binom = 1.0
    for n in range(1, n_terms):
        binom *= (-0.5 - (n - 1)) / n
        term = np.convolve(term, x)[:n_terms]
        out += binom * term
    return out


def principal_part_at_infinity(curve, coeffs, sheet):
    """Laurent coefficients of each row at infinity, as {power: values}.

    Returns the terms lam^p with p >= -1 of coeffs(lam)/w(lam).
    """
    g = curve.genus
    deg = coeffs.shape[1] - 1
    n_terms = max(deg - g + 1, 0) + 1
    e = _infinity_expansion(curve, n_terms + 1)
    parts = {}
    # numerator lam^n / w = sheet * lam^(n - g - 1) * sum_k e_k lam^-k
    for n in range(deg + 1):
        for k in range(e.size):
            p = n - g - 1 - k
            if p < -1:
                break
            parts[p] = parts.get(p, 0) + sheet * coeffs[:, n] * e[k]
    return parts


def _antiderivative(parts, lam):
    val = 0
    for p, c in parts.items():
        if p == -1:
            val = val + c * np.log(lam)
        else:
            val = val + c * lam ** (p + 1) / (p + 1)
    return val


def abelian_integral(curve, path, differential, quad=QuadratureSpec()):
    """Integral of each row of ``differential`` along ``path``.

    Segments of kind "ray" start at the point at infinity on their sheet.
    Returns ``(values, error_estimates)``.
    """
    coeffs = np.atleast_2d(np.asarray(differential.coeffs, dtype=complex))
    g = curve.genus
    total = np.zeros(coeffs.shape[0], dtype=complex)
    err = np.zeros(coeffs.shape[0])
    bp = curve.branch_points
    for seg in path.segments:
        # coarse check that the segment avoids branch points
        zs = seg.point(np.linspace(1e-3 if seg.is_infinite else 0.0, 1.0, 2001))
        if np.min(np.abs(zs[:, None] - bp[None, :])) <= 1e3 * curve.eps_bp:
            raise PathThroughBranchPoint("path passes through a branch point")
        if not seg.is_infinite:
            v, e = integrate(_integrand(curve, seg, coeffs), 0.0, 1.0, quad)
            total += v
            err += e
            continue
        singular = coeffs.shape[1] - 1 >= g
        parts = principal_part_at_infinity(curve, coeffs, seg.sheet) if singular else {}
        parts = {p: c for p, c in parts.items() if np.any(c != 0)}
        if parts and not differential.regularize:
            raise DivergentWithoutRegularization(
                "differential has a pole at infinity; set regularize=True"
            )
        base = _integrand(curve, seg, coeffs)

        def f(t, base=base, seg=seg, parts=parts):
            out = base(t)
            if parts:
                lam = seg.point(t)
                sing = 0
                for p, c in parts.items():
                    sing = sing + (lam[:, None] ** p) * c[None, :]
                out = out - sing * seg.deriv(t)[:, None]
            return out

        v, e = integrate(f, 0.0, 1.0, quad)
        if parts:
            v = v + _antiderivative(parts, seg.p0)
        if seg.outgoing:
            v = -v
        total += v
        err += e
    return total, err


# --------------------------------------------------------------- periods


@dataclass(frozen=True)
class PeriodData:
    A: np.ndarray
    B: np.ndarray
    tau: np.ndarray
    A_inv: np.ndarray
    A_err: np.ndarray = field(default=None)
    B_err: np.ndarray = field(default=None)
    cond_A: float = float("nan")

    def to_json(self, debug=False):
        def enc(M):
            return [[[complex(z).real, complex(z).imag] for z in row] for row in M]

        out = {"A": enc(self.A), "B": enc(self.B), "tau": enc(self.tau), "cond_A": self.cond_A}
        if debug:
            out["A_err"] = np.asarray(self.A_err).tolist()
            out["B_err"] = np.asarray(self.B_err).tolist()
        return json.dumps(out)


def _cycle_periods(curve, cycle, quad):
    coeffs = np.eye(curve.genus, dtype=complex)
    return abelian_integral(curve, cycle, DifferentialSpec(coeffs), quad)


def period_matrices(curve, basis, quad=QuadratureSpec(), sym_tol=None):
    """A_{jk} = oint_{a_k} lam^(j-1) dlam / w, likewise B over b_k."""
    g = curve.genus
    if g == 0:
        z = np.zeros((0, 0), dtype=complex)
        return PeriodData(z, z, z, z, np.zeros((0, 0)), np.zeros((0, 0)), 1.0)
    A = np.zeros((g, g), dtype=complex)
    B = np.zeros((g, g), dtype=complex)
    Ae = np.zeros((g, g))
    Be = np.zeros((g, g))
    for k in range(g):
        A[:, k], Ae[:, k] = _cycle_periods(curve, basis.a_cycles[k], quad)
        B[:, k], Be[:, k] = _cycle_periods(curve, basis.b_cycles[k], quad)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > 1e12:
        raise IllConditionedA(f"cond(A) = {cond:.3e}")
    A_inv = np.linalg.inv(A)
    tau = A_inv @ B
    asym = float(np.max(np.abs(tau - tau.T)))
    tol = sym_tol if sym_tol is not None else max(1e3 * quad.rel_tol * float(np.max(np.abs(tau))), 1e-9)
    if asym > tol:
        raise IllConditionedA(f"tau not symmetric: |tau - tau^T| = {asym:.3e}")
    tau = 0.5 * (tau + tau.T)
    if np.min(np.linalg.eigvalsh(tau.imag)) <= 0:
        raise IllConditionedA("Im(tau) is not positive definite")
    return PeriodData(A, B, tau, A_inv, Ae, Be, cond)


def infinity_path(curve):
    """Path from infinity on sheet - to infinity on sheet +.

    Comes in from the left at height -h0/2 on sheet -, crosses the
    reference cut once, turns below its lower tip and leaves to the left on
    sheet +. It meets no a- or b-cycle of :func:`canonical_homology_basis`.
    """
    m, h = curve.centers, curve.heights
    if curve.genus > 0:
        _, _, dmin, margin = _gap_geometry(curve)
    else:
        margin = 0.25 * max(h[0], 1.0)
    y_in = -0.5 * h[0]
    x_turn = m[0] + 0.5 * margin
    y_out = -(h[0] + margin)
    x_far = m[0] - 3.0 * margin
    p_in = complex(x_far, y_in)
    p_out = complex(x_far, y_out)
    segs = (
        Segment("ray", -1, p0=p_in, direction=-1.0 + 0j),
        Segment("line", -1, p0=p_in, p1=complex(m[0], y_in)),
        Segment("line", 1, p0=complex(m[0], y_in), p1=complex(x_turn, y_in)),
        Segment("line", 1, p0=complex(x_turn, y_in), p1=complex(x_turn, y_out)),
        Segment("line", 1, p0=complex(x_turn, y_out), p1=p_out),
        Segment("ray", 1, p0=p_out, direction=-1.0 + 0j, outgoing=True),
    )
    return CyclePath(segs)



def transform_basis(periods, M):
    """Periods in the relabelled basis a' = M a, b' = M^-T b.

    ``M`` is any unimodular integer matrix; the pair of maps preserves all
    intersection numbers. Theta quotients are unchanged by the relabelling
    since theta(M^-T x | M^-T tau M^-1) = theta(x | tau).
    """
    M = np.asarray(M)
    if not np.issubdtype(M.dtype, np.integer) or round(abs(np.linalg.det(M))) != 1:
        raise ValueError("basis transform must be a unimodular integer matrix")
    Minv = np.rint(np.linalg.inv(M)).astype(int)
    A = periods.A @ M.T
    B = periods.B @ Minv
    A_inv = np.linalg.inv(A)
    tau = A_inv @ B
    tau = 0.5 * (tau + tau.T)
    Ae = np.abs(periods.A_err) @ np.abs(M.T) if periods.A_err is not None else None
    Be = np.abs(periods.B_err) @ np.abs(Minv) if periods.B_err is not None else None
    return PeriodData(A, B, tau, A_inv, Ae, Be, float(np.linalg.cond(A)))
