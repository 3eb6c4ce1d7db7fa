"""Strictly convex closed tables: ellipses, constant-width bodies and string tables.

Points in the plane are represented as complex numbers throughout.  Every
table is parametrized by an angle-like parameter ``u`` with period 2*pi and
positive orientation; the raw parameter is generally not unit speed.
"""

from dataclasses import dataclass, field
from typing import Callable, Mapping

import mpmath as mp
import numpy as np

from ._roots import bracketed_newton
from .errors import BracketingError, TableError

TWO_PI = 2.0 * np.pi
CONVEXITY_SAMPLES = 4096
CONVEXITY_TOL = 1e-10

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def to_complex(p):
    """Convert a point given as complex, (x, y) pair or array of pairs to complex."""
    if isinstance(p, (complex, np.complexfloating)):
        return complex(p)
    arr = np.asarray(p)
    if np.iscomplexobj(arr):
        return arr if arr.ndim else complex(arr)
    if arr.ndim == 0:
        return complex(float(arr))
    if arr.shape[-1] != 2:
        raise ValueError(f"expected (x, y) pairs, got shape {arr.shape}")
    z = arr[..., 0] + 1j * arr[..., 1]
    return complex(z) if z.ndim == 0 else z


def unique_angles(u, tol=1e-9):
    """Sorted angles in [0, 2pi) with near-duplicates (circularly) removed."""
    u = np.sort(np.asarray(u, dtype=float) % TWO_PI)
    out = []
    for x in u:
        if not out or x - out[-1] > tol:
            out.append(x)
    if len(out) > 1 and out[0] + TWO_PI - out[-1] <= tol:
        out.pop()
    return np.array(out)


def dot(a, b):
    """Euclidean inner product of complex-encoded vectors."""
    return (np.conj(a) * b).real


def cross(a, b):
    """det(a, b) for complex-encoded vectors."""
    return (np.conj(a) * b).imag


class BoundaryTable:
    """A closed, positively oriented, strictly convex curve with 2*pi period.

    Parameters
    ----------
    position, velocity, acceleration : callables
        Vectorized maps from parameter arrays to complex arrays.
    name : str
        Label used in reports.

    The constructor verifies closure and strict convexity (minimum curvature
    over 4096 samples above 1e-10) and raises `TableError` otherwise.
    """

    period = TWO_PI

    def __init__(self, position: Callable, velocity: Callable, acceleration: Callable,
                 name: str = "table", n_panels: int = 512, frame: Callable = None):
        self._pos = position
        self._vel = velocity
        self._acc = acceleration
        self._frame = frame
        self.name = name

        u = np.linspace(0.0, TWO_PI, CONVEXITY_SAMPLES, endpoint=False)
        kappa = self.curvature(u)
        if not np.all(np.isfinite(kappa)):
            raise TableError(f"{name}: curvature not finite on the sample grid")
        self.min_curvature = float(kappa.min())
        self.max_curvature = float(kappa.max())
        if self.min_curvature <= CONVEXITY_TOL:
            i = int(np.argmin(kappa))
            raise TableError(
                f"{name}: not strictly convex, min curvature {self.min_curvature:.3e} at u={u[i]:.6f}")
        p0, p1 = self.position(np.array([0.0, TWO_PI]))
        scale = np.abs(self.position(u)).max()
        if abs(p1 - p0) > 1e-12 * max(scale, 1.0):
            raise TableError(f"{name}: curve does not close (gap {abs(p1 - p0):.3e})")

        # cumulative arclength at panel edges, 16-point Gauss-Legendre per panel
        self._edges = np.linspace(0.0, TWO_PI, n_panels + 1)
        half = 0.5 * np.diff(self._edges)
        mid = 0.5 * (self._edges[1:] + self._edges[:-1])
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        seg = (np.abs(self.velocity(nodes)) * _GL_W).sum(axis=1) * half
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = float(self._cum[-1])

        pts = self.position(u)
        self.diameter = float(np.abs(pts[:, None] - pts[None, ::8]).max())

    # evaluators -----------------------------------------------------------
    def position(self, u):
        return self._pos(np.asarray(u, dtype=float))

    def velocity(self, u):
        return self._vel(np.asarray(u, dtype=float))

    def acceleration(self, u):
        return self._acc(np.asarray(u, dtype=float))

    def frame(self, u):
        """Position and velocity together (cheaper than two calls for some tables)."""
        u = np.asarray(u, dtype=float)
        if self._frame is not None:
            return self._frame(u)
        return self._pos(u), self._vel(u)

    def speed(self, u):
        return np.abs(self.velocity(u))

    def tangent(self, u):
        """Unit tangent in the direction of increasing parameter."""
        v = self.velocity(u)
        return v / np.abs(v)

    def inward_normal(self, u):
        return 1j * self.tangent(u)

    def curvature(self, u):
        v = self.velocity(u)
        a = self.acceleration(u)
        return cross(v, a) / np.abs(v) ** 3

    def xy(self, u):
        z = self.position(u)
        return np.stack([z.real, z.imag], axis=-1)

    def arclength(self, u):
        """Monotone lift of arclength, zero at u = 0."""
        u = np.asarray(u, dtype=float)
        turns = np.floor(u / TWO_PI)
        r = u - turns * TWO_PI
        k = np.clip(np.searchsorted(self._edges, r, side="right") - 1, 0, len(self._edges) - 2)
        a = self._edges[k]
        half = 0.5 * (r - a)
        nodes = (a + half)[..., None] + half[..., None] * _GL_X
        part = (np.abs(self.velocity(nodes)) * _GL_W).sum(axis=-1) * half
        return turns * self.length + self._cum[k] + part

    def contains(self, x):
        """True for points strictly inside the table."""
        x = np.asarray(x, dtype=complex)
        u = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
        p = self.position(u)
        t = self.velocity(u)
        side = cross(t[None, :], x.reshape(-1, 1) - p[None, :])
        return (side > 0).all(axis=1).reshape(x.shape)

    def __repr__(self):
        return f"BoundaryTable({self.name!r}, length={self.length:.6g})"


@dataclass(frozen=True)
class Scene:
    """A table with an attracting center c, strength mu and energy h."""

    table: BoundaryTable
    c: complex
    mu: float
    h: float

    def __post_init__(self):
        object.__setattr__(self, "c", to_complex(self.c))
        if not (self.mu > 0 and self.h > 0):
            raise ValueError("mu and h must be positive")
        if not self.table.contains(self.c):
            raise TableError(f"center {self.c} is not inside {self.table.name}")


# ---------------------------------------------------------------- ellipse ---

def make_ellipse(a: float, b: float) -> BoundaryTable:
    """Ellipse (a cos u, b sin u) with a >= b > 0."""
    if not (b > 0 and a > 0):
        raise TableError("ellipse axes must be positive")
    if a < b:
        raise TableError("ellipse requires a >= b")
    table = BoundaryTable(
        lambda u: a * np.cos(u) + 1j * b * np.sin(u),
        lambda u: -a * np.sin(u) + 1j * b * np.cos(u),
        lambda u: -a * np.cos(u) - 1j * b * np.sin(u),
        name=f"ellipse({a:g},{b:g})",
    )

    def mp_frame(u):
        am, bm = mp.mpf(a), mp.mpf(b)
        return (mp.mpc(am * mp.cos(u), bm * mp.sin(u)), mp.mpc(-am * mp.sin(u), bm * mp.cos(u)))

    table.mp_frame = mp_frame
    table.axes = (a, b)
    return table


# ---------------------------------------------------- constant-width body ---

@dataclass(frozen=True)
class WidthFourierSpec:
    """Fourier coefficients a_k of the radius of curvature rho(xi) = sum a_k e^{ik xi}.

    Only nonnegative indices need to be supplied; a_{-k} = conj(a_k) is filled in.
    """

    coefficients: Mapping[int, complex]
    full: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        full = {}
        for k, a in self.coefficients.items():
            full[int(k)] = complex(a)
        for k in list(full):
            if -k not in full:
                full[-k] = np.conj(full[k])
        for k, a in full.items():
            if abs(a - np.conj(full[-k])) > 1e-14 * (1 + abs(a)):
                raise TableError(f"coefficients not conjugate symmetric at k={k}")
        object.__setattr__(self, "full", {k: a for k, a in sorted(full.items()) if a != 0})
        a0 = full.get(0, 0.0)
        if abs(a0.imag) > 0 or a0.real <= 0:
            raise TableError("a0 must be real and positive")
        if full.get(1, 0) != 0:
            raise TableError("a1 must vanish, otherwise the curve does not close")
        for k, a in full.items():
            if k != 0 and k % 2 == 0 and a != 0:
                raise TableError(f"even coefficient a{k} must vanish for constant width")
        xi = np.linspace(0.0, TWO_PI, CONVEXITY_SAMPLES, endpoint=False)
        if self.rho(xi).min() <= 0:
            raise TableError("radius of curvature must stay positive")

    @property
    def a0(self) -> float:
        return self.full[0].real

    @property
    def width(self) -> float:
        return 2.0 * self.a0

    def _terms(self):
        ks = np.array(list(self.full), dtype=float)
        a = np.array(list(self.full.values()), dtype=complex)
        return ks, a

    def rho(self, xi, order=0):
        """Radius of curvature and its derivatives."""
        ks, a = self._terms()
        xi = np.asarray(xi, dtype=float)
        e = np.exp(1j * np.multiply.outer(xi, ks))
        return ((1j * ks) ** order * a * e).sum(axis=-1).real

    def mp_parts(self, xi):
        """T, T', rho at an mpmath parameter."""
        T = mp.mpc(0)
        dT = mp.mpc(0)
        rho = mp.mpc(0)
        for k, a in self.full.items():
            am = mp.mpc(a)
            e = mp.expj((k + 1) * xi)
            T += -1j * am / (k + 1) * e
            dT += am * e
            rho += am * mp.expj(k * xi)
        return T, dT, mp.re(rho)

    def curve(self, xi, order=0):
        """T(xi) and its derivatives, with T = -i sum a_k/(k+1) e^{i(k+1)xi}."""
        ks, a = self._terms()
        xi = np.asarray(xi, dtype=float)
        m = ks + 1.0
        e = np.exp(1j * np.multiply.outer(xi, m))
        coef = -1j * a / m * (1j * m) ** order
        return (coef * e).sum(axis=-1)


def make_width_table(spec: WidthFourierSpec):
    """Constant-width body T and its evolute caustic.

    Returns ``(table, caustic)`` where ``caustic(xi) = T(xi) + i rho(xi) e^{i xi}``.
    The body is placed so that its mean point over xi is the origin.
    """
    xi = np.linspace(0.0, TWO_PI, CONVEXITY_SAMPLES, endpoint=False)
    rmin = spec.rho(xi).min()
    if rmin <= 0:
        raise TableError(f"radius of curvature not positive (min {rmin:.3e})")
    table = BoundaryTable(
        lambda u: spec.curve(u, 0),
        lambda u: spec.curve(u, 1),
        lambda u: spec.curve(u, 2),
        name="width(" + ",".join(f"a{k}={v.real:g}" for k, v in spec.full.items() if k >= 0) + ")",
    )
    table.spec = spec
    table.mp_frame = lambda u: spec.mp_parts(u)[:2]

    def caustic(u):
        u = np.asarray(u, dtype=float)
        return spec.curve(u) + 1j * spec.rho(u) * np.exp(1j * u)

    return table, caustic


# ------------------------------------------------------------ string table ---

@dataclass(frozen=True)
class StringSpec:
    """Level set |x - c| + d(x, tau) = ell of a constant-width body tau."""

    width_spec: WidthFourierSpec
    c: complex
    ell: float

    def __post_init__(self):
        object.__setattr__(self, "c", to_complex(self.c))


def _string_parts(spec: StringSpec, xi):
    ws = spec.width_spec
    T = ws.curve(xi)
    rho = ws.rho(xi)
    drho = ws.rho(xi, 1)
    t = np.exp(1j * xi)
    n = -1j * t  # outward normal of the body
    q = T - spec.c
    qt = dot(q, t)
    qn = dot(q, n)
    ell = spec.ell
    N = 0.5 * (ell ** 2 - np.abs(q) ** 2)
    D = ell + qn
    N1 = -rho * qt
    N2 = -drho * qt - rho * (rho - qn)
    D1 = qt
    D2 = rho - qn
    s = N / D
    s1 = (N1 * D - N * D1) / D ** 2
    s2 = (N2 * D - N * D2) / D ** 2 - 2.0 * D1 * (N1 * D - N * D1) / D ** 3
    return T, t, n, rho, drho, D, s, s1, s2


def string_validity_margin(spec: StringSpec) -> float:
    """ell minus the smallest admissible ell (max of f over the body and c)."""
    ws = spec.width_spec
    xi = np.linspace(0.0, TWO_PI, CONVEXITY_SAMPLES, endpoint=False)
    body = WidthTableCache.get(ws)
    dist, _ = distance_to_body(spec.c, body)
    need = max(np.abs(ws.curve(xi) - spec.c).max(), dist)
    return spec.ell - need


class WidthTableCache:
    _cache: dict = {}

    @classmethod
    def get(cls, ws: WidthFourierSpec) -> BoundaryTable:
        key = tuple(ws.full.items())
        if key not in cls._cache:
            cls._cache[key] = make_width_table(ws)[0]
        return cls._cache[key]


def make_string_table(spec: StringSpec) -> BoundaryTable:
    """Table gamma(xi) = T(xi) - s(xi) i e^{i xi} on which |x - c| + d(x, tau) = ell.

    Raises `TableError` if c lies inside the body, ell is below the validity
    threshold, or the result is not strictly convex.  The table carries the
    attribute ``validity_margin``.
    """
    ws = spec.width_spec
    body = WidthTableCache.get(ws)
    dist, _ = distance_to_body(spec.c, body)
    if dist <= 0:
        raise TableError("string center must lie outside the width body")
    margin = string_validity_margin(spec)
    if margin < 0:
        raise TableError(f"string length {spec.ell:g} below validity threshold (margin {margin:.3e})")
    xi = np.linspace(0.0, TWO_PI, CONVEXITY_SAMPLES, endpoint=False)
    if _string_parts(spec, xi)[5].min() <= 0:
        raise TableError("string denominator vanishes; increase ell")

    def pos(u):
        T, t, n, *_, s, s1, s2 = _string_parts(spec, u)
        return T + s * n

    def vel(u):
        T, t, n, rho, drho, D, s, s1, s2 = _string_parts(spec, u)
        return (rho + s) * t + s1 * n

    def acc(u):
        T, t, n, rho, drho, D, s, s1, s2 = _string_parts(spec, u)
        return (drho + 2.0 * s1) * t + (s2 - rho - s) * n

    def frame(u):
        T, t, n, rho, drho, D, s, s1, s2 = _string_parts(spec, u)
        return T + s * n, (rho + s) * t + s1 * n

    table = BoundaryTable(pos, vel, acc, name=f"string(ell={spec.ell:g},c={spec.c})", frame=frame)
    def mp_frame(u):
        T, _, rho = ws.mp_parts(u)
        t = mp.expj(u)
        n = -1j * t
        q = T - mp.mpc(spec.c)
        qt = mp.re(mp.conj(q) * t)
        qn = mp.re(mp.conj(q) * n)
        ell = mp.mpf(spec.ell)
        N = (ell ** 2 - abs(q) ** 2) / 2
        D = ell + qn
        s_ = N / D
        s1 = (-rho * qt * D - N * qt) / D ** 2
        return T + s_ * n, (rho + s_) * t + s1 * n

    table.mp_frame = mp_frame
    table.spec = spec
    table.body = body
    table.validity_margin = margin
    return table


# ------------------------------------------------------ geometric queries ---

def distance_to_body(x, body: BoundaryTable, n_grid: int = 1024):
    """Distance from x to the closed curve ``body`` and the foot parameter.

    The distance is returned with a negative sign when x lies inside.  ``x``
    may be a scalar or an array of complex points.
    """
    x = np.asarray(to_complex(x), dtype=complex)
    shape = x.shape
    x = x.ravel()
    u = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
    d2 = np.abs(body.position(u)[None, :] - x[:, None]) ** 2
    i = np.argmin(d2, axis=1)
    h = TWO_PI / n_grid

    def stationarity(v, xs):
        q = xs - body.position(v)
        g = body.velocity(v)
        return dot(q, g), -np.abs(g) ** 2 + dot(q, body.acceleration(v))

    lo, hi = u[i] - h, u[i] + h
    glo, _ = stationarity(lo, x)
    ghi, _ = stationarity(hi, x)
    foot = u[i].copy()
    br = glo * ghi <= 0
    if br.any():
        xs = x[br]
        foot[br] = bracketed_newton(lambda v: stationarity(v, xs), lo[br], hi[br])
    foot %= TWO_PI
    q = x - body.position(foot)
    d = np.abs(q)
    outward = -1j * body.tangent(foot)
    d = np.where(dot(outward, q) < 0, -d, d)
    if not shape:
        return float(d[0]), float(foot[0])
    return d.reshape(shape), foot.reshape(shape)


def _angle_bracket(table, p, ref, n_grid=64):
    """Bracket the unique u with arg((gamma(u) - p)/ref) = 0 for interior p."""
    # periodic grid: gamma(0) and gamma(2 pi) may differ by rounding, so never compare the two
    u = np.linspace(0.0, TWO_PI, n_grid + 1)
    ang = np.angle((table.position(u[:-1])[None, :] - p[:, None]) / ref[:, None])
    a0, a1 = ang, np.roll(ang, -1, axis=1)
    hit = (a0 <= 0) & (a1 > 0) & (a1 - a0 < np.pi)
    ok = hit.any(axis=1)
    if not ok.all():
        raise BracketingError("ray exit could not be bracketed (point outside or table nonconvex)")
    k = hit.argmax(axis=1)
    return u[k], u[k + 1]


def ray_exit(table: BoundaryTable, p, direction):
    """Parameter u where the ray p + t*direction (t > 0) leaves the table.

    ``p`` must be strictly inside.  Accepts scalars or arrays of complex
    points/directions; the return has the broadcast shape.
    """
    p = np.asarray(to_complex(p), dtype=complex)
    d = np.asarray(to_complex(direction), dtype=complex)
    p, d = np.broadcast_arrays(p, d)
    shape = p.shape
    p = p.ravel()
    d = d.ravel() / np.abs(d.ravel())
    lo, hi = _angle_bracket(table, p, d)

    def fdf(u):
        pos, vel = table.frame(u)
        q = pos - p
        return np.angle(q / d), cross(q, vel) / np.abs(q) ** 2

    u = bracketed_newton(fdf, lo, hi) % TWO_PI
    q = table.position(u) - p
    if np.any(np.abs(cross(d, q)) > 1e-9 * table.diameter) or np.any(dot(d, q) <= 0):
        raise BracketingError("ray exit did not converge")
    return u.reshape(shape) if shape else float(u[0])


class PolarChart:
    """Polar description of a table around an interior point c.

    ``param(x)`` returns the boundary parameter on the ray from c through x and
    ``indicator(x) = |x - c| - |gamma(param(x)) - c|`` is negative inside.
    """

    def __init__(self, table: BoundaryTable, c, n: int = 4096):
        self.table = table
        self.c = to_complex(c)
        self._u = np.linspace(0.0, TWO_PI, n + 1)
        q = table.position(self._u) - self.c
        self._th = np.unwrap(np.angle(q))
        if not (np.all(np.diff(self._th) > 0) and abs(self._th[-1] - self._th[0] - TWO_PI) < 1e-9):
            raise BracketingError("center is not inside the table")
        self._r = np.abs(q)

    def _reduce(self, th):
        th0 = self._th[0]
        return th0 + np.mod(th - th0, TWO_PI)

    def param(self, x):
        x = np.asarray(x, dtype=complex)
        th = self._reduce(np.angle(x - self.c))
        k = np.clip(np.searchsorted(self._th, th, side="right") - 1, 0, len(self._u) - 2)
        lo, hi = self._u[k], self._u[k + 1]
        ref = np.exp(1j * th)

        def fdf(u):
            pos, vel = self.table.frame(u)
            q = pos - self.c
            return np.angle(q / ref), cross(q, vel) / np.abs(q) ** 2

        return bracketed_newton(fdf, lo.ravel(), hi.ravel()).reshape(np.shape(x)) % TWO_PI

    def boundary_radius_approx(self, x):
        """Cheap interpolated radius of the boundary in the direction of x."""
        th = self._reduce(np.angle(np.asarray(x) - self.c))
        return np.interp(th, self._th, self._r)

    def indicator(self, x, with_frame=False):
        """Signed radial indicator, the boundary parameter and optionally its frame."""
        u = self.param(x)
        pos, vel = self.table.frame(u)
        f = np.abs(np.asarray(x) - self.c) - np.abs(pos - self.c)
        return (f, u, pos, vel) if with_frame else (f, u)
