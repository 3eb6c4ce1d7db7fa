"""Fixed-energy two-point Kepler arcs via Levi-Civita regularization.

With z = w**2 and dt = sqrt(2/h) |z| dtau, fixed-energy Kepler motion
becomes the harmonic repulsor w'' = w with 1/2|w'|^2 - 1/2|w|^2 = h' = mu/(2h).
The boundary value problem then has the closed-form solution
w(tau) = (w0 sinh(T - tau) + w1 sinh(tau)) / sinh(T).

Points are complex numbers measured from the attracting center.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import AmbiguousBranch, ArcError
from .tables import cross, dot, to_complex


class ArcClass(enum.Enum):
    DIRECT = "direct"
    INDIRECT = "indirect"
    CCW = "ccw"
    CW = "cw"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def lc_setup(p0, p1, cls, h, mu):
    """Levi-Civita endpoints and regularized energy for a branch class.

    w0 is the principal square root of p0.  The sign of w1 = +-sqrt(p1) is
    chosen by the class: Direct makes <w0, w1> >= 0, Indirect makes it <= 0,
    CCW makes det(w0, w1) >= 0 (positive angular momentum) and CW the opposite.
    Returns (w0, w1, h') with h' = mu / (2h).
    """
    cls = ArcClass.parse(cls)
    p0 = to_complex(p0)
    p1 = to_complex(p1)
    if p0 == 0 or p1 == 0:
        raise ArcError("arc endpoint at the attracting center")
    if not (h > 0 and mu > 0):
        raise ArcError("h and mu must be positive")
    w0 = np.sqrt(complex(p0))
    w1 = np.sqrt(complex(p1))
    ip = dot(w0, w1)
    if cls is ArcClass.DIRECT:
        if ip == 0:
            raise AmbiguousBranch("direct arc between antipodal points is ambiguous")
        sign = 1.0 if ip > 0 else -1.0
    elif cls is ArcClass.INDIRECT:
        sign = 1.0 if ip <= 0 else -1.0
    else:
        det = cross(w0, w1)
        if det == 0:
            # collinear endpoints on the same ray: fall back on det(p0, p1) >= 0 -> +
            det = 1.0
        sign = 1.0 if det > 0 else -1.0
        if cls is ArcClass.CW:
            sign = -sign
    return w0, sign * w1, mu / (2.0 * h)


def lc_time(w0, w1, hreg, return_flag=False):
    """Regularized transit time T with 2 cosh T = X.

    X = -<w0,w1>/h' + sqrt(2(|w0|^2+|w1|^2)/h' + (<w0,w1>/h')^2 + 4).
    X - 2 is evaluated without cancellation so that short arcs keep full
    relative accuracy.  With ``return_flag`` a boolean is also returned that is
    True when X fell below 2 - 1e-9 and had to be clamped.
    """
    if hreg <= 0:
        raise ArcError("regularized energy must be positive")
    q = dot(w0, w1) / hreg
    s = 2.0 * (abs(w0) ** 2 + abs(w1) ** 2) / hreg
    root = np.sqrt(q * q + s + 4.0)
    if q >= 0:
        xm2 = 2.0 * abs(w0 - w1) ** 2 / hreg / (root + q + 2.0)
    else:
        xm2 = root - q - 2.0
    flag = bool(xm2 < -1e-9)
    xm2 = max(xm2, 0.0)
    T = 2.0 * np.arcsinh(0.5 * np.sqrt(xm2))
    return (T, flag) if return_flag else T


def lc_coefficients(w0, w1, T):
    """A, B with w(tau) = A e^tau + B e^-tau."""
    if T <= 0:
        raise ArcError("coincident endpoints: zero transit time")
    em = np.exp(-T)
    den = -np.expm1(-2.0 * T)  # 1 - e^{-2T}
    At = (w1 - w0 * em) / den   # A e^T
    B = (w0 - w1 * em) / den
    return At * em, B


def lc_path(w0, w1, T, tau):
    """w(tau) and w'(tau) on the regularized solution joining w0 to w1."""
    if T <= 0:
        raise ArcError("coincident endpoints: zero transit time")
    tau = np.asarray(tau, dtype=float)
    sh = np.sinh(T)
    w = (w0 * np.sinh(T - tau) + w1 * np.sinh(tau)) / sh
    wp = (-w0 * np.cosh(T - tau) + w1 * np.cosh(tau)) / sh
    return w, wp


def lc_end_velocity(w0, w1, T):
    """Closed form w'(T) = coth(T) w1 - w0 / sinh(T)."""
    return (np.cosh(T) * w1 - w0) / np.sinh(T)


@dataclass(frozen=True)
class KeplerArc:
    """One branch of the fixed-energy two-point Kepler problem."""

    p0: complex
    p1: complex
    h: float
    mu: float
    cls: ArcClass
    w0: complex
    w1: complex
    hreg: float
    T: float
    v0: complex
    v1: complex
    r_min: float
    clamped: bool = False

    def path(self, tau):
        return lc_path(self.w0, self.w1, self.T, tau)

    def z(self, tau):
        return self.path(tau)[0] ** 2

    def velocity(self, tau):
        """Physical velocity sqrt(2h) w w' / |w|^2 along the arc."""
        w, wp = self.path(tau)
        return np.sqrt(2.0 * self.h) * w * wp / np.abs(w) ** 2

    def time(self, tau=None):
        """Physical time elapsed from p0 (at the end point by default)."""
        tau = self.T if tau is None else tau
        return np.sqrt(2.0 / self.h) * _int_w2(self.w0, self.w1, self.T, self.hreg, tau)

    @property
    def L(self) -> float:
        return jacobi_length_closed(self)


def _int_w2(w0, w1, T, hreg, tau):
    """int_0^tau |w|^2 dtau using |w|^2 = |A|^2 e^2s + |B|^2 e^-2s - h'."""
    A, B = lc_coefficients(w0, w1, T)
    ab = 2.0 * (A * np.conj(B)).real
    return (abs(A) ** 2 * np.expm1(2 * tau) - abs(B) ** 2 * np.expm1(-2 * tau)) / 2 + ab * tau


def _r_min(w0, w1, T):
    A, B = lc_coefficients(w0, w1, T)
    cand = [0.0, T]
    if abs(A) > 0 and abs(B) > 0:
        ts = 0.25 * np.log(abs(B) ** 2 / abs(A) ** 2)
        if 0.0 < ts < T:
            cand.append(ts)
    w, _ = lc_path(w0, w1, T, np.array(cand))
    return float((np.abs(w) ** 2).min())


def solve_arc(p0, p1, cls, h, mu) -> KeplerArc:
    """Solve the fixed-energy Kepler boundary value problem on one branch."""
    cls = ArcClass.parse(cls)
    p0 = to_complex(p0)
    p1 = to_complex(p1)
    w0, w1, hreg = lc_setup(p0, p1, cls, h, mu)
    T, flag = lc_time(w0, w1, hreg, return_flag=True)
    if T <= 0:
        raise ArcError("coincident endpoints: zero transit time")
    wp0 = (w1 - np.cosh(T) * w0) / np.sinh(T)
    wp1 = lc_end_velocity(w0, w1, T)
    s2h = np.sqrt(2.0 * h)
    v0 = s2h * w0 * wp0 / abs(w0) ** 2
    v1 = s2h * w1 * wp1 / abs(w1) ** 2
    return KeplerArc(p0, p1, float(h), float(mu), cls, w0, w1, hreg, float(T),
                     complex(v0), complex(v1), _r_min(w0, w1, T), flag)


def jacobi_length_closed(arc: KeplerArc) -> float:
    """Closed-form Jacobi length 2 sqrt(h) int_0^T (|w|^2 + 2h') dtau."""
    T = arc.T
    em = np.exp(-T)
    den = -np.expm1(-2.0 * T)
    At = (arc.w1 - arc.w0 * em) / den
    B = (arc.w0 - arc.w1 * em) / den
    # 2 Re(A conj B) = -h' on solutions of the regularized problem
    inner = (abs(At) ** 2 + abs(B) ** 2) * den / 2.0 + arc.hreg * T
    return float(2.0 * np.sqrt(arc.h) * inner)


def jacobi_length(arc: KeplerArc, epsabs=1e-12, epsrel=1e-13) -> float:
    """Jacobi length int sqrt(2) (h + mu/|z|) dt by adaptive quadrature.

    In regularized time the integrand is 2 sqrt(h) (|w|^2 + 2h'), which stays
    smooth through near-collision passages.
    """
    def f(tau):
        w, _ = arc.path(tau)
        return abs(w) ** 2 + 2.0 * arc.hreg

    val, err = integrate.quad(f, 0.0, arc.T, epsabs=epsabs, epsrel=epsrel, limit=200)
    if not np.isfinite(val) or err > max(epsabs, epsrel * abs(val)) * 100:
        raise ArcError(f"quadrature did not converge (error estimate {err:.2e})")
    return float(2.0 * np.sqrt(arc.h) * val)


def length_gradient(arc: KeplerArc):
    """Gradients of the Jacobi length with respect to p0 and p1 (complex-encoded).

    grad_p0 L = -sqrt(h + mu/|p0|) unit(v0), grad_p1 L = sqrt(h + mu/|p1|) unit(v1).
    """
    g0 = -np.sqrt(arc.h + arc.mu / abs(arc.p0)) * arc.v0 / abs(arc.v0)
    g1 = np.sqrt(arc.h + arc.mu / abs(arc.p1)) * arc.v1 / abs(arc.v1)
    return complex(g0), complex(g1)


def length_gradient_lc(arc: KeplerArc) -> complex:
    """End gradient in Levi-Civita form sqrt(h) w1 w'(T) / |w1|^2."""
    return complex(np.sqrt(arc.h) * arc.w1 * lc_end_velocity(arc.w0, arc.w1, arc.T) / abs(arc.w1) ** 2)


def f_direct(p0, p1):
    """Leading term of the direct length: |p1 - p0|."""
    return abs(to_complex(p1) - to_complex(p0))


def f_indirect(p0, p1):
    """Leading term of the indirect length: |p0| + |p1|."""
    return abs(to_complex(p0)) + abs(to_complex(p1))


def f_ccw(p0, p1):
    """Leading term of the CCW length: |p1 - p0| if det(p0, p1) >= 0 else |p0| + |p1|."""
    p0 = to_complex(p0)
    p1 = to_complex(p1)
    return f_direct(p0, p1) if cross(p0, p1) >= 0 else f_indirect(p0, p1)


def f_ccw_grad(p0, p1):
    """Gradients of f_ccw in p0 and p1 (complex-encoded)."""
    p0 = to_complex(p0)
    p1 = to_complex(p1)
    if cross(p0, p1) >= 0:
        u = (p1 - p0) / abs(p1 - p0)
        return -u, u
    return p0 / abs(p0), p1 / abs(p1)


def generating_S(table, xi, eta, cls, h, mu, c=0j, arclength=False, delta=None):
    """Generating function S(xi, eta) and its partial derivatives.

    S is the Jacobi length of the arc of class ``cls`` from gamma(xi) to
    gamma(eta), measured from the center c.  Partials are with respect to the
    raw table parameter; with ``arclength=True`` they are per unit length.
    If ``delta`` is given, endpoint pairs outside the admissible set for the
    class raise `ArcError`.
    """
    c = to_complex(c)
    p0 = complex(table.position(xi)) - c
    p1 = complex(table.position(eta)) - c
    if delta is not None:
        check_admissible(p0, p1, cls, delta)
    arc = solve_arc(p0, p1, cls, h, mu)
    g0, g1 = length_gradient(arc)
    t0 = complex(table.velocity(xi))
    t1 = complex(table.velocity(eta))
    if arclength:
        t0 /= abs(t0)
        t1 /= abs(t1)
    return arc.L, float(dot(g0, t0)), float(dot(g1, t1))


def check_admissible(p0, p1, cls, delta):
    """Raise `ArcError` if (p0, p1) is outside the admissible set of the class."""
    cls = ArcClass.parse(cls)
    p0 = to_complex(p0)
    p1 = to_complex(p1)
    for p in (p0, p1):
        if not (delta <= abs(p) <= 1.0 / delta):
            raise ArcError(f"|p| = {abs(p):.4g} outside [{delta}, {1/delta}]")
    gap = abs(np.angle(p1 / p0))
    if cls in (ArcClass.DIRECT, ArcClass.INDIRECT):
        if gap > np.pi * (1.0 - delta):
            raise ArcError(f"argument gap {gap:.4g} too close to pi for {cls.value} arcs")
    elif gap < np.pi - delta:
        raise ArcError(f"argument gap {gap:.4g} not near pi for {cls.value} arcs")
