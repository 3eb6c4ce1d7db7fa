"""Classical billiard map on the phase cylinder and its two-periodic orbits.

A phase state is a boundary parameter u and the angle alpha in (0, pi)
between the outgoing direction and the positively oriented tangent.
"""

from dataclasses import dataclass

import numpy as np

from ._roots import bracketed_newton
from .errors import GrazingError
from .tables import TWO_PI, BoundaryTable, cross, dot, ray_exit, to_complex, unique_angles


@dataclass(frozen=True)
class PhaseState:
    """Point of the phase cylinder; fields may be scalars or equal-shape arrays."""

    u: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float) % TWO_PI
        a = np.asarray(self.alpha, dtype=float)
        if np.any((a <= 0) | (a >= np.pi)):
            raise ValueError("alpha must lie in (0, pi)")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "alpha", a)


def chord_exit(table: BoundaryTable, u0, direction, n_grid: int = 64):
    """Next boundary parameter hit by the chord leaving gamma(u0) along ``direction``.

    ``direction`` must point into the table.  Raises `GrazingError` when the
    chord is too short to be resolved (direction nearly tangent).
    """
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    d = np.atleast_1d(np.asarray(direction, dtype=complex))
    u0, d = np.broadcast_arrays(u0, d)
    shape = u0.shape
    u0 = u0.ravel()
    d = d.ravel() / np.abs(d.ravel())
    p = table.position(u0)
    eps = 1e-9
    grid = np.linspace(eps, TWO_PI - eps, n_grid + 1)
    uu = u0[:, None] + grid[None, :]
    f = np.angle((table.position(uu) - p[:, None]) / d[:, None])
    neg = f[:, :-1] <= 0
    pos = f[:, 1:] > 0
    hit = neg & pos
    if not hit.any(axis=1).all():
        raise GrazingError("chord too close to tangent to resolve")
    k = hit.argmax(axis=1)
    rows = np.arange(len(u0))
    lo, hi = uu[rows, k], uu[rows, k + 1]

    def fdf(u):
        pos, vel = table.frame(u)
        q = pos - p
        return np.angle(q / d), cross(q, vel) / np.abs(q) ** 2

    u1 = bracketed_newton(fdf, lo, hi)
    gap = (u1 - u0) % TWO_PI
    if np.any(np.minimum(gap, TWO_PI - gap) < 1e-7):
        raise GrazingError("chord too close to tangent to resolve")
    return (u1 % TWO_PI).reshape(shape)


def reflect_direction(table, u, d):
    """Reflect direction d about the tangent line at gamma(u)."""
    t = table.tangent(u)
    return t * t * np.conj(d)


def bmap(table: BoundaryTable, s: PhaseState) -> PhaseState:
    """One bounce of the classical billiard map (vectorized over states)."""
    t0 = table.tangent(s.u)
    d = t0 * np.exp(1j * s.alpha)
    u1 = chord_exit(table, s.u, d)
    t1 = table.tangent(u1)
    alpha1 = -np.angle(d / t1)
    return PhaseState(u1.reshape(np.shape(s.u)), alpha1.reshape(np.shape(s.u)))


def bmap_arrays(table, u, alpha):
    s = bmap(table, PhaseState(u, alpha))
    return s.u, s.alpha


@dataclass(frozen=True)
class TwoPeriodicData:
    """Orthogonal chord through a scene center."""

    u1: float
    u2: float
    d: float
    k1: float
    k2: float
    d1: float
    d2: float
    orth_residual: float = 0.0
    degenerate: bool = False


def _distance_critical_points(table, c, n_grid=4096):
    """Parameters where u -> |gamma(u) - c| is stationary, with the derivative scale."""
    u = np.linspace(0.0, TWO_PI, n_grid + 1)
    q = table.position(u) - c
    g = dot(q, table.velocity(u))
    scale = np.abs(q).max() * np.abs(table.velocity(u)).max()
    idx = np.nonzero((g[:-1] == 0) | (g[:-1] * g[1:] < 0))[0]

    def fdf(v):
        qq = table.position(v) - c
        vel = table.velocity(v)
        return dot(qq, vel), np.abs(vel) ** 2 + dot(qq, table.acceleration(v))

    if len(idx) == 0:
        return np.array([]), g, scale
    roots = bracketed_newton(fdf, u[idx], u[idx + 1]) % TWO_PI
    return unique_angles(roots), g, scale


def orthogonal_chords_through(table: BoundaryTable, c, tol: float = 1e-8):
    """All chords through c that meet the boundary orthogonally at both ends.

    When the distance to c is constant (circle about its center) the two
    coordinate-axis representatives are returned with ``degenerate=True``.
    """
    c = to_complex(c)
    u = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
    r = np.abs(table.position(u) - c)
    if r.max() - r.min() < 1e-12 * r.mean():
        out = []
        for u1 in (0.0, np.pi / 2):
            u2 = float(ray_exit(table, c, c - complex(table.position(u1))))
            out.append(_chord_data(table, c, u1, u2, degenerate=True))
        return out
    crit, _, _ = _distance_critical_points(table, c)
    found = []
    for u1 in crit:
        p1 = complex(table.position(u1))
        u2 = float(ray_exit(table, c, c - p1))
        data = _chord_data(table, c, float(u1), u2)
        if data.orth_residual > tol:
            continue
        key = tuple(sorted((round(data.u1, 7), round(data.u2, 7))))
        if all(tuple(sorted((round(f.u1, 7), round(f.u2, 7)))) != key for f in found):
            found.append(data)
    return found


def _chord_data(table, c, u1, u2, degenerate=False):
    if u2 < u1:
        u1, u2 = u2, u1
    p1 = complex(table.position(u1))
    p2 = complex(table.position(u2))
    e = (p2 - p1) / abs(p2 - p1)
    res = max(abs(dot(e, complex(table.tangent(u1)))), abs(dot(e, complex(table.tangent(u2)))))
    return TwoPeriodicData(u1, u2, abs(p2 - p1), float(table.curvature(u1)), float(table.curvature(u2)),
                           abs(p1 - c), abs(p2 - c), float(res), degenerate)


def dT_two_periodic(data: TwoPeriodicData) -> np.ndarray:
    """Linearization of the billiard map at the first end of an orthogonal chord."""
    d, k1, k2 = data.d, data.k1, data.k2
    return np.array([[k1 * d - 1.0, d], [k1 * k2 * d - (k1 + k2), k2 * d - 1.0]])


def dT2_two_periodic(data: TwoPeriodicData):
    """DT at the second end times DT at the first end, its trace and discriminants.

    Returns ``(M, trace, discriminant, reduced)`` where ``discriminant`` is
    trace^2 - 4 = 16 d (dk1-1)(dk2-1)(dk1k2-k1-k2) and ``reduced`` is
    discriminant / 4.  The square is hyperbolic iff both are positive.
    """
    swapped = TwoPeriodicData(data.u2, data.u1, data.d, data.k2, data.k1, data.d2, data.d1)
    M = dT_two_periodic(swapped) @ dT_two_periodic(data)
    tr = float(np.trace(M))
    d, k1, k2 = data.d, data.k1, data.k2
    disc = 16.0 * d * (d * k1 - 1) * (d * k2 - 1) * (d * k1 * k2 - k1 - k2)
    return M, tr, disc, disc / 4.0


def phase_jacobian(table, u, alpha, step=1e-6, n=1):
    """Finite-difference Jacobian of bmap^n in (arclength, alpha) coordinates."""
    def F(s_, a_):
        uu, aa = u_from_s(table, s_), a_
        for _ in range(n):
            uu, aa = bmap_arrays(table, uu, aa)
        return uu, aa

    s0 = float(table.arclength(u))
    base_u, _ = F(s0, alpha)
    J = np.zeros((2, 2))
    for j, (ds, da) in enumerate(((step, 0.0), (0.0, step))):
        up, ap = F(s0 + ds, alpha + da)
        um, am = F(s0 - ds, alpha - da)
        sp = table.arclength(_lift(up, base_u))
        sm = table.arclength(_lift(um, base_u))
        J[0, j] = (sp - sm) / (2 * step)
        J[1, j] = (ap - am) / (2 * step)
    return J


def _lift(u, ref):
    return ref + ((u - ref + np.pi) % TWO_PI - np.pi)


def u_from_s(table, s):
    """Inverse of the arclength lift."""
    s = np.asarray(s, dtype=float)
    turns = np.floor(s / table.length)
    r = s - turns * table.length
    lo = np.zeros_like(r)
    hi = np.full_like(r, TWO_PI)

    def fdf(u):
        return table.arclength(u) - r, table.speed(u)

    return bracketed_newton(fdf, lo.ravel(), hi.ravel()).reshape(r.shape) + turns * TWO_PI


def delta_graphs(table: BoundaryTable, c):
    """The graphs delta_plus and delta_minus of the center c.

    delta_minus(u) aims at c; delta_plus(u) is the reflection of the ray from c.
    """
    c = to_complex(c)

    def cosang(u):
        q = table.position(u) - c
        return dot(q / np.abs(q), table.tangent(u))

    def plus(u):
        return PhaseState(u, np.arccos(cosang(u)))

    def minus(u):
        return PhaseState(u, np.arccos(-cosang(u)))

    return plus, minus


def iterate_portrait(table: BoundaryTable, seeds: PhaseState, n: int):
    """Iterate the billiard map n times from each seed.

    Returns ``(U, A)`` arrays of shape (n + 1, n_seeds); row 0 holds the seeds.
    """
    u = np.atleast_1d(seeds.u).astype(float)
    a = np.atleast_1d(seeds.alpha).astype(float)
    U = np.empty((n + 1, u.size))
    A = np.empty_like(U)
    U[0], A[0] = u, a
    for k in range(1, n + 1):
        u, a = bmap_arrays(table, u, a)
        U[k], A[k] = u, a
    return U, A
