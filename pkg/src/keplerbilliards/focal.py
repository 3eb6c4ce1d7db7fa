"""Perimeter functions of punctured triangles, focal tests and critical points.

All quantities are measured from the scene center c.  For boundary
parameters xi, eta the perimeter function is

    Psi(xi, eta) = |gamma(xi)| + |gamma(eta)| + |gamma(eta) - gamma(xi)|,

the perimeter of the triangle with one vertex at c.  Gradients are per unit
arclength unless stated otherwise.
"""

from dataclasses import dataclass, field

import numpy as np

from ._roots import bracketed_newton
from .birkhoff import chord_exit, orthogonal_chords_through
from .errors import GrazingError, KeplerBilliardError
from .tables import TWO_PI, cross, dot, to_complex, unique_angles


# ----------------------------------------------------------- perimeters ---

def _pts(table, c, xi, eta):
    c = to_complex(c)
    p = table.position(xi) - c
    q = table.position(eta) - c
    return p, q


def psi(table, c, xi, eta):
    """Perimeter of the triangle (c, gamma(xi), gamma(eta))."""
    p, q = _pts(table, c, xi, eta)
    if np.any(np.abs(q - p) == 0):
        raise ValueError("psi is undefined on the diagonal")
    return np.abs(p) + np.abs(q) + np.abs(q - p)


def grad_psi(table, c, xi, eta, arclength=True):
    """Gradient (d/dxi, d/deta) of psi; stacked along the last axis."""
    p, q = _pts(table, c, xi, eta)
    e = (q - p) / np.abs(q - p)
    t0 = table.velocity(xi)
    t1 = table.velocity(eta)
    if arclength:
        t0 = t0 / np.abs(t0)
        t1 = t1 / np.abs(t1)
    g0 = dot(p / np.abs(p) - e, t0)
    g1 = dot(q / np.abs(q) + e, t1)
    return np.stack([g0, g1], axis=-1)


def psi_star(table, c, xi, eta):
    """|gamma(xi)| + |gamma(eta)| and its arclength gradient."""
    p, q = _pts(table, c, xi, eta)
    g0 = dot(p / np.abs(p), table.tangent(xi))
    g1 = dot(q / np.abs(q), table.tangent(eta))
    return np.abs(p) + np.abs(q), np.stack([g0, g1], axis=-1)


def _branch(table, c, xi, eta, positive_is_psi):
    p, q = _pts(table, c, xi, eta)
    v = psi(table, c, xi, eta)
    g = grad_psi(table, c, xi, eta)
    vs, gs = psi_star(table, c, xi, eta)
    use = cross(p, q) >= 0
    if not positive_is_psi:
        use = ~use
    val = np.where(use, v, 2.0 * vs)
    grad = np.where(use[..., None], g, 2.0 * gs)
    return val, grad


def psi_a(table, c, xi, eta):
    """Psi where det(gamma(xi), gamma(eta)) >= 0, else 2 psi_star; value and gradient."""
    return _branch(table, c, xi, eta, True)


def psi_c(table, c, xi, eta):
    """2 psi_star where det(gamma(xi), gamma(eta)) >= 0, else Psi; value and gradient."""
    return _branch(table, c, xi, eta, False)


# ---------------------------------------------------- reflection and phi ---

def reflect_param(table, c, xi):
    """Parameter where the ray c -> gamma(xi), reflected at gamma(xi), hits next."""
    c = to_complex(c)
    xi = np.asarray(xi, dtype=float)
    q = table.position(xi) - c
    q = q / np.abs(q)
    t = table.tangent(xi)
    if np.any(np.abs(cross(t, q)) < 1e-9):
        raise GrazingError("reflected ray is tangent to the boundary")
    d = t * t * np.conj(q)
    return chord_exit(table, xi, d).reshape(xi.shape)


def phi(table, c, xi):
    """Psi(xi, xi') with xi' the reflection parameter."""
    return psi(table, c, xi, reflect_param(table, c, xi))


@dataclass(frozen=True)
class FocalVerdict:
    focal: bool
    status: str          # "focal", "inconclusive" or "not focal"
    variation: float
    mean: float
    max_deviation: float


def focal_test(table, c, tol=1e-6, n=1024, inconclusive=1e-3) -> FocalVerdict:
    """Sample phi on n points; focal iff variation < tol * mean."""
    xi = np.linspace(0.0, TWO_PI, n, endpoint=False)
    v = phi(table, c, xi)
    var = float(v.max() - v.min())
    mean = float(v.mean())
    rel = var / mean
    status = "focal" if rel < tol else ("inconclusive" if rel < inconclusive else "not focal")
    return FocalVerdict(status == "focal", status, var, mean, float(np.abs(v - mean).max()))


def is_focal(table, c, tol=1e-6, n=1024):
    """(focal, variation) with variation = max - min of phi over n samples."""
    r = focal_test(table, c, tol, n)
    return r.focal, r.variation


# --------------------------------------------------- kind classification ---

@dataclass(frozen=True)
class DistanceCritical:
    u: float
    r: float
    kind: str   # "min", "max" or "inflection"


@dataclass(frozen=True)
class KindReport:
    critical: list
    antipodal: np.ndarray
    kind: str                  # under the reading that counts mixed min/max pairs
    kind_same_type: str        # counting only min-min and max-max pairs
    readings_agree: bool
    focal: bool
    phi_variation: float
    degenerate: bool = False

    @property
    def extrema(self):
        return [p for p in self.critical if p.kind != "inflection"]


def classify_kind(table, c, n_grid=4096) -> KindReport:
    """Classify c as a point of the first or second kind.

    Critical points of u -> |gamma(u) - c| are found on a grid and polished by
    Newton.  c is of the first kind when some pair of strict extrema is not
    antipodal as seen from c.  Definitions differ on whether mixed min/max
    pairs count; both verdicts are reported.
    """
    c = to_complex(c)
    u = np.linspace(0.0, TWO_PI, n_grid + 1)
    q = table.position(u) - c
    r = np.abs(q)
    fv = focal_test(table, c)
    if r.max() - r.min() < 1e-12 * r.mean():
        return KindReport([], np.zeros((0, 0), bool), "second", "second", True,
                          fv.focal, fv.variation, degenerate=True)
    g = dot(q, table.velocity(u))
    idx = np.nonzero((g[:-1] == 0) | (g[:-1] * g[1:] < 0))[0]

    def fdf(v):
        qq = table.position(v) - c
        vel = table.velocity(v)
        return dot(qq, vel), np.abs(vel) ** 2 + dot(qq, table.acceleration(v))

    crit = []
    if len(idx):
        roots = bracketed_newton(fdf, u[idx], u[idx + 1]) % TWO_PI
        scale = (np.abs(table.velocity(u)) ** 2).max()
        for x in unique_angles(roots):
            second = fdf(np.array([x]))[1][0]
            if abs(second) < 1e-8 * scale:
                kind = "inflection"
            else:
                kind = "min" if second > 0 else "max"
            crit.append(DistanceCritical(float(x), float(abs(table.position(x) - c)), kind))
    dirs = np.array([complex(table.position(p.u) - c) for p in crit])
    dirs = dirs / np.abs(dirs) if len(dirs) else dirs
    anti = (np.abs(cross(dirs[:, None], dirs[None, :])) < 1e-8) & (dot(dirs[:, None], dirs[None, :]) < 0)

    first_mixed = first_same = False
    for i, a in enumerate(crit):
        for j in range(i + 1, len(crit)):
            b = crit[j]
            if a.kind == "inflection" or b.kind == "inflection" or anti[i, j]:
                continue
            first_mixed = True
            if a.kind == b.kind:
                first_same = True
    k1 = "first" if first_mixed else "second"
    k2 = "first" if first_same else "second"
    return KindReport(crit, anti, k1, k2, k1 == k2, fv.focal, fv.variation)


# ----------------------------------------------------- winding indices ---

def winding_index(field, center, radius, exclude=(), n=720, attempts=3):
    """Winding number of a planar vector field around a circle.

    ``field`` maps an array of complex points to complex-encoded vectors.
    The radius is shrunk until no point of ``exclude`` is enclosed and the
    field stays away from zero on the circle.
    """
    center = complex(center)
    for p in exclude:
        dist = abs(complex(p) - center)
        if 0 < dist <= radius:
            radius = 0.5 * dist
    for _ in range(attempts + 1):
        z = center + radius * np.exp(1j * np.linspace(0.0, TWO_PI, n + 1))
        f = np.asarray(field(z), dtype=complex)
        if np.abs(f).min() > 1e-10:
            ang = np.diff(np.unwrap(np.angle(f)))
            if np.abs(ang).max() < np.pi / 4:
                return int(np.rint(ang.sum() / TWO_PI))
            n *= 4
            continue
        radius *= 0.5
    raise KeplerBilliardError("field vanishes on the winding circle")


def _torus_field(fn, table, c):
    def field(z):
        g = fn(table, c, z.real, z.imag)
        return g[..., 0] + 1j * g[..., 1]
    return field


def psi_field(table, c):
    return _torus_field(grad_psi, table, c)


def psi_star_field(table, c):
    return _torus_field(lambda t, cc, x, y: psi_star(t, cc, x, y)[1], table, c)


def psi_a_field(table, c):
    return _torus_field(lambda t, cc, x, y: psi_a(t, cc, x, y)[1], table, c)


def psi_c_field(table, c):
    return _torus_field(lambda t, cc, x, y: psi_c(t, cc, x, y)[1], table, c)


def index_additivity(table, c, xi, eta, radius=0.05):
    """Indices of Psi, psi_star, psi_a, psi_c at (xi, eta) and the additivity residual."""
    z = complex(xi, eta)
    ind = {name: winding_index(f(table, c), z, radius) for name, f in
           (("psi", psi_field), ("psi_star", psi_star_field), ("psi_a", psi_a_field), ("psi_c", psi_c_field))}
    ind["residual"] = ind["psi"] + ind["psi_star"] - ind["psi_a"] - ind["psi_c"]
    return ind


# --------------------------------------------------- critical points of Psi ---

@dataclass(frozen=True)
class CriticalPoint:
    xi: float
    eta: float
    grad_norm: float
    index: int
    zero_area: bool
    level: float
    kind: str       # "max", "min", "negative", "degenerate", "zero"


@dataclass
class PsiCriticalSet:
    points: list = field(default_factory=list)
    focal_continuum: bool = False
    unresolved: list = field(default_factory=list)
    level: float = float("nan")

    @property
    def index_sum(self):
        return sum(p.index for p in self.points)


def _circ(a):
    return (a + np.pi) % TWO_PI - np.pi


def _newton_psi(table, c, x, y, maxiter=40, cell=0.05):
    """Vectorized Newton on grad psi = 0 with finite-difference Hessian."""
    hstep = 1e-6
    conv = np.zeros(x.shape, bool)
    for _ in range(maxiter):
        g = grad_psi(table, c, x, y)
        gx = (grad_psi(table, c, x + hstep, y) - grad_psi(table, c, x - hstep, y)) / (2 * hstep)
        gy = (grad_psi(table, c, x, y + hstep) - grad_psi(table, c, x, y - hstep)) / (2 * hstep)
        H = np.stack([gx, gy], axis=-1)      # H[..., i, j] = d g_i / d x_j
        det = H[..., 0, 0] * H[..., 1, 1] - H[..., 0, 1] * H[..., 1, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            dx = -(H[..., 1, 1] * g[..., 0] - H[..., 0, 1] * g[..., 1]) / det
            dy = -(-H[..., 1, 0] * g[..., 0] + H[..., 0, 0] * g[..., 1]) / det
        bad = ~np.isfinite(dx) | ~np.isfinite(dy)
        dx = np.where(bad, 0.0, dx)
        dy = np.where(bad, 0.0, dy)
        n = np.hypot(dx, dy)
        lim = np.where(n > cell, cell / np.maximum(n, 1e-300), 1.0)
        x = x + dx * lim
        y = y + dy * lim
        conv = np.linalg.norm(grad_psi(table, c, x, y), axis=-1) < 1e-11
        if conv.all():
            break
    return x % TWO_PI, y % TWO_PI, conv


def _hessian_fd(table, c, xi, eta, hstep=1e-5):
    gx = (grad_psi(table, c, xi + hstep, eta) - grad_psi(table, c, xi - hstep, eta)) / (2 * hstep)
    gy = (grad_psi(table, c, xi, eta + hstep) - grad_psi(table, c, xi, eta - hstep)) / (2 * hstep)
    return np.stack([gx, gy], axis=-1)


def psi_hessian(table, c, xi, eta, hstep=1e-5):
    """Arclength Hessian of Psi by central differences of the analytic gradient."""
    H = _hessian_fd(table, c, xi, eta, hstep)
    return H / np.array([float(table.speed(xi)), float(table.speed(eta))])[None, :]


def critical_points_psi(table, c, n_grid=128) -> PsiCriticalSet:
    """Critical points of Psi off the diagonal, deduplicated under (xi, eta) ~ (eta, xi).

    In the focal case the maximum level set is a continuum; a sample of it is
    returned with ``focal_continuum`` set.
    """
    c = to_complex(c)
    fv = focal_test(table, c)
    if fv.focal:
        xi = np.linspace(0.0, TWO_PI, 16, endpoint=False)
        eta = reflect_param(table, c, xi)
        lv = psi(table, c, xi, eta)
        pts = [CriticalPoint(float(a), float(b), float(np.linalg.norm(grad_psi(table, c, a, b))),
                             0, bool(abs(cross(table.position(a) - c, table.position(b) - c)) < 1e-8),
                             float(v), "degenerate") for a, b, v in zip(xi, eta, lv)]
        return PsiCriticalSet(pts, True, [], fv.mean)

    step = TWO_PI / n_grid
    g1 = np.arange(n_grid + 1) * step
    X, Y = np.meshgrid(g1, g1, indexing="ij")
    off = np.abs(_circ(X - Y)) > 2.5 * step
    with np.errstate(invalid="ignore", divide="ignore"):
        G = np.where(off[..., None], grad_psi(table, c, X, np.where(off, Y, Y + 1.0)), np.nan)

    def changes(comp):
        a = G[:-1, :-1, comp], G[1:, :-1, comp], G[:-1, 1:, comp], G[1:, 1:, comp]
        s = np.nan_to_num(np.stack(a), nan=0.0)
        return (s.min(axis=0) <= 0) & (s.max(axis=0) >= 0)

    valid = off[:-1, :-1] & off[1:, :-1] & off[:-1, 1:] & off[1:, 1:]
    cand = valid & changes(0) & changes(1)
    ci, cj = np.nonzero(cand)
    x0 = (ci + 0.5) * step
    y0 = (cj + 0.5) * step
    x, y, conv = _newton_psi(table, c, x0, y0, cell=step)
    unresolved = []
    if (~conv).any():
        # subdivide failing cells once
        sub = np.array([[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]])
        bx = (ci[~conv][:, None] + sub[None, :, 0]) * step
        by = (cj[~conv][:, None] + sub[None, :, 1]) * step
        x2, y2, conv2 = _newton_psi(table, c, bx.ravel(), by.ravel(), cell=step / 2)
        ok_cells = conv2.reshape(-1, 4).any(axis=1)
        unresolved = [(float(a), float(b)) for a, b in zip(x0[~conv][~ok_cells], y0[~conv][~ok_cells])]
        x = np.concatenate([x[conv], x2[conv2]])
        y = np.concatenate([y[conv], y2[conv2]])
    else:
        x, y = x[conv], y[conv]

    keep = np.abs(_circ(x - y)) > 1e-3
    x, y = x[keep], y[keep]
    found = []
    for a, b in zip(x, y):
        if any(_same_point(a, b, f) for f in found):
            continue
        found.append((float(a), float(b)))

    pts = []
    for a, b in found:
        others = []
        for f in found:
            for s in (0.0, TWO_PI, -TWO_PI):
                for t in (0.0, TWO_PI, -TWO_PI):
                    for fa, fb in ((f[0], f[1]), (f[1], f[0])):
                        z = complex(fa + s, fb + t)
                        if abs(z - complex(a, b)) > 1e-9:
                            others.append(z)
        index = winding_index(psi_field(table, c), complex(a, b), 0.5 * step, exclude=others)
        H = _hessian_fd(table, c, a, b)
        det = float(np.linalg.det(H))
        tr = float(np.trace(H))
        if abs(det) < 1e-8:
            kind = "degenerate"
        elif det > 0:
            kind = "max" if tr < 0 else "min"
        else:
            kind = "negative"
        p, q = _pts(table, c, a, b)
        zero_area = bool(abs(cross(p, q)) / (abs(p) * abs(q)) < 1e-8)
        pts.append(CriticalPoint(a, b, float(np.linalg.norm(grad_psi(table, c, a, b))), index,
                                 zero_area, float(psi(table, c, a, b)), kind))
    pts.sort(key=lambda p: -p.level)
    return PsiCriticalSet(pts, False, unresolved, pts[0].level if pts else float("nan"))


def _same_point(a, b, f, tol=1e-6):
    d1 = max(abs(_circ(a - f[0])), abs(_circ(b - f[1])))
    d2 = max(abs(_circ(a - f[1])), abs(_circ(b - f[0])))
    return min(d1, d2) < tol


# ------------------------------------------------ orthogonal chord algebra ---

def hess_det_chord(d1, d2, k1, k2):
    """Arclength Hessian of Psi at an orthogonal chord through c, and its determinant."""
    d = d1 + d2
    H = np.array([[1 / d + 1 / d1 - 2 * k1, 1 / d], [1 / d, 1 / d + 1 / d2 - 2 * k2]])
    det = (1 / d + 1 / d1 - 2 * k1) * (1 / d + 1 / d2 - 2 * k2) - 1 / d ** 2
    return H, float(det)


@dataclass(frozen=True)
class FocalPolynomial:
    coefficients: tuple       # (c0, c1, c2) of c0 + c1 t + c2 t^2
    roots: tuple              # real roots in (0, d)
    delta: float              # (dk2 - 1)(dk1k2 - k1 - k2)
    discriminant: float       # c1^2 - 4 c0 c2


def focal_polynomial(d, k1, k2) -> FocalPolynomial:
    """P(t) = 1 - 2 k1 t + (k1 + k2 - 2 d k1 k2)/(d (1 - d k2)) t^2.

    Its roots in (0, d) are the distances from the first chord end at which a
    center would make the Hessian of Psi singular.
    """
    if d * k2 == 1:
        raise ValueError("d k2 = 1: leading coefficient is singular")
    c2 = (k1 + k2 - 2 * d * k1 * k2) / (d * (1 - d * k2))
    coef = (1.0, -2.0 * k1, c2)
    disc = coef[1] ** 2 - 4 * coef[0] * coef[2]
    if c2 == 0:
        r = [-coef[0] / coef[1]]
    else:
        r = np.roots([c2, coef[1], coef[0]])
        r = [x.real for x in r if abs(x.imag) <= 1e-12 * max(1.0, abs(x))]
    roots = tuple(sorted(x for x in r if 0 < x < d))
    delta = (d * k2 - 1) * (d * k1 * k2 - k1 - k2)
    return FocalPolynomial(coef, roots, float(delta), float(disc))


def chord_report(table, c):
    """Orthogonal chords through c with Hessian determinant and focal polynomial."""
    out = []
    for ch in orthogonal_chords_through(table, c):
        _, det = hess_det_chord(ch.d1, ch.d2, ch.k1, ch.k2)
        try:
            P = focal_polynomial(ch.d, ch.k1, ch.k2)
        except ValueError:
            P = None
        out.append((ch, det, P))
    return out
