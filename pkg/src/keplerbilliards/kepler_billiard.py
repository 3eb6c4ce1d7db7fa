"""Kepler billiard first-return map.

Between impacts the particle follows a fixed-energy Kepler orbit around the
center c.  The flight is propagated in Levi-Civita variables, where it is the
linear flow w(tau) = w0 cosh(tau) + w0' sinh(tau) and passes analytically
through collisions.  Impacts are located with an inside indicator built from
the polar description of the table around c.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from ._roots import bracketed_newton
from .birkhoff import u_from_s
from .errors import GrazingError
from .tables import TWO_PI, PolarChart, Scene, cross, dot

GRAZING_SIN = 1e-6


@dataclass(frozen=True)
class BilliardState:
    """Boundary parameter u and inward velocity v (complex-encoded); may be arrays."""

    u: np.ndarray
    v: np.ndarray


@dataclass
class Flight:
    """Result of propagating a batch of states to their next impact."""

    u: np.ndarray          # impact parameter
    v: np.ndarray          # arrival velocity (outward)
    tau: np.ndarray        # regularized flight time
    min_r: np.ndarray      # closest approach to c along the flight
    ok: np.ndarray         # False where the impact could not be resolved
    grazing: np.ndarray    # True where the arrival is tangential


class KeplerBilliard:
    """Kepler billiard on a scene, with a cached polar chart of the table."""

    def __init__(self, scene: Scene, n_chart: int = 4096, step_fraction: float = 1 / 32,
                 max_dtau: float = 0.05):
        self.scene = scene
        self.table = scene.table
        self.c = scene.c
        self.h = scene.h
        self.mu = scene.mu
        self.chart = PolarChart(self.table, self.c, n_chart)
        th, r = self.chart._th, self.chart._r
        self._spline = CubicSpline(th, np.r_[r[:-1], r[0]], bc_type="periodic")
        self._th0 = th[0]
        self.ds = step_fraction * self.table.diameter
        self.max_dtau = max_dtau

    # ------------------------------------------------------------ states ---
    def speed(self, u):
        r = np.abs(self.table.position(u) - self.c)
        return np.sqrt(2.0 * (self.h + self.mu / r))

    def state_from_angle(self, u, alpha) -> BilliardState:
        """State leaving gamma(u) at angle alpha from the tangent with the scene energy."""
        u = np.asarray(u, dtype=float)
        v = self.speed(u) * self.table.tangent(u) * np.exp(1j * np.asarray(alpha, dtype=float))
        return BilliardState(u, v)

    def angle(self, s: BilliardState):
        return np.angle(s.v / self.table.tangent(s.u))

    def energy_residual(self, u, v):
        r = np.abs(self.table.position(u) - self.c)
        return np.abs(0.5 * np.abs(v) ** 2 - self.mu / r - self.h) / self.h

    def momentum_coords(self, s: BilliardState):
        """(arclength, tangential velocity / sqrt 2); the second is the arclength partial of S."""
        return self.table.arclength(s.u), dot(s.v, self.table.tangent(s.u)) / np.sqrt(2.0)

    def state_from_momentum(self, s_len, p) -> BilliardState:
        u = u_from_s(self.table, s_len)
        t = self.table.tangent(u)
        vt = np.sqrt(2.0) * np.asarray(p)
        vn = np.sqrt(self.speed(u) ** 2 - vt ** 2)
        return BilliardState(u, (vt + 1j * vn) * t)

    # ---------------------------------------------------------- indicator ---
    def _approx_indicator(self, z):
        th = self._th0 + np.mod(np.angle(z) - self._th0, TWO_PI)
        return np.abs(z) - self._spline(th)

    def _exact_indicator(self, z):
        f, u = self.chart.indicator(self.c + z)
        return f, u

    # ---------------------------------------------------------- propagate ---
    def propagate(self, s: BilliardState) -> Flight:
        """Fly each state to its next boundary impact."""
        u0 = np.atleast_1d(np.asarray(s.u, dtype=float))
        v0 = np.atleast_1d(np.asarray(s.v, dtype=complex))
        n = u0.size
        z0 = self.table.position(u0) - self.c
        w0 = np.sqrt(z0)
        wp0 = v0 * np.conj(w0) / np.sqrt(2.0 * self.h)

        def wz(tau, w0=w0, wp0=wp0):
            ch, sh = np.cosh(tau), np.sinh(tau)
            return w0 * ch + wp0 * sh, w0 * sh + wp0 * ch

        ok = np.ones(n, bool)
        grazing = np.zeros(n, bool)

        # first step: must land strictly inside
        w, wp = w0, wp0
        dtau = np.minimum(self.ds / (2 * np.abs(w) * np.abs(wp)), self.max_dtau)
        tau = dtau.copy()
        for _ in range(60):
            w, wp = wz(tau)
            f, _ = self._exact_indicator(w * w)
            bad = f >= 0
            if not bad.any():
                break
            tau = np.where(bad, 0.5 * tau, tau)
        else:
            grazing |= bad
            ok &= ~bad

        # march until the approximate indicator turns positive
        active = ok.copy()
        tau_lo = tau.copy()
        tau_hi = np.full(n, np.nan)
        for _ in range(100000):
            if not active.any():
                break
            w, wp = wz(tau_lo)
            step = np.minimum(self.ds / (2 * np.abs(w) * np.abs(wp)), self.max_dtau)
            t_new = tau_lo + step
            w, _ = wz(t_new)
            out = self._approx_indicator(w * w) > 0
            crossed = active & out
            tau_hi = np.where(crossed, t_new, tau_hi)
            tau_lo = np.where(active & ~out, t_new, tau_lo)
            active &= ~out

        # polish the crossing on the exact indicator
        idx = np.nonzero(ok)[0]
        tau_star = np.full(n, np.nan)
        if idx.size:
            w0i, wp0i = w0[idx], wp0[idx]

            def fdf(tau_):
                w_, wp_ = wz(tau_, w0i, wp0i)
                z = w_ * w_
                zd = 2.0 * w_ * wp_
                f, u, pos, g = self.chart.indicator(self.c + z, with_frame=True)
                q = pos - self.c
                dr_du = dot(q, g) / np.abs(q)
                dth_du = cross(q, g) / np.abs(q) ** 2
                dth_dt = cross(z, zd) / np.abs(z) ** 2
                return f, dot(z, zd) / np.abs(z) - dr_du / dth_du * dth_dt

            lo, hi = tau_lo[idx], tau_hi[idx]
            good = (fdf(lo)[0] < 0) & (fdf(hi)[0] >= 0)
            ok[idx[~good]] = False
            tau_star[idx] = bracketed_newton(fdf, lo, hi)

        w, wp = wz(np.where(ok, tau_star, 0.0))
        z = w * w
        f, u1 = self._exact_indicator(z)
        resid = np.abs(self.c + z - self.table.position(u1))
        ok &= resid < 1e-10 * self.table.diameter
        v1 = np.sqrt(2.0 * self.h) * w * wp / np.abs(w) ** 2
        sin_a = cross(self.table.tangent(u1), v1) / np.abs(v1)
        grazing |= ok & (np.abs(sin_a) < GRAZING_SIN)
        min_r = self._min_r(w0, wp0, np.where(ok, tau_star, 0.0))
        return Flight(u1, v1, tau_star, min_r, ok, grazing)

    @staticmethod
    def _min_r(w0, wp0, T):
        A = 0.5 * (w0 + wp0)
        B = 0.5 * (w0 - wp0)
        with np.errstate(divide="ignore"):
            ts = 0.25 * np.log(np.abs(B) ** 2 / np.abs(A) ** 2)
        ts = np.clip(np.nan_to_num(ts, nan=0.0, posinf=0.0, neginf=0.0), 0.0, T)
        best = np.minimum(np.abs(w0) ** 2, np.abs(w0 * np.cosh(T) + wp0 * np.sinh(T)) ** 2)
        return np.minimum(best, np.abs(w0 * np.cosh(ts) + wp0 * np.sinh(ts)) ** 2)

    # ---------------------------------------------------------------- map ---
    def kmap(self, s: BilliardState, strict=True):
        """Propagate then reflect elastically.  Returns (state, flight)."""
        fl = self.propagate(s)
        if strict and not fl.ok.all():
            raise GrazingError("impact could not be resolved")
        if strict and fl.grazing.any():
            raise GrazingError("tangential arrival")
        t = self.table.tangent(fl.u)
        v_out = t * t * np.conj(fl.v)
        shape = np.shape(s.u)
        return BilliardState(fl.u.reshape(shape), v_out.reshape(shape)), fl

    def kmap_jacobian(self, s: BilliardState, step=1e-6):
        """Finite-difference Jacobian of kmap in (arclength, tangential momentum)."""
        s_len, p = self.momentum_coords(s)
        base, _ = self.kmap(s)
        s_base, _ = self.momentum_coords(base)
        J = np.zeros((2, 2))
        for j in range(2):
            dv = np.zeros(2)
            dv[j] = step
            outs = []
            for sign in (1, -1):
                st = self.state_from_momentum(s_len + sign * dv[0], p + sign * dv[1])
                nxt, _ = self.kmap(st)
                sl, pl = self.momentum_coords(nxt)
                sl = s_base + ((sl - s_base + 0.5 * self.table.length) % self.table.length
                               - 0.5 * self.table.length)
                outs.append(np.array([float(sl), float(pl)]))
            J[:, j] = (outs[0] - outs[1]) / (2 * step)
        return J

    def portrait(self, seeds: BilliardState, n: int):
        """Iterate n bounces for a batch of seeds.

        Returns a dict of (n + 1, n_seeds) arrays ``u``, ``alpha``,
        ``energy_residual``, ``min_r`` and a boolean ``valid`` mask.  An orbit
        is truncated at its first grazing or unresolved impact.
        """
        u = np.atleast_1d(np.asarray(seeds.u, dtype=float)).copy()
        v = np.atleast_1d(np.asarray(seeds.v, dtype=complex)).copy()
        m = u.size
        U = np.full((n + 1, m), np.nan)
        A = np.full_like(U, np.nan)
        E = np.full_like(U, np.nan)
        R = np.full_like(U, np.nan)
        valid = np.zeros((n + 1, m), bool)
        U[0] = u
        A[0] = np.angle(v / self.table.tangent(u))
        E[0] = self.energy_residual(u, v)
        R[0] = np.abs(self.table.position(u) - self.c)
        valid[0] = True
        alive = np.ones(m, bool)
        for k in range(1, n + 1):
            idx = np.nonzero(alive)[0]
            if idx.size == 0:
                break
            fl = self.propagate(BilliardState(u[idx], v[idx]))
            good = fl.ok & ~fl.grazing
            t = self.table.tangent(fl.u)
            v_out = t * t * np.conj(fl.v)
            gi = idx[good]
            u[gi] = fl.u[good]
            v[gi] = v_out[good]
            U[k, gi] = u[gi]
            A[k, gi] = np.angle(v[gi] / self.table.tangent(u[gi]))
            E[k, gi] = self.energy_residual(u[gi], v[gi])
            R[k, gi] = fl.min_r[good]
            valid[k, gi] = True
            alive[idx[~good]] = False
        return {"u": U, "alpha": A, "energy_residual": E, "min_r": R, "valid": valid}


def propagate(scene: Scene, s: BilliardState) -> Flight:
    return KeplerBilliard(scene).propagate(s)


def kmap(scene: Scene, s: BilliardState) -> BilliardState:
    return KeplerBilliard(scene).kmap(s)[0]


def well_defined_check(scene: Scene):
    """Sufficient curvature test for a well-defined Kepler billiard map.

    Returns ``(ok, r_guard, margin)``: r_guard is half the distance from c to
    the boundary and margin = min curvature - mu / (2 h r_guard^2).
    """
    u = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
    dist = np.abs(scene.table.position(u) - scene.c).min()
    r_guard = 0.5 * dist
    margin = scene.table.min_curvature - scene.mu / (2.0 * scene.h * r_guard ** 2)
    return bool(margin > 0), float(r_guard), float(margin)


def portrait(scene: Scene, seeds: BilliardState, n: int):
    return KeplerBilliard(scene).portrait(seeds, n)


def default_seeds(kb: KeplerBilliard, n_seeds: int, seed: int = 0) -> BilliardState:
    """Deterministic random seeds spread over the phase cylinder."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, TWO_PI, n_seeds)
    alpha = rng.uniform(0.05, np.pi - 0.05, n_seeds)
    return kb.state_from_angle(u, alpha)
