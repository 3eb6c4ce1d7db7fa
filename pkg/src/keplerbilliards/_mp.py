"""Extended-precision arc solver and Kepler billiard map for orbit verification.

Periodic orbits with near-collision passages are extremely unstable (the
period map can stretch by 1e15 or more), so replaying them in double
precision cannot reproduce the bounce sequence.  These helpers refine an
orbit and replay the map with mpmath, seeding each solve with the double
precision result.
"""

import numpy as np
import mpmath as mp

from .kepler_arc import ArcClass


def table_frame(table, u):
    """Position and velocity of a table at an mpmath parameter."""
    fn = getattr(table, "mp_frame", None)
    if fn is None:
        raise NotImplementedError(f"{table.name} has no extended-precision evaluator")
    return fn(u)


def _dot(a, b):
    return mp.re(mp.conj(a) * b)


def _cross(a, b):
    return mp.im(mp.conj(a) * b)


def arc_mp(p0, p1, cls, h, mu):
    """Endpoint velocities of the Levi-Civita arc at working precision."""
    cls = ArcClass.parse(cls)
    w0 = mp.sqrt(p0)
    w1 = mp.sqrt(p1)
    ip = _dot(w0, w1)
    if cls is ArcClass.DIRECT:
        sign = 1 if ip > 0 else -1
    elif cls is ArcClass.INDIRECT:
        sign = 1 if ip <= 0 else -1
    else:
        det = _cross(w0, w1)
        sign = 1 if det >= 0 else -1
        if cls is ArcClass.CW:
            sign = -sign
    w1 = sign * w1
    hreg = mp.mpf(mu) / (2 * mp.mpf(h))
    q = _dot(w0, w1) / hreg
    s = 2 * (abs(w0) ** 2 + abs(w1) ** 2) / hreg
    root = mp.sqrt(q * q + s + 4)
    if q >= 0:
        xm2 = 2 * abs(w0 - w1) ** 2 / hreg / (root + q + 2)
    else:
        xm2 = root - q - 2
    T = 2 * mp.asinh(mp.sqrt(xm2) / 2)
    sh, ch = mp.sinh(T), mp.cosh(T)
    wp0 = (w1 - ch * w0) / sh
    wp1 = (ch * w1 - w0) / sh
    s2h = mp.sqrt(2 * mp.mpf(h))
    v0 = s2h * w0 * wp0 / abs(w0) ** 2
    v1 = s2h * w1 * wp1 / abs(w1) ** 2
    return v0, v1


def grad_W_mp(u, classes, scene):
    """Gradient of the word functional at working precision."""
    n = len(u)
    c = mp.mpc(scene.c)
    h, mu = mp.mpf(scene.h), mp.mpf(scene.mu)
    frames = [table_frame(scene.table, x) for x in u]
    g = [mp.mpf(0)] * n
    for k in range(n):
        b = (k + 1) % n
        p0 = frames[k][0] - c
        p1 = frames[b][0] - c
        v0, v1 = arc_mp(p0, p1, classes[k], h, mu)
        g0 = -mp.sqrt(h + mu / abs(p0)) * v0 / abs(v0)
        g1 = mp.sqrt(h + mu / abs(p1)) * v1 / abs(v1)
        g[k] += _dot(g0, frames[k][1])
        g[b] += _dot(g1, frames[b][1])
    return g


def refine_orbit(u, classes, scene, hessian, dps=50, iters=12):
    """Newton refinement of a critical point with a fixed double-precision Hessian."""
    with mp.workdps(dps):
        um = [mp.mpf(float(x)) for x in u]
        Hinv = np.linalg.inv(hessian)
        gn = None
        for _ in range(iters):
            g = grad_W_mp(um, classes, scene)
            gn = max(abs(x) for x in g)
            if gn < mp.mpf(10) ** (-(dps - 8)):
                break
            du = Hinv @ np.array([float(x) for x in g])
            um = [x - mp.mpf(float(d)) for x, d in zip(um, du)]
        return um, gn


def departure_velocity(u, classes, scene, k=0):
    n = len(u)
    c = mp.mpc(scene.c)
    p0 = table_frame(scene.table, u[k])[0] - c
    p1 = table_frame(scene.table, u[(k + 1) % n])[0] - c
    return arc_mp(p0, p1, classes[k], scene.h, scene.mu)[0]


def kmap_mp(scene, u, v, tau_guess, u_guess, maxiter=60):
    """One Kepler billiard bounce at working precision from a nearby double guess."""
    c = mp.mpc(scene.c)
    h = mp.mpf(scene.h)
    z0 = table_frame(scene.table, u)[0] - c
    w0 = mp.sqrt(z0)
    wp0 = v * mp.conj(w0) / mp.sqrt(2 * h)
    tau = mp.mpf(float(tau_guess))
    x = mp.mpf(float(u_guess))
    # keep the guess on the same lift as u
    tol = mp.mpf(10) ** (-(mp.mp.dps - 6))
    for _ in range(maxiter):
        w = w0 * mp.cosh(tau) + wp0 * mp.sinh(tau)
        wp = w0 * mp.sinh(tau) + wp0 * mp.cosh(tau)
        pos, vel = table_frame(scene.table, x)
        F = c + w * w - pos
        zd = 2 * w * wp
        # solve [zd, -vel] [dtau, dx]^T = -F in the real sense
        det = _cross(zd, -vel)
        dtau = _cross(-F, -vel) / det
        dx = _cross(zd, -F) / det
        tau += dtau
        x += dx
        if abs(dtau) + abs(dx) < tol:
            break
    w = w0 * mp.cosh(tau) + wp0 * mp.sinh(tau)
    wp = w0 * mp.sinh(tau) + wp0 * mp.cosh(tau)
    v1 = mp.sqrt(2 * h) * w * wp / abs(w) ** 2
    _, vel = table_frame(scene.table, x)
    t = vel / abs(vel)
    return x, t * t * mp.conj(v1)


def replay(scene, u, classes, dps=50):
    """Replay one period of the map from the first bounce at working precision.

    Returns (max parameter error, velocity closure error, parameters visited).
    """
    from .kepler_billiard import BilliardState, KeplerBilliard

    kb = KeplerBilliard(scene)
    n = len(u)
    with mp.workdps(dps):
        x = u[0]
        v = departure_velocity(u, classes, scene, 0)
        v_start = v
        err = mp.mpf(0)
        visited = []
        for k in range(1, n + 1):
            fl = kb.propagate(BilliardState(np.array([float(x)]), np.array([complex(v)])))
            ug = float(fl.u[0])
            # put the guess on the lift closest to the target parameter
            target = u[k % n]
            ug = float(target) + ((ug - float(target) + np.pi) % (2 * np.pi) - np.pi)
            x, v = kmap_mp(scene, x, v, fl.tau[0], ug)
            visited.append(x)
            err = max(err, abs(x - target))
        closure = abs(v - v_start) / abs(v_start)
        return float(err), float(closure), visited
