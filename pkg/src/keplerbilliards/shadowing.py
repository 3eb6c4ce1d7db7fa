"""Periodic Kepler billiard orbits realizing symbolic words.

A word over {T, T'} is realized near a punctured Birkhoff triangle: each
letter contributes a direct arc between neighborhoods I, I' of the triangle
vertices followed by an indirect arc (a near-collision passage through the
center).  A word over {m, M} uses the degenerate pattern indirect, CCW,
indirect around an antipodal extremal pair.  Orbits are critical points of
the sum W of generating functions over the product of intervals.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _mp
from .errors import ArcError, KeplerBilliardError, ShadowingError
from .focal import classify_kind, critical_points_psi, focal_test, psi
from .kepler_arc import ArcClass, generating_S, jacobi_length, solve_arc
from .kepler_billiard import BilliardState, KeplerBilliard
from .tables import TWO_PI, Scene, cross, to_complex

TRIANGLE = ("T", "T'")
DEGENERATE = ("m", "M")
MAX_WORD = 64


@dataclass(frozen=True)
class SymbolWord:
    letters: tuple
    alphabet: tuple

    @classmethod
    def parse(cls, text: str):
        """Parse e.g. "TT'T" or "mMM"; the prime may be ' or ′."""
        text = text.replace("′", "'").strip()
        letters = []
        i = 0
        while i < len(text):
            ch = text[i]
            if ch == "T":
                if i + 1 < len(text) and text[i + 1] == "'":
                    letters.append("T'")
                    i += 2
                    continue
                letters.append("T")
            elif ch in "mM":
                letters.append(ch)
            elif not ch.isspace():
                raise ValueError(f"unknown symbol {ch!r} in word {text!r}")
            i += 1
        if not letters:
            raise ValueError("empty word")
        if len(letters) > MAX_WORD:
            raise ValueError(f"word longer than {MAX_WORD} letters")
        kinds = {l in TRIANGLE for l in letters}
        if len(kinds) != 1:
            raise ValueError("word mixes the {T,T'} and {m,M} alphabets")
        return cls(tuple(letters), TRIANGLE if kinds.pop() else DEGENERATE)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return "".join(self.letters)


@dataclass(frozen=True)
class WordDomain:
    """Interval template for one alphabet.

    ``intervals`` maps labels ("I", "I'") or ("m", "M", "P", "Q") to closed
    parameter intervals (lo, hi) given as unreduced angles with lo < hi.
    """

    kind: str                     # "triangle" or "degenerate"
    intervals: dict
    centers: dict
    delta: float
    note: str = ""

    def letter_labels(self, letter):
        if self.kind == "triangle":
            return ("I", "I'") if letter == "T" else ("I'", "I")
        return (letter, "P", "Q")

    def labels(self, word: SymbolWord):
        out = []
        for letter in word.letters:
            out.extend(self.letter_labels(letter))
        return out

    def bounds(self, word: SymbolWord):
        labs = self.labels(word)
        lo = np.array([self.intervals[l][0] for l in labs])
        hi = np.array([self.intervals[l][1] for l in labs])
        return lo, hi

    def start(self, word: SymbolWord):
        return np.array([self.centers[l] for l in self.labels(word)])

    def widths(self):
        return {k: v[1] - v[0] for k, v in self.intervals.items()}


def _classes(domain: WordDomain, n_letters: int):
    if domain.kind == "triangle":
        return [ArcClass.DIRECT, ArcClass.INDIRECT] * n_letters
    return [ArcClass.INDIRECT, ArcClass.CCW, ArcClass.INDIRECT] * n_letters


def _circ(a):
    return (a + np.pi) % TWO_PI - np.pi


def _admissible(table, c, boxes, delta, cls_of_pair, n=7):
    """All sampled pairs between the listed interval pairs lie in the admissible sets."""
    for (a, b), cls in zip(boxes, cls_of_pair):
        ua = np.linspace(a[0], a[1], n)
        ub = np.linspace(b[0], b[1], n)
        p = table.position(ua) - c
        q = table.position(ub) - c
        if np.any(np.abs(p) < delta) or np.any(np.abs(p) > 1 / delta):
            return False
        gap = np.abs(np.angle(q[None, :] / p[:, None]))
        if cls == "K" and np.any(gap > np.pi * (1 - delta)):
            return False
        if cls == "Ktilde" and np.any(gap < np.pi - delta):
            return False
    return True


def select_intervals(table, c, critical=None, delta=0.1, r0=0.3, shrink=0.7, max_shrinks=30) -> WordDomain:
    """Intervals around a Psi critical configuration suitable for a word alphabet.

    The triangle template is used when a non-zero-area critical point of
    nonzero index exists; otherwise the degenerate template is attempted.
    Raises `ShadowingError` with a reason when neither applies.
    """
    c = to_complex(c)
    fv = focal_test(table, c)
    if fv.focal:
        raise ShadowingError("focal point of the second kind: no construction applies")
    if critical is None:
        critical = critical_points_psi(table, c)
    cands = [p for p in critical.points if not p.zero_area and p.index != 0]
    cands.sort(key=lambda p: (p.index != 1, -p.level))
    others = [complex(p.xi, p.eta) for p in critical.points]
    for cp in cands:
        a, b = cp.xi, cp.eta
        r = min(r0, 0.4 * abs(_circ(a - b)))
        for _ in range(max_shrinks):
            I = (a - r, a + r)
            J = (b - r, b + r)
            pairs = [(I, J), (J, I), (I, I), (J, J)]
            if _admissible(table, c, pairs, delta, ["K"] * 4) and _isolated(cp, others, r):
                return WordDomain("triangle", {"I": I, "I'": J}, {"I": a, "I'": b}, delta,
                                  note=f"critical point index {cp.index}, level {cp.level:.6g}")
            r *= shrink
    return _degenerate_template(table, c, delta, r0, shrink, max_shrinks)


def _isolated(cp, others, r):
    for z in others:
        for x, y in ((z.real, z.imag), (z.imag, z.real)):
            if (x, y) == (cp.xi, cp.eta):
                continue
            if abs(_circ(x - cp.xi)) <= r and abs(_circ(y - cp.eta)) <= r:
                return False
    return True


def _degenerate_template(table, c, delta, r0, shrink, max_shrinks):
    rep = classify_kind(table, c)
    ext = rep.extrema
    infl = [p for p in rep.critical if p.kind == "inflection"]
    idx = {id(p): i for i, p in enumerate(rep.critical)}
    mins = [p for p in ext if p.kind == "min"]
    maxs = [p for p in ext if p.kind == "max"]
    if not (len(mins) == 1 and len(maxs) == 1 and rep.antipodal[idx[id(mins[0])], idx[id(maxs[0])]]):
        raise ShadowingError("no non-zero-area critical triangle and no antipodal min/max pair")
    pq = None
    for i, p in enumerate(infl):
        for q in infl[i + 1:]:
            if rep.antipodal[idx[id(p)], idx[id(q)]]:
                pq = (p, q)
    if pq is None:
        raise ShadowingError("no non-zero-area critical triangle and no antipodal inflection pair")
    P, Q = pq
    if cross(table.position(P.u) - c, table.position(Q.u) - c) < 0:
        P, Q = Q, P
    centers = {"m": mins[0].u, "M": maxs[0].u, "P": P.u, "Q": Q.u}
    gaps = [abs(_circ(x - y)) for x in centers.values() for y in centers.values() if x != y]
    r = min(r0, 0.4 * min(gaps))
    for _ in range(max_shrinks):
        iv = {k: (u - r, u + r) for k, u in centers.items()}
        pairs, cls = [], []
        for e in ("m", "M"):
            pairs += [(iv[e], iv["P"]), (iv["Q"], iv[e])]
            cls += ["K", "K"]
        pairs.append((iv["P"], iv["Q"]))
        cls.append("Ktilde")
        if _admissible(table, c, pairs, delta, cls):
            return WordDomain("degenerate", iv, centers, delta, note="antipodal min/max with inflection pair")
        r *= shrink
    raise ShadowingError("could not satisfy admissibility for the degenerate template")


# ------------------------------------------------------------ functional ---

def _arcs(u, classes):
    n = len(u)
    return [(k, (k + 1) % n, classes[k]) for k in range(n)]


def W_eval(word: SymbolWord, u, scene: Scene, domain: WordDomain):
    """Value and gradient (raw parameters) of the word functional W."""
    u = np.asarray(u, dtype=float)
    classes = _classes(domain, len(word))
    if len(u) != len(classes):
        raise ValueError(f"expected {len(classes)} parameters, got {len(u)}")
    val = 0.0
    grad = np.zeros_like(u)
    for k, (a, b, cls) in enumerate(_arcs(u, classes)):
        try:
            S, d1, d2 = generating_S(scene.table, u[a], u[b], cls, scene.h, scene.mu, scene.c)
        except ArcError as exc:
            raise ArcError(f"block {k // (len(u) // len(word))}: {exc}") from exc
        val += S
        grad[a] += d1
        grad[b] += d2
    return val, grad


def psi_sum(word: SymbolWord, u, scene: Scene, domain: WordDomain):
    """Leading-order functional: sum of Psi (triangle) or 2|gamma| + Psi_a (degenerate)."""
    from .focal import psi_a

    u = np.asarray(u, dtype=float)
    c = scene.c
    t = scene.table
    if domain.kind == "triangle":
        return float(sum(psi(t, c, u[2 * i], u[2 * i + 1]) for i in range(len(word))))
    tot = 0.0
    for i in range(len(word)):
        tot += 2 * abs(complex(t.position(u[3 * i])) - c) + float(psi_a(t, c, u[3 * i + 1], u[3 * i + 2])[0])
    return tot


def fd_gradient(fun, u, step=1e-6):
    u = np.asarray(u, dtype=float)
    g = np.zeros_like(u)
    for k in range(len(u)):
        e = np.zeros_like(u)
        e[k] = step
        g[k] = (fun(u + e) - fun(u - e)) / (2 * step)
    return g


def _domain_of(orbit):
    kind = "triangle" if orbit.word.alphabet == TRIANGLE else "degenerate"
    return WordDomain(kind, {}, {}, 0.0)


@dataclass
class RealizedOrbit:
    word: SymbolWord
    u: np.ndarray                 # bounce parameters in trajectory order
    classes: list
    labels: list
    residuals: np.ndarray         # reflection residual per bounce, arclength units
    velocity_residuals: np.ndarray
    grad_norm: float
    iterations: int
    period: int
    minimal_period: int
    converged: bool
    inside: bool
    notes: list = field(default_factory=list)

    @property
    def max_residual(self):
        return float(np.abs(self.residuals).max())


def _hessian(word, u, scene, domain, step=1e-7):
    n = len(u)
    H = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        H[:, k] = (W_eval(word, u + e, scene, domain)[1] - W_eval(word, u - e, scene, domain)[1]) / (2 * step)
    return 0.5 * (H + H.T)


def _newton(word, u, scene, domain, lo, hi, tol, maxiter):
    g = W_eval(word, u, scene, domain)[1]
    for it in range(maxiter):
        gn = np.abs(g).max()
        if gn < tol:
            return u, g, it, True
        H = _hessian(word, u, scene, domain)
        try:
            du = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            du = -np.linalg.lstsq(H, g, rcond=None)[0]
        lam = 1.0
        for _ in range(30):
            un = np.clip(u + lam * du, lo, hi)
            try:
                gnew = W_eval(word, un, scene, domain)[1]
            except ArcError:
                lam *= 0.5
                continue
            if np.abs(gnew).max() < gn or lam < 1e-6:
                break
            lam *= 0.5
        u, g = un, gnew
    return u, g, maxiter, np.abs(g).max() < tol


def solve_word(word, scene: Scene, domain: WordDomain, tol=None, maxiter=50, h_min=None) -> RealizedOrbit:
    """Find an interior critical point of W in the word's box and verify reflections."""
    if isinstance(word, str):
        word = SymbolWord.parse(word)
    expected = "triangle" if word.alphabet == TRIANGLE else "degenerate"
    if expected != domain.kind:
        raise ShadowingError(f"word alphabet does not match the {domain.kind} template")
    if h_min is not None and scene.h < h_min:
        raise ShadowingError(f"energy {scene.h:g} below the configured threshold {h_min:g}")
    lo, hi = domain.bounds(word)
    tol = 1e-10 * np.sqrt(scene.h) if tol is None else tol
    starts = [domain.start(word)]
    rng = np.random.default_rng(12345)
    for _ in range(27):
        starts.append(lo + (hi - lo) * rng.choice([0.25, 0.5, 0.75], size=len(lo)))
    best = None
    for x0 in starts:
        try:
            u, g, it, ok = _newton(word, x0.copy(), scene, domain, lo, hi, tol, maxiter)
        except ArcError:
            continue
        interior = bool(np.all(u > lo) and np.all(u < hi))
        if best is None or np.abs(g).max() < np.abs(best[1]).max():
            best = (u, g, it, ok and interior)
        if ok and interior:
            break
    if best is None:
        raise ShadowingError("arc solver failed at every start point")
    u, g, it, ok = best
    orbit = _assemble(word, u, scene, domain, g, it, ok)
    if not ok:
        orbit.notes.append("no interior critical point found after multistart")
    return orbit


def _assemble(word, u, scene, domain, g, it, ok):
    classes = _classes(domain, len(word))
    res, vres = reflection_residuals(u, classes, scene)
    lo, hi = domain.bounds(word)
    n = len(u)
    return RealizedOrbit(word, u % TWO_PI, classes, domain.labels(word), res, vres,
                         float(np.abs(g).max()), it, n, minimal_period(u), bool(ok),
                         bool(np.all(u >= lo) and np.all(u <= hi)))


def reflection_residuals(u, classes, scene: Scene):
    """Per bounce: d2 S(incoming) + d1 S(outgoing) in arclength units, and the velocity mismatch.

    The velocity check reflects the incoming arrival velocity about the
    tangent and compares it with the outgoing departure velocity.
    """
    n = len(u)
    t = scene.table
    arcs = []
    for k in range(n):
        p0 = complex(t.position(u[k])) - scene.c
        p1 = complex(t.position(u[(k + 1) % n])) - scene.c
        arcs.append(solve_arc(p0, p1, classes[k], scene.h, scene.mu))
    res = np.zeros(n)
    vres = np.zeros(n)
    for k in range(n):
        incoming = arcs[k - 1]
        outgoing = arcs[k]
        _, _, d2 = generating_S(t, u[k - 1], u[k], classes[k - 1], scene.h, scene.mu, scene.c, arclength=True)
        _, d1, _ = generating_S(t, u[k], u[(k + 1) % n], classes[k], scene.h, scene.mu, scene.c, arclength=True)
        res[k] = d2 + d1
        tan = complex(t.tangent(u[k]))
        reflected = tan * tan * np.conj(incoming.v1)
        vres[k] = abs(reflected - outgoing.v0) / abs(outgoing.v0)
    return res, vres


def minimal_period(u, tol=1e-8):
    """Smallest cyclic shift k (dividing len(u)) with u shifted by k equal to u."""
    u = np.asarray(u, dtype=float)
    n = len(u)
    for k in range(1, n):
        if n % k == 0 and np.abs(_circ(np.roll(u, -k) - u)).max() < tol:
            return k
    return n


@dataclass
class VerificationReport:
    passed: bool
    max_reflection_residual: float
    max_velocity_residual: float
    replay_error: float
    closure_error: float
    energy_drift: float
    length_discrepancy: float
    inside: bool
    details: dict = field(default_factory=dict)


def verify_orbit(orbit: RealizedOrbit, scene: Scene, domain: WordDomain = None,
                 quad_tol=1e-12, tol_reflection=1e-8, tol_replay=1e-6, dps=50) -> VerificationReport:
    """Independent checks: reflection law, quadrature lengths and a kmap replay.

    Orbits through near-collisions are so unstable that a forward replay in
    double precision loses all digits within one period.  The replay is
    therefore run on an extended-precision refinement of the orbit; the
    double-precision single-bounce and forward errors are kept in
    ``details`` for reference.
    """
    u = np.asarray(orbit.u, dtype=float)
    n = len(u)
    res, vres = reflection_residuals(u, orbit.classes, scene)
    t = scene.table
    disc = 0.0
    arcs = []
    for k in range(n):
        p0 = complex(t.position(u[k])) - scene.c
        p1 = complex(t.position(u[(k + 1) % n])) - scene.c
        arc = solve_arc(p0, p1, orbit.classes[k], scene.h, scene.mu)
        arcs.append(arc)
        Lq = jacobi_length(arc, epsabs=quad_tol, epsrel=quad_tol)
        disc = max(disc, abs(Lq - arc.L) / arc.L)

    # double precision: one bounce from each orbit state, and a plain forward replay
    kb = KeplerBilliard(scene)
    states = BilliardState(u.copy(), np.array([a.v0 for a in arcs]))
    nxt, _ = kb.kmap(states)
    step_err = float(np.abs(_circ(nxt.u - np.roll(u, -1))).max())
    energy = float(kb.energy_residual(nxt.u, nxt.v).max())
    state = BilliardState(np.array([u[0]]), np.array([arcs[0].v0]))
    forward = 0.0
    for k in range(1, n + 1):
        try:
            state, _ = kb.kmap(state)
        except KeplerBilliardError:
            forward = np.inf
            break
        forward = max(forward, abs(_circ(state.u[0] - u[k % n])))

    # extended precision: refine the critical point and replay a full period
    um, gmp = _mp.refine_orbit(u, orbit.classes, scene, _hessian(orbit.word, u, scene, _domain_of(orbit)),
                               dps=dps)
    replay, closure, _ = _mp.replay(scene, um, orbit.classes, dps=dps)
    shift = float(max(abs(float(a) - b) for a, b in zip(um, u)))
    inside = orbit.inside
    if domain is not None:
        lo, hi = domain.bounds(orbit.word)
        uu = lo + np.mod(u - lo, TWO_PI)
        inside = bool(np.all(uu <= hi))
    passed = (np.abs(res).max() < tol_reflection and replay < tol_replay and closure < tol_replay
              and shift < tol_replay and inside)
    return VerificationReport(bool(passed), float(np.abs(res).max()), float(vres.max()), float(replay),
                              float(closure), energy, float(disc), inside,
                              {"residuals": res, "velocity_residuals": vres, "single_step_error": step_err,
                               "forward_replay_error_double": float(forward), "refined_gradient": float(gmp),
                               "refinement_shift": shift})


def itinerary(orbit: RealizedOrbit):
    """Sequence of interval labels visited by the bounces."""
    return tuple(orbit.labels)
