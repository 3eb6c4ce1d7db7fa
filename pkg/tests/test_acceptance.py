"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the per-criterion lines are
printed in the terminal summary.  Running this file directly prints the same
lines without pytest.
"""

import time

import numpy as np

from keplerbilliards.birkhoff import (delta_graphs, dT2_two_periodic, dT_two_periodic, iterate_portrait,
                                      orthogonal_chords_through, phase_jacobian, PhaseState)
from keplerbilliards.cli import main as cli_main
from keplerbilliards.errors import ShadowingError
from keplerbilliards.focal import (classify_kind, critical_points_psi, focal_polynomial, focal_test,
                                   hess_det_chord, index_additivity, phi, winding_index)
from keplerbilliards.kepler_arc import generating_S, length_gradient, solve_arc
from keplerbilliards.kepler_billiard import BilliardState, KeplerBilliard, default_seeds
from keplerbilliards.shadowing import itinerary, select_intervals, solve_word, verify_orbit
from keplerbilliards.tables import (Scene, StringSpec, WidthFourierSpec, cross, make_ellipse, make_string_table)

try:
    from conftest import ACCEPTANCE
except ImportError:  # run as a script
    ACCEPTANCE = {}

SQRT3 = np.sqrt(3.0)
FIG11 = "string:a0=1,a3=0.3333333333,c=3,0,l=6"


def record(key, ok, detail):
    ACCEPTANCE[str(key)] = (bool(ok), detail)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
    assert ok, detail


def _string():
    return make_string_table(StringSpec(WidthFourierSpec({0: 1.0, 3: 1.0 / 3.0}), 3.0 + 0j, 6.0))


def _random_pair(rng, delta, tilde):
    r0, r1 = rng.uniform(delta, 1.0 / delta, 2)
    th0 = rng.uniform(0, 2 * np.pi)
    if tilde:
        gap = rng.uniform(np.pi - delta, np.pi)
    else:
        gap = rng.uniform(0.0, np.pi * (1 - delta))
    gap *= rng.choice([-1.0, 1.0])
    return r0 * np.exp(1j * th0), r1 * np.exp(1j * (th0 + gap))


# ---------------------------------------------------------------- 1 ---

def test_criterion_1_arc_solver_exactness():
    rng = np.random.default_rng(1)
    delta = 0.2
    t0 = time.perf_counter()
    worst_end = worst_energy = 0.0
    count = 0
    for i in range(500):
        tilde = i % 2 == 1
        p0, p1 = _random_pair(rng, delta, tilde)
        for h in (10.0, 1e3):
            for mu in (1.0, 5.0):
                for cls in (("ccw", "cw") if tilde else ("direct", "indirect")):
                    arc = solve_arc(p0, p1, cls, h, mu)
                    tau = np.linspace(0.0, arc.T, 64)
                    z = arc.z(tau)
                    v = arc.velocity(tau)
                    worst_end = max(worst_end, abs(z[0] - p0), abs(z[-1] - p1))
                    e = np.abs(0.5 * np.abs(v) ** 2 - mu / np.abs(z) - h).max() / h
                    worst_energy = max(worst_energy, e)
                    count += 1
    dt = time.perf_counter() - t0
    ok = worst_end < 1e-8 and worst_energy < 1e-8 and dt < 30
    record(1, ok, f"{count} arcs from 500 pairs: endpoint {worst_end:.1e}, energy/h {worst_energy:.1e}, {dt:.1f} s")


# ---------------------------------------------------------------- 2 ---

def test_criterion_2_asymptotics():
    p0, p1, mu = 1 + 0j, 1j, 1.0
    scaled = []
    for h in (1e4, 1e6):
        L = solve_arc(p0, p1, "direct", h, mu).L
        scaled.append(np.sqrt(h) * (L - np.sqrt(h) * np.sqrt(2)))
    var = abs(scaled[1] - scaled[0]) / abs(scaled[0])
    h = 1e6
    Li = solve_arc(p0, p1, "indirect", h, mu).L
    ratio = (Li - 2 * np.sqrt(h)) / ((mu / np.sqrt(h)) * np.log(2 * h / mu))
    ok = var < 0.05 and 0.8 <= ratio <= 1.2
    record(2, ok, f"direct remainder {scaled[0]:.5f} vs {scaled[1]:.5f} (change {var:.2e}); indirect ratio {ratio:.4f}")


# ---------------------------------------------------------------- 3 ---

def _fd_length(p0, p1, cls, h, mu, step=1e-6):
    g = []
    for which in (0, 1):
        comp = 0j
        for e in (1.0, 1j):
            a = [p0, p1]
            b = [p0, p1]
            a[which] = a[which] + step * e
            b[which] = b[which] - step * e
            d = (solve_arc(a[0], a[1], cls, h, mu).L - solve_arc(b[0], b[1], cls, h, mu).L) / (2 * step)
            comp += d * e
        g.append(comp)
    return g


def test_criterion_3_gradient_oracles():
    rng = np.random.default_rng(3)
    worst_len = 0.0
    for i in range(200):
        tilde = i % 2 == 1
        p0, p1 = _random_pair(rng, 0.2, tilde)
        cls = rng.choice(["ccw", "cw"] if tilde else ["direct", "indirect"])
        h = rng.choice([10.0, 1e3])
        mu = rng.choice([1.0, 5.0])
        g = length_gradient(solve_arc(p0, p1, cls, h, mu))
        fd = _fd_length(p0, p1, cls, h, mu)
        rel = max(abs(g[k] - fd[k]) / abs(g[k]) for k in (0, 1))
        worst_len = max(worst_len, rel)

    worst_S = 0.0
    tables = [(make_ellipse(2.0, 1.0), 0.5 + 0.3j), (_string(), 3.0 + 0j)]
    for i in range(200):
        table, c = tables[i % 2]
        xi, eta = rng.uniform(0, 2 * np.pi, 2)
        p0 = complex(table.position(xi)) - c
        p1 = complex(table.position(eta)) - c
        gap = abs(np.angle(p1 / p0))
        if gap < 1e-3:
            eta += 0.5
            gap = abs(np.angle((complex(table.position(eta)) - c) / p0))
        cls = rng.choice(["direct", "indirect"] if gap <= 0.8 * np.pi else ["ccw", "cw"])
        h = rng.choice([10.0, 1e3])
        mu = rng.choice([1.0, 5.0])
        _, d1, d2 = generating_S(table, xi, eta, cls, h, mu, c)
        step = 1e-6
        f1 = (generating_S(table, xi + step, eta, cls, h, mu, c)[0]
              - generating_S(table, xi - step, eta, cls, h, mu, c)[0]) / (2 * step)
        f2 = (generating_S(table, xi, eta + step, cls, h, mu, c)[0]
              - generating_S(table, xi, eta - step, cls, h, mu, c)[0]) / (2 * step)
        rel = np.hypot(d1 - f1, d2 - f2) / np.hypot(d1, d2)
        worst_S = max(worst_S, rel)
    ok = worst_len < 1e-5 and worst_S < 1e-5
    record(3, ok, f"length gradients rel err {worst_len:.1e}; generating partials rel err {worst_S:.1e} (200 each)")


# ---------------------------------------------------------------- 4 ---

def test_criterion_4_ellipse_focus():
    e = make_ellipse(2.0, 1.0)
    xi = np.linspace(0, 2 * np.pi, 1024, endpoint=False)
    dev = np.abs(phi(e, SQRT3 + 0j, xi) - 8.0).max()
    v = phi(e, 1.0 + 0j, xi)
    var = v.max() - v.min()
    ok = dev < 1e-8 and var > 1e-2
    record(4, ok, f"focus max|phi-8| = {dev:.1e}; c=(1,0) variation {var:.3f}")


# ---------------------------------------------------------------- 5 ---

def test_criterion_5_string_focality():
    st = _string()
    v = focal_test(st, 3.0 + 0j, n=1024)
    rep = classify_kind(st, 3.0 + 0j)
    ext = rep.extrema
    two = len(rep.critical) == 2 and len(ext) == 2 and {p.kind for p in ext} == {"min", "max"}
    anti = two and bool(rep.antipodal[0, 1])
    ok = v.variation < 1e-6 and abs(v.mean - 14.0) < 1e-6 and rep.kind == "second" and two and anti
    record(5, ok, f"phi variation {v.variation:.1e}, mean {v.mean:.12f}; kind {rep.kind}, "
                  f"{len(ext)} extrema, antipodal {anti}")


# ---------------------------------------------------------------- 6 ---

def test_criterion_6_rigidity_formulas():
    # (a) Hessian determinant at the focus chord: analytic data and data measured on the table
    _, det_a = hess_det_chord(2 - SQRT3, 2 + SQRT3, 2.0, 2.0)
    e = make_ellipse(2.0, 1.0)
    chords = orthogonal_chords_through(e, SQRT3 + 0j)
    ch = chords[0]
    _, det_m = hess_det_chord(ch.d1, ch.d2, ch.k1, ch.k2)
    ok_a = abs(det_a) < 1e-12 and abs(det_m) < 1e-12 and len(chords) == 1

    # (b) focal polynomial of the major axis
    P = focal_polynomial(4.0, 2.0, 2.0)
    coef = np.asarray(P.coefficients, dtype=float)       # constant, linear, quadratic
    foci = np.array([2 - SQRT3, 2 + SQRT3])               # vertex-to-focus distances a -/+ sqrt(a^2 - b^2)
    ok_b = (np.abs(coef - [1.0, -4.0, 1.0]).max() < 1e-12 and len(P.roots) == 2
            and np.abs(np.sort(P.roots) - foci).max() < 1e-10)

    # (c) string chord: hyperbolic square, eigenvalues against the billiard map itself
    st = _string()
    sch = orthogonal_chords_through(st, 3.0 + 0j)
    M, tr, disc, red = dT2_two_periodic(sch[0])
    ev = np.sort(np.linalg.eigvals(M).real)
    J = phase_jacobian(st, sch[0].u1, np.pi / 2, step=1e-6, n=2)
    ev_fd = np.sort(np.linalg.eigvals(J).real)
    ev_err = np.abs(ev - ev_fd).max() / np.abs(ev).max()
    ok_c = disc > 0 and red > 0 and ev_err < 1e-5

    # (d) circle
    circ = make_ellipse(1.0, 1.0)
    cch = orthogonal_chords_through(circ, 0j)[0]
    D = dT_two_periodic(cch)
    _, _, cdisc, _ = dT2_two_periodic(cch)
    ok_d = np.abs(D - np.array([[1.0, 2.0], [0.0, 1.0]])).max() < 1e-12 and abs(cdisc) < 1e-12

    ok = ok_a and ok_b and ok_c and ok_d
    record(6, ok, f"(a) det {det_a:.1e}/{det_m:.1e}; (b) roots {np.sort(P.roots)}; "
                  f"(c) disc {disc:.3f}, eig rel err {ev_err:.1e}; (d) DT {D.round(12).tolist()}, disc {cdisc:.1e}")


# ---------------------------------------------------------------- 7 ---

def test_criterion_7_invariant_graph():
    st = _string()
    _, minus = delta_graphs(st, 3.0 + 0j)
    u = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    U, A = iterate_portrait(st, minus(u), 2)
    dev = np.abs(A[2] - minus(U[2] % (2 * np.pi)).alpha).max()
    record(7, dev < 1e-6, f"max deviation of bmap^2(delta_minus) from the graph: {dev:.1e} over 200 samples")


# ---------------------------------------------------------------- 8 ---

def test_criterion_8_index_machinery():
    w = [winding_index(lambda z: z, 0j, 0.5),
         winding_index(lambda z: np.conj(z), 0j, 0.5),
         winding_index(lambda z: z * z, 0j, 0.5)]
    e = make_ellipse(2.0, 1.0)
    cs = critical_points_psi(e, 0.5 + 0.3j)
    idx = [p.index for p in cs.points]
    add = index_additivity(e, 0j, 0.0, np.pi)
    ok = w == [1, -1, 2] and sum(idx) == 0 and 1 in idx and add["residual"] == 0 and not cs.unresolved
    record(8, ok, f"canonical {w}; indices {idx} (sum {sum(idx)}); additivity "
                  f"{add['psi']}+{add['psi_star']}={add['psi_a']}+{add['psi_c']}")


# ---------------------------------------------------------------- 9 ---

def test_criterion_9_kepler_map():
    st = _string()
    # energy over 1e5 cumulative bounces at h = 10, mu = 5
    kb = KeplerBilliard(Scene(st, 3.0 + 0j, 5.0, 10.0))
    res = kb.portrait(default_seeds(kb, 200, 0), 500)
    n_bounces = int(res["valid"][1:].sum())
    e_max = float(np.nanmax(res["energy_residual"]))
    ok_e = n_bounces == 100000 and e_max < 1e-8

    # potential-free limit against the classical map
    e = make_ellipse(2.0, 1.0)
    kb0 = KeplerBilliard(Scene(e, 0.5 + 0.3j, 1e-12, 1.0))
    rng = np.random.default_rng(9)
    u = rng.uniform(0, 2 * np.pi, 50)
    a = rng.uniform(0.3, np.pi - 0.3, 50)
    pk = kb0.portrait(kb0.state_from_angle(u, a), 10)
    Ub, Ab = iterate_portrait(e, PhaseState(u, a), 10)
    du = np.abs((pk["u"] - Ub + np.pi) % (2 * np.pi) - np.pi).max()
    da = np.abs(pk["alpha"] - Ab).max()
    ok_0 = max(du, da) < 1e-5

    # angular momentum about the center of a circle
    circ = make_ellipse(1.0, 1.0)
    kbc = KeplerBilliard(Scene(circ, 0j, 1.0, 2.0))
    s = kbc.state_from_angle(rng.uniform(0, 2 * np.pi, 10), rng.uniform(0.3, np.pi - 0.3, 10))
    L0 = cross(circ.position(s.u), s.v)
    dev = 0.0
    for _ in range(1000):
        s, _ = kbc.kmap(s)
        dev = max(dev, float(np.abs(cross(circ.position(s.u), s.v) - L0).max()))
    ok_l = dev < 1e-9

    # symplectic determinant in (arclength, tangential momentum)
    seeds = default_seeds(kb, 100, 7)
    dets = np.array([np.linalg.det(kb.kmap_jacobian(BilliardState(seeds.u[i], seeds.v[i]))) for i in range(100)])
    ok_s = np.abs(dets - 1).max() < 1e-5

    ok = ok_e and ok_0 and ok_l and ok_s
    record(9, ok, f"{n_bounces} bounces max energy residual {e_max:.1e}; mu=1e-12 vs classical {max(du, da):.1e}; "
                  f"circle momentum drift {dev:.1e}; |det-1| {np.abs(dets - 1).max():.1e}")


# --------------------------------------------------------------- 10 ---

def test_criterion_10_shadowing():
    e = make_ellipse(2.0, 1.0)
    c = 0.5 + 0.3j
    scene = Scene(e, c, 1.0, 1e3)
    dom = select_intervals(e, c)
    parts, itins, ok = [], [], True
    for word in ("TT'", "TTT'"):
        t0 = time.perf_counter()
        orbit = solve_word(word, scene, dom)
        rep = verify_orbit(orbit, scene, dom)
        dt = time.perf_counter() - t0
        itins.append(itinerary(orbit))
        good = (orbit.converged and rep.max_reflection_residual < 1e-8 and rep.replay_error < 1e-6
                and rep.closure_error < 1e-6 and rep.passed and dt < 60)
        ok &= good
        parts.append(f"{word}: residual {rep.max_reflection_residual:.1e}, replay {rep.replay_error:.1e}, {dt:.1f} s")
    ok &= itins[0] != itins[1]
    try:
        select_intervals(_string(), 3.0 + 0j)
        guard = False
    except ShadowingError as exc:
        guard = "no construction applies" in str(exc)
    ok &= guard
    record(10, ok, "; ".join(parts) + f"; itineraries distinct {itins[0] != itins[1]}; focal guard {guard}")


# --------------------------------------------------------------- 11 ---

def test_criterion_11_figure_smoke(tmp_path):
    outs = []
    for run in (1, 2):
        csv_path = tmp_path / f"p{run}.csv"
        svg_path = tmp_path / f"p{run}.svg"
        code = cli_main(["portrait", "--table", FIG11, "--mu", "5", "--h", "10", "--seeds", "200",
                         "--bounces", "500", "--csv", str(csv_path), "--svg", str(svg_path)])
        outs.append((code, csv_path.read_bytes(), svg_path.read_bytes()))
    data = np.genfromtxt(tmp_path / "p1.csv", delimiter=",", names=True)
    rows = len(data)
    e_ok = bool(np.all(np.isfinite(data["energy_residual"])) and data["energy_residual"].max() < 1e-8)
    r_ok = bool(np.all(np.isfinite(data["min_r"])) and data["min_r"].min() > 0)
    same = outs[0][1:] == outs[1][1:]
    ok = outs[0][0] == 0 and rows == 200 * 501 and e_ok and r_ok and same and outs[0][2].startswith(b"<?xml")
    record(11, ok, f"{rows} rows, energy ok {e_ok}, min_r ok {r_ok}, byte-identical CSV/SVG across runs {same}")


if __name__ == "__main__":
    import pathlib
    import tempfile

    tests = [(int(n.split("_")[2]), fn) for n, fn in globals().items() if n.startswith("test_criterion_")]
    for _, fn in sorted(tests, key=lambda t: t[0]):
        if True:
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(pathlib.Path(d))
                else:
                    fn()
            except AssertionError:
                pass
