import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from keplerbilliards.errors import AmbiguousBranch, ArcError
from keplerbilliards.kepler_arc import (ArcClass, check_admissible, f_ccw, f_ccw_grad, generating_S,
                                        jacobi_length, jacobi_length_closed, lc_end_velocity, lc_path,
                                        lc_setup, lc_time, length_gradient, length_gradient_lc, solve_arc)
from keplerbilliards.tables import cross, dot, make_ellipse

E4 = np.exp(1j * np.pi / 4)


def test_lc_setup_branch_signs():
    w0, w1, hreg = lc_setup(1, 1j, "direct", 100.0, 1.0)
    assert w0 == 1 and abs(w1 - E4) < 1e-15 and abs(hreg - 0.005) < 1e-18
    assert abs(dot(w0, w1) - np.sqrt(2) / 2) < 1e-15
    _, w1i, _ = lc_setup(1, 1j, "indirect", 100.0, 1.0)
    assert abs(w1i + E4) < 1e-15
    _, w1a, _ = lc_setup(1, -1, "ccw", 100.0, 1.0)
    assert abs(w1a - 1j) < 1e-15
    _, w1c, _ = lc_setup(1, -1, "cw", 100.0, 1.0)
    assert abs(w1c + 1j) < 1e-15


def test_lc_setup_rejects_degenerate():
    with pytest.raises(AmbiguousBranch):
        lc_setup(1, -1, "direct", 10.0, 1.0)
    with pytest.raises(ArcError):
        lc_setup(0, 1, "direct", 10.0, 1.0)


def test_lc_time_plug_in():
    T = lc_time(1.0 + 0j, 1j, 1.0)
    assert abs(T - np.arccosh(np.sqrt(2))) < 1e-14


def test_lc_time_appendix_bound():
    # strongly negative overlap: y = 1/X <= sqrt(h') / (2 (|w0|^2 + |w1|^2))
    w0, w1 = 1.0 + 0j, -E4
    for hreg in (1e-4, 1e-6):
        T = lc_time(w0, w1, hreg)
        y = 1.0 / (2 * np.cosh(T))
        assert y <= np.sqrt(hreg) / (2 * (abs(w0) ** 2 + abs(w1) ** 2))


@settings(max_examples=80, deadline=None)
@given(r0=st.floats(0.2, 5), r1=st.floats(0.2, 5), a0=st.floats(0, 2 * np.pi), gap=st.floats(0.01, 2.5),
       hreg=st.floats(1e-4, 1.0), flip=st.booleans())
def test_regularized_energy_identity(r0, r1, a0, gap, hreg, flip):
    w0 = np.sqrt(r0) * np.exp(1j * a0 / 2)
    w1 = np.sqrt(r1) * np.exp(1j * (a0 + gap) / 2) * (-1 if flip else 1)
    T = lc_time(w0, w1, hreg)
    w, wp = lc_path(w0, w1, T, np.array([0.0, T]))
    assert abs(w[0] - w0) < 1e-12 and abs(w[1] - w1) < 1e-12 * max(1, abs(w1))
    e = 0.5 * np.abs(wp) ** 2 - 0.5 * np.abs(w) ** 2
    assert np.abs(e - hreg).max() < 1e-10 * max(1.0, abs(w0) ** 2 + abs(w1) ** 2)
    assert abs(wp[1] - lc_end_velocity(w0, w1, T)) < 1e-12 * max(1, abs(wp[1]))


def test_radial_arc_length_matches_1d_quadrature():
    h, mu, lam = 10.0, 2.0, 3.0
    arc = solve_arc(1.0, lam, "direct", h, mu)
    ref, _ = quad(lambda r: np.sqrt(h + mu / r), 1.0, lam, epsabs=1e-13, epsrel=1e-13)
    assert abs(arc.L - ref) < 1e-11
    assert abs(arc.r_min - 1.0) < 1e-12
    g0, g1 = length_gradient(arc)
    assert abs(g0.imag) < 1e-12 and abs(g1.imag) < 1e-12


def test_quarter_arc_examples():
    d = solve_arc(1, 1j, "direct", 100.0, 1.0)
    assert abs(d.L - 10 * np.sqrt(2)) < 0.1 and d.r_min > 0.5
    i = solve_arc(1, 1j, "indirect", 100.0, 1.0)
    assert i.r_min < 0.1 and i.L > 19.0


@pytest.mark.parametrize("cls", ["direct", "indirect", "ccw", "cw"])
def test_closed_form_length_against_quadrature(cls):
    p1 = 0.7 * np.exp(2.0j) if cls in ("direct", "indirect") else 1.3 * np.exp(3.0j)
    arc = solve_arc(1.2 + 0.1j, p1, cls, 50.0, 3.0)
    assert abs(jacobi_length(arc) - jacobi_length_closed(arc)) < 1e-10 * arc.L


def test_potential_free_limit():
    p0, p1 = 1.0 + 0.2j, -0.3 + 0.9j
    arc = solve_arc(p0, p1, "direct", 7.0, 1e-12)
    assert abs(arc.L - np.sqrt(7.0) * abs(p1 - p0)) < 1e-6 * arc.L


def test_endpoint_speed_and_energy():
    arc = solve_arc(1.0 + 0.5j, -0.4 + 1.1j, "indirect", 30.0, 4.0)
    for p, v in ((arc.p0, arc.v0), (arc.p1, arc.v1)):
        assert abs(abs(v) - np.sqrt(2 * (arc.h + arc.mu / abs(p)))) < 1e-10 * abs(v)
    z = arc.z(np.linspace(0, arc.T, 64))
    v = arc.velocity(np.linspace(0, arc.T, 64))
    assert np.abs(0.5 * np.abs(v) ** 2 - arc.mu / np.abs(z) - arc.h).max() < 1e-8 * arc.h


def test_branch_geometry():
    p0, p1 = 1.0 + 0j, np.exp(2.2j)
    d = solve_arc(p0, p1, "direct", 100.0, 1.0)
    tau = np.linspace(0, d.T, 400)
    wind = np.abs(np.diff(np.unwrap(np.angle(d.z(tau))))).sum()
    assert wind < np.pi
    rm = [solve_arc(p0, p1, "indirect", h, 1.0).r_min for h in (1e2, 1e4, 1e6)]
    assert rm[0] > rm[1] > rm[2]
    a = solve_arc(1.0, -1.0 + 0.05j, "ccw", 100.0, 1.0)
    tau = np.linspace(0, a.T, 200)
    assert np.all(cross(a.z(tau), a.velocity(tau)) > 0)


def test_gradient_forms_agree():
    for cls, p1 in (("direct", 0.5 + 0.8j), ("indirect", 0.5 + 0.8j), ("ccw", -1.2 - 0.1j), ("cw", -1.2 - 0.1j)):
        arc = solve_arc(0.9 + 0.2j, p1, cls, 40.0, 2.0)
        assert abs(length_gradient(arc)[1] - length_gradient_lc(arc)) < 1e-9 * abs(length_gradient_lc(arc))


def test_ccw_gradient_limit():
    p0, p1 = 1.0 + 0j, 1.5 * np.exp(3.0j)
    h = 1e6
    _, g1 = length_gradient(solve_arc(p0, p1, "ccw", h, 1.0))
    assert abs(g1 / np.sqrt(h) - f_ccw_grad(p0, p1)[1]) < 1e-2
    assert abs(solve_arc(p0, p1, "ccw", h, 1.0).L / np.sqrt(h) - f_ccw(p0, p1)) < 1e-2


def test_generating_partials_and_symmetry():
    e = make_ellipse(2.0, 1.0)
    c = 0.5 + 0.3j
    S, d1, d2 = generating_S(e, 0.4, 2.0, "direct", 20.0, 1.0, c)
    s = 1e-6
    assert abs(d1 - (generating_S(e, 0.4 + s, 2.0, "direct", 20.0, 1.0, c)[0]
                     - generating_S(e, 0.4 - s, 2.0, "direct", 20.0, 1.0, c)[0]) / (2 * s)) < 1e-5 * abs(d1)
    assert abs(d2 - (generating_S(e, 0.4, 2.0 + s, "direct", 20.0, 1.0, c)[0]
                     - generating_S(e, 0.4, 2.0 - s, "direct", 20.0, 1.0, c)[0]) / (2 * s)) < 1e-5 * abs(d2)
    circ = make_ellipse(1.0, 1.0)
    vals = [generating_S(circ, x, x + np.pi - 0.01, "indirect", 20.0, 1.0)[0] for x in (0.1, 1.3, 4.0)]
    assert np.ptp(vals) < 1e-10


def test_admissibility():
    check_admissible(1.0, 1j, "direct", 0.2)
    with pytest.raises(ArcError):
        check_admissible(1.0, -1.0 + 0.01j, "direct", 0.2)
    with pytest.raises(ArcError):
        check_admissible(1.0, 1j, "ccw", 0.2)
    with pytest.raises(ArcError):
        check_admissible(0.1, 1j, "direct", 0.2)


def test_arc_class_parse():
    assert ArcClass.parse("Indirect") is ArcClass.INDIRECT
    with pytest.raises(ValueError):
        ArcClass.parse("sideways")
