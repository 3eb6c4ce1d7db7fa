"""Periodic orbits following symbolic words near a punctured triangle.

For the ellipse with center c = (0.5, 0.3), Psi has a non-zero-area
critical triangle.  Each word over {T, T'} is realized by a periodic orbit
alternating direct arcs and near-collision passages, found as a critical
point of the summed generating function and checked independently.
"""

import numpy as np

from keplerbilliards import Scene, itinerary, make_ellipse, select_intervals, solve_word, verify_orbit

e = make_ellipse(2.0, 1.0)
c = 0.5 + 0.3j
dom = select_intervals(e, c)
print(f"template: {dom.kind}, {dom.note}")

for h in (1e3, 1e5):
    scene = Scene(e, c, 1.0, h)
    for word in ("TT'", "TTT'", "TT'T'"):
        orbit = solve_word(word, scene, dom)
        rep = verify_orbit(orbit, scene, dom)
        print(f"h={h:.0e} {word:6s} period {orbit.period} residual {rep.max_reflection_residual:.1e} "
              f"replay {rep.replay_error:.1e} {'PASS' if rep.passed else 'FAIL'}")
        print("   bounces u =", np.round(orbit.u, 5), "intervals", " ".join(itinerary(orbit)))
