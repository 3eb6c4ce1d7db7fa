"""Ellipse with the attraction center at a focus.

The distance sum phi(xi) = |gamma(xi) - c| + |gamma(xi') - c| is constant
when c is a focus, and the chord through a focus orthogonal to the major
axis is the unique double normal through c.  Moving c away from the focus
destroys both properties.
"""

import numpy as np

from keplerbilliards import (dT2_two_periodic, focal_test, make_ellipse, orthogonal_chords_through, phi)

e = make_ellipse(2.0, 1.0)
xi = np.linspace(0, 2 * np.pi, 9, endpoint=False)

for c in (np.sqrt(3) + 0j, 1.0 + 0j):
    v = focal_test(e, c)
    print(f"c = {c.real:.4f}: {v.status}, relative variation {v.variation:.2e}")
    print("  phi samples:", np.round(phi(e, c, xi), 6))

ch = orthogonal_chords_through(e, 0j)[0]
M, tr, disc, red = dT2_two_periodic(ch)
print(f"center diameter: length {ch.d:.3f}, trace of DT^2 {tr:.1f}, reduced discriminant {red:.0f}")
