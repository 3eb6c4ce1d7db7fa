"""String construction around a constant-width body.

Wrapping a string of length l around a body K and a pin at c traces a
convex table on which c is a focal point of the second kind: the chord sum
phi is constant (2 l plus the width of K, here 14) and Psi has a whole
curve of critical points instead of isolated ones.
"""

import numpy as np

from keplerbilliards import (StringSpec, WidthFourierSpec, classify_kind, critical_points_psi, focal_test,
                             make_string_table)

spec = WidthFourierSpec({0: 1.0, 3: 1 / 3})
table = make_string_table(StringSpec(spec, 3.0 + 0j, 6.0))
c = 3.0 + 0j

print(f"curvature range [{table.min_curvature:.4f}, {table.max_curvature:.4f}]")
v = focal_test(table, c)
print(f"focal test: {v.status}, phi ~ {v.mean:.8f}, variation {v.variation:.1e}")
rep = classify_kind(table, c)
print(f"kind: {rep.kind}, distance extrema at", [f"{p.u:.4f} ({p.kind})" for p in rep.extrema])
cs = critical_points_psi(table, c, n_grid=64)
print(f"Psi critical set is a continuum: {cs.focal_continuum} at level {cs.level:.8f}")
