"""Phase portrait of the Kepler billiard in the string table.

200 seeds, 500 bounces each, at mu = 5 and h = 10 with the center at the
focal point.  Writes portrait.csv and portrait.svg next to this script and
reports the energy and collision-distance checks.
"""

import pathlib
import time

import numpy as np

from keplerbilliards import (KeplerBilliard, Scene, StringSpec, WidthFourierSpec, default_seeds,
                             make_string_table, well_defined_check)
from keplerbilliards.export import portrait_svg, write_portrait_csv

here = pathlib.Path(__file__).parent
table = make_string_table(StringSpec(WidthFourierSpec({0: 1.0, 3: 1 / 3}), 3.0 + 0j, 6.0))
scene = Scene(table, 3.0 + 0j, 5.0, 10.0)

ok, r, margin = well_defined_check(scene)
print(f"curvature criterion for a well-defined map: {ok} (margin {margin:.4f})")

kb = KeplerBilliard(scene)
t0 = time.perf_counter()
res = kb.portrait(default_seeds(kb, 200, 0), 500)
print(f"{res['valid'][1:].sum()} bounces in {time.perf_counter() - t0:.1f} s")
print(f"max energy residual {np.nanmax(res['energy_residual']):.2e}, "
      f"closest approach {np.nanmin(res['min_r']):.2e}")

write_portrait_csv(here / "portrait.csv", res["u"], res["alpha"], res["energy_residual"], res["min_r"],
                   res["valid"])
portrait_svg(here / "portrait.svg", res["u"], res["alpha"], res["valid"], title="string table, mu=5, h=10")
