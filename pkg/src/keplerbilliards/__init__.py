"""Kepler billiards in strictly convex planar tables."""

from .birkhoff import (PhaseState, TwoPeriodicData, bmap, chord_exit, delta_graphs, dT2_two_periodic,
                       dT_two_periodic, iterate_portrait, orthogonal_chords_through, phase_jacobian)
from .errors import (AmbiguousBranch, ArcError, BracketingError, GrazingError, KeplerBilliardError,
                     ShadowingError, TableError)
from .focal import (CriticalPoint, FocalPolynomial, PsiCriticalSet, chord_report, classify_kind,
                    critical_points_psi, focal_polynomial, focal_test, grad_psi, hess_det_chord,
                    index_additivity, is_focal, phi, psi, psi_a, psi_c, psi_star, winding_index)
from .kepler_arc import (ArcClass, KeplerArc, generating_S, jacobi_length, jacobi_length_closed,
                         length_gradient, solve_arc)
from .kepler_billiard import (BilliardState, Flight, KeplerBilliard, default_seeds, kmap, portrait,
                              propagate, well_defined_check)
from .shadowing import (RealizedOrbit, SymbolWord, VerificationReport, WordDomain, itinerary,
                        select_intervals, solve_word, verify_orbit)
from .tables import (BoundaryTable, PolarChart, Scene, StringSpec, WidthFourierSpec, make_ellipse,
                     make_string_table, make_width_table, ray_exit)

__version__ = "0.1.0"
