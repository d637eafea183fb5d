"""Extremal ellipsoids: circumscribed and inscribed, closed-form and numeric.

Closed forms for ball slabs and truncated cones, general-purpose MVEE and
MVIE solvers, optimality certification through contact multipliers, finite
symmetry machinery, and an ellipsoid-method feasibility loop built on the
slab update.
"""

from .core import (AffineMap, Ellipsoid, Polytope, chebyshev_center, contains,
                   ellipsoid_from_dict, ellipsoid_to_dict, identity_map,
                   map_ellipsoid, polar, polytope_is_bounded, support_function,
                   unit_ball, unit_ball_volume, unit_directions, volume)
from .certify import (CertResult, ContactCertificate, breadth_diameter,
                      certify_ce, certify_ie, fritz_john_residuals,
                      john_factors, lukacs_certificate, recover_multipliers)
from .cutting import (CutStepRecord, FeasibilityProblem, FeasibilityResult,
                      central_cut_step, parallel_cut_step, solve_feasibility)
from .errors import (DegenerateInput, EmptyBody, EmptySlab,
                     ExtremalEllipsoidError, InvalidBody, InvalidDirection,
                     InvalidEllipsoid, NotNonnegative, NotOptimal,
                     SingularMap, SingularShape, Unconverged)
from .slab import (AxialEllipsoidParams, GeneralSlab, SlabSpec, ce_cone,
                   ce_contact_points, ce_slab, cone_boundary_points,
                   cone_contact_points, denormalize, ie_slab,
                   ie_support_polytope, normalize, slab_boundary_points)
from .solve import SolverConfig, grid_oracle_slab, mvee_points, mvie_polytope
from .symmetry import (FiniteGroup, check_invariant_ellipsoid, cyclic_group,
                       dihedral_group, group_from_dict, group_to_dict,
                       invariant_center, invariant_shape, named_group, orbit,
                       permutation_group, signed_permutation_group,
                       slab_symmetry_group)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
