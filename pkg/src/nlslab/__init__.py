"""Ground states, split-step evolution and blow-up certificates for the NLS
with harmonic confinement in one direction, ``i u_t = -Lap u + x_N^2 u - |u|^(p-1) u``.
"""

from .diagnostics import (BlowupCertificate, PreconditionError, VirialReport, certify_blowup,
                          in_blowup_set, action_virial_gap, lemma1_gap, moment_F,
                          moment_F_prime,
                          tmax_upper_bound, virial_check)
from .evolve import EvolveOptions, TrajectoryRecord, adaptive_dt, evolve, strang_step
from .functionals import (BoundaryWarning, ModelParams, ParameterError, action,
                          action_gradient, energy, heisenberg_gap, j_functional, nehari,
                          nehari_scale, transverse_rescale, virial_p, x_norm_sq)
from .grid import (Field, Grid, boundary_mass, build_grid, gradient_norms_sq, laplacian,
                   lp_norm_pp, translate, weighted_moment)
from .ground_state import (GroundState, GroundStateOptions, NonConvergenceError,
                           center_transverse, nehari_project, solve_ground_state)
from .snapshot import load_field, save_field

__version__ = "0.1.0"
