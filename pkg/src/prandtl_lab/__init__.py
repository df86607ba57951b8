"""Marching laboratory for steady boundary-layer separation.

The transformed unknown w = u^2 on the stream-function coordinate is
marched to the separation station; analysis routines quantify the wall
shear collapse rate, the near-wall quarter-rate scaling, and curvature
bounds, with an independent physical-variable solver as cross-check.
"""

from .analysis import (CurveScanReport, ExpansionFit, RateFit,
                       check_second_derivative_bounds, compare_solvers,
                       estimate_xstar, fit_rate_exponent, goldstein_fit,
                       mu_of_x, scan_quarter_rate, selfsimilar_collapse,
                       weighted_mass_inequality)
from .errors import (ConfigError, FitError, InsufficientMassError, ModelError,
                     PrandtlLabError, SolverBreakdown, StepRejected)
from .grids import PsiGrid
from .kernels import BACKEND
from .model import (OuterFlow, SeparationCriterionReport, WallProfile,
                    check_separation_condition, load_profile,
                    make_bounded_curvature_profile, make_outer_flow,
                    make_profile, save_profile, validate_profile)
from .physical import (BlasiusReference, PhysState, blasius_profile,
                       blasius_reference, initial_phys_state,
                       march_step_physical, run_physical)
from .records import RunRecord, read_record_csv, write_record_csv
from .vm import (MarchControls, VMState, auto_psi_max, continuation_margin,
                 curvature_field, from_von_mises, march_step,
                 march_until_separation, read_snapshot, to_von_mises,
                 wall_gradient, write_snapshot)

__version__ = "0.1.0"
