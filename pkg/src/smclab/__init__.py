"""Sequential MCMC laboratory on finite state spaces.

Exact propagators and oracles, a particle engine with compiled and
pure-Python kernels, error-bound assembly from tree and local-mixing
constants, and the staircase and two-branch worked examples.
"""
from .errors import *  # noqa: F401,F403
from .fk import (FkModel, asymptotic_variance, evolve_measures, identity_model, per_level_variances,
                 propagator_apply, propagator_sweep, variance_under)
from .kernels import BACKENDS, DEFAULT_BACKEND, get_backend
from .particles import Estimator, MseEstimate, estimate_mse, replicate, run_particle_system
from .oracle import enumerate_exact_mse, exact_mse_nu, moment_matrices
from .bounds import (BoundReport, Kind, StabilityConstants, VarianceProfile, assemble_thm1, assemble_thm2,
                     c_hat, d_hat, eta_error_bound)
from .tree import TreeModel, compute_tree_constants, induce_fk_model, project_measure, tree_propagator
from .sis import build_sis, degeneracy_report, run_sis, sis_exact_mse
from .local import (LocalModel, PartitionHierarchy, check_density_bound, check_hyperbound, check_local_mixing,
                    level_norm, local_norm, mass_constants, restricted_measure, stability_chain,
                    verify_propagator_inequalities)

__version__ = "0.1.0"
