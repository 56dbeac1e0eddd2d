"""Distribution-free goodness-of-fit tests on discretised distributions.

Both transforms are built from dense linear algebra on a grid of N cells:
the regression transform (``kt1``) turns the estimated-parameter empirical
process into an innovation process, and the rotation (``operators.rotation_vk``
with ``processes.primal_rotation``) carries it onto a parameter-free target
whose null distribution can be tabulated once.
"""
from .discretization import (CellCounts, DiscreteDistribution, build_equiprobable_grid,
                             cell_probabilities, counts_from_sample, discretize,
                             grid_from_config, validate_distribution)
from .families import ParametricFamily, make_family, tabulated_family
from .gof import (GaussianTargetModel, NullTable, SampledModel, TestReport, UniformTarget,
                  chi_squared_stat, cvm_stat, ks_stat, mc_null_table, run_test, two_sample_ks)
from .operators import (LinearOperator, accumulate, big_pi, embed_L, pi_sqrt, reflection_u0,
                        reflection_weighted, rotation_vk)
from .processes import (DualFunction, ProcessIncrements, cumulative_path, empirical_increments,
                        eval_functional, heaviside, primal_rotation, project_increments,
                        rotate_functional, simulate_bm_increments)
from .scores import (ScoreSet, information_matrix, inv_sqrt_psd, normalize_scores, raw_scores,
                     score_set)

__version__ = "0.1.0"
