"""Regime-switching rough differential equations and Wong-Zakai experiments."""

from ._version import __version__
from .control import ControlFn
from .fields import (ConstantField, LinearField, SinusoidField, VectorField, VectorFieldFamily,
                     WithDrift, builtin_family, lip_norm)
from .gaussian import (ApproxReport, GaussianSpec, RngSeed, check_condition_approx, cov_grid,
                       fbm_covariance, interpolate, interpolate_on_grid, sample, sample_batch)
from .greedy import (DegenerateTail, GreedyResult, TailFit, TailInclusion, check_doubling,
                     check_subadditivity, check_tail_inclusion, fit_tail, greedy_sequence, n_alpha)
from .lift import (ChenReport, ControlledPath, Flavor, Level2RoughPath, augment_time, check_chen,
                   controlled_remainder, eval_second, insert_times, lift_piecewise_linear,
                   restrict, second_table, to_ito)
from .paths import IntervalIdx, SamplePath, increment, outer, resample_linear, sup_distance
from .switching import (JumpTailReport, JumpTrajectory, LipschitzBoundReport, SolverBlowUp,
                        SwitchingSolution, check_jump_tail, lipschitz_bound, simulate_ctmc,
                        solve_rde, solve_switching_rde, switching_rough_integral,
                        symmetric_generator)
from .variation import (Cov2DVariation, CovGrid, VariationResult, cov_2d_variation,
                        distance_control, p_variation, path_p_variation, pvar_control,
                        rho_pvar_metric, rough_distance_homog, second_p_variation)
