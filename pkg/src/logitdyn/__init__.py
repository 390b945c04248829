"""Exact analysis of one-logit and all-logit dynamics on potential and local interaction games."""

__version__ = "0.1.0"

from .curie_weiss import (CwBounds, MagnetizationChain, cw_alpha_y_bound, cw_bounds, cw_game,
                          cw_kappa, cw_lumped_kernel)
from .dynamics import (ALL_LOGIT, ONE_LOGIT, TransitionKernel, all_logit_kernel,
                       cumulative_utility, kappa, kappa_edge, kappa_matrix, logit_choice,
                       make_rng, one_logit_kernel, simulate, simulate_local, simulate_step)
from .errors import (CapExceeded, ConvergenceError, GameSpecError, InconsistencyError,
                     LogitDynError)
from .game import (EdgeGame, LocalInteractionGame, StrategySpace, TableGame,
                   check_exact_potential, decompose_potential, load_game, load_potential_game,
                   potential, potential_from_utilities, utility)
from .mixing import (BottleneckSet, MixingResult, alpha_lower_bound_tmix, bottleneck_lower_bound,
                     dominant_profile_bound, exact_mixing_time, find_dominant_profile,
                     general_upper_bound, mixing_analysis, total_variation)
from .observables import (BipartitionCertificate, Observable, PairPermutation, bipartite_mu,
                          bipartiting_weight, diff, expectation, invariance_gap, monoc,
                          verify_decomposition, verify_observable_decomposable)
from .reversibility import (ReversibilityReport, certify, check_cumulative_utility_condition,
                            check_detailed_balance, check_k_symmetry, kolmogorov_check)
from .stationary import (Distribution, all_logit_stationary_closed_form,
                         bipartite_product_identity, gibbs, partition_functions,
                         stationary_by_solve)
