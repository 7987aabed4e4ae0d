"""Hedge as Dual Averaging: schedules, regret bounds and market simulation."""

from .bounds import (BoundReport, aggressive_bound, certify, closed_form_bound, fs_corollary_bound,
                     optimal_hedge_bound, theorem1_rhs, time_independent_bound)
from .engine import (DualState, RegretLedger, Schedule, average_loss, averaged_regret, da_step, run,
                     weighted_average_loss)
from .errors import (ConfigError, DomainError, HedgeError, InputError, ParameterError, ParseError,
                     StateError)
from .simplex import Portfolio, dual_norm_inf, entropic_prox, mirror_project
from .variants import (VARIANTS, HedgeParams, LossBounds, WeightVector, aggressive_schedule,
                       freund_schapire_gamma, hedge_weight_step, make_schedule, optimal_hedge_params,
                       oracle_bound_L, original_hedge_schedule, score_condition_check,
                       time_independent_schedule)

__version__ = "0.1.0"
