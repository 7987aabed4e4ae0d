"""Regret guarantees: the generic Dual Averaging bound and the closed forms
of each Hedge variant.

The generic bound for a schedule with ``||g_t||_inf <= L_t`` is::

    (beta_T D + 1/2 sum_{t<T} lambda_t^2 L_t^2 / beta_t) / sum_{t<T} lambda_t

in score units; dividing by ``a`` gives loss units.  ``D = ln n`` bounds
the entropic prox-function on the simplex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .engine import RegretLedger, Schedule, averaged_regret
from .errors import InputError, ParameterError
from .variants import LossBounds, _check_n, _check_T, oracle_bound_L

SLACK = 1e-9


def theorem1_rhs(schedule: Schedule, T: int, D: float, g_norms, *, denominator: str = "current") -> float:
    """Right-hand side of the Dual Averaging regret bound, in score units.

    ``g_norms`` is either a uniform bound ``L`` or the ``T`` per-step dual
    norms.  ``denominator="current"`` divides step ``t`` by ``beta_t`` (the
    parameter that produced ``x_t``); ``"next"`` uses ``beta_{t+1}``.
    """
    if T < 1:
        raise ParameterError(f"T must be at least 1, got {T}")
    if not D > 0:
        raise ParameterError(f"D must be positive, got {D!r}")
    lam = schedule.lambdas(T)
    beta = schedule.betas(T)
    if denominator == "current":
        div = beta[:-1]
    elif denominator == "next":
        div = beta[1:]
    else:
        raise ParameterError(f"denominator must be 'current' or 'next', got {denominator!r}")
    norms = np.broadcast_to(np.asarray(g_norms, dtype=float), (T,))
    numerator = float(beta[T]) * D + 0.5 * float(np.sum(lam * lam * norms * norms / div))
    return numerator / float(lam.sum())


class StatedDerived(NamedTuple):
    stated: float
    derived: float


class TightRelaxed(NamedTuple):
    tight: float
    relaxed: float


def optimal_hedge_bound(n: int, T: int, bounds: LossBounds) -> StatedDerived:
    """Optimal Hedge guarantee.

    ``stated`` is ``(mu+rho)/2 sqrt(ln n / T)``; ``derived`` is
    ``(mu+rho)/2 sqrt(2 ln n / T)``, what the generic bound actually gives for
    the optimal parameters.  Only ``derived`` is certified.
    """
    _check_n(n)
    _check_T(T)
    half = 0.5 * bounds.width
    return StatedDerived(half * math.sqrt(math.log(n) / T), half * math.sqrt(2.0 * math.log(n) / T))


def fs_corollary_bound(n: int, T: float, bounds: LossBounds) -> float:
    """Classic Hedge guarantee ``(mu+rho) (ln n / T + sqrt(2 ln n / T))``."""
    _check_n(n)
    if not T > 0:
        raise ParameterError(f"need T > 0, got {T!r}")
    r = math.log(n) / T
    return bounds.width * (r + math.sqrt(2.0 * r))


def time_independent_bound(n: int, T: int, bounds: LossBounds) -> TightRelaxed:
    _check_n(n)
    _check_T(T)
    w = bounds.width
    tight = w * (1.0 / ((1.0 + math.sqrt(3.0)) * T) + math.sqrt(2.0 / T)) * math.sqrt(math.log(n) / 2.0)
    return TightRelaxed(tight, 2.0 * w * math.sqrt(math.log(n) / T))


def aggressive_bound(n: int, T: int, bounds: LossBounds) -> float:
    """``3 (mu+rho) sqrt(ln n / (7T))`` on the (t+1)^2-weighted regret; requires T > 6."""
    _check_n(n)
    if int(T) != T or T <= 6:
        raise ParameterError(f"aggressive bound requires T > 6, got T={T}")
    return 3.0 * bounds.width * math.sqrt(math.log(n) / (7.0 * T))


def closed_form_bound(variant: str, n: int, T: int, bounds: LossBounds) -> float:
    """The variant's own closed-form guarantee; nan where none applies."""
    if variant == "original":
        return fs_corollary_bound(n, T, bounds)
    if variant == "optimal":
        return optimal_hedge_bound(n, T, bounds).derived
    if variant == "time-independent":
        return time_independent_bound(n, T, bounds).tight
    if variant == "aggressive" and T > 6:
        return aggressive_bound(n, T, bounds)
    return math.nan


@dataclass(frozen=True)
class BoundReport:
    variant: str
    generic_rhs: float
    closed_form: float
    empirical_regret: float
    satisfied: bool

    def lines(self):
        return [
            f"variant = {self.variant}",
            f"empirical_regret = {self.empirical_regret!r}",
            f"generic_rhs = {self.generic_rhs!r}",
            f"closed_form = {self.closed_form!r}",
            f"satisfied = {str(self.satisfied).lower()}",
        ]


def certify(ledger: RegretLedger, schedule: Schedule, T: int, n: int, bounds: LossBounds) -> BoundReport:
    """Compare a finished run's weighted regret with the generic bound.

    The regret uses the schedule's own weights, so for the aggressive
    variant it is the (t+1)^2-weighted regret.
    """
    if ledger.steps != T:
        raise InputError(f"ledger holds {ledger.steps} steps but T={T}")
    L = oracle_bound_L(schedule.a, schedule.b, bounds)
    generic = theorem1_rhs(schedule, T, math.log(n), L) / schedule.a
    empirical = averaged_regret(ledger)
    return BoundReport(
        variant=schedule.tag,
        generic_rhs=generic,
        closed_form=closed_form_bound(schedule.tag, n, T, bounds),
        empirical_regret=empirical,
        satisfied=empirical <= generic + SLACK,
    )
