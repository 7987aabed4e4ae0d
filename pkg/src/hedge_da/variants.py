"""Hedge parameterizations as Dual Averaging schedules.

Hedge with score ``U(z) = gamma ** (a z + b)`` is Dual Averaging with
``lambda_t = ln(1/gamma)`` and ``beta_t = 1``.  The other three variants
pick ``gamma``, ``a``, ``b`` and the two sequences to minimize the regret
bound of the engine:

``original``          Freund-Schapire score, constant weights, needs ``T``
``optimal``           constant weights with optimal gamma and b, needs ``T``
``time-independent``  constant weights, ``beta_{t+1} = beta_t + 1/beta_t``
``aggressive``        ``lambda_t ~ (t+1)^2``, ``beta_t = t^2.5``
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import Schedule, check_loss
from .errors import ConfigError, ParameterError, StateError
from .simplex import Portfolio

VARIANTS = ("original", "optimal", "time-independent", "aggressive")
NEEDS_HORIZON = frozenset({"original", "optimal"})


@dataclass(frozen=True)
class LossBounds:
    """Every loss lies in ``[-mu, rho]``; ``mu`` is the largest gain."""

    mu: float
    rho: float

    def __post_init__(self):
        if self.mu < 0 or self.rho < 0:
            raise ParameterError(f"mu and rho must be nonnegative, got mu={self.mu!r}, rho={self.rho!r}")
        if not self.mu + self.rho > 0:
            raise ParameterError("mu + rho must be positive (degenerate loss range)")

    @property
    def width(self) -> float:
        return self.mu + self.rho


@dataclass(frozen=True)
class HedgeParams:
    """Score function ``U(z) = gamma ** (a z + b)`` on ``[-mu, rho]``."""

    gamma: float
    a: float
    b: float
    bounds: LossBounds

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ParameterError(f"gamma must lie in (0, 1), got {self.gamma!r}")
        if not self.a > 0.0:
            raise ParameterError(f"a must be positive, got {self.a!r}")

    @property
    def rate(self) -> float:
        """``ln(1/gamma)``, the constant step weight of the schedule."""
        return -math.log(self.gamma)

    def score(self, z):
        return self.gamma ** (self.a * np.asarray(z, dtype=float) + self.b)


def _check_n(n):
    if int(n) != n or n < 2:
        raise ParameterError(f"need n >= 2 products, got {n!r}")


def _check_T(T):
    if int(T) != T or T < 1:
        raise ParameterError(f"need T >= 1 steps, got {T!r}")


def _check_a(a):
    if not a > 0.0:
        raise ParameterError(f"a must be positive, got {a!r}")


def oracle_bound_L(a: float, b: float, bounds: LossBounds) -> float:
    """Largest ``|a z + b|`` over ``z`` in ``[-mu, rho]``."""
    _check_a(a)
    return max(abs(-a * bounds.mu + b), abs(a * bounds.rho + b))


def original_hedge_schedule(params: HedgeParams, horizon: Optional[int] = None) -> Schedule:
    return Schedule.constant(params.rate, 1.0, params.a, params.b, tag="original", horizon=horizon)


def freund_schapire_gamma(n: int, T: float) -> float:
    """``1 / (sqrt(2 ln n / T) + 1)``.  ``T`` may be any positive real."""
    _check_n(n)
    if not T >= 1:
        raise ParameterError(f"need T >= 1, got {T!r}")
    return 1.0 / (math.sqrt(2.0 * math.log(n) / T) + 1.0)


def freund_schapire_params(n: int, T: int, bounds: LossBounds) -> HedgeParams:
    """Classic Hedge: scores rescaled to ``[0, 1]`` and the tuned gamma."""
    _check_T(T)
    w = bounds.width
    return HedgeParams(freund_schapire_gamma(n, T), 1.0 / w, bounds.mu / w, bounds)


def _centered_params(exponent: float, bounds: LossBounds, a_star: float) -> HedgeParams:
    # b* centres the score range, so L(a*, b*) = a* (mu + rho) / 2
    _check_a(a_star)
    gamma = math.exp(-exponent / (a_star * bounds.width))
    return HedgeParams(gamma, a_star, 0.5 * (bounds.mu - bounds.rho) * a_star, bounds)


def optimal_hedge_params(n: int, T: int, bounds: LossBounds, a_star: float = 1.0) -> HedgeParams:
    _check_n(n)
    _check_T(T)
    return _centered_params(2.0 * math.sqrt(2.0 * math.log(n) / T), bounds, a_star)


def optimal_hedge_schedule(n: int, T: int, bounds: LossBounds, a_star: float = 1.0) -> Schedule:
    p = optimal_hedge_params(n, T, bounds, a_star)
    return Schedule.constant(p.rate, 1.0, p.a, p.b, tag="optimal", horizon=T)


def time_independent_params(n: int, bounds: LossBounds, a_star: float = 1.0) -> HedgeParams:
    _check_n(n)
    return _centered_params(2.0 * math.sqrt(2.0 * math.log(n)), bounds, a_star)


def aggressive_params(n: int, bounds: LossBounds, a_star: float = 1.0) -> HedgeParams:
    _check_n(n)
    return _centered_params(2.0 * math.sqrt(7.0 * math.log(n)), bounds, a_star)


class RecurrenceBeta:
    """``beta_0 = beta_1 = 1``, ``beta_{t+1} = beta_t + 1/beta_t``.

    Values are memoized; the sequence satisfies
    ``sqrt(2t - 1) <= beta_t <= 1/(1 + sqrt(3)) + sqrt(2t - 1)`` for t >= 1.
    """

    def __init__(self):
        self._values = [1.0, 1.0]

    def __call__(self, t: int) -> float:
        values = self._values
        while len(values) <= t:
            last = values[-1]
            values.append(last + 1.0 / last)
        return values[t]


def time_independent_schedule(n: int, bounds: LossBounds, a_star: float = 1.0) -> Schedule:
    p = time_independent_params(n, bounds, a_star)
    rate = p.rate
    return Schedule(lambda t: rate, RecurrenceBeta(), p.a, p.b, tag="time-independent")


def _aggressive_beta(t: int) -> float:
    # t^2.5 vanishes at t = 0; the engine never projects with beta_0
    return 1.0 if t == 0 else float(t) ** 2.5


def aggressive_schedule(n: int, bounds: LossBounds, a_star: float = 1.0) -> Schedule:
    p = aggressive_params(n, bounds, a_star)
    rate = p.rate
    return Schedule(lambda t: rate * (t + 1.0) ** 2, _aggressive_beta, p.a, p.b, tag="aggressive")


def make_schedule(variant: str, n: int, bounds: LossBounds, T: Optional[int] = None,
                  a_star: float = 1.0) -> Schedule:
    """Build the schedule for ``variant`` by name."""
    if variant in NEEDS_HORIZON and T is None:
        raise ConfigError(f"variant {variant!r} is tuned for a fixed horizon; T is required")
    if variant == "original":
        return original_hedge_schedule(freund_schapire_params(n, T, bounds), horizon=T)
    if variant == "optimal":
        return optimal_hedge_schedule(n, T, bounds, a_star)
    if variant == "time-independent":
        return time_independent_schedule(n, bounds, a_star)
    if variant == "aggressive":
        return aggressive_schedule(n, bounds, a_star)
    raise ConfigError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Unnormalized product weights, stored as logarithms so they never
    underflow to zero or overflow."""

    log_w: np.ndarray

    def __post_init__(self):
        lw = np.array(self.log_w, dtype=float)
        if not np.all(np.isfinite(lw)):
            raise StateError("weights must be positive and finite")
        object.__setattr__(self, "log_w", lw)

    @classmethod
    def from_weights(cls, w) -> "WeightVector":
        w = np.asarray(w, dtype=float)
        if np.any(~(w > 0.0)) or not np.all(np.isfinite(w)):
            raise StateError("weights must be positive and finite")
        return cls(np.log(w))

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls(np.full(n, -math.log(n)))

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_w)

    def portfolio(self) -> Portfolio:
        z = self.log_w - self.log_w.max()
        e = np.exp(z)
        return Portfolio(e / e.sum())


def hedge_weight_step(w: WeightVector, loss, schedule: Schedule, t: int) -> WeightVector:
    """Multiplicative update from step ``t`` to ``t + 1``::

        w_{t+1,i} = exp(-lambda_t (a l_i + b) / beta_{t+1}) * w_{t,i} ** (beta_t / beta_{t+1})

    With ``beta = 1`` this is ``w_{t,i} * gamma ** (a l_i + b)``.
    """
    ell = check_loss(loss, w.log_w.size, step=t)
    beta_now, beta_next = schedule.beta_at(t), schedule.beta_at(t + 1)
    lam = schedule.lambda_at(t)
    score = schedule.a * ell + schedule.b
    return WeightVector((beta_now / beta_next) * w.log_w - lam * score / beta_next)


def hedge_trajectory(schedule: Schedule, losses) -> np.ndarray:
    """Portfolios ``x_0 .. x_T`` of the multiplicative-weights form, shape (T+1, n)."""
    losses = np.asarray(losses, dtype=float)
    T, n = losses.shape
    w = WeightVector.uniform(n)
    out = np.empty((T + 1, n))
    out[0] = w.portfolio().weights
    for t in range(T):
        w = hedge_weight_step(w, losses[t], schedule, t)
        out[t + 1] = w.portfolio().weights
    return out


def score_condition_check(params: HedgeParams, grid: int = 1000, *, literal: bool = False):
    """Check the score-function sandwich on a uniform grid of ``[-mu, rho]``::

        gamma ** ((z + mu) / (mu + rho)) <= U(z) <= 1 - (1 - gamma) (z + mu) / (mu + rho)

    ``literal=True`` uses ``(1 - z)`` in place of ``(1 - gamma)`` in the
    upper bound, for comparison.  Returns ``(passed, worst)`` where
    ``worst`` is the largest signed violation (positive means violated).
    """
    if grid < 2:
        raise ParameterError(f"grid must have at least 2 points, got {grid}")
    mu, rho = params.bounds.mu, params.bounds.rho
    z = np.linspace(-mu, rho, grid)
    frac = (z + mu) / (mu + rho)
    u = params.score(z)
    lower = params.gamma ** frac
    slope = (1.0 - z) if literal else (1.0 - params.gamma)
    upper = 1.0 - slope * frac
    worst = float(max(np.max(lower - u), np.max(u - upper)))
    return worst <= 1e-12, worst
