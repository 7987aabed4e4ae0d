"""Dual Averaging over the simplex with regret accounting.

One step of the iteration::

    l_t = oracle(x_t)                     # loss vector, may depend on x_t
    g_t = a * l_t + b                     # affine score transform
    s_{t+1} = s_t - lambda_t * g_t
    x_{t+1} = softmax(s_{t+1} / beta_{t+1})

The ledger accrues ``lambda_t * <l_t, x_t>`` against the pre-update
portfolio and tracks every product's weighted cumulative loss, so the
averaged regret against the best fixed portfolio is available at any time.
Regret is kept in loss units; the score transform only rescales it by ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import DomainError, InputError, ParameterError, StateError
from .simplex import Portfolio, softmax_scaled


class Schedule:
    """Step weights ``lambda_t``, projection parameters ``beta_t`` and the
    affine score transform ``z -> a z + b``.

    ``horizon`` is the number of steps the parameters were tuned for, or
    None when the schedule is valid for any horizon.
    """

    def __init__(
        self,
        lam: Callable[[int], float],
        beta: Callable[[int], float],
        a: float = 1.0,
        b: float = 0.0,
        *,
        tag: str = "custom",
        horizon: Optional[int] = None,
    ):
        if not a > 0.0:
            raise ParameterError(f"score slope a must be positive, got {a!r}")
        self._lam = lam
        self._beta = beta
        self.a = float(a)
        self.b = float(b)
        self.tag = tag
        self.horizon = horizon

    @classmethod
    def constant(cls, lam: float, beta: float = 1.0, a: float = 1.0, b: float = 0.0, **kw) -> "Schedule":
        lam, beta = float(lam), float(beta)
        return cls(lambda t: lam, lambda t: beta, a, b, **kw)

    def lambda_at(self, t: int) -> float:
        value = self._lam(t)
        if not value > 0.0:
            raise ParameterError(f"lambda_{t} = {value!r} is not positive")
        return value

    def beta_at(self, t: int) -> float:
        value = self._beta(t)
        if not value > 0.0:
            raise ParameterError(f"beta_{t} = {value!r} is not positive")
        return value

    def lambdas(self, T: int) -> np.ndarray:
        """``lambda_0 .. lambda_{T-1}``."""
        return np.array([self.lambda_at(t) for t in range(T)])

    def betas(self, T: int) -> np.ndarray:
        """``beta_0 .. beta_T`` (one more entry than :meth:`lambdas`)."""
        return np.array([self.beta_at(t) for t in range(T + 1)])

    def __repr__(self):
        return f"Schedule(tag={self.tag!r}, a={self.a!r}, b={self.b!r}, horizon={self.horizon!r})"


@dataclass(frozen=True, eq=False)
class DualState:
    """Accumulated negated weighted scores ``s``, the step counter and ``x_t``."""

    s: np.ndarray
    t: int
    x: Portfolio

    @classmethod
    def initial(cls, n: int) -> "DualState":
        return cls(np.zeros(n), 0, Portfolio.uniform(n))

    @property
    def n(self) -> int:
        return self.s.size


class HistoryRecord(NamedTuple):
    steps: int          # number of steps taken, t + 1
    step_loss: float    # <l_t, x_t>
    average_loss: float  # unweighted running average
    weighted_average_loss: float


@dataclass(frozen=True, eq=False)
class RegretLedger:
    """Running sums needed for the (weighted) averaged loss and regret."""

    weighted_alg_loss: float
    weighted_product_loss: np.ndarray
    weight_sum: float
    alg_loss: float = 0.0
    steps: int = 0
    history: list = field(default_factory=list)

    @classmethod
    def empty(cls, n: int) -> "RegretLedger":
        return cls(0.0, np.zeros(n), 0.0)


def check_loss(loss, n: int, mu: Optional[float] = None, rho: Optional[float] = None,
               step: Optional[int] = None) -> np.ndarray:
    """Validate a loss vector: shape, finiteness, and optionally ``[-mu, rho]``."""
    ell = np.asarray(loss, dtype=float)
    if ell.shape != (n,):
        where = "" if step is None else f" at step {step}"
        raise InputError(f"loss vector{where} has shape {ell.shape}, expected ({n},)")
    lo, hi = ell.min(), ell.max()
    if mu is None or rho is None:
        mu = rho = math.inf
    # NaN fails every comparison; lo + hi catches infinities
    if not (lo >= -mu and hi <= rho and math.isfinite(lo + hi)):
        where = "" if step is None else f" at step {step}"
        bad = ~np.isfinite(ell)
        if bad.any():
            raise DomainError(f"loss{where} for product {int(np.argmax(bad))} is not finite")
        i = int(np.argmax((ell < -mu) | (ell > rho)))
        raise DomainError(f"loss{where} for product {i} is {float(ell[i])!r}, outside [{-mu!r}, {rho!r}]")
    return ell


def da_step(state: DualState, ledger: RegretLedger, schedule: Schedule, loss,
            bounds=None) -> tuple[DualState, RegretLedger]:
    """Advance one step; returns fresh state and ledger, inputs are untouched.

    ``bounds`` (anything with ``mu`` and ``rho``) enables the range check.
    """
    if state.t != ledger.steps:
        raise StateError(f"state is at step {state.t} but ledger at step {ledger.steps}")
    t = state.t
    if bounds is None:
        ell = check_loss(loss, state.n, step=t)
    else:
        ell = check_loss(loss, state.n, bounds.mu, bounds.rho, step=t)
    lam = schedule.lambda_at(t)
    step_loss = float(np.dot(ell, state.x.weights))

    s = state.s - lam * (schedule.a * ell + schedule.b)
    x = Portfolio._trusted(softmax_scaled(s, schedule.beta_at(t + 1)))
    new_ledger = RegretLedger(
        weighted_alg_loss=ledger.weighted_alg_loss + lam * step_loss,
        weighted_product_loss=ledger.weighted_product_loss + lam * ell,
        weight_sum=ledger.weight_sum + lam,
        alg_loss=ledger.alg_loss + step_loss,
        steps=t + 1,
        history=ledger.history,
    )
    return DualState(s, t + 1, x), new_ledger


def _require_steps(ledger: RegretLedger):
    if ledger.steps < 1:
        raise StateError("ledger is empty; run at least one step")


def averaged_regret(ledger: RegretLedger) -> float:
    """Weighted averaged regret against the best single product (loss units).

    The best fixed portfolio for a linear loss sits at a vertex, so the
    comparator is the product with the smallest weighted cumulative loss.
    """
    _require_steps(ledger)
    best = float(ledger.weighted_product_loss.min())
    return (ledger.weighted_alg_loss - best) / ledger.weight_sum


def weighted_average_loss(ledger: RegretLedger) -> float:
    _require_steps(ledger)
    return ledger.weighted_alg_loss / ledger.weight_sum


def average_loss(ledger: RegretLedger) -> float:
    """Unweighted running average ``sum <l_t, x_t> / t``."""
    _require_steps(ledger)
    return ledger.alg_loss / ledger.steps


def run(schedule: Schedule, oracle, T: int, mu: Optional[float] = None, rho: Optional[float] = None,
        *, n: Optional[int] = None, record_every: int = 0) -> tuple[RegretLedger, DualState]:
    """Run ``T`` steps of Dual Averaging against ``oracle``.

    ``oracle(x)`` receives the current portfolio weights and returns the
    loss vector for this step; it raises ``IndexError`` or ``StopIteration``
    when it has nothing left.  ``n`` defaults to ``oracle.n``.  With
    ``record_every = k > 0`` the ledger's history holds a
    :class:`HistoryRecord` every ``k`` steps and after the last one.
    """
    if T < 1:
        raise ParameterError(f"T must be at least 1, got {T}")
    if n is None:
        n = getattr(oracle, "n", None)
        if n is None:
            raise ParameterError("cannot infer the number of products; pass n")
    bounds = None
    if mu is not None or rho is not None:
        bounds = _Range(0.0 if mu is None else mu, math.inf if rho is None else rho)

    state = DualState.initial(n)
    ledger = RegretLedger.empty(n)
    history = ledger.history
    for t in range(T):
        try:
            loss = oracle(state.x.weights)
        except (IndexError, StopIteration) as exc:
            raise InputError(f"oracle exhausted after {t} of {T} steps") from exc
        prev_alg = ledger.alg_loss
        state, ledger = da_step(state, ledger, schedule, loss, bounds)
        if record_every and ((t + 1) % record_every == 0 or t + 1 == T):
            history.append(HistoryRecord(
                t + 1, ledger.alg_loss - prev_alg,
                ledger.alg_loss / ledger.steps,
                ledger.weighted_alg_loss / ledger.weight_sum))
    return ledger, state


class _Range(NamedTuple):
    mu: float
    rho: float
