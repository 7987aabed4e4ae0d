"""Geometry of the standard simplex.

Portfolios live on the (n-1)-simplex.  The prox-function is the negative
entropy shifted so that it vanishes at the uniform portfolio, and the
mirror operator is the log-domain softmax of ``s / beta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

#: Largest deviation of sum(weights) from 1 that construction silently absorbs.
RENORMALIZE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Portfolio:
    """A point of the simplex: nonnegative shares summing to one.

    Inputs whose sum is within ``RENORMALIZE_TOL`` of 1 are renormalized,
    larger deviations are rejected.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise ParameterError(f"portfolio needs a vector of n >= 2 entries, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ParameterError("portfolio entries must be finite")
        if np.any(w < 0.0):
            raise ParameterError(f"portfolio entries must be nonnegative, min is {w.min()!r}")
        total = w.sum()
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise ParameterError(f"portfolio entries sum to {total!r}, not 1")
        w /= total
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @classmethod
    def _trusted(cls, w: np.ndarray) -> "Portfolio":
        # for softmax outputs, which are valid by construction
        obj = object.__new__(cls)
        w.flags.writeable = False
        object.__setattr__(obj, "weights", w)
        return obj

    @classmethod
    def uniform(cls, n: int) -> "Portfolio":
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.weights.size

    def __len__(self):
        return self.weights.size

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    def __repr__(self):
        return f"Portfolio({np.array2string(self.weights, precision=6)})"


def _as_vector(s) -> np.ndarray:
    return np.asarray(s, dtype=float)


def entropic_prox(x) -> float:
    """Return ``ln(n) + sum x_i ln x_i`` with the convention ``0 ln 0 = 0``.

    The value lies in ``[0, ln n]``: zero at the uniform portfolio and
    ``ln n`` at a vertex.
    """
    w = np.asarray(x if not isinstance(x, Portfolio) else x.weights, dtype=float)
    positive = w[w > 0.0]
    value = np.log(w.size) + float(np.dot(positive, np.log(positive)))
    # rounding can push the uniform case a hair below zero
    return min(max(value, 0.0), float(np.log(w.size)))


def softmax_scaled(s, beta: float) -> np.ndarray:
    """Log-domain softmax of ``s / beta`` as a plain array (no validation)."""
    z = _as_vector(s) / beta
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def mirror_project(s, beta: float) -> Portfolio:
    """Maximizer of ``<s, x - x0> - beta * d(x)`` over the simplex.

    Computed as ``softmax(s / beta)`` after subtracting the largest entry,
    so dual vectors with entries far beyond the exp overflow threshold are
    handled exactly.  Tiny entries are not floored.
    """
    if not beta > 0.0:
        raise ParameterError(f"projection parameter beta must be positive, got {beta!r}")
    s = _as_vector(s)
    if not np.all(np.isfinite(s)):
        raise ParameterError("dual vector must be finite")
    return Portfolio._trusted(softmax_scaled(s, beta))


def dual_norm_inf(g) -> float:
    """Max-abs norm, dual to the l1 norm on the simplex."""
    g = _as_vector(g)
    return float(np.max(np.abs(g))) if g.size else 0.0
