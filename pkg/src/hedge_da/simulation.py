"""Loss streams: a regime-shifting Gaussian market, CSV replay, and a greedy
adversary.

Random numbers come from the Philox-4x64 counter-based generator keyed by
``(seed, stream)``: 64-bit raw outputs ``r`` map to uniforms
``(r >> 11) * 2**-53`` and pairs of uniforms ``(u1, u2)`` to normals by
Box-Muller, ``sqrt(-2 ln(1 - u1)) * (cos 2 pi u2, sin 2 pi u2)``.  A tape
is therefore reproducible bit-for-bit from its key, independent of how
replications are scheduled.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InputError, ParameterError, ParseError
from .variants import LossBounds

#: Stream index reserved for the market model shared by all replications.
MODEL_STREAM = 2**64 - 1

_TWO_POW_M53 = 2.0 ** -53


@dataclass(frozen=True)
class RngSeed:
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v < 2**64:
                raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {v!r}")


class CounterRNG:
    """Philox stream for one ``(seed, stream)`` key."""

    def __init__(self, key: RngSeed):
        self.key = key
        self._bitgen = np.random.Philox(key=np.array([key.seed, key.stream], dtype=np.uint64))

    def uniforms(self, size: int) -> np.ndarray:
        """``size`` doubles in [0, 1) with 53 random bits each."""
        raw = self._bitgen.random_raw(size)
        return (raw >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53

    def normals(self, size: int) -> np.ndarray:
        pairs = (size + 1) // 2
        u = self.uniforms(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        angle = 2.0 * math.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = radius * np.cos(angle)
        z[:, 1] = radius * np.sin(angle)
        return z.reshape(-1)[:size]


def cholesky(cov, jitter: float = 1e-10) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == cov`` for symmetric PSD ``cov``.

    Positive definite input goes straight to LAPACK.  Otherwise a
    column-by-column factorization treats pivots up to ``jitter`` (relative
    to the largest diagonal entry) as zero, so singular covariances such as
    the zero matrix factor exactly.
    """
    a = np.array(cov, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"covariance must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("covariance has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12 * scale:
        raise InputError("covariance is not symmetric")
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass

    n = a.shape[0]
    tol = jitter * max(float(np.max(np.diag(a), initial=0.0)), 1e-300)
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        rest = a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]
        if d > tol:
            L[j, j] = math.sqrt(d)
            L[j + 1:, j] = rest / L[j, j]
        elif d < -tol or np.max(np.abs(rest), initial=0.0) > math.sqrt(tol * scale):
            raise InputError(f"covariance is not positive semidefinite (pivot {j} = {d!r})")
    return L


@dataclass(frozen=True, eq=False)
class MarketModel:
    """Multivariate normal per-step losses: ``mean + L z``."""

    mean: np.ndarray
    covariance: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.covariance, dtype=float)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise InputError(f"mean of length {mean.size} does not match covariance of shape {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "chol", cholesky(cov))

    @property
    def n(self) -> int:
        return self.mean.size

    @classmethod
    def synthetic(cls, n: int, seed: int, mean_range: float = 0.01, cov_scale: float = 0.25) -> "MarketModel":
        """Means uniform on ``[-mean_range, mean_range]`` and
        ``cov_scale * (B B^T / n + 0.1 I)`` with ``B`` standard normal."""
        rng = CounterRNG(RngSeed(seed, MODEL_STREAM))
        mean = mean_range * (2.0 * rng.uniforms(n) - 1.0)
        B = rng.normals(n * n).reshape(n, n)
        cov = cov_scale * (B @ B.T / n + 0.1 * np.eye(n))
        return cls(mean, 0.5 * (cov + cov.T))


def default_perturb_ranges(count: int, low: float = 1.0, high: float = 1.5, step: float = 0.25):
    return tuple((low + step * k, high + step * k) for k in range(count))


@dataclass(frozen=True)
class ShiftSchedule:
    """How the mean moves at each regime boundary.

    Entering regime ``j >= 1`` (0-based), every product's mean becomes
    ``a_ji * mean_i + b_j`` where ``|a_ji|`` is uniform on
    ``perturb_ranges[j-1]``, ``a_ji < 0`` with probability
    ``flip_probs[j-1]``, and ``b_j`` is uniform on ``[-drift[j-1], drift[j-1]]``
    (one value for all products).  Lists shorter than the number of
    boundaries repeat their last entry.
    """

    period: int
    flip_probs: tuple = (0.5, 0.75, 1.0)
    perturb_ranges: tuple = default_perturb_ranges(3)
    drift: tuple = (1e-3,)

    def __post_init__(self):
        if int(self.period) != self.period or self.period < 1:
            raise ParameterError(f"period must be a positive integer, got {self.period!r}")
        probs = tuple(float(p) for p in self.flip_probs)
        ranges = tuple((float(lo), float(hi)) for lo, hi in self.perturb_ranges)
        drift = tuple(float(d) for d in np.atleast_1d(self.drift))
        if not probs or not ranges or not drift:
            raise ParameterError("flip_probs, perturb_ranges and drift must be non-empty")
        if any(not 0.0 <= p <= 1.0 for p in probs) or any(q < p for p, q in zip(probs, probs[1:])):
            raise ParameterError(f"flip_probs must lie in [0, 1] and be non-decreasing, got {probs}")
        if any(not 0.0 <= lo <= hi for lo, hi in ranges):
            raise ParameterError(f"perturbation ranges must satisfy 0 <= low <= high, got {ranges}")
        if any(q[0] < p[0] or q[1] < p[1] for p, q in zip(ranges, ranges[1:])):
            raise ParameterError("perturbation magnitudes must be non-decreasing across regimes")
        if any(d < 0 for d in drift):
            raise ParameterError("drift magnitudes must be nonnegative")
        object.__setattr__(self, "flip_probs", probs)
        object.__setattr__(self, "perturb_ranges", ranges)
        object.__setattr__(self, "drift", drift)

    def regimes(self, T: int) -> int:
        return -(-T // self.period)

    def boundary(self, j: int):
        """(flip probability, (low, high), drift) used when entering regime ``j >= 1``."""
        k = j - 1
        return (self.flip_probs[min(k, len(self.flip_probs) - 1)],
                self.perturb_ranges[min(k, len(self.perturb_ranges) - 1)],
                self.drift[min(k, len(self.drift) - 1)])


@dataclass(frozen=True, eq=False)
class LossTape:
    """A realized loss stream with its exact range."""

    losses: np.ndarray
    means: Optional[np.ndarray] = None   # per-regime means, (regimes, n)
    signs: Optional[np.ndarray] = None   # sign of a_ji per boundary, (regimes - 1, n)

    def __post_init__(self):
        losses = np.array(self.losses, dtype=float)
        if losses.ndim != 2 or losses.shape[0] < 1:
            raise InputError("empty tape")
        losses.flags.writeable = False
        object.__setattr__(self, "losses", losses)

    @property
    def T(self) -> int:
        return self.losses.shape[0]

    @property
    def n(self) -> int:
        return self.losses.shape[1]

    @property
    def mu(self) -> float:
        return max(0.0, -float(self.losses.min()))

    @property
    def rho(self) -> float:
        return max(0.0, float(self.losses.max()))

    def bounds(self) -> LossBounds:
        return LossBounds(self.mu, self.rho)

    def oracle(self, bounds: Optional[LossBounds] = None) -> "TapeOracle":
        return TapeOracle(self.losses, bounds)


def regime_means(base_mean, shifts: ShiftSchedule, regimes: int, rng: CounterRNG):
    """Mean of each regime and the sign of every perturbation coefficient."""
    base = np.asarray(base_mean, dtype=float)
    n = base.size
    means = np.empty((regimes, n))
    signs = np.empty((max(regimes - 1, 0), n))
    means[0] = base
    for j in range(1, regimes):
        p, (lo, hi), drift = shifts.boundary(j)
        flip = rng.uniforms(n) < p
        magnitude = lo + (hi - lo) * rng.uniforms(n)
        b = drift * (2.0 * rng.uniforms(1)[0] - 1.0)
        signs[j - 1] = np.where(flip, -1.0, 1.0)
        means[j] = signs[j - 1] * magnitude * means[j - 1] + b
    return means, signs


def sample_losses(model: MarketModel, shifts: ShiftSchedule, T: int, seed: RngSeed) -> LossTape:
    """Draw a ``T x n`` tape; regime parameters first, then the Gaussian noise."""
    if int(T) != T or T < 1:
        raise ParameterError(f"T must be a positive integer, got {T!r}")
    rng = CounterRNG(seed)
    regimes = shifts.regimes(T)
    means, signs = regime_means(model.mean, shifts, regimes, rng)
    n = model.n
    z = rng.normals(T * n).reshape(T, n)
    row_mean = np.repeat(means, shifts.period, axis=0)[:T]
    return LossTape(row_mean + z @ model.chol.T, means, signs)


class TapeOracle:
    """Replays a fixed tape row by row, ignoring the portfolio.

    With ``bounds`` given, every entry is checked on construction and the
    first offending step raises :class:`DomainError`.
    """

    def __init__(self, losses, bounds: Optional[LossBounds] = None):
        losses = np.asarray(losses, dtype=float)
        if losses.ndim != 2 or losses.shape[0] == 0:
            raise InputError("empty tape")
        if bounds is not None:
            out = (losses < -bounds.mu) | (losses > bounds.rho)
            if out.any():
                t, i = np.argwhere(out)[0]
                raise DomainError(
                    f"loss at step {t} for product {i} is {losses[t, i]!r}, "
                    f"outside [{-bounds.mu!r}, {bounds.rho!r}]")
        self.losses = losses
        self.bounds = bounds
        self._t = 0

    @property
    def n(self) -> int:
        return self.losses.shape[1]

    def __len__(self):
        return self.losses.shape[0]

    def __call__(self, x=None) -> np.ndarray:
        if self._t >= len(self):
            raise IndexError("tape exhausted")
        row = self.losses[self._t]
        self._t += 1
        return row

    def realized_bounds(self) -> LossBounds:
        return LossTape(self.losses).bounds()


class AdversarialOracle:
    """Greedy adversary: loss ``rho`` on the heaviest product (lowest index
    on ties), ``-mu`` on all others."""

    n = None

    def __init__(self, bounds: LossBounds):
        self.bounds = bounds

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        loss = np.full(x.size, -self.bounds.mu)
        loss[int(np.argmax(x))] = self.bounds.rho
        return loss


def adversarial_oracle(bounds: LossBounds) -> AdversarialOracle:
    return AdversarialOracle(bounds)


# -- CSV tapes ---------------------------------------------------------------

def format_tape_csv(losses) -> str:
    losses = np.asarray(losses, dtype=float)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"p{i + 1}" for i in range(losses.shape[1])])
    for t, row in enumerate(losses):
        writer.writerow([t] + [repr(float(v)) for v in row])
    return buf.getvalue()


def write_tape_csv(path, losses) -> Path:
    path = Path(path)
    path.write_text(format_tape_csv(losses), encoding="utf-8", newline="\n")
    return path


def read_tape_csv(path) -> np.ndarray:
    """Parse a loss CSV into a ``T x n`` array."""
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0]:
        raise ParseError("missing header", line=1)
    header = [h.strip() for h in rows[0]]
    n = len(header) - 1
    if header[0] != "t" or n < 1 or header[1:] != [f"p{i + 1}" for i in range(n)]:
        raise ParseError(f"header must be t,p1,...,pn; got {','.join(header)}", line=1)
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != n + 1:
            raise ParseError(f"expected {n + 1} cells, found {len(row)}", line=lineno)
        try:
            t = int(row[0])
        except ValueError:
            raise ParseError(f"step index {row[0]!r} is not an integer", line=lineno) from None
        if t != len(data):
            raise ParseError(f"step index {t} out of sequence, expected {len(data)}", line=lineno)
        try:
            values = [float(cell) for cell in row[1:]]
        except ValueError as exc:
            raise ParseError(f"non-numeric cell ({exc})", line=lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite loss value", line=lineno)
        data.append(values)
    if not data:
        raise InputError("empty tape")
    return np.array(data)


def csv_replay_oracle(path, bounds: Optional[LossBounds] = None) -> TapeOracle:
    return TapeOracle(read_tape_csv(path), bounds)
