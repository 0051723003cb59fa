"""Random operators on counts and log-space probability mass functions.

Random draws go through :class:`RandomStream`, a thin wrapper around numpy's
``Generator`` driven by the PCG64 bit generator. A 64-bit seed fixes the
whole draw sequence; numpy documents the PCG64 stream and its ``binomial``,
``poisson`` and ``geometric`` samplers as stable across platforms for a
given numpy version.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, xlog1py, xlogy
from scipy.stats import poisson

NORMALIZATION_TOL = 1e-10


class RandomStream:
    """Seeded source of randomness. Owned by one caller at a time."""

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.rng = np.random.Generator(np.random.PCG64(seed))

    def spawn(self, index: int) -> "RandomStream":
        """Independent stream for concurrent task ``index``."""
        return RandomStream((self.seed + 0x9E3779B97F4A7C15 * (index + 1)) % 2**64)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed})"


def binomial_thin(stream: RandomStream, alpha: float, y: int) -> int:
    """Binomial thinning ``alpha o y``: a ``Bin(y, alpha)`` draw."""
    if y == 0 or alpha == 0.0:
        return 0
    if alpha == 1.0:
        return int(y)
    return int(stream.rng.binomial(y, alpha))


def poisson_star(stream: RandomStream, alpha: float, y: float) -> int:
    """Poisson operator ``alpha * y``: a ``Pois(alpha y)`` draw, degenerate at 0 for zero rate."""
    rate = alpha * y
    if rate == 0.0:
        return 0
    return int(stream.rng.poisson(rate))


def partition_thin(stream: RandomStream, phi: float, s: int) -> tuple[int, int]:
    """Split ``s`` units into ``(phi o s, s - phi o s)``."""
    a = binomial_thin(stream, phi, s)
    return a, s - a


def geometric_waiting(stream: RandomStream, phi: float) -> int:
    """Waiting time on ``{1, 2, ...}`` with ``P(i) = phi (1 - phi)^(i - 1)``."""
    if phi == 1.0:
        return 1
    return int(stream.rng.geometric(phi))


def poisson_logpmf(rate, k):
    """Log Poisson pmf; ``rate = 0`` is the point mass at zero. Vectorised over both arguments."""
    rate = np.asarray(rate, dtype=float)
    k = np.asarray(k)
    out = xlogy(k, rate) - rate - gammaln(k + 1.0)
    out = np.where(k < 0, -np.inf, out)
    return out[()] if out.ndim == 0 else out


def binomial_logpmf(n, p, k):
    """Log ``Bin(n, p)`` pmf at ``k``; ``-inf`` outside ``0 <= k <= n``."""
    n = np.asarray(n)
    k = np.asarray(k)
    p = np.asarray(p, dtype=float)
    inside = (k >= 0) & (k <= n)
    kk = np.where(inside, k, 0)
    nk = np.where(inside, n - k, 0)
    out = (
        gammaln(n + 1.0)
        - gammaln(kk + 1.0)
        - gammaln(nk + 1.0)
        + xlogy(kk, p)
        + xlog1py(nk, -p)
    )
    out = np.where(inside, out, -np.inf)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class LogPmf:
    """Distribution on ``{0, ..., support_max}`` plus explicit mass above it.

    ``log_probs[k]`` is the natural log of ``P(K = k)``; ``tail_log_mass`` is
    ``log P(K > support_max)`` and may be ``-inf``.
    """

    log_probs: np.ndarray
    tail_log_mass: float = -np.inf

    def __post_init__(self) -> None:
        lp = np.asarray(self.log_probs, dtype=float)
        if lp.ndim != 1 or lp.size == 0:
            raise ValueError("log_probs must be a non-empty 1-d array")
        lp.setflags(write=False)
        object.__setattr__(self, "log_probs", lp)

    @property
    def support_max(self) -> int:
        return self.log_probs.size - 1

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def total_log_mass(self) -> float:
        return float(logsumexp(np.append(self.log_probs, self.tail_log_mass)))

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(self.total_log_mass()) <= tol and bool(np.all(self.log_probs <= tol))

    def logpmf(self, k: int) -> float:
        """Log-probability at ``k``; raises if ``k`` lies in the unresolved tail."""
        if k < 0:
            return -np.inf
        if k > self.support_max:
            if self.tail_log_mass == -np.inf:
                return -np.inf
            raise IndexError(f"{k} lies beyond support_max={self.support_max}")
        return float(self.log_probs[k])

    @classmethod
    def from_log_probs(cls, log_probs) -> "LogPmf":
        """Wrap log-probabilities, assigning whatever mass is missing to the tail."""
        log_probs = np.asarray(log_probs, dtype=float)
        covered = float(np.exp(logsumexp(log_probs)))
        tail = np.log1p(-covered) if covered < 1.0 else -np.inf
        return cls(log_probs, float(tail))

    @classmethod
    def point_mass(cls, k: int) -> "LogPmf":
        lp = np.full(k + 1, -np.inf)
        lp[k] = 0.0
        return cls(lp)

    @classmethod
    def poisson(cls, rate: float, support_max: int) -> "LogPmf":
        lp = poisson_logpmf(rate, np.arange(support_max + 1))
        tail = float(poisson.logsf(support_max, rate)) if rate > 0 else -np.inf
        return cls(lp, tail)

    @classmethod
    def binomial(cls, n: int, p: float) -> "LogPmf":
        return cls(binomial_logpmf(n, p, np.arange(n + 1)))


def convolve(a: LogPmf, b: LogPmf) -> LogPmf:
    """Distribution of the sum of independent draws from ``a`` and ``b``.

    Mass involving either tail cannot be placed exactly; it is reported as
    tail mass of the result.
    """
    n, m = a.support_max, b.support_max
    # flipped[i, m - j] = log a_i + log b_j; anti-diagonal i + j = s is diagonal m - s
    flipped = np.fliplr(a.log_probs[:, None] + b.log_probs[None, :])
    out = np.array([logsumexp(flipped.diagonal(m - s)) for s in range(n + m + 1)])
    a_body = logsumexp(a.log_probs)
    b_body = logsumexp(b.log_probs)
    tail_terms = [
        a.tail_log_mass + b_body,
        a_body + b.tail_log_mass,
        a.tail_log_mass + b.tail_log_mass,
    ]
    return LogPmf(out, float(logsumexp(tail_terms)))
