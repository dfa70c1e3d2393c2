"""Deterministic random streams and the Beta-posterior special functions."""

from dataclasses import dataclass
import math

from . import sampling, special
from .rng import (
    PURPOSE_POLICY,
    PURPOSE_REWARD,
    PURPOSE_VALIDATION,
    RngStream,
    stream_id,
)
from .special import TIE_TOL
from ..errors import DomainError


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (a > 0.0 and b > 0.0) or math.isinf(a) or math.isinf(b):
            raise DomainError(f"Beta shapes must be positive and finite, got ({self.alpha}, {self.beta})")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    def posterior(self, successes: int, failures: int) -> "BetaParams":
        return BetaParams(self.alpha + successes, self.beta + failures)


def draw_uniform(rng: RngStream) -> float:
    """Uniform deviate in [0, 1)."""
    return float(sampling.uniform_at(rng.states))


def draw_bernoulli(rng: RngStream, p: float) -> int:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Bernoulli probability must lie in [0, 1], got {p}")
    return int(sampling.bernoulli_at(rng.states, float(p)))


def draw_gamma(rng: RngStream, shape: float) -> float:
    """Gamma(shape, scale=1) deviate."""
    if not shape > 0.0 or math.isinf(shape):
        raise DomainError(f"Gamma shape must be positive, got {shape}")
    return float(sampling.gamma_at(rng.states, float(shape)))


def draw_beta(rng: RngStream, p: BetaParams) -> float:
    return float(sampling.beta_at(rng.states, p.alpha, p.beta))


def regularized_incomplete_beta(x: float, p: BetaParams) -> float:
    """The Beta(alpha, beta) CDF at ``x``."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    return float(special.incbeta(p.alpha, p.beta, float(x)))


def beta_upper_tail(x: float, p: BetaParams) -> float:
    """``1 - I_x(alpha, beta)`` without cancellation."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    return float(special.incbeta_pair(p.alpha, p.beta, float(x))[1])


def beta_quantile(q: float, p: BetaParams) -> float:
    """Inverse CDF: ``x`` with ``I_x(alpha, beta) = q``.

    Upper quantiles are solved against the complementary tail, so
    ``q = 1 - 1e-9`` keeps its full relative precision.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    if q > 0.5:
        return float(special.beta_quantile_kernel(p.alpha, p.beta, 1.0 - q, True))
    return float(special.beta_quantile_kernel(p.alpha, p.beta, float(q), False))


def beta_upper_quantile(tail: float, p: BetaParams) -> float:
    """``x`` with ``1 - I_x(alpha, beta) = tail``, for tail levels like ``1/t``."""
    if not 0.0 < tail < 1.0:
        raise DomainError(f"tail probability must lie in (0, 1), got {tail}")
    return float(special.beta_quantile_kernel(p.alpha, p.beta, float(tail), True))


__all__ = [
    "BetaParams",
    "DomainError",
    "PURPOSE_POLICY",
    "PURPOSE_REWARD",
    "PURPOSE_VALIDATION",
    "RngStream",
    "TIE_TOL",
    "beta_quantile",
    "beta_upper_quantile",
    "beta_upper_tail",
    "draw_bernoulli",
    "draw_beta",
    "draw_gamma",
    "draw_uniform",
    "regularized_incomplete_beta",
    "stream_id",
]
