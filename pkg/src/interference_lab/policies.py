"""The five bandit policies over Beta-Bernoulli sufficient statistics.

Every policy reads only its spec, its view of the per-arm success/failure
counts, the round index, and its own random stream.  That purity is what lets
a variant be replayed alone on its original streams.
"""

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Optional, Sequence

import numpy as np

from ._jit import njit
from .errors import ConfigError
from .numerics import BetaParams, RngStream
from .numerics.rng import next_double
from .numerics.sampling import beta as _beta_draw
from .numerics.special import (
    TIE_TOL,
    _quantile_guess,
    beta_quantile_kernel,
    incbeta_pair,
    upper_tail_bound,
)

MLE_GREEDY = 0
MAP_GREEDY = 1
EPSILON_GREEDY = 2
THOMPSON = 3
BAYES_UCB = 4

MAP_MEAN = 0
MAP_MODE = 1

DEFAULT_PRIOR = BetaParams(2.0, 10.0)
DEFAULT_EPSILON = 0.05
# Fixed Bayes-UCB level used by the reference preset (the bare default is the
# 1 - 1/t schedule).
PRESET_UCB_QUANTILE = 0.7

# Relative slack on tail probabilities when certifying that an arm's
# Bayes-UCB score is below the running maximum.
_PRUNE_SLACK = 1e-8


class PolicyKind(str, Enum):
    MLE_GREEDY = "mle_greedy"
    MAP_GREEDY = "map_greedy"
    EPSILON_GREEDY = "epsilon_greedy"
    THOMPSON = "thompson"
    BAYES_UCB = "bayes_ucb"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]


_KIND_CODES = {
    PolicyKind.MLE_GREEDY: MLE_GREEDY,
    PolicyKind.MAP_GREEDY: MAP_GREEDY,
    PolicyKind.EPSILON_GREEDY: EPSILON_GREEDY,
    PolicyKind.THOMPSON: THOMPSON,
    PolicyKind.BAYES_UCB: BAYES_UCB,
}

_DISPLAY = {
    PolicyKind.MLE_GREEDY: "MLE-Greedy",
    PolicyKind.MAP_GREEDY: "MAP-Greedy",
    PolicyKind.EPSILON_GREEDY: "eps-Greedy",
    PolicyKind.THOMPSON: "Thompson",
    PolicyKind.BAYES_UCB: "UCB",
}


@dataclass(frozen=True)
class PolicySpec:
    """Which algorithm a variant runs, and its parameters.

    ``epsilon`` is required for epsilon-greedy and forbidden otherwise.
    ``quantile`` is Bayes-UCB only: ``None`` selects the schedule
    ``q_t = 1 - 1/t``, a float in (0, 1) a fixed level.  ``map_estimator`` picks
    the greedy estimate used by MAP-greedy and the exploit step of
    epsilon-greedy: ``"mean"`` is ``(alpha+s)/(alpha+beta+s+f)``, ``"mode"`` is
    ``(alpha-1+s)/(alpha+beta-2+s+f)``.
    """

    kind: PolicyKind
    epsilon: Optional[float] = None
    quantile: Optional[float] = None
    prior: BetaParams = DEFAULT_PRIOR
    map_estimator: str = "mean"
    name: str = field(default="", compare=False)

    def __post_init__(self):
        kind = PolicyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is PolicyKind.EPSILON_GREEDY:
            if self.epsilon is None or not 0.0 <= self.epsilon <= 1.0:
                raise ConfigError(f"epsilon_greedy needs epsilon in [0, 1], got {self.epsilon}")
        elif self.epsilon is not None:
            raise ConfigError(f"epsilon is only valid for epsilon_greedy, not {kind.value}")
        if self.quantile is not None:
            if kind is not PolicyKind.BAYES_UCB:
                raise ConfigError(f"quantile is only valid for bayes_ucb, not {kind.value}")
            if not 0.0 < self.quantile < 1.0:
                raise ConfigError(f"bayes_ucb quantile must lie in (0, 1), got {self.quantile}")
        if self.map_estimator not in ("mean", "mode"):
            raise ConfigError(f"map_estimator must be 'mean' or 'mode', got {self.map_estimator!r}")
        if self.map_estimator == "mode" and self.prior.alpha + self.prior.beta <= 2.0:
            raise ConfigError("the mode estimator needs prior alpha + beta > 2")
        if not self.name:
            object.__setattr__(self, "name", _DISPLAY[kind])

    @classmethod
    def mle_greedy(cls, **kw) -> "PolicySpec":
        return cls(PolicyKind.MLE_GREEDY, **kw)

    @classmethod
    def map_greedy(cls, **kw) -> "PolicySpec":
        return cls(PolicyKind.MAP_GREEDY, **kw)

    @classmethod
    def epsilon_greedy(cls, epsilon: float = DEFAULT_EPSILON, **kw) -> "PolicySpec":
        return cls(PolicyKind.EPSILON_GREEDY, epsilon=epsilon, **kw)

    @classmethod
    def thompson(cls, **kw) -> "PolicySpec":
        return cls(PolicyKind.THOMPSON, **kw)

    @classmethod
    def bayes_ucb(cls, quantile: Optional[float] = None, **kw) -> "PolicySpec":
        return cls(PolicyKind.BAYES_UCB, quantile=quantile, **kw)


def reference_policies() -> list:
    """The five competing methods, in the order they are usually reported."""
    return [
        PolicySpec.mle_greedy(),
        PolicySpec.map_greedy(),
        PolicySpec.epsilon_greedy(),
        PolicySpec.thompson(),
        PolicySpec.bayes_ucb(PRESET_UCB_QUANTILE),
    ]


class PolicyTable:
    """Column arrays describing a list of specs, in the form kernels consume."""

    def __init__(self, specs: Sequence[PolicySpec]):
        if not specs:
            raise ConfigError("at least one policy is required")
        self.kind = np.array([s.kind.code for s in specs], dtype=np.int64)
        self.epsilon = np.array([s.epsilon or 0.0 for s in specs], dtype=np.float64)
        # tail probability 1 - q for fixed levels; <= 0 marks the 1 - 1/t schedule
        self.fixed_tail = np.array(
            [1.0 - s.quantile if s.quantile is not None else -1.0 for s in specs], dtype=np.float64
        )
        self.prior_a = np.array([s.prior.alpha for s in specs], dtype=np.float64)
        self.prior_b = np.array([s.prior.beta for s in specs], dtype=np.float64)
        self.map_mode = np.array(
            [MAP_MODE if s.map_estimator == "mode" else MAP_MEAN for s in specs], dtype=np.int64
        )


# -- kernels ---------------------------------------------------------------


@njit
def pick_among_ties(scores, n, state, ties):
    """Argmax of ``scores[:n]`` with ties (within TIE_TOL) broken uniformly.

    Draws from ``state`` only when more than one arm ties.
    """
    m = -math.inf
    for a in range(n):
        if scores[a] > m:
            m = scores[a]
    k = 0
    for a in range(n):
        if scores[a] >= m - TIE_TOL:
            ties[k] = a
            k += 1
    if k == 1:
        return ties[0], 1
    j = int(next_double(state) * k)
    if j >= k:
        j = k - 1
    return ties[j], k


@njit
def _mle_scores(succ, fail, n, scores):
    best = -math.inf
    for a in range(n):
        tot = succ[a] + fail[a]
        if tot > 0:
            scores[a] = succ[a] / tot
            if scores[a] > best:
                best = scores[a]
    if best == -math.inf:
        best = 0.0
    # arms without data sit in the tie at the current maximum
    for a in range(n):
        if succ[a] + fail[a] == 0:
            scores[a] = best


@njit
def _map_scores(succ, fail, n, pa, pb, mode, scores):
    if mode == MAP_MODE:
        for a in range(n):
            scores[a] = (pa - 1.0 + succ[a]) / (pa + pb - 2.0 + succ[a] + fail[a])
    else:
        for a in range(n):
            scores[a] = (pa + succ[a]) / (pa + pb + succ[a] + fail[a])


@njit
def bayes_ucb_exact_scores(succ, fail, n, pa, pb, tail, scores):
    """Every arm's posterior upper quantile at tail probability ``tail``."""
    for a in range(n):
        if tail >= 1.0:
            scores[a] = 0.0
        else:
            scores[a] = beta_quantile_kernel(pa + succ[a], pb + fail[a], tail, True)


@njit
def _bayes_ucb_scores(succ, fail, n, pa, pb, tail, scores):
    # Same argmax/tie set as bayes_ucb_exact_scores, but arms certified to
    # score below the running maximum are left at -inf instead of solved.
    if tail >= 1.0:
        for a in range(n):
            scores[a] = 0.0
        return
    lead = 0
    lead_guess = -math.inf
    for a in range(n):
        scores[a] = -math.inf
        ca = pa + succ[a]
        cb = pb + fail[a]
        g = _quantile_guess(ca, cb, 1.0 - tail, tail)
        if g > lead_guess:
            lead_guess = g
            lead = a
    best = beta_quantile_kernel(pa + succ[lead], pb + fail[lead], tail, True)
    scores[lead] = best
    limit = tail * (1.0 - _PRUNE_SLACK)
    for a in range(n):
        if a == lead:
            continue
        ca = pa + succ[a]
        cb = pb + fail[a]
        y = best - 2.0 * TIE_TOL
        if y > 0.0:
            if upper_tail_bound(ca, cb, y) < limit:
                continue
            if incbeta_pair(ca, cb, y)[1] < limit:
                continue
        x = beta_quantile_kernel(ca, cb, tail, True)
        scores[a] = x
        if x > best:
            best = x


@njit
def select_kernel(kind, epsilon, fixed_tail, pa, pb, map_mode, succ, fail, t, state, scores, ties):
    """One decision for one variant; returns ``(arm, tie_set_size)``."""
    n = succ.shape[0]
    if kind == MLE_GREEDY:
        _mle_scores(succ, fail, n, scores)
        return pick_among_ties(scores, n, state, ties)
    if kind == MAP_GREEDY:
        _map_scores(succ, fail, n, pa, pb, map_mode, scores)
        return pick_among_ties(scores, n, state, ties)
    if kind == EPSILON_GREEDY:
        if next_double(state) < epsilon:
            arm = int(next_double(state) * n)
            if arm >= n:
                arm = n - 1
            return arm, n
        _map_scores(succ, fail, n, pa, pb, map_mode, scores)
        return pick_among_ties(scores, n, state, ties)
    if kind == THOMPSON:
        for a in range(n):
            scores[a] = _beta_draw(state, pa + succ[a], pb + fail[a])
        return pick_among_ties(scores, n, state, ties)
    # Bayes-UCB
    tail = fixed_tail if fixed_tail > 0.0 else 1.0 / t
    _bayes_ucb_scores(succ, fail, n, pa, pb, tail, scores)
    return pick_among_ties(scores, n, state, ties)


@njit
def _ucb_above(ca, cb, y, tail):
    # certifies quantile > y, i.e. the lower tail at y is below 1 - tail
    if y < 0.0:
        return True
    if y >= 1.0:
        return False
    limit = (1.0 - tail) * (1.0 - _PRUNE_SLACK)
    if upper_tail_bound(cb, ca, 1.0 - y) < limit:
        return True
    return incbeta_pair(ca, cb, y)[0] < limit


@njit
def fixed_ucb_select(fixed_tail, pa, pb, succ, fail, cache, stale, state, ties):
    """Bayes-UCB decision at a fixed level with per-arm score caching.

    ``cache[a]`` is exact whenever ``stale[a]`` is false; scores depend only on
    an arm's own counts.  Typically one arm changed since the last call and it
    is the leader by a wide margin, so it is certified as the unique maximum
    with a cheap bound instead of being solved.  A unique maximum draws nothing
    from ``state``, so decisions and streams match exact scoring.
    """
    n = succ.shape[0]
    if fixed_tail >= 1.0:
        for a in range(n):
            cache[a] = 0.0
            stale[a] = False
        return pick_among_ties(cache, n, state, ties)
    lead = -1
    lead_guess = -math.inf
    for a in range(n):
        if stale[a]:
            g = _quantile_guess(pa + succ[a], pb + fail[a], 1.0 - fixed_tail, fixed_tail)
            if g > lead_guess:
                lead_guess = g
                lead = a
    if lead >= 0:
        rival = -math.inf
        for a in range(n):
            if a == lead:
                continue
            if stale[a]:
                cache[a] = beta_quantile_kernel(pa + succ[a], pb + fail[a], fixed_tail, True)
                stale[a] = False
            if cache[a] > rival:
                rival = cache[a]
        if _ucb_above(pa + succ[lead], pb + fail[lead], rival + 2.0 * TIE_TOL, fixed_tail):
            ties[0] = lead
            return lead, 1
        cache[lead] = beta_quantile_kernel(pa + succ[lead], pb + fail[lead], fixed_tail, True)
        stale[lead] = False
    return pick_among_ties(cache, n, state, ties)


@njit
def _select_with_stream(kind, epsilon, fixed_tail, pa, pb, map_mode, succ, fail, t, streams, scores, ties):
    return select_kernel(kind, epsilon, fixed_tail, pa, pb, map_mode, succ, fail, t, streams[0], scores, ties)


# -- public surface ----------------------------------------------------------


@dataclass(frozen=True)
class ArmStats:
    successes: int = 0
    failures: int = 0

    def __post_init__(self):
        if self.successes < 0 or self.failures < 0:
            raise ValueError("arm counts must be non-negative")

    @property
    def total(self) -> int:
        return self.successes + self.failures


@dataclass(frozen=True)
class ActionChoice:
    arm: int
    tie_set_size: int = 1


class StatsView:
    """Per-arm success/failure counts as one policy sees them."""

    def __init__(self, successes, failures):
        self.successes = np.array(successes, dtype=np.int64)
        self.failures = np.array(failures, dtype=np.int64)
        if self.successes.ndim != 1 or self.successes.shape != self.failures.shape:
            raise ConfigError("successes and failures must be equal-length vectors")
        if (self.successes < 0).any() or (self.failures < 0).any():
            raise ConfigError("arm counts must be non-negative")

    @classmethod
    def fresh(cls, n_arms: int) -> "StatsView":
        return cls(np.zeros(n_arms, np.int64), np.zeros(n_arms, np.int64))

    @classmethod
    def from_pairs(cls, pairs) -> "StatsView":
        pairs = list(pairs)
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    @property
    def n_arms(self) -> int:
        return len(self.successes)

    def __getitem__(self, arm: int) -> ArmStats:
        return ArmStats(int(self.successes[arm]), int(self.failures[arm]))

    def pairs(self) -> list:
        return [(int(s), int(f)) for s, f in zip(self.successes, self.failures)]

    def total_observations(self) -> int:
        return int(self.successes.sum() + self.failures.sum())

    def copy(self) -> "StatsView":
        return StatsView(self.successes.copy(), self.failures.copy())

    def __eq__(self, other):
        return (
            isinstance(other, StatsView)
            and np.array_equal(self.successes, other.successes)
            and np.array_equal(self.failures, other.failures)
        )

    def __repr__(self) -> str:
        return f"StatsView({self.pairs()})"


def mle_estimate(stats: ArmStats) -> Optional[float]:
    """``s / (s + f)``, or ``None`` when the arm has no data."""
    if stats.total == 0:
        return None
    return stats.successes / stats.total


def map_estimate(stats: ArmStats, prior: BetaParams = DEFAULT_PRIOR) -> float:
    """``(alpha + s) / (alpha + beta + s + f)``; 2/12 for a fresh arm under the default prior."""
    return (prior.alpha + stats.successes) / (prior.alpha + prior.beta + stats.total)


def map_mode_estimate(stats: ArmStats, prior: BetaParams = DEFAULT_PRIOR) -> float:
    """Posterior mode ``(alpha - 1 + s) / (alpha + beta - 2 + s + f)``."""
    return (prior.alpha - 1.0 + stats.successes) / (prior.alpha + prior.beta - 2.0 + stats.total)


def bayes_ucb_score(stats: ArmStats, prior: BetaParams, round_t: int, quantile: Optional[float] = None) -> float:
    tail = 1.0 - quantile if quantile is not None else 1.0 / round_t
    if tail >= 1.0:
        return 0.0
    return float(beta_quantile_kernel(prior.alpha + stats.successes, prior.beta + stats.failures, tail, True))


def select_action(spec: PolicySpec, view: StatsView, round_t: int, rng: RngStream) -> ActionChoice:
    if view.n_arms < 1:
        raise ConfigError("cannot select from an empty view")
    if round_t < 1:
        raise ConfigError(f"rounds are numbered from 1, got {round_t}")
    table = PolicyTable([spec])
    scores = np.empty(view.n_arms)
    ties = np.empty(view.n_arms, dtype=np.int64)
    arm, k = _select_with_stream(
        table.kind[0],
        table.epsilon[0],
        table.fixed_tail[0],
        table.prior_a[0],
        table.prior_b[0],
        table.map_mode[0],
        view.successes,
        view.failures,
        int(round_t),
        rng.states,
        scores,
        ties,
    )
    return ActionChoice(int(arm), int(k))


def update(view: StatsView, arm: int, reward: int) -> StatsView:
    """Record one observation in place and return the view."""
    if not 0 <= arm < view.n_arms:
        raise IndexError(f"arm {arm} out of range for {view.n_arms} arms")
    if reward not in (0, 1):
        raise ValueError(f"rewards are binary, got {reward}")
    if reward:
        view.successes[arm] += 1
    else:
        view.failures[arm] += 1
    return view
