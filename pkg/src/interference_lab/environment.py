"""Ground-truth Bernoulli arms."""

from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .errors import ConfigError
from .numerics import RngStream, draw_bernoulli
from .numerics.rng import counter_double


@dataclass(frozen=True, eq=False)
class Environment:
    """Hidden click rates; policies never see ``means``."""

    means: np.ndarray

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64)
        if means.ndim != 1 or means.size < 1:
            raise ConfigError("an environment needs at least one arm")
        if not np.all((means >= 0.0) & (means <= 1.0)):
            raise ConfigError("arm means must lie in [0, 1]")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)

    @property
    def n_arms(self) -> int:
        return self.means.size

    @property
    def best_mean(self) -> float:
        return float(self.means.max())

    def regrets(self) -> np.ndarray:
        return self.best_mean - self.means


def make_uniform_env(n_arms: int, lo: float, hi: float) -> Environment:
    """Arms with means evenly spaced from ``lo`` to ``hi`` inclusive."""
    if n_arms < 1:
        raise ConfigError(f"n_arms must be >= 1, got {n_arms}")
    if not 0.0 <= lo <= hi <= 1.0:
        raise ConfigError(f"need 0 <= rho_lo <= rho_hi <= 1, got rho_lo={lo}, rho_hi={hi}")
    if n_arms == 1:
        return Environment(np.array([lo]))
    i = np.arange(n_arms)
    # rounding can push the top arm a hair past hi
    return Environment(np.minimum(lo + i * (hi - lo) / (n_arms - 1), hi))


def _check_arm(env: Environment, arm: int) -> None:
    if not 0 <= arm < env.n_arms:
        raise IndexError(f"arm {arm} out of range for {env.n_arms} arms")


def pull(env: Environment, arm: int, rng: RngStream) -> int:
    _check_arm(env, arm)
    return draw_bernoulli(rng, float(env.means[arm]))


def instant_regret(env: Environment, arm: int) -> float:
    """Expected regret of one pull: ``best_mean - means[arm]``."""
    _check_arm(env, arm)
    return env.best_mean - float(env.means[arm])


@njit
def keyed_reward(means, arm, key0, key1, pull_index):
    """Reward for a variant's ``pull_index``-th pull of ``arm``.

    Indexed by pull count rather than round, so a variant replayed alone
    draws exactly the rewards it drew in the joint run.
    """
    return 1 if counter_double(key0, key1, pull_index, arm) < means[arm] else 0
