"""Side-by-side execution of bandit variants under pooled or siloed data.

Each round every variant picks an arm from its own view of the counts (all
selections happen before any update), rewards are drawn, and then views are
updated: with every variant's observation under pooling, with only their own
under siloing.  Streams are keyed by ``(seed, replication, variant)``, so any
variant can be replayed alone on exactly the randomness it saw jointly.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from ._jit import njit
from .environment import Environment, keyed_reward, make_uniform_env
from .errors import ConfigError
from .numerics.rng import PURPOSE_POLICY, PURPOSE_REWARD, new_states, stream_id
from .policies import BAYES_UCB, PolicySpec, PolicyTable, fixed_ucb_select, reference_policies, select_kernel


class Regime(str, Enum):
    POOLED = "pooled"
    SILOED = "siloed"


REGRET_EXPECTED = "expected"
REGRET_REALIZED = "realized"

MAX_SEED = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    policies: tuple = field(default_factory=lambda: tuple(reference_policies()))
    n_arms: int = 11
    rho_lo: float = 0.05
    rho_hi: float = 0.15
    n_rounds: int = 2_000_000
    n_reps: int = 20
    regime: Regime = Regime.POOLED
    seed: int = 0
    checkpoint_stride: int = 1000
    regret: str = REGRET_EXPECTED
    audit: bool = False

    def __post_init__(self):
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "regime", Regime(self.regime))
        if not self.policies:
            raise ConfigError("policies: at least one policy is required")
        for p in self.policies:
            if not isinstance(p, PolicySpec):
                raise ConfigError(f"policies: expected PolicySpec, got {type(p).__name__}")
        if self.n_rounds < 1:
            raise ConfigError(f"n_rounds must be >= 1, got {self.n_rounds}")
        if self.n_reps < 1:
            raise ConfigError(f"n_reps must be >= 1, got {self.n_reps}")
        if not 1 <= self.checkpoint_stride <= self.n_rounds:
            raise ConfigError(
                f"checkpoint_stride must lie in [1, n_rounds={self.n_rounds}], got {self.checkpoint_stride}"
            )
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.regret not in (REGRET_EXPECTED, REGRET_REALIZED):
            raise ConfigError(f"regret must be 'expected' or 'realized', got {self.regret!r}")
        if len(self.policies) >= 1 << 16:
            raise ConfigError("too many variants")
        self.environment()  # validates n_arms and the rate bounds

    def environment(self) -> Environment:
        return make_uniform_env(self.n_arms, self.rho_lo, self.rho_hi)

    def checkpoints(self) -> np.ndarray:
        cps = np.arange(self.checkpoint_stride, self.n_rounds + 1, self.checkpoint_stride, dtype=np.int64)
        if cps.size == 0 or cps[-1] != self.n_rounds:
            cps = np.append(cps, np.int64(self.n_rounds))
        return cps

    @property
    def n_variants(self) -> int:
        return len(self.policies)

    def variant_names(self) -> list:
        return unique_names([p.name for p in self.policies])

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def unique_names(names: Sequence[str]) -> list:
    seen = {}
    out = []
    for n in names:
        if names.count(n) > 1:
            seen[n] = seen.get(n, 0) + 1
            out.append(f"{n}#{seen[n]}")
        else:
            out.append(n)
    return out


@dataclass
class TrajectoryLog:
    """Per-(replication, variant) outcomes.

    ``cumulative_regret`` and ``observations`` have shape
    ``(reps, variants, checkpoints)``; ``total_reward`` is ``(reps, variants)``.
    Audit arrays, when present, are ``(reps, variants, n_rounds)`` and hold the
    arm, the reward, and the cumulative regret after every round.
    """

    checkpoints: np.ndarray
    cumulative_regret: np.ndarray
    observations: np.ndarray
    total_reward: np.ndarray
    variant_names: list
    variant_ids: np.ndarray
    rep_indices: np.ndarray
    n_rounds: int
    regime: Regime
    arms: Optional[np.ndarray] = None
    rewards: Optional[np.ndarray] = None
    round_regret: Optional[np.ndarray] = None

    @property
    def n_reps(self) -> int:
        return self.cumulative_regret.shape[0]

    @property
    def n_variants(self) -> int:
        return self.cumulative_regret.shape[1]

    def variant_index(self, variant) -> int:
        if isinstance(variant, (int, np.integer)):
            if not 0 <= variant < self.n_variants:
                raise ConfigError(f"unknown variant index {variant}")
            return int(variant)
        try:
            return self.variant_names.index(variant)
        except ValueError:
            raise ConfigError(f"unknown variant {variant!r}; have {self.variant_names}") from None

    def select(self, variant) -> "TrajectoryLog":
        """The single-variant slice of this log."""
        v = self.variant_index(variant)
        sl = slice(v, v + 1)
        return TrajectoryLog(
            checkpoints=self.checkpoints,
            cumulative_regret=self.cumulative_regret[:, sl],
            observations=self.observations[:, sl],
            total_reward=self.total_reward[:, sl],
            variant_names=[self.variant_names[v]],
            variant_ids=self.variant_ids[sl],
            rep_indices=self.rep_indices,
            n_rounds=self.n_rounds,
            regime=self.regime,
            arms=None if self.arms is None else self.arms[:, sl],
            rewards=None if self.rewards is None else self.rewards[:, sl],
            round_regret=None if self.round_regret is None else self.round_regret[:, sl],
        )

    def replication(self, i: int) -> "TrajectoryLog":
        """The slice holding only the ``i``-th stored replication."""
        sl = slice(i, i + 1)
        return replace(
            self,
            cumulative_regret=self.cumulative_regret[sl],
            observations=self.observations[sl],
            total_reward=self.total_reward[sl],
            rep_indices=self.rep_indices[sl],
            arms=None if self.arms is None else self.arms[sl],
            rewards=None if self.rewards is None else self.rewards[sl],
            round_regret=None if self.round_regret is None else self.round_regret[sl],
        )

    @staticmethod
    def stack_variants(parts: Sequence["TrajectoryLog"]) -> "TrajectoryLog":
        """Join logs of the same replications side by side along the variant axis."""
        first = parts[0]

        def cat(name):
            arrs = [getattr(p, name) for p in parts]
            return None if any(a is None for a in arrs) else np.concatenate(arrs, axis=1)

        return replace(
            first,
            cumulative_regret=cat("cumulative_regret"),
            observations=cat("observations"),
            total_reward=cat("total_reward"),
            variant_names=[n for p in parts for n in p.variant_names],
            variant_ids=np.concatenate([p.variant_ids for p in parts]),
            arms=cat("arms"),
            rewards=cat("rewards"),
            round_regret=cat("round_regret"),
        )

    @staticmethod
    def concat(parts: Sequence["TrajectoryLog"]) -> "TrajectoryLog":
        first = parts[0]

        def cat(name):
            arrs = [getattr(p, name) for p in parts]
            return None if arrs[0] is None else np.concatenate(arrs, axis=0)

        return TrajectoryLog(
            checkpoints=first.checkpoints,
            cumulative_regret=cat("cumulative_regret"),
            observations=cat("observations"),
            total_reward=cat("total_reward"),
            variant_names=list(first.variant_names),
            variant_ids=first.variant_ids,
            rep_indices=np.concatenate([p.rep_indices for p in parts]),
            n_rounds=first.n_rounds,
            regime=first.regime,
            arms=cat("arms"),
            rewards=cat("rewards"),
            round_regret=cat("round_regret"),
        )


@njit
def replication_kernel(
    kind,
    epsilon,
    fixed_tail,
    prior_a,
    prior_b,
    map_mode,
    means,
    n_rounds,
    pooled,
    realized,
    policy_states,
    reward_keys,
    checkpoints,
    out_cum,
    out_obs,
    out_reward,
    audit,
    audit_arm,
    audit_reward,
    audit_regret,
):
    n_var = kind.shape[0]
    n_arms = means.shape[0]
    best = means.max()
    gaps = np.empty(n_arms)
    for a in range(n_arms):
        gaps[a] = best - means[a]
    succ = np.zeros((n_var, n_arms), dtype=np.int64)
    fail = np.zeros((n_var, n_arms), dtype=np.int64)
    pulls = np.zeros((n_var, n_arms), dtype=np.int64)
    obs = np.zeros(n_var, dtype=np.int64)
    cum = np.zeros(n_var)
    chosen = np.empty(n_var, dtype=np.int64)
    got = np.empty(n_var, dtype=np.int64)
    scores = np.empty(n_arms)
    ties = np.empty(n_arms, dtype=np.int64)
    # fixed-level UCB scores only change for arms whose counts changed
    cached = np.empty(n_var, dtype=np.bool_)
    for v in range(n_var):
        cached[v] = kind[v] == BAYES_UCB and fixed_tail[v] > 0.0
    ucb_cache = np.zeros((n_var, n_arms))
    stale = np.ones((n_var, n_arms), dtype=np.bool_)
    k = 0
    for t in range(1, n_rounds + 1):
        for v in range(n_var):
            if cached[v]:
                arm, _ = fixed_ucb_select(
                    fixed_tail[v], prior_a[v], prior_b[v], succ[v], fail[v], ucb_cache[v], stale[v], policy_states[v], ties
                )
                chosen[v] = arm
                continue
            arm, _ = select_kernel(
                kind[v],
                epsilon[v],
                fixed_tail[v],
                prior_a[v],
                prior_b[v],
                map_mode[v],
                succ[v],
                fail[v],
                t,
                policy_states[v],
                scores,
                ties,
            )
            chosen[v] = arm
        for v in range(n_var):
            arm = chosen[v]
            r = keyed_reward(means, arm, reward_keys[v, 0], reward_keys[v, 1], pulls[v, arm])
            pulls[v, arm] += 1
            got[v] = r
            out_reward[v] += r
            if realized:
                cum[v] += best - r
            else:
                cum[v] += gaps[arm]
        if pooled:
            for v in range(n_var):
                for u in range(n_var):
                    if got[u] == 1:
                        succ[v, chosen[u]] += 1
                    else:
                        fail[v, chosen[u]] += 1
                    stale[v, chosen[u]] = True
                obs[v] += n_var
        else:
            for v in range(n_var):
                if got[v] == 1:
                    succ[v, chosen[v]] += 1
                else:
                    fail[v, chosen[v]] += 1
                stale[v, chosen[v]] = True
                obs[v] += 1
        if audit:
            for v in range(n_var):
                audit_arm[v, t - 1] = chosen[v]
                audit_reward[v, t - 1] = got[v]
                audit_regret[v, t - 1] = cum[v]
        if k < checkpoints.shape[0] and checkpoints[k] == t:
            for v in range(n_var):
                out_cum[v, k] = cum[v]
                out_obs[v, k] = obs[v]
            k += 1


def _variant_streams(seed: int, rep: int, variant_ids: Sequence[int]):
    states = new_states([(seed, stream_id(rep, v, PURPOSE_POLICY)) for v in variant_ids])
    keys = np.array(
        [[seed, stream_id(rep, v, PURPOSE_REWARD)] for v in variant_ids], dtype=np.uint64
    )
    return states, keys


def _run(cfg: ExperimentConfig, rep: int, variant_ids: Sequence[int]) -> TrajectoryLog:
    if not 0 <= rep < cfg.n_reps:
        raise ConfigError(f"replication index {rep} out of range for n_reps={cfg.n_reps}")
    specs = [cfg.policies[v] for v in variant_ids]
    names = [cfg.variant_names()[v] for v in variant_ids]
    table = PolicyTable(specs)
    env = cfg.environment()
    cps = cfg.checkpoints()
    n_var = len(specs)
    states, keys = _variant_streams(cfg.seed, rep, variant_ids)
    out_cum = np.zeros((n_var, cps.size))
    out_obs = np.zeros((n_var, cps.size), dtype=np.int64)
    out_reward = np.zeros(n_var, dtype=np.int64)
    audit_len = cfg.n_rounds if cfg.audit else 0
    audit_arm = np.zeros((n_var, audit_len), dtype=np.int32)
    audit_reward = np.zeros((n_var, audit_len), dtype=np.int8)
    audit_regret = np.zeros((n_var, audit_len))
    replication_kernel(
        table.kind,
        table.epsilon,
        table.fixed_tail,
        table.prior_a,
        table.prior_b,
        table.map_mode,
        env.means.copy(),
        cfg.n_rounds,
        cfg.regime is Regime.POOLED,
        cfg.regret == REGRET_REALIZED,
        states,
        keys,
        cps,
        out_cum,
        out_obs,
        out_reward,
        cfg.audit,
        audit_arm,
        audit_reward,
        audit_regret,
    )
    return TrajectoryLog(
        checkpoints=cps,
        cumulative_regret=out_cum[None],
        observations=out_obs[None],
        total_reward=out_reward[None],
        variant_names=names,
        variant_ids=np.asarray(variant_ids, dtype=np.int64),
        rep_indices=np.array([rep], dtype=np.int64),
        n_rounds=cfg.n_rounds,
        regime=cfg.regime,
        arms=audit_arm[None] if cfg.audit else None,
        rewards=audit_reward[None] if cfg.audit else None,
        round_regret=audit_regret[None] if cfg.audit else None,
    )


def run_replication(cfg: ExperimentConfig, rep_index: int) -> TrajectoryLog:
    """One replication of every variant, from fresh state."""
    return _run(cfg, rep_index, range(cfg.n_variants))


def _map_reps(fn, reps, threads: int):
    reps = list(reps)
    if threads <= 1 or len(reps) <= 1:
        return [fn(r) for r in reps]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, reps))


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> TrajectoryLog:
    """All replications; results are ordered by replication whatever ``threads`` is."""
    parts = _map_reps(lambda r: run_replication(cfg, r), range(cfg.n_reps), threads)
    return TrajectoryLog.concat(parts)


def solo_replay(cfg: ExperimentConfig, variant, threads: int = 1, reps=None) -> TrajectoryLog:
    """Rerun one variant alone, on the streams it was given in the joint run."""
    names = cfg.variant_names()
    if isinstance(variant, str):
        if variant not in names:
            raise ConfigError(f"unknown variant {variant!r}; have {names}")
        variant = names.index(variant)
    if not 0 <= variant < cfg.n_variants:
        raise ConfigError(f"unknown variant index {variant}")
    reps = range(cfg.n_reps) if reps is None else reps
    parts = _map_reps(lambda r: _run(cfg, r, [variant]), reps, threads)
    return TrajectoryLog.concat(parts)


def first_divergence(joint: TrajectoryLog, solo: TrajectoryLog, variant) -> list:
    """Per replication, the first round (1-based) where the variant's action
    or reward differs between the joint and solo runs, or ``None``.

    Both logs must have been produced in audit mode.
    """
    if joint.arms is None or solo.arms is None:
        raise ConfigError("divergence needs audit-mode logs on both sides")
    v = joint.variant_index(variant)
    out = []
    for i in range(joint.n_reps):
        diff = (joint.arms[i, v] != solo.arms[i, 0]) | (joint.rewards[i, v] != solo.rewards[i, 0])
        idx = np.flatnonzero(diff)
        out.append(int(idx[0]) + 1 if idx.size else None)
    return out


def trajectories_identical(a: TrajectoryLog, av: int, b: TrajectoryLog, bv: int) -> bool:
    """Bit-exact equality of one variant's trajectory in two logs."""
    same = np.array_equal(a.cumulative_regret[:, av], b.cumulative_regret[:, bv]) and np.array_equal(
        a.total_reward[:, av], b.total_reward[:, bv]
    )
    if a.arms is not None and b.arms is not None:
        same = (
            same
            and np.array_equal(a.arms[:, av], b.arms[:, bv])
            and np.array_equal(a.rewards[:, av], b.rewards[:, bv])
            and np.array_equal(a.round_regret[:, av], b.round_regret[:, bv])
        )
    return same
