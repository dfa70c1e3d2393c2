"""Aggregation over replications: regret bands, treatment effects, rankings."""

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Optional

import numpy as np
from scipy import stats as _sps

from .errors import ConfigError
from .harness import ExperimentConfig, Regime, TrajectoryLog, run_experiment, solo_replay

CI_LEVEL = 0.95


def t_quantile(p: float, df: int) -> float:
    """Student-t quantile; closed forms where scipy's inversion loses digits."""
    if df == 1:
        return math.tan(math.pi * (p - 0.5))
    if df == 2:
        u = 2.0 * p - 1.0
        return u * math.sqrt(2.0 / (1.0 - u * u))
    return float(_sps.t.ppf(p, df))


def t_half_width(values: np.ndarray, axis: int = 0, level: float = CI_LEVEL) -> np.ndarray:
    """Student-t confidence half-width of the mean along ``axis``.

    With a single observation the width is undefined and reported as ``inf``.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    if n < 2:
        shape = list(values.shape)
        del shape[axis]
        return np.full(shape, np.inf)
    sd = values.std(axis=axis, ddof=1)
    return t_quantile(0.5 + level / 2.0, n - 1) * sd / np.sqrt(n)


@dataclass(frozen=True)
class RegretSummary:
    """Mean cumulative regret and CI half-width, both shaped ``(variants, checkpoints)``."""

    variant_names: list
    checkpoints: np.ndarray
    mean: np.ndarray
    half_width: np.ndarray
    n_reps: int

    def checkpoint_index(self, at_round: int) -> int:
        idx = np.flatnonzero(self.checkpoints == at_round)
        if idx.size == 0:
            raise ConfigError(f"round {at_round} is not a logged checkpoint")
        return int(idx[0])

    def interval(self, variant: str, at_round: int) -> tuple:
        v = self.variant_names.index(variant)
        k = self.checkpoint_index(at_round)
        m, h = self.mean[v, k], self.half_width[v, k]
        return m - h, m + h


def summarize_regret(log: TrajectoryLog) -> RegretSummary:
    cr = log.cumulative_regret
    if cr.shape[0] < 1:
        raise ConfigError("at least one replication is required")
    return RegretSummary(
        variant_names=list(log.variant_names),
        checkpoints=log.checkpoints.copy(),
        mean=cr.mean(axis=0),
        half_width=t_half_width(cr, axis=0),
        n_reps=cr.shape[0],
    )


class AteContext(str, Enum):
    JOINT_POOLED = "JointPooled"
    JOINT_SILOED = "JointSiloed"
    SOLO = "SoloDeployment"


@dataclass(frozen=True)
class AteReport:
    control: str
    treatment: str
    mean_control: float
    mean_treatment: float
    ate: float
    context: AteContext


def mean_outcome(log: TrajectoryLog, variant) -> float:
    """Clicks per round for one variant, over all rounds and replications."""
    v = log.variant_index(variant)
    return float(log.total_reward[:, v].sum()) / float(log.n_rounds * log.n_reps)


def _context_of(log: TrajectoryLog) -> AteContext:
    if log.n_variants == 1:
        return AteContext.SOLO
    return AteContext.JOINT_POOLED if log.regime is Regime.POOLED else AteContext.JOINT_SILOED


def estimate_ate(log: TrajectoryLog, c, t, context: Optional[AteContext] = None) -> AteReport:
    yc = mean_outcome(log, c)
    yt = mean_outcome(log, t)
    return AteReport(
        control=log.variant_names[log.variant_index(c)],
        treatment=log.variant_names[log.variant_index(t)],
        mean_control=yc,
        mean_treatment=yt,
        ate=yt - yc,
        context=context or _context_of(log),
    )


@dataclass(frozen=True)
class PairBias:
    """Treatment effects for one (control, treatment) pair in three settings.

    Biases are per-replication differences against the solo-deployment effect,
    summarized by their mean and a Student-t half-width.
    """

    control: str
    treatment: str
    ate_pooled: float
    ate_siloed: float
    ate_solo: float
    pooled_bias: float
    pooled_bias_half_width: float
    siloed_bias: float
    siloed_bias_half_width: float


@dataclass
class ComparisonRuns:
    pooled: TrajectoryLog
    siloed: TrajectoryLog
    solo: list  # one single-variant log per variant

    def solo_outcomes(self) -> np.ndarray:
        """``(reps, variants)`` total rewards from the solo deployments."""
        return np.concatenate([s.total_reward for s in self.solo], axis=1)


@dataclass
class InterferenceBiasReport:
    pairs: list
    runs: ComparisonRuns


def run_comparison(cfg: ExperimentConfig, threads: int = 1) -> ComparisonRuns:
    pooled = run_experiment(cfg.with_(regime=Regime.POOLED), threads)
    siloed = run_experiment(cfg.with_(regime=Regime.SILOED), threads)
    solo = [solo_replay(cfg.with_(regime=Regime.SILOED), v, threads) for v in range(cfg.n_variants)]
    return ComparisonRuns(pooled=pooled, siloed=siloed, solo=solo)


def _per_rep_ate(rewards: np.ndarray, c: int, t: int, n_rounds: int) -> np.ndarray:
    # integer difference first, so equal reward totals give exactly zero
    return (rewards[:, t] - rewards[:, c]) / float(n_rounds)


def interference_bias_report(
    cfg: ExperimentConfig, threads: int = 1, runs: Optional[ComparisonRuns] = None
) -> InterferenceBiasReport:
    """Joint-pooled and joint-siloed effects against the ship-alone truth, for every pair."""
    runs = runs or run_comparison(cfg, threads)
    names = cfg.variant_names()
    n = cfg.n_rounds
    solo_rewards = runs.solo_outcomes()
    pairs = []
    for c, t in combinations(range(cfg.n_variants), 2):
        a = _per_rep_ate(runs.pooled.total_reward, c, t, n)
        b = _per_rep_ate(runs.siloed.total_reward, c, t, n)
        s = _per_rep_ate(solo_rewards, c, t, n)
        pairs.append(
            PairBias(
                control=names[c],
                treatment=names[t],
                ate_pooled=float(a.mean()),
                ate_siloed=float(b.mean()),
                ate_solo=float(s.mean()),
                pooled_bias=float((a - s).mean()),
                pooled_bias_half_width=float(t_half_width(a - s)),
                siloed_bias=float((b - s).mean()),
                siloed_bias_half_width=float(t_half_width(b - s)),
            )
        )
    return InterferenceBiasReport(pairs=pairs, runs=runs)


@dataclass(frozen=True)
class RankEntry:
    rank: int
    variant: str
    mean: float
    half_width: float
    separated: Optional[bool]  # CI disjoint from the next-ranked entry; None for the last


def rank_variants(summary: RegretSummary, at_round: int) -> list:
    """Variants by ascending mean cumulative regret at a checkpoint."""
    k = summary.checkpoint_index(at_round)
    order = np.argsort(summary.mean[:, k], kind="stable")
    entries = []
    for pos, v in enumerate(order):
        m, h = float(summary.mean[v, k]), float(summary.half_width[v, k])
        sep = None
        if pos + 1 < order.size:
            w = order[pos + 1]
            sep = bool(m + h < summary.mean[w, k] - summary.half_width[w, k])
        entries.append(RankEntry(pos + 1, summary.variant_names[v], m, h, sep))
    return entries


def intervals_disjoint(summary: RegretSummary, a: str, b: str, at_round: int) -> bool:
    lo_a, hi_a = summary.interval(a, at_round)
    lo_b, hi_b = summary.interval(b, at_round)
    return hi_a < lo_b or hi_b < lo_a


def rank_table(pooled: RegretSummary, siloed: RegretSummary, at_round: int) -> list:
    """``(variant, pooled_rank, siloed_rank)`` rows in configuration order."""
    rp = {e.variant: e.rank for e in rank_variants(pooled, at_round)}
    rs = {e.variant: e.rank for e in rank_variants(siloed, at_round)}
    return [(name, rp[name], rs[name]) for name in pooled.variant_names]

