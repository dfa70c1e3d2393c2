"""Self-checks: numeric oracles and harness invariants.

Each suite returns a :class:`SuiteResult` with the largest observed error and
the tolerance it was held to.  ``run_validation`` runs them all and produces
a JSON-ready report.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special, stats as sps

from ._jit import njit
from .harness import ExperimentConfig, Regime, run_experiment, solo_replay, trajectories_identical
from .numerics import BetaParams, RngStream
from .numerics.rng import PURPOSE_VALIDATION, stream_id
from .numerics.sampling import fill_bernoulli, fill_beta, fill_gamma, fill_uniform
from .numerics.special import beta_quantile_bisect_kernel, beta_quantile_kernel, incbeta_pair
from .policies import PolicyKind, PolicySpec


@dataclass
class SuiteResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    checks: int
    detail: dict = field(default_factory=dict)


DEFAULT_TOLERANCES = {
    "quantile_roundtrip": 1e-8,
    "quantile_bisection": 1e-8,
    "incbeta_quadrature": 1e-10,
    "beta_ks": 0.01,  # significance level; error is 1 - min p-value
    "moments": 1.0,  # error is the worst |deviation| / allowed band
    "siloed_isolation": 0.0,
    "count_conservation": 0.0,
}


def _validation_stream(seed: int, tag: int) -> RngStream:
    return RngStream(seed, stream_id(tag, 0, PURPOSE_VALIDATION))


# --- numerics ------------------------------------------------------------------


@njit
def _q_roundtrip(q, a, b, out_x, out_err):
    for i in range(q.shape[0]):
        upper = q[i] > 0.5
        p = 1.0 - q[i] if upper else q[i]
        x = beta_quantile_kernel(a[i], b[i], p, upper)
        out_x[i] = x
        out_err[i] = abs(incbeta_pair(a[i], b[i], x)[0] - q[i])


# Tails below this are subnormal or nearly so and keep too few bits to invert.
_MIN_TAIL = 1e-290


@njit
def _x_roundtrip(x, a, b, out_err, used):
    for i in range(x.shape[0]):
        lo, up = incbeta_pair(a[i], b[i], x[i])
        if lo <= 0.5:
            ok = lo > _MIN_TAIL
            xr = beta_quantile_kernel(a[i], b[i], lo, False) if ok else x[i]
        else:
            ok = up > _MIN_TAIL
            xr = beta_quantile_kernel(a[i], b[i], up, True) if ok else x[i]
        used[i] = ok
        out_err[i] = abs(xr - x[i]) if ok else 0.0


def roundtrip_grid(n: int, seed: int = 0):
    """``(q, alpha, beta)`` triples with shapes log-uniform on [1, 1e5] and
    levels covering the bulk and both tails."""
    g = np.random.default_rng(seed)
    a = 10.0 ** g.uniform(0.0, 5.0, n)
    b = 10.0 ** g.uniform(0.0, 5.0, n)
    q = g.uniform(0.0, 1.0, n)
    tails = g.integers(0, 4, n)
    depth = 10.0 ** g.uniform(-12.0, -1.0, n)
    q = np.where(tails == 0, depth, np.where(tails == 1, 1.0 - depth, q))
    q = np.clip(q, 1e-300, np.nextafter(1.0, 0.0))
    return q, a, b


def suite_quantile_roundtrip(tol: float, n: int = 10_000, seed: int = 0) -> SuiteResult:
    q, a, b = roundtrip_grid(n, seed)
    xs = np.empty(n)
    q_err = np.empty(n)
    _q_roundtrip(q, a, b, xs, q_err)
    g = np.random.default_rng(seed + 1)
    x = g.uniform(0.01, 0.99, n)
    x_err = np.empty(n)
    used = np.zeros(n, dtype=np.bool_)
    _x_roundtrip(x, a, b, x_err, used)
    worst = float(max(q_err.max(), x_err.max()))
    return SuiteResult(
        "quantile_roundtrip",
        worst <= tol,
        worst,
        tol,
        n + int(used.sum()),
        {"max_level_error": float(q_err.max()), "max_x_error": float(x_err.max()), "x_points_unsaturated": int(used.sum())},
    )


def suite_quantile_bisection(tol: float) -> SuiteResult:
    cases = [(2.0, 10.0, 0.975), (2.0, 10.0, 0.5), (2.0, 10.0, 0.025), (32.0, 180.0, 0.99), (1.0, 1.0, 0.3)]
    errs = []
    for a, b, q in cases:
        fast = beta_quantile_kernel(a, b, q, False)
        slow = beta_quantile_bisect_kernel(a, b, q, False, 1e-14)
        errs.append(abs(fast - slow))
    worst = float(max(errs))
    return SuiteResult("quantile_bisection", worst <= tol, worst, tol, len(cases))


def suite_incbeta_quadrature(tol: float) -> SuiteResult:
    cases = [(2.0, 10.0, x) for x in (0.05, 0.1, 0.2)] + [(5.0, 3.0, 0.4), (1.5, 7.5, 0.3)]
    errs = []
    for a, b, x in cases:
        logb = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
        ref, _ = integrate.quad(
            lambda t: math.exp((a - 1) * math.log(t) + (b - 1) * math.log1p(-t) - logb), 0.0, x, epsabs=1e-14, epsrel=1e-13
        )
        errs.append(abs(incbeta_pair(a, b, x)[0] - ref))
    worst = float(max(errs))
    return SuiteResult("incbeta_quadrature", worst <= tol, worst, tol, len(cases))


KS_PAIRS = [
    (1.0, 1.0), (2.0, 10.0), (0.5, 0.5), (0.3, 2.0), (5.0, 1.0), (2.0, 2.0), (10.0, 2.0),
    (32.0, 180.0), (100.0, 900.0), (0.8, 3.5), (3.0, 0.7), (1.5, 1.5), (20.0, 20.0), (7.0, 42.0),
    (0.2, 0.2), (1000.0, 9000.0), (2.5, 60.0), (60.0, 2.5), (12.0, 100.0), (4.0, 8.0),
]


def suite_beta_ks(alpha_level: float, n: int = 100_000, seed: int = 0) -> SuiteResult:
    pvals = {}
    for i, (a, b) in enumerate(KS_PAIRS):
        rng = _validation_stream(seed, 100 + i)
        out = np.empty(n)
        fill_beta(rng.states, a, b, out)
        pvals[f"{a:g},{b:g}"] = float(sps.ks_1samp(out, lambda x: special.betainc(a, b, x)).pvalue)
    worst_p = min(pvals.values())
    return SuiteResult("beta_ks", worst_p > alpha_level, 1.0 - worst_p, 1.0 - alpha_level, len(KS_PAIRS), {"p_values": pvals})


def moment_checks(seed: int = 0, n: int = 1_000_000) -> dict:
    """Sample statistic, target and allowed half-band for each moment check."""
    out = {}
    buf = np.empty(n)
    fill_uniform(_validation_stream(seed, 1).states, buf)
    out["uniform_mean"] = (buf.mean(), 0.5, 0.002)
    ints = np.empty(n, dtype=np.int64)
    fill_bernoulli(_validation_stream(seed, 2).states, 0.15, ints)
    out["bernoulli_0.15_mean"] = (ints.mean(), 0.15, 0.0011)
    fill_gamma(_validation_stream(seed, 3).states, 1.0, buf)
    out["gamma_1_mean"] = (buf.mean(), 1.0, 0.004)
    fill_gamma(_validation_stream(seed, 4).states, 2.0, buf)
    out["gamma_2_mean"] = (buf.mean(), 2.0, 0.005)
    # 3 sigma of the sample variance: sqrt((mu4 - sigma^4) / n) with mu4 = 3k(k+2)
    out["gamma_2_variance"] = (buf.var(ddof=1), 2.0, 3.0 * math.sqrt((24.0 - 4.0) / n))
    fill_beta(_validation_stream(seed, 5).states, 1.0, 1.0, buf)
    out["beta_1_1_mean"] = (buf.mean(), 0.5, 0.001)
    fill_beta(_validation_stream(seed, 6).states, 2.0, 10.0, buf)
    out["beta_2_10_mean"] = (buf.mean(), 2.0 / 12.0, 0.002)
    return out


def suite_moments(tol: float, seed: int = 0) -> SuiteResult:
    checks = moment_checks(seed)
    ratios = {k: abs(v - target) / band for k, (v, target, band) in checks.items()}
    worst = float(max(ratios.values()))
    detail = {k: {"value": float(v), "target": t, "band": b} for k, (v, t, b) in checks.items()}
    return SuiteResult("moments", worst <= tol, worst, tol, len(checks), detail)


# --- harness -------------------------------------------------------------------


def random_policy(g: np.random.Generator) -> PolicySpec:
    kind = list(PolicyKind)[g.integers(0, 5)]
    prior = BetaParams(float(g.choice([1.0, 2.0, 0.5])), float(g.choice([1.0, 10.0, 3.0])))
    if kind is PolicyKind.EPSILON_GREEDY:
        return PolicySpec(kind, epsilon=float(g.choice([0.0, 0.05, 0.3, 1.0])), prior=prior)
    if kind is PolicyKind.BAYES_UCB:
        q = None if g.random() < 0.5 else float(g.uniform(0.5, 0.99))
        return PolicySpec(kind, quantile=q, prior=prior)
    return PolicySpec(kind, prior=prior)


def random_battery(n: int, seed: int = 0, max_rounds: int = 2000) -> list:
    """Small configs with 1-5 variants, 1-6 arms and at most ``max_rounds`` rounds."""
    g = np.random.default_rng(seed)
    out = []
    for i in range(n):
        n_var = int(g.integers(1, 6))
        n_arms = int(g.integers(1, 7))
        lo = float(g.uniform(0.0, 0.5))
        hi = float(g.uniform(lo, 1.0))
        rounds = int(g.integers(1, max_rounds + 1))
        stride = int(g.integers(1, rounds + 1))
        out.append(
            ExperimentConfig(
                policies=[random_policy(g) for _ in range(n_var)],
                n_arms=n_arms,
                rho_lo=lo,
                rho_hi=hi,
                n_rounds=rounds,
                n_reps=int(g.integers(1, 3)),
                seed=int(g.integers(0, 2**63)),
                checkpoint_stride=stride,
                audit=True,
            )
        )
    return out


def check_isolation(cfg: ExperimentConfig) -> int:
    """Number of variants whose joint siloed run differs from their solo replay."""
    siloed = cfg.with_(regime=Regime.SILOED, audit=True)
    joint = run_experiment(siloed)
    return sum(
        not trajectories_identical(joint, v, solo_replay(siloed, v), 0) for v in range(cfg.n_variants)
    )


def check_conservation(cfg: ExperimentConfig) -> int:
    """Checkpoints whose per-variant observation totals break V*t (pooled) or t (siloed)."""
    bad = 0
    t = cfg.checkpoints()
    for regime, per_round in ((Regime.POOLED, cfg.n_variants), (Regime.SILOED, 1)):
        log = run_experiment(cfg.with_(regime=regime, audit=False))
        bad += int(np.count_nonzero(log.observations != per_round * t[None, None, :]))
    return bad


def suite_isolation(tol: float, n_configs: int = 12, seed: int = 0) -> SuiteResult:
    errs = [check_isolation(c) for c in random_battery(n_configs, seed, max_rounds=500)]
    worst = float(max(errs))
    return SuiteResult("siloed_isolation", worst <= tol, worst, tol, n_configs)


def suite_conservation(tol: float, n_configs: int = 12, seed: int = 0) -> SuiteResult:
    errs = [check_conservation(c) for c in random_battery(n_configs, seed + 1, max_rounds=500)]
    worst = float(max(errs))
    return SuiteResult("count_conservation", worst <= tol, worst, tol, n_configs)


SUITES: dict = {
    "quantile_roundtrip": suite_quantile_roundtrip,
    "quantile_bisection": suite_quantile_bisection,
    "incbeta_quadrature": suite_incbeta_quadrature,
    "beta_ks": suite_beta_ks,
    "moments": suite_moments,
    "siloed_isolation": suite_isolation,
    "count_conservation": suite_conservation,
}


def run_validation(
    tolerances: Optional[dict] = None, only: Optional[list] = None, progress: Optional[Callable] = None
) -> dict:
    """Run the suites and return ``{"passed", "failures", "suites"}``."""
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in (tolerances or {}).items():
        if k not in tol:
            raise KeyError(k)
        tol[k] = float(v)
    results = []
    for name, fn in SUITES.items():
        if only and name not in only:
            continue
        res = fn(tol[name])
        if progress:
            progress(res)
        results.append(res)
    failures = [r.name for r in results if not r.passed]
    return {"passed": not failures, "failures": failures, "suites": [asdict(r) for r in results]}
