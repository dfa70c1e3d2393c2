"""The compiled kernels and the plain-Python fallback must agree exactly."""

import json
import os
import subprocess
import sys
import textwrap

import pytest

PROBE = textwrap.dedent(
    """
    import json
    import numpy as np
    from interference_lab import backend
    from interference_lab.harness import ExperimentConfig, Regime, run_experiment
    from interference_lab.numerics import BetaParams, RngStream, draw_beta, draw_gamma
    from interference_lab.numerics import beta_quantile, regularized_incomplete_beta
    from interference_lab.policies import reference_policies

    out = {"backend": backend()}
    rng = RngStream(99, 5)
    out["draws"] = [draw_gamma(rng, s).hex() for s in (0.3, 1.0, 7.5)] + [
        draw_beta(rng, BetaParams(2.0, 10.0)).hex() for _ in range(5)
    ]
    out["special"] = [
        regularized_incomplete_beta(x, BetaParams(a, b)).hex()
        for a, b, x in [(2, 10, 0.1), (300, 4000, 0.07), (1.5, 2.5, 0.9)]
    ] + [beta_quantile(q, BetaParams(a, b)).hex() for a, b, q in [(2, 10, 0.975), (50, 900, 1e-6), (3, 3, 0.5)]]
    for regime in ("pooled", "siloed"):
        cfg = ExperimentConfig(
            policies=reference_policies(), n_rounds=150, n_reps=2, regime=Regime(regime),
            seed=2024, checkpoint_stride=50, audit=True,
        )
        log = run_experiment(cfg)
        out[regime] = {
            "arms": log.arms.tolist(),
            "rewards": log.rewards.tolist(),
            "regret": [float(v).hex() for v in log.cumulative_regret.ravel()],
        }
    print(json.dumps(out))
    """
)


def _probe(pure: bool) -> dict:
    env = dict(os.environ)
    env["INTERFERENCE_LAB_PURE_NUMPY"] = "1" if pure else "0"
    res = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True, text=True, timeout=900)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout)


@pytest.mark.slow
def test_fallback_matches_compiled():
    fast = _probe(False)
    slow = _probe(True)
    assert fast.pop("backend") == "numba"
    assert slow.pop("backend") == "numpy"
    for key in fast:
        assert fast[key] == slow[key], key


def test_flag_parsing(monkeypatch):
    from interference_lab import _jit

    for value, pure in [("", False), ("0", False), ("no", False), ("1", True), ("yes", True), ("TRUE", True)]:
        monkeypatch.setenv("INTERFERENCE_LAB_PURE_NUMPY", value)
        assert _jit._pure_requested() is pure
