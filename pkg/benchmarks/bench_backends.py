"""Time the hot kernels under the compiled and pure-Python backends.

Each backend runs in its own interpreter because the switch is read at import
time.  Usage::

    python benchmarks/bench_backends.py [--rounds 2000] [--draws 20000]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from interference_lab import backend
from interference_lab.config import paper_preset
from interference_lab.harness import run_experiment
from interference_lab.numerics import RngStream
from interference_lab.numerics.sampling import fill_beta, fill_uniform
from interference_lab.numerics.special import beta_quantile_kernel, incbeta_pair

rounds, draws = int(sys.argv[1]), int(sys.argv[2])


def best_of(fn, repeat=3):
    fn()  # compile / warm caches
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


buf = np.empty(draws)
rng = RngStream(1, 2)
grid = [(2.0 + i, 10.0 + 3 * i, 0.2 + 0.0005 * i) for i in range(200)]


def quantiles():
    for a, b, x in grid:
        lower, upper = incbeta_pair(a, b, x)
        if lower <= 0.5:
            beta_quantile_kernel(a, b, lower, False)
        else:
            beta_quantile_kernel(a, b, upper, True)


cfg = paper_preset().with_(n_rounds=rounds, n_reps=1, checkpoint_stride=rounds)
res = {
    "backend": backend(),
    "uniform_ns": best_of(lambda: fill_uniform(rng.states, buf)) / draws * 1e9,
    "beta_ns": best_of(lambda: fill_beta(rng.states, 2.0, 10.0, buf)) / draws * 1e9,
    "quantile_us": best_of(quantiles) / len(grid) * 1e6,
    "round_us": best_of(lambda: run_experiment(cfg), repeat=1) / rounds * 1e6,
}
print(json.dumps(res))
"""


def run(pure: bool, rounds: int, draws: int) -> dict:
    env = dict(os.environ, INTERFERENCE_LAB_PURE_NUMPY="1" if pure else "0")
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(rounds), str(draws)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--rounds", type=int, default=2000, help="rounds of the five-policy pooled run")
    ap.add_argument("--draws", type=int, default=20000, help="samples per draw benchmark")
    args = ap.parse_args()
    fast = run(False, args.rounds, args.draws)
    slow = run(True, args.rounds, args.draws)
    rows = [
        ("uniform draw", "uniform_ns", "ns"),
        ("Beta(2,10) draw", "beta_ns", "ns"),
        ("quantile round trip", "quantile_us", "us"),
        ("pooled round, 5 policies", "round_us", "us"),
    ]
    print(f"{'kernel':<26} {fast['backend']:>12} {slow['backend']:>12} {'speedup':>9}")
    for label, key, unit in rows:
        print(f"{label:<26} {fast[key]:>9.2f} {unit} {slow[key]:>9.2f} {unit} {slow[key] / fast[key]:>8.0f}x")


if __name__ == "__main__":
    main()
