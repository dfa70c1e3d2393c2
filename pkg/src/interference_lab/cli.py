"""Command-line entry point: ``interference-lab <command> ...``.

Exit codes: 0 success, 1 validation failure, 2 configuration error, 3 I/O error.
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import dump_config, load_config, paper_preset
from .errors import ConfigError
from .harness import ExperimentConfig, TrajectoryLog, first_divergence, run_experiment, solo_replay, trajectories_identical
from .reporting import (
    manifest_hash,
    summary_rows,
    SUMMARY_HEADER,
    write_audit,
    write_bias,
    write_csv,
    write_manifest,
    write_outcomes,
    write_summary,
    write_svg,
    write_trajectories,
)
from .stats import interference_bias_report, rank_variants, run_comparison, summarize_regret

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_IO = 3

THREADS_ENV = "INTERFERENCE_LAB_THREADS"


def _threads(flag: Optional[int]) -> int:
    if flag is not None:
        if flag < 1:
            raise ConfigError(f"--threads must be >= 1, got {flag}")
        return flag
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {n}")
    return n


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.audit:
        changes["audit"] = True
    if args.checkpoint_stride is not None:
        changes["checkpoint_stride"] = args.checkpoint_stride
    return cfg.with_(**changes) if changes else cfg


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    cfg = _load(args)
    threads = _threads(args.threads)
    out = _out_dir(args.out)
    digest = manifest_hash(cfg)
    start = time.perf_counter()
    log = run_experiment(cfg, threads)
    elapsed = time.perf_counter() - start
    summary = summarize_regret(log)
    files = [
        write_trajectories(out / "trajectories.csv", digest, log),
        write_summary(out / "summary.csv", digest, summary),
        write_outcomes(out / "outcomes.csv", digest, log),
    ]
    if cfg.audit:
        files.append(write_audit(out / "audit.csv", digest, log))
    write_manifest(out / "manifest.json", cfg, digest, files, elapsed, "run")
    last = int(summary.checkpoints[-1])
    print(f"{cfg.regime.value} run, {cfg.n_reps} replications x {cfg.n_rounds} rounds ({elapsed:.1f}s)")
    for e in rank_variants(summary, last):
        print(f"  {e.rank}. {e.variant:<16} {e.mean:14.3f} +/- {e.half_width:.3f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    threads = _threads(args.threads)
    out = _out_dir(args.out)
    digest = manifest_hash(cfg)
    start = time.perf_counter()
    runs = run_comparison(cfg, threads)
    report = interference_bias_report(cfg, threads, runs=runs)
    elapsed = time.perf_counter() - start
    pooled = summarize_regret(runs.pooled)
    siloed = summarize_regret(runs.siloed)
    last = int(pooled.checkpoints[-1])
    rank_p = {e.variant: e for e in rank_variants(pooled, last)}
    rank_s = {e.variant: e for e in rank_variants(siloed, last)}
    rank_rows = [
        (name, rank_p[name].rank, rank_p[name].mean, rank_s[name].rank, rank_s[name].mean, rank_p[name].rank - rank_s[name].rank)
        for name in cfg.variant_names()
    ]
    files = [
        write_trajectories(out / "trajectories_pooled.csv", digest, runs.pooled),
        write_trajectories(out / "trajectories_siloed.csv", digest, runs.siloed),
        write_csv(
            out / "summary.csv",
            digest,
            ("regime",) + SUMMARY_HEADER,
            [*summary_rows(pooled, ("pooled",)), *summary_rows(siloed, ("siloed",))],
        ),
        write_bias(out / "interference_bias.csv", digest, report),
        write_csv(
            out / "ranks.csv",
            digest,
            ("variant", "pooled_rank", "pooled_mean", "siloed_rank", "siloed_mean", "rank_improvement"),
            rank_rows,
        ),
        write_svg(out / "regret.svg", digest, [("pooled", pooled), ("siloed", siloed)]),
    ]
    write_manifest(out / "manifest.json", cfg, digest, files, elapsed, "compare")
    print(f"compare: {cfg.n_reps} replications x {cfg.n_rounds} rounds ({elapsed:.1f}s)")
    print(f"  {'variant':<16} {'pooled':>14} {'rank':>4} {'siloed':>14} {'rank':>4}")
    for name, rp, mp, rs, ms, _ in rank_rows:
        print(f"  {name:<16} {mp:14.3f} {rp:4d} {ms:14.3f} {rs:4d}")
    return EXIT_OK


def cmd_solo(args) -> int:
    cfg = _load(args)
    threads = _threads(args.threads)
    out = _out_dir(args.out)
    names = cfg.variant_names()
    chosen = args.variant or names
    for v in chosen:
        if v not in names:
            raise ConfigError(f"unknown variant {v!r}; have {names}")
    digest = manifest_hash(cfg)
    start = time.perf_counter()
    joint = run_experiment(cfg, threads)
    solos = {v: solo_replay(cfg, v, threads) for v in chosen}
    elapsed = time.perf_counter() - start
    rows = []
    for v in chosen:
        one = joint.select(v)
        div = first_divergence(joint, solos[v], v) if cfg.audit else [None] * cfg.n_reps
        for i, rep in enumerate(joint.rep_indices):
            same = trajectories_identical(one.replication(i), 0, solos[v].replication(i), 0)
            rows.append((int(rep), v, "true" if same else "false", "" if div[i] is None else str(div[i])))
    files = [
        write_trajectories(out / "trajectories_solo.csv", digest, TrajectoryLog.stack_variants([solos[v] for v in chosen])),
        write_csv(out / "isolation.csv", digest, ("replication", "variant", "identical", "first_divergence"), rows),
    ]
    write_manifest(out / "manifest.json", cfg, digest, files, elapsed, "solo")
    n_same = sum(r[2] == "true" for r in rows)
    print(f"solo replay under {cfg.regime.value}: {n_same}/{len(rows)} trajectories identical to the joint run")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validate import DEFAULT_TOLERANCES, SUITES, run_validation

    overrides = {}
    for item in args.tolerance or []:
        key, sep, value = item.partition("=")
        if not sep or key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"--tolerance expects SUITE=VALUE with SUITE in {sorted(DEFAULT_TOLERANCES)}")
        try:
            overrides[key] = float(value)
        except ValueError:
            raise ConfigError(f"--tolerance {key}: not a number: {value!r}") from None
    for name in args.suite or []:
        if name not in SUITES:
            raise ConfigError(f"unknown suite {name!r}; have {sorted(SUITES)}")
    out = _out_dir(args.out)

    def progress(res):
        status = "pass" if res.passed else "FAIL"
        print(f"  {res.name:<20} {status}  max_error={res.max_error:.3g} tolerance={res.tolerance:.3g}")

    report = run_validation(overrides, args.suite, progress)
    report["version"] = __version__
    (out / "validation.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8", newline="\n")
    if report["failures"]:
        print("failed suites: " + ", ".join(report["failures"]), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_paper_preset(args) -> int:
    text = dump_config(paper_preset())
    if args.out:
        path = Path(args.out)
        if path.is_dir():
            path = path / "paper.cfg"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="interference-lab", description="Bandit variants under pooled or siloed training data.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def experiment(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="experiment config file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=_seed, help="override the config seed")
        sp.add_argument("--threads", type=_positive_int, help=f"worker threads (default ${THREADS_ENV} or 1)")
        sp.add_argument("--audit", action="store_true", help="log every round")
        sp.add_argument("--checkpoint-stride", type=_positive_int, help="rounds between regret checkpoints")
        sp.set_defaults(fn=fn)
        return sp

    experiment("run", cmd_run, "run the configured regime")
    experiment("compare", cmd_compare, "pooled vs siloed vs solo deployments")
    solo = experiment("solo", cmd_solo, "replay variants alone and compare with the joint run")
    solo.add_argument("--variant", action="append", help="variant name (repeatable; default all)")

    v = sub.add_parser("validate", help="run numeric oracles and harness invariants")
    v.add_argument("--out", required=True, help="directory for validation.json")
    v.add_argument("--tolerance", action="append", metavar="SUITE=VALUE", help="override a suite tolerance")
    v.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    v.set_defaults(fn=cmd_validate)

    pp = sub.add_parser("paper-preset", help="write the reference configuration")
    pp.add_argument("--out", help="file or directory (default stdout)")
    pp.set_defaults(fn=cmd_paper_preset)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
