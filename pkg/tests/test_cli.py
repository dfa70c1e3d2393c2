import csv
import json
import re

import pytest

from interference_lab.cli import THREADS_ENV, main
from interference_lab.config import dump_config, paper_preset
from interference_lab.reporting import HASH_PREFIX

SMALL = """
n_arms = 6
n_rounds = 600
n_reps = 3
checkpoint_stride = 100
seed = 17
[policies]
mle_greedy
map_greedy
epsilon_greedy
thompson
bayes_ucb
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return p


def read_csv(path):
    lines = path.read_text().split("\n")
    assert lines[0].startswith(HASH_PREFIX)
    return list(csv.DictReader(lines[1:]))


def test_run_writes_artifacts(small_cfg, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(small_cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "trajectories.csv")
    assert list(rows[0]) == ["replication", "variant", "round", "cumulative_regret"]
    assert len(rows) == 3 * 5 * 6
    assert len({(r["replication"], r["variant"]) for r in rows}) == 15
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 17 and "trajectories.csv" in manifest["artifacts"]
    assert b"\r" not in (out / "trajectories.csv").read_bytes()


def test_run_is_byte_identical_and_thread_independent(small_cfg, tmp_path, monkeypatch):
    outs = [tmp_path / n for n in ("a", "b", "c", "d")]
    assert main(["run", "--config", str(small_cfg), "--out", str(outs[0])]) == 0
    assert main(["run", "--config", str(small_cfg), "--out", str(outs[1])]) == 0
    assert main(["run", "--config", str(small_cfg), "--out", str(outs[2]), "--threads", "8"]) == 0
    monkeypatch.setenv(THREADS_ENV, "4")
    assert main(["run", "--config", str(small_cfg), "--out", str(outs[3])]) == 0
    ref = (outs[0] / "trajectories.csv").read_bytes()
    for o in outs[1:]:
        assert (o / "trajectories.csv").read_bytes() == ref
        assert (o / "summary.csv").read_bytes() == (outs[0] / "summary.csv").read_bytes()


def test_seed_flag_changes_hash_and_output(small_cfg, tmp_path):
    main(["run", "--config", str(small_cfg), "--out", str(tmp_path / "a")])
    main(["run", "--config", str(small_cfg), "--out", str(tmp_path / "b"), "--seed", "18"])
    a = (tmp_path / "a" / "trajectories.csv").read_text().split("\n")
    b = (tmp_path / "b" / "trajectories.csv").read_text().split("\n")
    assert a[0] != b[0] and a[2:] != b[2:]


def test_audit_and_stride_flags(small_cfg, tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(small_cfg), "--out", str(out), "--audit", "--checkpoint-stride", "300"]) == 0
    assert len(read_csv(out / "audit.csv")) == 3 * 5 * 600
    assert {r["round"] for r in read_csv(out / "trajectories.csv")} == {"300", "600"}


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("n_rounds = 10\nn_arms = 0\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "n_arms" in err and ":2:" in err


def test_bad_threads_env_is_config_error(small_cfg, tmp_path, monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "many")
    assert main(["run", "--config", str(small_cfg), "--out", str(tmp_path / "o")]) == 2


def test_flag_wins_over_env(small_cfg, tmp_path, monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "many")
    assert main(["run", "--config", str(small_cfg), "--out", str(tmp_path / "o"), "--threads", "2"]) == 0


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as e:
        main(["run", "--config"])
    assert e.value.code == 2


def test_io_errors_exit_code(small_cfg, tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "o")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--config", str(small_cfg), "--out", str(blocker / "sub")]) == 3


def test_compare_outputs(small_cfg, tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(small_cfg), "--out", str(out)]) == 0
    svg = (out / "regret.svg").read_text()
    assert svg.startswith("<!-- manifest_sha256=")
    assert svg.count('<g id="panel-') == 2
    assert svg.count("<polyline") == 10 and svg.count("<polygon") == 10
    bias = read_csv(out / "interference_bias.csv")
    assert len(bias) == 10
    assert all(float(r["siloed_minus_solo"]) == 0.0 for r in bias)
    ranks = read_csv(out / "ranks.csv")
    assert sorted(int(r["pooled_rank"]) for r in ranks) == [1, 2, 3, 4, 5]
    for name in ("trajectories_pooled.csv", "trajectories_siloed.csv", "summary.csv"):
        read_csv(out / name)


def test_compare_svg_is_deterministic(small_cfg, tmp_path):
    for d in ("a", "b"):
        main(["compare", "--config", str(small_cfg), "--out", str(tmp_path / d)])
    assert (tmp_path / "a" / "regret.svg").read_bytes() == (tmp_path / "b" / "regret.svg").read_bytes()


def test_compare_single_variant_panels_agree(tmp_path):
    cfg = tmp_path / "one.cfg"
    cfg.write_text("n_rounds = 300\nn_reps = 2\ncheckpoint_stride = 50\n[policies]\nthompson\n")
    out = tmp_path / "o"
    assert main(["compare", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "summary.csv")
    pooled = [(r["round"], r["mean_cumulative_regret"]) for r in rows if r["regime"] == "pooled"]
    siloed = [(r["round"], r["mean_cumulative_regret"]) for r in rows if r["regime"] == "siloed"]
    assert pooled == siloed
    svg = (out / "regret.svg").read_text()
    lines = re.findall(r'<polyline points="([^"]+)"', svg)
    shift = lambda pts: [(round(float(x.split(",")[0]) % 420, 2), x.split(",")[1]) for x in pts.split()]
    assert shift(lines[0]) == shift(lines[1])


def test_solo_reports_isolation(small_cfg, tmp_path):
    siloed = tmp_path / "s.cfg"
    siloed.write_text(SMALL.replace("seed = 17", "seed = 17\nregime = siloed"))
    out = tmp_path / "o"
    assert main(["solo", "--config", str(siloed), "--out", str(out), "--audit"]) == 0
    rows = read_csv(out / "isolation.csv")
    assert len(rows) == 15 and all(r["identical"] == "true" and r["first_divergence"] == "" for r in rows)


def test_solo_pooled_reports_divergence(small_cfg, tmp_path):
    out = tmp_path / "o"
    assert main(["solo", "--config", str(small_cfg), "--out", str(out), "--audit", "--variant", "MLE-Greedy"]) == 0
    rows = read_csv(out / "isolation.csv")
    assert any(r["identical"] == "false" and int(r["first_divergence"]) >= 1 for r in rows)


def test_solo_unknown_variant(small_cfg, tmp_path):
    assert main(["solo", "--config", str(small_cfg), "--out", str(tmp_path / "o"), "--variant", "Nope"]) == 2


def test_paper_preset_file(tmp_path, capsys):
    assert main(["paper-preset"]) == 0
    assert capsys.readouterr().out == dump_config(paper_preset())
    assert main(["paper-preset", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "paper.cfg").read_text()
    assert "n_rounds = 2000000" in text and "n_reps = 20" in text and "n_arms = 11" in text


def test_validate_healthy(tmp_path):
    assert main(["validate", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "validation.json").read_text())
    assert report["passed"] and report["failures"] == []
    assert all(s["passed"] and "max_error" in s for s in report["suites"])
    assert len(report["suites"]) == 7


def test_validate_corrupted_tolerance_fails(tmp_path, capsys):
    code = main(
        ["validate", "--out", str(tmp_path), "--tolerance", "quantile_roundtrip=1e-300",
         "--suite", "quantile_roundtrip", "--suite", "moments"]
    )
    assert code == 1
    assert "quantile_roundtrip" in capsys.readouterr().err
    report = json.loads((tmp_path / "validation.json").read_text())
    assert report["failures"] == ["quantile_roundtrip"]


def test_validate_bad_tolerance_name(tmp_path):
    assert main(["validate", "--out", str(tmp_path), "--tolerance", "nope=1"]) == 2
