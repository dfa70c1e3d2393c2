"""CSV, JSON and SVG artifacts.

Every file begins with a line naming the manifest hash, a digest of the
serialized config plus the software version, so outputs from different
configurations can always be told apart.
"""

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .config import dump_config
from .harness import ExperimentConfig, TrajectoryLog
from .stats import InterferenceBiasReport, RegretSummary

HASH_PREFIX = "# manifest_sha256="


def manifest_hash(cfg: ExperimentConfig) -> str:
    h = hashlib.sha256()
    h.update(f"interference-lab {__version__}\n".encode())
    h.update(dump_config(cfg).encode())
    return h.hexdigest()


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_csv(path: Path, digest: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO(newline="")
    buf.write(f"{HASH_PREFIX}{digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _num(v) for v in row])
    path.write_bytes(buf.getvalue().encode("utf-8"))
    return path


def trajectory_rows(log: TrajectoryLog, extra: Sequence = ()):
    for i, rep in enumerate(log.rep_indices):
        for v, name in enumerate(log.variant_names):
            curve = log.cumulative_regret[i, v]
            for k, t in enumerate(log.checkpoints):
                yield (*extra, int(rep), name, int(t), float(curve[k]))


TRAJECTORY_HEADER = ("replication", "variant", "round", "cumulative_regret")


def write_trajectories(path: Path, digest: str, log: TrajectoryLog) -> Path:
    return write_csv(path, digest, TRAJECTORY_HEADER, trajectory_rows(log))


def summary_rows(summary: RegretSummary, extra: Sequence = ()):
    for v, name in enumerate(summary.variant_names):
        for k, t in enumerate(summary.checkpoints):
            yield (*extra, name, int(t), float(summary.mean[v, k]), float(summary.half_width[v, k]), summary.n_reps)


SUMMARY_HEADER = ("variant", "round", "mean_cumulative_regret", "ci95_half_width", "n_reps")


def write_summary(path: Path, digest: str, summary: RegretSummary) -> Path:
    return write_csv(path, digest, SUMMARY_HEADER, summary_rows(summary))


def write_outcomes(path: Path, digest: str, log: TrajectoryLog) -> Path:
    """Per replication and variant: total clicks and clicks per round."""
    rows = []
    for i, rep in enumerate(log.rep_indices):
        for v, name in enumerate(log.variant_names):
            total = int(log.total_reward[i, v])
            rows.append((int(rep), name, total, total / log.n_rounds))
    return write_csv(path, digest, ("replication", "variant", "total_reward", "mean_outcome"), rows)


def write_audit(path: Path, digest: str, log: TrajectoryLog) -> Path:
    def rows():
        for i, rep in enumerate(log.rep_indices):
            for v, name in enumerate(log.variant_names):
                arms, rewards, regret = log.arms[i, v], log.rewards[i, v], log.round_regret[i, v]
                for t in range(log.n_rounds):
                    yield (int(rep), name, t + 1, int(arms[t]), int(rewards[t]), float(regret[t]))

    header = ("replication", "variant", "round", "arm", "reward", "cumulative_regret")
    return write_csv(path, digest, header, rows())


def write_bias(path: Path, digest: str, report: InterferenceBiasReport) -> Path:
    header = (
        "control",
        "treatment",
        "ate_pooled",
        "ate_siloed",
        "ate_solo",
        "pooled_minus_solo",
        "pooled_minus_solo_ci95",
        "siloed_minus_solo",
        "siloed_minus_solo_ci95",
    )
    rows = [
        (
            p.control,
            p.treatment,
            p.ate_pooled,
            p.ate_siloed,
            p.ate_solo,
            p.pooled_bias,
            p.pooled_bias_half_width,
            p.siloed_bias,
            p.siloed_bias_half_width,
        )
        for p in report.pairs
    ]
    return write_csv(path, digest, header, rows)


def write_manifest(
    path: Path,
    cfg: ExperimentConfig,
    digest: str,
    artifacts: Sequence[Path],
    duration_s: float,
    command: str,
    extra: Optional[dict] = None,
) -> Path:
    body = {
        "manifest_hash": digest,
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": dump_config(cfg),
        "config_fields": {
            "n_arms": cfg.n_arms,
            "rho_lo": cfg.rho_lo,
            "rho_hi": cfg.rho_hi,
            "n_rounds": cfg.n_rounds,
            "n_reps": cfg.n_reps,
            "regime": cfg.regime.value,
            "checkpoint_stride": cfg.checkpoint_stride,
            "regret": cfg.regret,
            "audit": cfg.audit,
            "policies": [
                {
                    "name": p.name,
                    "kind": p.kind.value,
                    "epsilon": p.epsilon,
                    "quantile": "schedule" if p.kind.value == "bayes_ucb" and p.quantile is None else p.quantile,
                    "prior": [p.prior.alpha, p.prior.beta],
                    "map_estimator": p.map_estimator,
                }
                for p in cfg.policies
            ],
        },
        "artifacts": [a.name for a in artifacts],
        "wall_clock_seconds": round(duration_s, 3),
    }
    if extra:
        body.update(extra)
    path.write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8", newline="\n")
    return path


# --- SVG ---------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
_PANEL_W, _PANEL_H = 420, 300
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 40, 50
_MAX_POINTS = 400


def _nice_ticks(hi: float, count: int = 5) -> list:
    if hi <= 0:
        return [0.0]
    raw = hi / count
    mag = 10 ** np.floor(np.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    return [i * step for i in range(int(np.floor(hi / step)) + 1)]


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.0e}".replace("e+0", "e").replace("e+", "e")
    return f"{v:g}"


def _thin(n: int) -> np.ndarray:
    if n <= _MAX_POINTS:
        return np.arange(n)
    idx = np.unique(np.linspace(0, n - 1, _MAX_POINTS).round().astype(int))
    return idx


def _panel(x0: float, title: str, summary: RegretSummary) -> list:
    out = []
    pw = _PANEL_W - _MARGIN_L - _MARGIN_R
    ph = _PANEL_H - _MARGIN_T - _MARGIN_B
    left, top = x0 + _MARGIN_L, _MARGIN_T
    xs = summary.checkpoints.astype(float)
    finite_hw = np.where(np.isfinite(summary.half_width), summary.half_width, 0.0)
    y_hi = float((summary.mean + finite_hw).max()) if summary.mean.size else 1.0
    yticks = _nice_ticks(max(y_hi, 1e-12))
    y_top = max(yticks[-1], y_hi) or 1.0
    x_top = float(xs[-1]) if xs.size else 1.0

    def px(x):
        return left + pw * x / x_top

    def py(y):
        return top + ph * (1.0 - y / y_top)

    out.append(f'<text x="{left + pw / 2:.1f}" y="{top - 14}" text-anchor="middle" font-size="14">{title}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>')
    for yt in yticks:
        y = py(yt)
        out.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="#333"/>')
        out.append(
            f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end" font-size="10">{_tick_label(yt)}</text>'
        )
    for xt in _nice_ticks(x_top, 4):
        x = px(xt)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 4}" stroke="#333"/>')
        out.append(
            f'<text x="{x:.2f}" y="{top + ph + 16}" text-anchor="middle" font-size="10">{_tick_label(xt)}</text>'
        )
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{top + ph + 36}" text-anchor="middle" font-size="11">round</text>'
    )
    out.append(
        f'<text x="{x0 + 16}" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 {x0 + 16} {top + ph / 2:.1f})">cumulative regret</text>'
    )
    idx = _thin(xs.size)
    for v, name in enumerate(summary.variant_names):
        color = _PALETTE[v % len(_PALETTE)]
        m = summary.mean[v, idx]
        hw = finite_hw[v, idx]
        upper = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs[idx], m + hw))
        lower = " ".join(f"{px(x):.2f},{py(max(y, 0.0)):.2f}" for x, y in zip(xs[idx][::-1], (m - hw)[::-1]))
        out.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs[idx], m))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 12 + 14 * v
        out.append(f'<line x1="{left + 8}" y1="{ly - 4}" x2="{left + 24}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 28}" y="{ly}" font-size="10">{_escape(name)}</text>')
    return out


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_regret_svg(digest: str, panels: Sequence[tuple]) -> str:
    """Side-by-side panels of mean cumulative regret with 95% bands.

    ``panels`` is a sequence of ``(title, RegretSummary)``.
    """
    width = _PANEL_W * len(panels)
    parts = [
        f"<!-- manifest_sha256={digest} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{_PANEL_H}" '
        f'viewBox="0 0 {width} {_PANEL_H}" font-family="sans-serif">',
        f'<rect width="{width}" height="{_PANEL_H}" fill="#fff"/>',
    ]
    for i, (title, summary) in enumerate(panels):
        parts.append(f'<g id="panel-{i}">')
        parts.extend(_panel(i * _PANEL_W, _escape(title), summary))
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path: Path, digest: str, panels: Sequence[tuple]) -> Path:
    path.write_bytes(render_regret_svg(digest, panels).encode("utf-8"))
    return path
