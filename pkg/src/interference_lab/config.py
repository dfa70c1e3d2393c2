"""Flat ``key = value`` experiment files.

Top-level lines set scalar fields.  A ``[policies]`` header starts the policy
list: one policy per line, its kind followed by optional ``key=value`` options
(``epsilon``, ``quantile``, ``estimator``, ``prior_alpha``, ``prior_beta``,
``name``).  ``#`` starts a comment.  Errors carry the file and line number.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError, DomainError
from .harness import REGRET_EXPECTED, REGRET_REALIZED, ExperimentConfig, Regime
from .numerics import BetaParams
from .policies import DEFAULT_PRIOR, PolicyKind, PolicySpec, reference_policies

_INT_KEYS = ("n_arms", "n_rounds", "n_reps", "seed", "checkpoint_stride")
_FLOAT_KEYS = ("rho_lo", "rho_hi", "prior_alpha", "prior_beta")
_KNOWN_KEYS = _INT_KEYS + _FLOAT_KEYS + ("regime", "regret", "audit")
_POLICY_OPTIONS = ("epsilon", "quantile", "estimator", "prior_alpha", "prior_beta", "name")


@dataclass
class _Parsed:
    scalars: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)
    policies: list = field(default_factory=list)  # (line_no, kind, options)


def _fail(source: str, line_no: Optional[int], msg: str):
    where = f"{source}:{line_no}" if line_no else source
    raise ConfigError(f"{where}: {msg}")


def _parse_int(text: str) -> int:
    # accept 2e6 and 2_000_000 as well as plain integers
    try:
        return int(text.replace("_", ""))
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"not an integer: {text}") from None
        return int(value)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text}")


def _scan(text: str, source: str) -> _Parsed:
    out = _Parsed()
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section != "policies":
                _fail(source, no, f"unknown section [{section}]")
            continue
        if section == "policies":
            kind, *opts = line.split()
            options = {}
            for opt in opts:
                key, sep, value = opt.partition("=")
                if not sep or key not in _POLICY_OPTIONS:
                    _fail(source, no, f"bad policy option {opt!r}; allowed: {', '.join(_POLICY_OPTIONS)}")
                if key in options:
                    _fail(source, no, f"policy option {key} given twice")
                options[key] = value
            out.policies.append((no, kind, options))
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            _fail(source, no, f"expected 'key = value', got {raw.strip()!r}")
        if key not in _KNOWN_KEYS:
            _fail(source, no, f"unknown key {key!r}")
        if key in out.scalars:
            _fail(source, no, f"{key} given twice (first on line {out.lines[key]})")
        try:
            if key in _INT_KEYS:
                parsed = _parse_int(value)
            elif key in _FLOAT_KEYS:
                parsed = float(value)
            elif key == "audit":
                parsed = _parse_bool(value)
            else:
                parsed = value.lower()
        except ValueError as exc:
            _fail(source, no, f"{key}: {exc}")
        out.scalars[key] = parsed
        out.lines[key] = no
    return out


def _build_policy(source: str, no: int, kind: str, options: dict, prior: BetaParams) -> PolicySpec:
    try:
        kind_enum = PolicyKind(kind.lower())
    except ValueError:
        allowed = ", ".join(k.value for k in PolicyKind)
        _fail(source, no, f"unknown policy kind {kind!r}; allowed: {allowed}")
    try:
        alpha = float(options.get("prior_alpha", prior.alpha))
        beta = float(options.get("prior_beta", prior.beta))
        kw = {"prior": BetaParams(alpha, beta)}
        if "epsilon" in options:
            kw["epsilon"] = float(options["epsilon"])
        elif kind_enum is PolicyKind.EPSILON_GREEDY:
            kw["epsilon"] = PolicySpec.epsilon_greedy().epsilon
        q = options.get("quantile")
        if q is not None and q.lower() != "schedule":
            kw["quantile"] = float(q)
        if "estimator" in options:
            kw["map_estimator"] = options["estimator"].lower()
        if "name" in options:
            kw["name"] = options["name"]
        return PolicySpec(kind_enum, **kw)
    except (ConfigError, DomainError, ValueError) as exc:
        _fail(source, no, f"policy {kind}: {exc}")


def _field_line(parsed: _Parsed, msg: str) -> Optional[int]:
    for key in sorted(parsed.lines, key=len, reverse=True):
        if key in msg:
            return parsed.lines[key]
    return None


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    parsed = _scan(text, source)
    s = parsed.scalars
    try:
        prior = BetaParams(s.get("prior_alpha", DEFAULT_PRIOR.alpha), s.get("prior_beta", DEFAULT_PRIOR.beta))
    except DomainError as exc:
        _fail(source, parsed.lines.get("prior_alpha") or parsed.lines.get("prior_beta"), f"prior: {exc}")
    if parsed.policies:
        policies = [_build_policy(source, no, k, o, prior) for no, k, o in parsed.policies]
    else:
        policies = [PolicySpec(p.kind, epsilon=p.epsilon, quantile=p.quantile, prior=prior) for p in reference_policies()]
    kw = {k: v for k, v in s.items() if k not in ("prior_alpha", "prior_beta")}
    if "regime" in kw and kw["regime"] not in (r.value for r in Regime):
        _fail(source, parsed.lines["regime"], f"regime must be 'pooled' or 'siloed', got {kw['regime']!r}")
    if "regret" in kw and kw["regret"] not in (REGRET_EXPECTED, REGRET_REALIZED):
        _fail(source, parsed.lines["regret"], f"regret must be 'expected' or 'realized', got {kw['regret']!r}")
    if "checkpoint_stride" not in kw and "n_rounds" in kw:
        kw["checkpoint_stride"] = min(ExperimentConfig.checkpoint_stride, max(kw["n_rounds"], 1))
    try:
        return ExperimentConfig(policies=policies, **kw)
    except ConfigError as exc:
        _fail(source, _field_line(parsed, str(exc)), str(exc))


def load_config(path) -> ExperimentConfig:
    """Read and validate a config file; ``OSError`` propagates to the caller."""
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), str(path))


def _fmt(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize a config so that ``parse_config`` reads back an equal one."""
    priors = {p.prior for p in cfg.policies}
    common = priors.pop() if len(priors) == 1 else DEFAULT_PRIOR
    lines = [
        f"n_arms = {cfg.n_arms}",
        f"rho_lo = {_fmt(cfg.rho_lo)}",
        f"rho_hi = {_fmt(cfg.rho_hi)}",
        f"prior_alpha = {_fmt(common.alpha)}",
        f"prior_beta = {_fmt(common.beta)}",
        f"n_rounds = {cfg.n_rounds}",
        f"n_reps = {cfg.n_reps}",
        f"regime = {cfg.regime.value}",
        f"seed = {cfg.seed}",
        f"checkpoint_stride = {cfg.checkpoint_stride}",
        f"regret = {cfg.regret}",
        f"audit = {'true' if cfg.audit else 'false'}",
        "",
        "[policies]",
    ]
    for p in cfg.policies:
        parts = [p.kind.value]
        if p.epsilon is not None:
            parts.append(f"epsilon={_fmt(p.epsilon)}")
        if p.kind is PolicyKind.BAYES_UCB:
            parts.append("quantile=schedule" if p.quantile is None else f"quantile={_fmt(p.quantile)}")
        if p.map_estimator != "mean":
            parts.append(f"estimator={p.map_estimator}")
        if p.prior != common:
            parts.append(f"prior_alpha={_fmt(p.prior.alpha)}")
            parts.append(f"prior_beta={_fmt(p.prior.beta)}")
        if p.name != PolicySpec(p.kind, epsilon=p.epsilon, quantile=p.quantile).name:
            parts.append(f"name={p.name}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def paper_preset() -> ExperimentConfig:
    """Eleven arms on [0.05, 0.15], Beta(2, 10) prior, five policies, 2e6 rounds, 20 replications."""
    return ExperimentConfig(policies=reference_policies())
