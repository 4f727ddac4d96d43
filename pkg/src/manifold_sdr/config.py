"""Run configuration: flat key=value files merged with command-line flags.

Precedence is defaults < config file < explicit flags.  The effective
configuration can be serialized back to the same format and re-parsed to an
identical object, which run reports rely on.
"""

from dataclasses import dataclass, fields

from .errors import ConfigError


def _parse_bool(s):
    v = s.strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_d(s):
    v = s.strip()
    if v == "auto":
        return "auto"
    return int(v)


_COERCE = {
    "model": str,
    "dataset": str,
    "method": str,
    "d": _parse_d,
    "p": int,
    "n": int,
    "sigma": float,
    "kernel": str,
    "c0": float,
    "max_iters": int,
    "ridge": float,
    "bandwidth": float,
    "bandwidth_policy": str,
    "standardize": _parse_bool,
    "reps": int,
    "seed": int,
    "threads": int,
    "p_max": int,
    "out": str,
    "summary": str,
    "report": str,
    "truth": str,
}


@dataclass
class RunConfig:
    """Everything a CLI run needs; `command` is set by the subcommand."""

    command: str = ""
    model: str | None = None
    dataset: str | None = None
    method: str = "eu-imave"
    d: int | str = "auto"
    p: int | None = None
    n: int | None = None
    sigma: float | None = None
    kernel: str = "quartic"
    c0: float = 2.34
    max_iters: int = 30
    ridge: float | None = None
    bandwidth: float | None = None
    bandwidth_policy: str = "schedule"
    standardize: bool = True
    reps: int = 100
    seed: int = 0
    threads: int = 1
    p_max: int | None = None
    out: str | None = None
    summary: str | None = None
    report: str | None = None
    truth: str | None = None


def _read_config_file(path):
    entries = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _COERCE:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                entries[key] = _COERCE[key](value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: key {key!r}: {exc}") from None
    return entries


def parse_config(path=None, overrides=None):
    """Build a RunConfig from an optional file plus explicit overrides."""
    cfg = RunConfig()
    merged = {}
    if path is not None:
        merged.update(_read_config_file(path))
    if overrides:
        for key, value in overrides.items():
            if key not in _COERCE:
                raise ConfigError(f"unknown key {key!r}")
            merged[key] = value
    for key, value in merged.items():
        setattr(cfg, key, value)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.model is not None and cfg.dataset is not None:
        raise ConfigError("model and dataset are mutually exclusive; give only one")
    if cfg.kernel not in ("quartic", "gaussian"):
        raise ConfigError(f"key 'kernel': unknown kernel {cfg.kernel!r}")
    if cfg.bandwidth_policy not in ("schedule", "silverman"):
        raise ConfigError(
            f"key 'bandwidth_policy': unknown policy {cfg.bandwidth_policy!r}"
        )
    if cfg.max_iters < 1:
        raise ConfigError("key 'max_iters': must be >= 1")
    if cfg.reps < 1:
        raise ConfigError("key 'reps': must be >= 1")
    if cfg.threads < 1:
        raise ConfigError("key 'threads': must be >= 1")
    if isinstance(cfg.d, int) and cfg.d < 1:
        raise ConfigError("key 'd': must be >= 1 or 'auto'")


def format_config(cfg):
    """Serialize the effective configuration as key=value lines."""
    lines = []
    for f in fields(cfg):
        if f.name == "command":
            continue
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name}={text}")
    return "\n".join(lines) + "\n"
