"""Experiment configuration and its flat ``key = value`` text format."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .rl import Hyperparameters

VARIANTS = ("plain", "erb_only", "target_only", "erb_and_target")
AGENT_MODES = ("independent", "shared")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    domain: str = "3x3"
    agent_mode: str = "independent"
    variant: str = "erb_and_target"
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    nb_episodes: int = 500
    nb_steps: int = 2000
    nb_runs: int = 10
    eval_episodes: int = 100
    seeds: list[int] = field(default_factory=list)
    workers: int = 1
    backend: str | None = None

    def __post_init__(self):
        if not self.seeds:
            self.seeds = list(range(self.nb_runs))
        self.seeds = [int(s) for s in self.seeds]
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.agent_mode not in AGENT_MODES:
            raise ConfigError(f"agent_mode must be one of {AGENT_MODES}, got {self.agent_mode!r}")
        if len(self.seeds) != self.nb_runs:
            raise ConfigError(f"{len(self.seeds)} seeds given for nb_runs = {self.nb_runs}")
        for name in ("nb_episodes", "nb_steps", "nb_runs", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.eval_episodes < 0:
            raise ConfigError("eval_episodes must be >= 0")

    @property
    def uses_buffer(self) -> bool:
        return self.variant in ("erb_only", "erb_and_target")

    @property
    def uses_target(self) -> bool:
        return self.variant in ("target_only", "erb_and_target")


_OWN_FIELDS = [f for f in fields(ExperimentConfig) if f.name != "hyper"]
_HYPER_FIELDS = {f.name: f for f in fields(Hyperparameters)}


def _format(value) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def _coerce(name: str, text: str, default):
    text = text.strip()
    if name in ("seeds", "hidden_layout"):
        return [int(x) for x in text.split(",") if x.strip()]
    if name == "backend":
        return text or None
    if isinstance(default, bool):
        if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"{name}: expected a boolean, got {text!r}")
        return text.lower() in ("true", "1", "yes")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def dumps_config(config: ExperimentConfig) -> str:
    lines = [f"{f.name} = {_format(getattr(config, f.name))}" for f in _OWN_FIELDS]
    lines += [f"{name} = {_format(getattr(config.hyper, name))}" for name in _HYPER_FIELDS]
    return "\n".join(lines) + "\n"


def loads_config(text: str) -> ExperimentConfig:
    own_defaults = ExperimentConfig()
    hyper_defaults = Hyperparameters()
    own, hyper = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in _HYPER_FIELDS:
                hyper[key] = _coerce(key, value, getattr(hyper_defaults, key))
            elif key in {f.name for f in _OWN_FIELDS}:
                own[key] = _coerce(key, value, getattr(own_defaults, key))
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    if "nb_runs" in own and "seeds" not in own:
        own["seeds"] = list(range(own["nb_runs"]))
    if "seeds" in own and "nb_runs" not in own:
        own["nb_runs"] = len(own["seeds"])
    try:
        return ExperimentConfig(hyper=Hyperparameters(**hyper), **own)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    return loads_config(Path(path).read_text())


def save_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(dumps_config(config))
