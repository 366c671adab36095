"""Run configuration: flags override the GLYPHFORGE_CONFIG file, which overrides defaults."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .corpus import TokenMode
from .errors import ConfigError

CONFIG_ENV = "GLYPHFORGE_CONFIG"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    quantile: float = 0.9
    test_fraction: float = 0.1
    image_size: int = 192
    padding: float = 0.1
    token_mode: str = TokenMode.FIELDS.value
    recognizer: str = "none"
    concurrency_limit: int = 1

    def validate(self) -> "RunConfig":
        problems = []
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            problems.append("seed must be an integer")
        if not 0 < self.quantile <= 1:
            problems.append("quantile must be in (0, 1]")
        if not 0 <= self.test_fraction <= 1:
            problems.append("test_fraction must be in [0, 1]")
        if not isinstance(self.image_size, int) or self.image_size < 11:
            problems.append("image_size must be an integer >= 11")
        if not 0 <= self.padding < 0.5:
            problems.append("padding must be in [0, 0.5)")
        if self.token_mode not in {m.value for m in TokenMode}:
            problems.append(f"token_mode must be one of {[m.value for m in TokenMode]}")
        if not isinstance(self.recognizer, str) or not self.recognizer:
            problems.append("recognizer must be 'none', 'mock' or an endpoint URL")
        elif self.recognizer not in ("none", "mock") and "://" not in self.recognizer:
            problems.append(f"recognizer endpoint {self.recognizer!r} is not a URL")
        if not isinstance(self.concurrency_limit, int) or self.concurrency_limit < 1:
            problems.append("concurrency_limit must be a positive integer")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def to_dict(self) -> dict:
        return asdict(self)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, value: Any) -> Any:
    kind = type(getattr(RunConfig(), name))
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{name}: expected {kind.__name__}, got {value!r}")
    return value


def from_mapping(base: RunConfig, data: Mapping[str, Any], source: str) -> RunConfig:
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"{source}: unknown config keys {unknown}")
    return replace(base, **{k: _coerce(k, v) for k, v in data.items()})


def resolve_config(overrides: Mapping[str, Any] | None = None,
                   env: Mapping[str, str] | None = None) -> RunConfig:
    env = os.environ if env is None else env
    cfg = RunConfig()
    path = env.get(CONFIG_ENV)
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{CONFIG_ENV}={path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{CONFIG_ENV}={path}: expected a JSON object")
        cfg = from_mapping(cfg, data, path)
    cfg = from_mapping(cfg, {k: v for k, v in (overrides or {}).items() if v is not None}, "flags")
    return cfg.validate()
