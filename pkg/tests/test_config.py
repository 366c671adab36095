import json

import pytest

from glyphforge.config import CONFIG_ENV, RunConfig, resolve_config
from glyphforge.errors import ConfigError


def test_defaults():
    cfg = resolve_config({}, env={})
    assert cfg == RunConfig()
    assert cfg.quantile == 0.9 and cfg.image_size == 192 and cfg.token_mode == "fields"


def test_precedence(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 5, "quantile": 0.8, "padding": 0}))
    env = {CONFIG_ENV: str(p)}
    cfg = resolve_config({}, env)
    assert (cfg.seed, cfg.quantile, cfg.padding) == (5, 0.8, 0.0)
    cfg = resolve_config({"seed": 9, "quantile": None}, env)
    assert (cfg.seed, cfg.quantile) == (9, 0.8)


@pytest.mark.parametrize("bad", [
    {"quantile": 0.0}, {"quantile": 1.5}, {"test_fraction": -0.1}, {"image_size": 4},
    {"padding": 0.5}, {"token_mode": "words"}, {"recognizer": "somewhere"}, {"concurrency_limit": 0},
    {"seed": "1"}, {"seed": True}, {"colour": "red"},
])
def test_invalid_values(bad):
    with pytest.raises(ConfigError):
        resolve_config(bad, env={})


def test_bad_config_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        resolve_config({}, {CONFIG_ENV: str(p)})
    with pytest.raises(ConfigError):
        resolve_config({}, {CONFIG_ENV: str(tmp_path / "missing.json")})


def test_recognizer_choices():
    assert resolve_config({"recognizer": "mock"}, {}).recognizer == "mock"
    assert resolve_config({"recognizer": "http://localhost:8000/ocr"}, {}).recognizer.startswith("http")
