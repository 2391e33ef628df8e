import logging
from pathlib import Path
from typing import Iterable, Union

from pydantic import TypeAdapter, ValidationError

from models import ConfigError, ScenarioConfig

logger = logging.getLogger(__name__)

_scenario_adapter = TypeAdapter(ScenarioConfig)


def read_config_text(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except UnicodeDecodeError:
        raise ConfigError(f"config file is not UTF-8: {path}")


def parse_key_values(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse `key = value` lines; `#` starts a comment, blank lines are skipped."""
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got '{raw.strip()}'")
        if not value:
            raise ConfigError(f"{source}:{number}: key '{key}' has no value", key=key)
        if key in values:
            raise ConfigError(f"{source}:{number}: duplicate key '{key}'", key=key)
        values[key] = value
    return values


def apply_overrides(values: dict[str, str], overrides: Iterable[str]) -> dict[str, str]:
    """Apply `KEY=VALUE` overrides on top of the parsed file."""
    merged = dict(values)
    for item in overrides:
        key, sep, value = item.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"override must look like KEY=VALUE, got '{item}'")
        merged[key] = value
    return merged


def _config_error(exc: ValidationError) -> ConfigError:
    error = exc.errors()[0]
    loc = [str(part) for part in error["loc"]]
    # Discriminated unions prefix the location with the scenario tag
    key = loc[-1] if loc else "name"
    if error["type"] == "missing":
        return ConfigError(f"missing key '{key}'", key=key)
    if error["type"] == "extra_forbidden":
        return ConfigError(f"unknown key '{key}'", key=key)
    if error["type"] in ("union_tag_not_found", "union_tag_invalid"):
        return ConfigError(f"key 'name' must name a scenario: {error['msg']}", key="name")
    if len(loc) <= 1:
        # model-level check across several keys
        return ConfigError(f"inconsistent config: {error['msg']}")
    return ConfigError(f"key '{key}': {error['msg']}", key=key)


def build_scenario_config(values: dict[str, str]) -> ScenarioConfig:
    try:
        return _scenario_adapter.validate_python(values)
    except ValidationError as exc:
        raise _config_error(exc)


def load_scenario_config(path: Union[str, Path],
                         overrides: Iterable[str] = ()) -> ScenarioConfig:
    values = parse_key_values(read_config_text(path), str(path))
    values = apply_overrides(values, overrides)
    config = build_scenario_config(values)
    logger.info(f"Loaded {config.name} config from {path}")
    return config
