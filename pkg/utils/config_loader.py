"""
Config Loader
Reads YAML experiment configs, validates them and writes them back
"""
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Type, Union, get_args

import yaml
from pydantic import BaseModel, ValidationError

from estimation.errors import ConfigError
from experiments.config import ExperimentConfig

OUTPUT_DIR_ENV = "SIGNEST_OUTPUT_DIR"


class ParsedConfig(NamedTuple):
    config: ExperimentConfig
    warnings: List[str]


def _nested_model(annotation: Any) -> Optional[Type[BaseModel]]:
    for candidate in (annotation, *get_args(annotation)):
        if isinstance(candidate, type) and issubclass(candidate, BaseModel):
            return candidate
    return None


def _strip_unknown(
    raw: Dict[str, Any],
    model_cls: Type[BaseModel],
    prefix: str,
    warnings: List[str]
) -> Dict[str, Any]:
    """Drop keys the schema does not know, recording one warning per key"""
    cleaned = {}
    for key, value in raw.items():
        path = f"{prefix}{key}"
        field = model_cls.model_fields.get(key)
        if field is None:
            warnings.append(f"unknown key '{path}' ignored")
            continue
        nested = _nested_model(field.annotation)
        if nested is not None and isinstance(value, dict):
            value = _strip_unknown(value, nested, f"{path}.", warnings)
        cleaned[key] = value
    return cleaned


def _validation_error(exc: ValidationError) -> ConfigError:
    keys = []
    messages = []
    for error in exc.errors():
        key = ".".join(str(part) for part in error["loc"]) or "config"
        keys.append(key)
        if error["type"] == "missing":
            messages.append(f"missing required key '{key}'")
        else:
            messages.append(f"{key}: {error['msg']}")
    return ConfigError("; ".join(messages), keys=keys)


def parse_config_text(text: str) -> ParsedConfig:
    """
    Validate a YAML config held in memory

    Raises:
        ConfigError: YAML syntax error, missing key or invariant violation
    """
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {exc}", line=mark.line + 1 if mark else None) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")

    return validate_config_data(raw)


def validate_config_data(raw: Dict[str, Any]) -> ParsedConfig:
    """Validate an already-parsed config mapping, dropping unknown keys with a warning"""
    warnings: List[str] = []
    cleaned = _strip_unknown(raw, ExperimentConfig, "", warnings)
    try:
        config = ExperimentConfig.model_validate(cleaned)
    except ValidationError as exc:
        raise _validation_error(exc) from exc
    return ParsedConfig(config, warnings)


def parse_config(path: Union[str, Path]) -> ParsedConfig:
    """
    Load and validate a YAML config file

    Args:
        path: Config file location

    Returns:
        ParsedConfig(config, warnings); warnings name ignored unknown keys

    Raises:
        ConfigError: Invalid content
        OSError: File missing or unreadable
    """
    with open(path, "r") as f:
        return parse_config_text(f.read())


def serialize_config(config: ExperimentConfig) -> str:
    """YAML text that parses back to an equal config"""
    data = config.model_dump(mode="json", exclude_none=True)
    return yaml.safe_dump(data, sort_keys=False)


def default_output_dir() -> Path:
    """$SIGNEST_OUTPUT_DIR/<timestamp>, or ./outputs/<timestamp>"""
    root = os.getenv(OUTPUT_DIR_ENV, "./outputs")
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return Path(root) / timestamp
