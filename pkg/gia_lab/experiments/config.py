"""Experiment configuration files and command-line overrides."""
import dataclasses
import typing
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values

from gia_lab.core.exceptions import ConfigError
from gia_lab.core.models import DatasetKind, DatasetSource, ExperimentConfig
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

# Flat keys for the nested dataset source
DATASET_KEYS = {
    'dataset': 'kind',
    'dataset_path': 'path',
    'labels_file': 'labels_file',
    'dataset_count': 'count',
    'image_size': 'image_size',
}
NONE_WORDS = ('', 'none', 'null', 'all', 'all_weights')
TRUE_WORDS = ('1', 'true', 'yes', 'on')
FALSE_WORDS = ('0', 'false', 'no', 'off')


def config_keys() -> tuple:
    return tuple(k for k in ExperimentConfig.field_names() if k != 'dataset') + tuple(DATASET_KEYS)


def _coerce(key: str, raw: str, annotation: Any) -> Any:
    text = raw.strip()
    origin = typing.get_origin(annotation)
    args = typing.get_args(annotation)
    if origin is typing.Union and type(None) in args:
        if text.lower() in NONE_WORDS:
            return None
        annotation = next(a for a in args if a is not type(None))
        origin, args = typing.get_origin(annotation), typing.get_args(annotation)
    try:
        if origin is tuple:
            return tuple(_coerce(key, part, args[0]) for part in text.split(',') if part.strip())
        if annotation is bool:
            if text.lower() in TRUE_WORDS:
                return True
            if text.lower() in FALSE_WORDS:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(annotation, type) and issubclass(annotation, Enum):
            return annotation(text)
        if annotation is int:
            return int(text, 0)
        if annotation is float:
            return float(text)
        if annotation is Path:
            return Path(text).expanduser()
        return text
    except ValueError as e:
        raise ConfigError(f"Invalid value for '{key}': {e}") from None


def parse_values(values: Mapping[str, Optional[str]]) -> Dict[str, Any]:
    """Coerce flat string values into ExperimentConfig keyword arguments."""
    hints = typing.get_type_hints(ExperimentConfig)
    source_hints = typing.get_type_hints(DatasetSource)
    unknown = sorted(set(values) - set(config_keys()))
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")

    kwargs: Dict[str, Any] = {}
    source: Dict[str, Any] = {}
    for key, raw in values.items():
        if raw is None:
            raise ConfigError(f"Key '{key}' has no value")
        if key in DATASET_KEYS:
            field_name = DATASET_KEYS[key]
            source[field_name] = _coerce(key, raw, source_hints[field_name])
        else:
            kwargs[key] = _coerce(key, raw, hints[key])
    if source:
        kwargs['dataset'] = DatasetSource(**source)
    return kwargs


def parse_overrides(values: Mapping[str, str]) -> Dict[str, Any]:
    """Coerce flat ``key=value`` strings, keeping dataset keys flat for apply_overrides."""
    hints = typing.get_type_hints(ExperimentConfig)
    source_hints = typing.get_type_hints(DatasetSource)
    overrides: Dict[str, Any] = {}
    for key, raw in values.items():
        if key in DATASET_KEYS:
            overrides[key] = _coerce(key, raw, source_hints[DATASET_KEYS[key]])
        elif key in hints and key != 'dataset':
            overrides[key] = _coerce(key, raw, hints[key])
        else:
            raise ConfigError(f"Unknown configuration key: {key}")
    return overrides


def load_experiment_config(path: Optional[Path] = None,
                           overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from defaults, a key = value file, then overrides.

    Args:
        path: Optional configuration file (``#`` comments allowed)
        overrides: Already-typed values; None entries are ignored

    Returns:
        Validated configuration
    """
    kwargs: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Configuration file not found: {path}")
        kwargs.update(parse_values(dotenv_values(path)))
        logger.debug("Loaded configuration file", extra={'context': {'path': str(path), 'keys': sorted(kwargs)}})

    config = ExperimentConfig(**kwargs)
    return apply_overrides(config, overrides or {})


def apply_overrides(config: ExperimentConfig, overrides: Mapping[str, Any]) -> ExperimentConfig:
    """Replace fields with the non-None ``overrides``; dataset keys update the source."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    unknown = sorted(set(changes) - set(config_keys()))
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
    source_changes = {DATASET_KEYS[k]: changes.pop(k) for k in list(changes) if k in DATASET_KEYS}
    if source_changes:
        if 'kind' in source_changes:
            source_changes['kind'] = DatasetKind(source_changes['kind'])
        changes['dataset'] = dataclasses.replace(config.dataset, **source_changes)
    try:
        return dataclasses.replace(config, **changes).validate()
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid configuration: {e}") from None
