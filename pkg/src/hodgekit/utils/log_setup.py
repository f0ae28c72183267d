"""Logging configuration for the hodgekit command-line tools.

stdout carries JSON reports, so every handler installed here writes to stderr
or to ``settings.LOG_FILE``.
"""

from __future__ import annotations

import logging
import logging.config
from pathlib import Path
from typing import Any, Dict, Mapping, MutableMapping, Optional

import yaml

from hodgekit.config.settings import settings

__all__ = ["configure_logging"]

LOG_FORMAT = "[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s"
_ROTATE_BYTES = 5 * 1024 * 1024
_configured = False


def _handlers(level: str, log_file: Optional[Path]) -> Dict[str, Dict[str, Any]]:
    handlers: Dict[str, Dict[str, Any]] = {
        "stderr": {"class": "logging.StreamHandler", "stream": "ext://sys.stderr"},
    }
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "filename": str(log_file),
            "maxBytes": _ROTATE_BYTES,
            "backupCount": 3,
            "encoding": "utf-8",
        }
    for handler in handlers.values():
        handler.update(level=level, formatter="default")
    return handlers


def _merge(base: MutableMapping[str, Any], overrides: Mapping[str, Any]) -> MutableMapping[str, Any]:
    """Recursive dict merge; empty ``handlers``/``formatters``/``loggers`` keep the defaults."""
    for key, value in overrides.items():
        current = base.get(key)
        if isinstance(value, Mapping) and isinstance(current, MutableMapping) and value:
            _merge(current, value)
        elif key in ("handlers", "formatters", "loggers") and not value:
            continue
        else:
            base[key] = value
    return base


def _overrides(config_path: Path) -> Mapping[str, Any]:
    if not config_path.is_file():
        return {}
    try:
        loaded = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        logging.getLogger(__name__).warning("Ignoring logging configuration %s: %s", config_path, exc)
        return {}
    return loaded if isinstance(loaded, Mapping) else {}


def configure_logging(
    config_path: Optional[Path] = None,
    level: Optional[str] = None,
    force: bool = False,
) -> None:
    """Install the stderr handler (plus a rotating file when ``LOG_FILE`` is set).

    Runs once per process unless ``force`` is given. ``level`` overrides
    ``settings.LOG_LEVEL`` and every logger level in the YAML file.
    """
    global _configured
    if _configured and not force:
        return

    resolved = (level or settings.LOG_LEVEL).upper()
    log_file = Path(settings.LOG_FILE) if settings.LOG_FILE else None
    handlers = _handlers(resolved, log_file)
    config: Dict[str, Any] = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {"default": {"format": LOG_FORMAT, "datefmt": "%Y-%m-%d %H:%M:%S"}},
        "handlers": handlers,
        "root": {"level": resolved, "handlers": list(handlers)},
    }
    _merge(config, _overrides(Path(config_path or settings.LOGGING_CONFIG)))
    if level is not None:
        for logger_conf in config.get("loggers", {}).values():
            if isinstance(logger_conf, dict):
                logger_conf["level"] = resolved

    logging.config.dictConfig(config)
    logging.captureWarnings(True)
    _configured = True
