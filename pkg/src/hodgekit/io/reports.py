"""JSON reports validated against the checked-in schemas."""

from __future__ import annotations

import json
import logging
import math
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict

import jsonschema
import numpy as np

from hodgekit.config.settings import SCHEMA_ROOT

from .text import write_text_atomic

__all__ = ["load_schema", "validate_report", "write_report", "to_jsonable"]

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def load_schema(name: str) -> Dict[str, Any]:
    path = SCHEMA_ROOT / f"{name}.schema.json"
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def validate_report(payload: Dict[str, Any], schema: str) -> None:
    """Raise ``jsonschema.ValidationError`` if ``payload`` does not match ``schema``."""
    jsonschema.validate(instance=payload, schema=load_schema(schema))


def write_report(payload: Dict[str, Any], path: Path, schema: str) -> Path:
    data = to_jsonable(payload)
    validate_report(data, schema)
    target = write_text_atomic(path, json.dumps(data, indent=2, sort_keys=True) + "\n")
    logger.info("Wrote %s report to %s", schema, target)
    return target
