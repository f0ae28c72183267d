"""Runtime settings for hodgekit.

Every field can be overridden through a ``HODGEKIT_``-prefixed environment
variable or a ``.env`` file in the working directory. Solver tolerances and
dense-path size limits live here, together with the feature flags read from
``features.yaml``.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, Final, Optional

import yaml
from pydantic import Field, ValidationInfo, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# ---------------------------------------------------------------------
# Global constants
# ---------------------------------------------------------------------

PACKAGE_ROOT: Final[Path] = Path(__file__).resolve().parents[1]
ENV_PATH: Final[Path] = Path.cwd() / ".env"
FEATURES_DEFAULT_PATH: Final[Path] = Path(__file__).resolve().with_name("features.yaml")
LOGGING_DEFAULT_PATH: Final[Path] = Path(__file__).resolve().with_name("logging_conf.yaml")
SCHEMA_ROOT: Final[Path] = PACKAGE_ROOT / "schemas"
DEFAULT_RANDOM_SEED: Final[int] = 42

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------
# Feature flag helpers
# ---------------------------------------------------------------------


def _read_feature_flags(path: Path) -> Dict[str, Any]:
    """Parse ``features.yaml``; a missing or malformed file yields no flags."""
    if not path.is_file():
        logger.debug("No feature flags at %s", path)
        return {}
    try:
        flags = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        logger.warning("Ignoring feature flags in %s: %s", path, exc)
        return {}
    if flags is None:
        return {}
    if not isinstance(flags, dict):
        logger.warning("Ignoring feature flags in %s: top level is %s, not a mapping", path, type(flags).__name__)
        return {}
    return flags


def flag_enabled(value: Any) -> bool:
    """Interpret a flag node (``{"state": "on"}``, ``"on"`` or a bool) as a switch."""
    if isinstance(value, dict):
        value = value.get("state")
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in {"on", "true", "1", "yes"}


# ---------------------------------------------------------------------
# Settings model (Pydantic v2 + pydantic-settings)
# ---------------------------------------------------------------------


class Settings(BaseSettings):
    """Numerical and runtime settings with environment overrides."""

    model_config = SettingsConfigDict(
        env_prefix="HODGEKIT_",
        env_file=str(ENV_PATH),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Assembly
    THREADS: int = 1

    # Topology
    RANK_TOL: float = 1e-10
    BETTI_SIZE_LIMIT: int = 5000

    # Dense limits (unknowns)
    LAPLACIAN_DENSE_LIMIT: int = 20000
    DENSE_LIMIT: int = 4000

    # Iterative solves
    CG_TOL: float = 1e-12
    CG_MAX_ITER: int = 20000

    # What counts as zero / harmonic / closed
    ZERO_TOL_REL: float = 1e-8
    HARMONIC_TOL: float = 1e-8
    COCYCLE_TOL: float = 1e-12

    RANDOM_SEED: int = DEFAULT_RANDOM_SEED

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[Path] = None
    LOGGING_CONFIG: str = str(LOGGING_DEFAULT_PATH)

    # Feature flag configuration
    FEATURES_FILE: str = str(FEATURES_DEFAULT_PATH)
    feature_flags: Dict[str, Any] = Field(default_factory=dict, validate_default=True)

    @field_validator("THREADS")
    @classmethod
    def _clamp_threads(cls, value: int) -> int:
        return max(1, int(value))

    @field_validator("feature_flags", mode="before")
    @classmethod
    def _load_feature_flags(cls, value: Optional[Dict[str, Any]], info: ValidationInfo) -> Dict[str, Any]:
        if value:
            return value
        source = Path(info.data.get("FEATURES_FILE") or FEATURES_DEFAULT_PATH)
        return _read_feature_flags(source.expanduser())

    def get_feature_flag(self, *path: str, default: Any = None) -> Any:
        """Walk ``features.yaml`` by key path, e.g. ``("solvers", "cg_diagonal_preconditioner")``."""
        node: Any = self.feature_flags
        for key in path:
            if not isinstance(node, dict) or key not in node:
                return default
            node = node[key]
        return node

    def feature_enabled(self, *path: str, default: bool = False) -> bool:
        node = self.get_feature_flag(*path, default=None)
        if node is None:
            return default
        return flag_enabled(node)


settings = Settings()
