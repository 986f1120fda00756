import logging
import os
import threading
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

_BACKENDS = frozenset({"bnb", "scipy"})
_LOG_FORMATS = frozenset({"json", "text"})
_TRUE_VALUES = frozenset({"1", "true", "yes", "on"})
_FALSE_VALUES = frozenset({"0", "false", "no", "off", ""})


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}") from None


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None


def _env_bool(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None:
        return default
    value = raw.strip().lower()
    if value in _TRUE_VALUES:
        return True
    if value in _FALSE_VALUES:
        return False
    raise ValueError(f"{name} must be a boolean, got {raw!r}")


def _env_choice(name: str, default: str, choices: frozenset) -> str:
    value = (os.environ.get(name) or default).strip().lower()
    if value not in choices:
        raise ValueError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value


@dataclass(frozen=True)
class Settings:
    """Process-wide defaults read from the environment (and an optional .env file)."""

    milp_backend: str = "bnb"
    gap_tol: float = 1e-6
    node_limit: int = 200_000
    time_limit: float = 120.0
    big_m: float = 1e4
    margin_cap: float = 4.0
    legacy_margin: bool = False
    log_level: str = "INFO"
    log_format: str = "json"

    _instance = None
    _lock = threading.Lock()

    # ------------------------------------------------------------------
    # Singleton
    # ------------------------------------------------------------------

    @classmethod
    def from_env(cls, dotenv_path: Optional[str] = None) -> "Settings":
        load_dotenv(dotenv_path=dotenv_path, override=False)
        settings = cls(
            milp_backend=_env_choice("PPG_MILP_BACKEND", "bnb", _BACKENDS),
            gap_tol=_env_float("PPG_GAP_TOL", 1e-6),
            node_limit=_env_int("PPG_NODE_LIMIT", 200_000),
            time_limit=_env_float("PPG_TIME_LIMIT", 120.0),
            big_m=_env_float("PPG_BIG_M", 1e4),
            margin_cap=_env_float("PPG_MARGIN_CAP", 4.0),
            legacy_margin=_env_bool("PPG_LEGACY_MARGIN", False),
            log_level=(os.environ.get("PPG_LOG_LEVEL") or "INFO").upper(),
            log_format=_env_choice("PPG_LOG_FORMAT", "json", _LOG_FORMATS),
        )
        if settings.gap_tol < 0:
            raise ValueError("PPG_GAP_TOL must be >= 0")
        if settings.node_limit <= 0 or settings.time_limit <= 0:
            raise ValueError("PPG_NODE_LIMIT and PPG_TIME_LIMIT must be positive")
        return settings

    @classmethod
    def get_instance(cls) -> "Settings":
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = cls.from_env()
                    logger.debug("Loaded settings %s", cls._instance)
        return cls._instance

    @classmethod
    def _reset_instance(cls):
        """Reset singleton – intended for use in tests only."""
        with cls._lock:
            cls._instance = None
