import logging
import os
from dataclasses import dataclass

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# Local runs may keep overrides in a .env file next to the checkout.
load_dotenv()

DEFAULT_DIGITS = 60
DEFAULT_JOBS = 1
DEFAULT_TARGET_DIGITS = 10
DEFAULT_LOG_LEVEL = "WARNING"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class Settings:
    digits: int = DEFAULT_DIGITS
    jobs: int = DEFAULT_JOBS
    target_digits: int = DEFAULT_TARGET_DIGITS
    log_level: str = DEFAULT_LOG_LEVEL


def _env_int(name: str, default: int, minimum: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning("%s=%r is not an integer; using %d", name, raw, default)
        return default
    if value < minimum:
        logger.warning("%s=%d is below %d; using %d", name, value, minimum, default)
        return default
    return value


def get_settings() -> Settings:
    level = (os.getenv("COEFFZERO_LOG_LEVEL") or DEFAULT_LOG_LEVEL).strip().upper()
    if level not in LOG_LEVELS:
        logger.warning("COEFFZERO_LOG_LEVEL=%r is unknown; using %s", level, DEFAULT_LOG_LEVEL)
        level = DEFAULT_LOG_LEVEL
    return Settings(
        digits=_env_int("COEFFZERO_DIGITS", DEFAULT_DIGITS, 30),
        jobs=_env_int("COEFFZERO_JOBS", DEFAULT_JOBS, 1),
        target_digits=_env_int("COEFFZERO_TARGET_DIGITS", DEFAULT_TARGET_DIGITS, 1),
        log_level=level,
    )
