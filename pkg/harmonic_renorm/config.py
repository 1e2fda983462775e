from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


@dataclass(slots=True)
class Settings:
    seed: int = 0
    tol: float = 1e-10
    max_sweeps: int = 20000
    restarts: int = 3
    omega: Optional[float] = None
    phase_samples: int = 32
    threads: int = 1
    check_holonomy: bool = True
    log_level: str = "INFO"

    @property
    def logging_level(self) -> int:
        return getattr(logging, self.log_level)


class SettingsError(RuntimeError):
    pass


def _get_env_float(name: str, default: Optional[float]) -> Optional[float]:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise SettingsError(f"Environment variable {name} must be a float") from exc


def _get_env_int(name: str, default: int, *, minimum: Optional[int] = None) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        value = default
    else:
        try:
            value = int(raw)
        except ValueError as exc:
            raise SettingsError(f"Environment variable {name} must be an integer") from exc
    if minimum is not None and value < minimum:
        raise SettingsError(f"Environment variable {name} must be >= {minimum}")
    return value


def _get_env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    lowered = raw.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise SettingsError(f"Environment variable {name} must be a boolean value")


def load_settings() -> Settings:
    seed = _get_env_int("RENORM_SEED", 0, minimum=0)
    tol = _get_env_float("RENORM_TOL", 1e-10)
    if tol is None or not 0.0 < tol < 1.0:
        raise SettingsError("RENORM_TOL must lie in (0, 1)")
    max_sweeps = _get_env_int("RENORM_MAX_SWEEPS", 20000, minimum=1)
    restarts = _get_env_int("RENORM_RESTARTS", 3, minimum=1)
    omega = _get_env_float("RENORM_OMEGA", None)
    if omega is not None and not 0.0 < omega < 2.0:
        raise SettingsError("RENORM_OMEGA must lie in (0, 2)")
    phase_samples = _get_env_int("RENORM_PHASES", 32, minimum=4)
    threads = _get_env_int("RENORM_THREADS", 1, minimum=1)
    check_holonomy = _get_env_bool("RENORM_CHECK_HOLONOMY", True)
    log_level = os.getenv("RENORM_LOG_LEVEL", "INFO").strip().upper()
    if log_level not in LOG_LEVELS:
        raise SettingsError(
            "RENORM_LOG_LEVEL must be one of DEBUG, INFO, WARNING, ERROR, CRITICAL"
        )

    return Settings(
        seed=seed,
        tol=tol,
        max_sweeps=max_sweeps,
        restarts=restarts,
        omega=omega,
        phase_samples=phase_samples,
        threads=threads,
        check_holonomy=check_holonomy,
        log_level=log_level,
    )
