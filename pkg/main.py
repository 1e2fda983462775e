from __future__ import annotations

import logging
import sys

from harmonic_renorm.cli import EXIT_CONFIG, main as run_cli
from harmonic_renorm.config import SettingsError, load_settings


def configure_logging(level: int = logging.INFO) -> None:
    logging.basicConfig(
        level=level,
        format="%(asctime)s | %(name)s | %(levelname)s | %(message)s",
        stream=sys.stderr,
    )


def main() -> None:
    try:
        settings = load_settings()
    except SettingsError as exc:
        configure_logging()
        logging.getLogger(__name__).error("Configuration error: %s", exc)
        sys.exit(EXIT_CONFIG)

    configure_logging(settings.logging_level)
    sys.exit(run_cli(settings=settings))


if __name__ == "__main__":
    main()
