"""
Configuração de logging partilhada pelo núcleo e pelo Django.
"""

from __future__ import annotations

import logging.config
from pathlib import Path
from typing import Any, Dict, Optional


LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def logging_dict(level: str = "INFO", log_file: Optional[Path | str] = None) -> Dict[str, Any]:
    """Dicionário para logging.config.dictConfig (também usado em settings.LOGGING)."""
    handlers: Dict[str, Any] = {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "standard",
        },
    }
    if log_file:
        handlers["file"] = {
            "class": "logging.FileHandler",
            "formatter": "standard",
            "filename": str(log_file),
            "encoding": "utf-8",
        }

    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "standard": {"format": LOG_FORMAT},
        },
        "handlers": handlers,
        "loggers": {
            "topoexplore_core": {
                "handlers": list(handlers),
                "level": level.upper(),
                "propagate": False,
            },
        },
    }


def configure_logging(level: str = "INFO", log_file: Optional[Path | str] = None) -> None:
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
    logging.config.dictConfig(logging_dict(level, log_file))
