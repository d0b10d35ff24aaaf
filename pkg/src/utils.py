import json
import sys
import time
from pathlib import Path
from typing import Any, Optional, Set, Union

from loguru import logger
from pydantic import BaseModel

from src import config
from src.exceptions import InputError, PipelineTimeout

_CONFIGURED: Set[str] = set()


def configure_logging(log_name: str = "extract") -> None:
    """
    Configure Loguru sinks: a rotating file under LOG_DIR plus stderr.

    Safe to call more than once; each log name is only wired up the first time.
    """
    if log_name in _CONFIGURED:
        return
    if not _CONFIGURED:
        logger.remove()
        logger.add(sys.stderr, level="DEBUG" if config.DEBUG_MODE else "INFO")

    log_dir = Path(config.LOG_DIR)
    log_dir.mkdir(parents=True, exist_ok=True)
    logger.add(
        log_dir / f"{log_name}.log",
        rotation=config.LOG_FILE_SIZE,
        retention=int(config.LOG_RETENTION) if config.LOG_RETENTION.isdigit() else config.LOG_RETENTION,
        compression=config.LOG_COMPRESSION,
        level=config.LOG_LEVEL,
    )
    _CONFIGURED.add(log_name)
    if config.DEBUG_MODE:
        logger.debug("🚀 Running in DEBUG mode")


class Deadline:
    """Cooperative time budget, checked at stage boundaries and per DP bag."""

    def __init__(self, seconds: Optional[float]):
        if seconds is not None and seconds <= 0:
            raise InputError("timeout must be positive")
        self.budget = seconds
        self.start = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def expired(self) -> bool:
        return self.budget is not None and self.elapsed() > self.budget

    def check(self, stage: str) -> None:
        if self.expired():
            logger.warning(f"⏱️ Deadline expired during {stage} after {self.elapsed():.2f}s")
            raise PipelineTimeout(stage, self.budget)


def read_json(path: Union[str, Path]) -> Any:
    """Load a JSON document, turning I/O and syntax errors into InputError."""
    try:
        with Path(path).open("r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise InputError(f"input file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON in {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise InputError(f"{path} is not UTF-8 text: {e.reason}") from e
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from e


def to_jsonable(payload: Any) -> Any:
    """Pydantic documents become plain JSON data; anything else passes through."""
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    return payload


def write_json(path: Union[str, Path], payload: Any) -> None:
    """Write a JSON document, creating parent directories as needed."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump(to_jsonable(payload), f, indent=2)
        f.write("\n")
    logger.info(f"💾 Wrote {path}")
