"""
Rateless Toolkit - Centralized Logging Module
One root configuration for the CLI, experiments and tests: console output on
stderr (stdout carries CSV/JSON results) and optional rotating run logs.
"""

import logging
from datetime import datetime, timedelta
from logging.handlers import RotatingFileHandler
from pathlib import Path

LOG_DIR = Path("logs")

CONSOLE_FORMAT = '%(levelname)s - %(name)s - %(message)s'
FILE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s'


class RatelessLogger:
    """Process-wide logging setup."""

    _initialized = False

    @classmethod
    def initialize(cls, log_level="INFO", log_to_file=False, debug_mode=False, force=False):
        """
        Configure the root logger.

        Args:
            log_level: Level name for the console (DEBUG, INFO, WARNING, ...)
            log_to_file: Also write DEBUG-level run logs under logs/
            debug_mode: Force DEBUG on the console
            force: Replace an existing configuration (CLI flags override env)
        """
        if cls._initialized and not force:
            return

        level = logging.DEBUG if debug_mode else getattr(logging, str(log_level).upper(), logging.INFO)

        console = logging.StreamHandler()
        console.setLevel(level)
        console.setFormatter(logging.Formatter(CONSOLE_FORMAT))
        handlers = [console]

        if log_to_file:
            LOG_DIR.mkdir(exist_ok=True)
            run_log = RotatingFileHandler(
                LOG_DIR / f"rateless_{datetime.now():%Y%m%d}.log",
                maxBytes=10 * 1024 * 1024,  # 10MB
                backupCount=5,
                encoding='utf-8'
            )
            run_log.setLevel(logging.DEBUG)
            run_log.setFormatter(logging.Formatter(FILE_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))
            handlers.append(run_log)

        root = logging.getLogger()
        root.setLevel(logging.DEBUG if log_to_file else level)
        for handler in list(root.handlers):
            root.removeHandler(handler)
            handler.close()
        for handler in handlers:
            root.addHandler(handler)

        # numpy/scipy RuntimeWarnings (overflow in tanh, quad accuracy) land in the log
        logging.captureWarnings(True)

        cls._initialized = True
        logging.getLogger(__name__).debug(f"Logging initialized: console={logging.getLevelName(level)}, "
                                          f"file={log_to_file}")

    @staticmethod
    def log_exception(logger, message, exc_info=True):
        """Log an error, with the traceback when exc_info is set."""
        logger.error(message, exc_info=exc_info)

    @staticmethod
    def cleanup_old_logs(days_to_keep=7):
        """
        Delete run logs older than days_to_keep.

        Returns:
            Number of files removed
        """
        if not LOG_DIR.exists():
            return 0
        cutoff = (datetime.now() - timedelta(days=days_to_keep)).timestamp()
        removed = 0
        for log_file in LOG_DIR.glob("rateless_*.log*"):
            try:
                if log_file.stat().st_mtime < cutoff:
                    log_file.unlink()
                    removed += 1
            except OSError as e:
                logging.getLogger(__name__).warning(f"Could not remove {log_file}: {e}")
        if removed:
            logging.getLogger(__name__).info(f"Removed {removed} old log files")
        return removed


def get_logger(name):
    """Module logger; configures logging from Config on first use."""
    if not RatelessLogger._initialized:
        try:
            from config import Config
            RatelessLogger.initialize(Config.LOG_LEVEL, Config.LOG_TO_FILE, Config.DEBUG_MODE)
        except ImportError:
            RatelessLogger.initialize()
    return logging.getLogger(name)


if __name__ == "__main__":
    RatelessLogger.initialize(log_level="DEBUG", debug_mode=True, force=True)
    log = get_logger("rateless.selftest")
    log.debug("debug line")
    log.info("info line")
    log.warning("warning line")
    try:
        raise ValueError("sample failure")
    except ValueError:
        RatelessLogger.log_exception(log, "Caught an exception")
    print("\n[OK] Logger self-test complete")
