import os
import logging


class LoggerMixin:
    def __init__(self, log_file="fowtccd.log"):
        self.logger = logging.getLogger(self.__class__.__name__)
        parent_dir = os.path.dirname(os.path.dirname(__file__))
        self.log_directory = os.getenv("LOG_DIRECTORY", parent_dir)
        log_path = os.path.join(self.log_directory, "logs")
        os.makedirs(log_path, exist_ok=True)

        self.log_path = os.path.join(log_path, log_file)

        # A run directory change (CLI) swaps the file handler; other handlers stay.
        current = [
            h for h in self.logger.handlers if isinstance(h, logging.FileHandler)
        ]
        if not current or current[0].baseFilename != os.path.abspath(self.log_path):
            for handler in current:
                self.logger.removeHandler(handler)
                handler.close()

            self.logger.setLevel(logging.DEBUG)

            file_handler = logging.FileHandler(self.log_path)
            file_handler.setLevel(logging.DEBUG)

            formatter = logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )
            file_handler.setFormatter(formatter)

            self.logger.addHandler(file_handler)
            self.logger.propagate = False

    def log_debug(self, message):
        self.logger.debug(message)

    def log_info(self, message):
        self.logger.info(message)

    def log_error(self, message):
        self.logger.error(message)

    def log_warning(self, message):
        self.logger.warning(message)

    def log_failure(self, error, context=""):
        """Log an exception with its traceback and any ``details`` it carries."""
        details = getattr(error, "details", None)
        prefix = f"{context}: " if context else ""
        suffix = f" {details}" if details else ""
        self.logger.error(f"{prefix}{type(error).__name__}: {error}{suffix}", exc_info=error)
