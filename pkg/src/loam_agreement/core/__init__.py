from .data_validator import DataValidator
from .error_handler import ErrorHandler, LoamError, configure_logging

__all__ = ["DataValidator", "ErrorHandler", "LoamError", "configure_logging"]
