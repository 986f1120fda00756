from .logging_setup import JsonFormatter, configure_logging
from .main import build_parser, main

__all__ = ["JsonFormatter", "build_parser", "configure_logging", "main"]
