"""Command-line interface: ``stlc-oracle check|brackets|simulate|xi``."""

from .app import EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OBSTRUCTION, EXIT_USAGE, build_report, main
from .dsl import DslError, SystemDocument, parse_bracket_spec, parse_controls, parse_system

__all__ = [
    "DslError",
    "EXIT_ERROR",
    "EXIT_INCONCLUSIVE",
    "EXIT_OBSTRUCTION",
    "EXIT_USAGE",
    "SystemDocument",
    "build_report",
    "main",
    "parse_bracket_spec",
    "parse_controls",
    "parse_system",
]
