"""Trend filtering – command-line front end."""
from .app import CommandLineApp, main
from .parser import build_parser, parse_args

__all__ = ["CommandLineApp", "build_parser", "main", "parse_args"]
