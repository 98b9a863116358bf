"""Command-line entry points and the verification suite."""

from .main import main
from .verify import SUITE, CheckResult, run_check, run_suite

__all__ = ["main", "SUITE", "CheckResult", "run_check", "run_suite"]
