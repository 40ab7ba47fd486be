from __future__ import annotations

from modules.enums import ExitCode


class TwistZerosError(Exception):
    exit_code = ExitCode.FAILURE


class UsageError(TwistZerosError):
    exit_code = ExitCode.USAGE


class ConvergenceError(TwistZerosError):
    """A numerical procedure did not reach its tolerance within its limits."""

    exit_code = ExitCode.CONVERGENCE


class MethodDisagreementError(ConvergenceError):
    """Two routes to the same quantity disagree beyond their tolerance."""


class MissingDataError(TwistZerosError):
    """Unknown labels, missing coefficient files or a route that has no data for a form."""

    exit_code = ExitCode.MISSING_DATA


def exit_code_for(e: BaseException) -> ExitCode:
    if isinstance(e, TwistZerosError):
        return e.exit_code
    if isinstance(e, ValueError):
        return ExitCode.USAGE
    return ExitCode.FAILURE
