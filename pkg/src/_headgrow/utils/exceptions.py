"""Exceptions: Collection of all the exceptions raised by Headgrow."""

import shutil
import sys
import textwrap
from typing import Any

__all__ = [
    "CollapseError",
    "ConfigError",
    "DegenerateDirectionError",
    "HeadgrowError",
    "InvariantError",
    "NumericError",
    "ParameterError",
    "PruneRefusalError",
    "ShapeError",
]


class HeadgrowError(Exception):
    """Base exception class for all exceptions raised by Headgrow.

    Every subclass carries a ``msg`` template which is formatted with
    the keyword arguments passed while raising it::

        raise ShapeError(op="sym_eig", expected="square", shape=(2, 3))

    :var msg: Message to display while raising the exception.

    .. note::

        The ``valid`` keyword argument ensures that the exceptions are
        raised explicitly by the authors. Passing ``valid=False`` marks
        the error as an internal inconsistency and writes a bug report
        banner to stderr.

    """

    msg = ""

    def __init__(self, **kwargs: Any) -> None:
        """Initialize the exception."""

        super().__init__(self.msg)
        for name, value in kwargs.items():
            setattr(self, name, value)
        if not kwargs.pop("valid", True):
            sys.stderr.write("\n\n" + self.report_bug() + "\n\n")

    def __str__(self) -> str:
        """Return formatted string with valid arguments."""

        return self.msg.format(**vars(self))

    def report_bug(self) -> str:
        """Return bug reporting warning message.

        :return: Formatted message string with bug report warning.

        """

        width = shutil.get_terminal_size(fallback=(79, 24)).columns
        title = "YIKES! There's a bug!".center(width, "-")
        title += (
            "If you are seeing this, then an invariant of Headgrow's "
            "prototype dynamics was broken at runtime. Please report the "
            "seed, the config file and the traceback so that the run can "
            "be reproduced."
        )
        return textwrap.fill(title, width)


class ShapeError(HeadgrowError):
    """Raised when an operand has the wrong dimensions or structure."""

    msg = "{op} expected {expected}, got shape {shape}"


class ParameterError(HeadgrowError):
    """Raised when a scalar parameter is outside its valid range."""

    msg = "Invalid {name} = {value!r}: {reason}"


class DegenerateDirectionError(HeadgrowError):
    """Raised when a direction collapses onto an existing span.

    Gram-Schmidt extension, head spawning and the MLP comparator raise it
    when the residual norm of a candidate direction falls under the
    working tolerance.

    """

    msg = "{op}: degenerate direction (residual norm {residual:.3e})"


class NumericError(HeadgrowError):
    """Raised when a computation produces non-finite values."""

    msg = "{op}: non-finite values encountered ({detail})"


class CollapseError(HeadgrowError):
    """Raised when two prototypes of a head coincide.

    The inverse-square barrier of the free energy is singular there, so
    the run aborts with the offending head and its spread.

    """

    msg = "Prototype collapse in head {head_id}: spread {spread:.3e}"


class PruneRefusalError(HeadgrowError):
    """Raised when a pruning event would leave no head behind."""

    msg = "Pruning would remove all {count} heads at step {step}"


class ConfigError(HeadgrowError):
    """Raised for malformed or inconsistent run configuration."""

    msg = "Config {source}: {reason}"


class InvariantError(HeadgrowError):
    """Raised by the strict-mode invariant checks."""

    msg = "Invariant {name!r} violated: {detail}"
