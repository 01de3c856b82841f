"""Common: Collection of commonly used tools and attributes."""

import os
from contextlib import contextmanager
from typing import Iterator

from _headgrow import palette

__all__ = [
    "STRICT_ENV",
    "TTYPalette",
    "fmt_real",
    "strict_checks",
    "strict_mode",
]

STRICT_ENV = "HEADGROW_STRICT"


class TTYPalette(object):
    """Color palette for TTY.

    Exposes every ``TTY_*`` code of :py:mod:`_headgrow.palette` without
    its prefix, e.g. ``TTYPalette.GREEN_3``.

    """

    if os.name == "nt":
        os.system("color")
    for _color in dir(palette):
        if _color.startswith("TTY"):
            locals()[_color[10:]] = getattr(palette, _color)
    del _color


def strict_checks() -> bool:
    """Return True when runtime invariant checks are switched on.

    Controlled by the ``HEADGROW_STRICT`` environment variable; any value
    other than empty or ``0`` enables the checks.

    """

    return os.environ.get(STRICT_ENV, "") not in ("", "0")


def fmt_real(value: float) -> str:
    """Format a real with 17 significant digits (round-trip exact)."""

    return format(float(value), ".17g")


@contextmanager
def strict_mode(enabled: bool = True) -> Iterator[None]:
    """Switch the runtime invariant checks on (or off) for a block."""

    previous = os.environ.get(STRICT_ENV)
    os.environ[STRICT_ENV] = "1" if enabled else "0"
    try:
        yield
    finally:
        if previous is None:
            del os.environ[STRICT_ENV]
        else:
            os.environ[STRICT_ENV] = previous
