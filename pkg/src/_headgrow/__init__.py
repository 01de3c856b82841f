"""Headgrow: Self-growing prototype heads for transformer layers."""

from .baseline import *
from .dynamics import *
from .growth import *
from .harness import *
from .lyapunov import *
from .numerics import *
from .prototypes import *
from .utils import *

__all__ = (
    baseline.__all__  # type: ignore[name-defined]
    + dynamics.__all__  # type: ignore[name-defined]
    + growth.__all__  # type: ignore[name-defined]
    + harness.__all__  # type: ignore[name-defined]
    + lyapunov.__all__  # type: ignore[name-defined]
    + numerics.__all__  # type: ignore[name-defined]
    + prototypes.__all__  # type: ignore[name-defined]
    + utils.__all__  # type: ignore[name-defined]
)
