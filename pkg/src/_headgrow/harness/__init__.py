from .checks import *
from .cli import *
from .config import *
from .experiments import *
from .output import *
from .synthetic import *

__all__ = (
    checks.__all__  # type: ignore[name-defined]
    + cli.__all__  # type: ignore[name-defined]
    + config.__all__  # type: ignore[name-defined]
    + experiments.__all__  # type: ignore[name-defined]
    + output.__all__  # type: ignore[name-defined]
    + synthetic.__all__  # type: ignore[name-defined]
)
