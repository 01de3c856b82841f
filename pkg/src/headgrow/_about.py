"""All about Headgrow."""

__all__ = [
    "__package__",
    "__version__",
    "__author__",
    "__maintainer__",
    "__email__",
    "__license__",
    "__copyright__",
    "__status__",
]

__package__ = "headgrow"
__version__ = "0.1.0"
__author__ = "Headgrow Contributors"
__maintainer__ = "Headgrow Contributors"
__email__ = "headgrow@users.noreply.github.com"
__license__ = "MIT"
__copyright__ = "Copyright (c) 2026 All Headgrow Contributors"
__status__ = "Alpha"
