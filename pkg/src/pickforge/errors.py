"""Shared exception hierarchy.

Everything raised by this package derives from PickforgeError, so callers
(notably the CLI) can map library failures to a single exit path.
"""


class PickforgeError(Exception):
    """Base class for all pickforge errors."""
