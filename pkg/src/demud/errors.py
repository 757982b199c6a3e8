"""Error types shared across the toolkit.

Both subclasses map to the data-error exit code in the command line
interface; usage errors and internal errors are handled separately there.
"""

from __future__ import annotations


class DemudError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(DemudError, ValueError):
    """An argument or data value violates a documented precondition."""


class FormatError(DemudError, ValueError):
    """A file's bytes do not conform to the expected on-disk format."""
