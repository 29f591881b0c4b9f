"""Exception types shared by every module in the package.

Two failure families are distinguished because the CLI maps them to
different exit codes: malformed inputs or configuration (exit 1) versus
structurally valid data that cannot be processed, such as a missing
embedding or a degenerate value (exit 2).
"""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ToolkitError):
    """An input file, record, or configuration violates its format contract."""


class DataError(ToolkitError):
    """Well-formed data whose content cannot be processed."""
