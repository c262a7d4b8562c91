"""Exception hierarchy shared across the package.

Two classes matter to callers: ``InputError`` signals unreadable or
malformed input (CLI exit code 2), ``DegenerateModelError`` signals a
statistical degeneracy such as an unidentifiable fit or an empty cut-off
scan (CLI exit code 3). Everything else is a plain ``ValueError``.
"""


class InputError(ValueError):
    """Unreadable, malformed, or out-of-range input data."""


class DegenerateModelError(ValueError):
    """The requested estimate does not exist for this data."""
