"""Exception hierarchy shared across the toolkit.

The split matters at the boundaries: the CLI maps InputError to exit code 2
and StateError to exit code 3; the service maps them to HTTP 400 and 409.
"""


class ThermolabError(Exception):
    """Base class for all toolkit errors."""


class InputError(ThermolabError):
    """Invalid values, malformed files, or unsatisfied preconditions on inputs."""


class NotFoundError(InputError):
    """A referenced session or artifact does not exist."""


class StateError(ThermolabError):
    """A command that conflicts with the current protocol state of a session."""


class IntegrityError(ThermolabError):
    """A bundle failed verification: digest mismatch, missing file, or
    manifest/log inconsistency."""
