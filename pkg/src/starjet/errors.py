"""Exceptions shared across the pipeline.

``PreconditionError`` marks inputs that violate a mathematical precondition;
``IdentityFailure`` marks a postcondition that did not hold (the message
names the identity).  The command line maps both to exit status 3.
"""


class PreconditionError(ValueError):
    pass


class IdentityFailure(RuntimeError):
    pass


class ExtractionError(RuntimeError):
    """Probe-based cochain extraction was underdetermined or inconsistent."""
