"""Exception types shared across the package.

The split mirrors how callers need to react: structural problems are bugs in
the caller's data, impossible conditions are legitimate zero-probability
events, size errors mean a guard refused to enumerate, and budget errors mean
a rejection loop gave up.
"""


class StructureError(ValueError):
    """Malformed object: bad bit string, non-unitary matrix, length mismatch."""


class ParseError(ValueError):
    """Unreadable or schema-violating input file."""


class ImpossibleConditionError(ValueError):
    """Conditioning event has zero probability."""


class InstanceTooLargeError(RuntimeError):
    """An enumeration guard was exceeded; the message names the bound."""


class RetryBudgetExceededError(RuntimeError):
    """A rejection sampler ran out of attempts before accepting."""


class ProtocolError(RuntimeError):
    """A machine or game participant broke its declared contract."""
