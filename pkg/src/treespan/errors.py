"""Exception hierarchy.

Every structural failure carries a stable ``code`` (used by the CLI and the
service to build diagnostics) and, where meaningful, the offending token.
"""


class TreespanError(Exception):
    """Base class for all package errors."""

    code = "Error"


class ParseError(TreespanError):
    """Syntax error in one of the text formats."""

    code = "ParseError"

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class ValidationError(TreespanError):
    """A structural invariant failed on otherwise well-formed input."""

    code = "ValidationError"

    def __init__(self, message, token=None):
        super().__init__(message)
        self.token = token


# -- diagram construction ---------------------------------------------------

class DanglingHalfEdge(ValidationError):
    code = "DanglingHalfEdge"


class NonTrivalentVertex(ValidationError):
    code = "NonTrivalentVertex"


class UnmatchedHalfEdge(ValidationError):
    code = "UnmatchedHalfEdge"


class EmptySlot(ValidationError):
    code = "EmptySlot"


class DuplicateSlot(ValidationError):
    code = "DuplicateSlot"


# -- relation algebra -------------------------------------------------------

class LegNotAdjacentToVertex(ValidationError):
    code = "LegNotAdjacentToVertex"


class BasisMismatch(TreespanError):
    code = "BasisMismatch"


class DegreeTooLargeForBudget(TreespanError):
    code = "DegreeTooLargeForBudget"


# -- reduction --------------------------------------------------------------

class NoEligibleLeg(ValidationError):
    code = "NoEligibleLeg"


class LeglessComponent(ValidationError):
    code = "LeglessComponent"


class NotSlidePair(ValidationError):
    code = "NotSlidePair"


class StepBudgetExhausted(TreespanError):
    code = "StepBudgetExhausted"


# -- claspers ---------------------------------------------------------------

class NotStrict(ValidationError):
    code = "NotStrict"


class BadValence(ValidationError):
    code = "BadValence"


class NonIntegerDegree(ValidationError):
    code = "NonIntegerDegree"


class NotSimple(ValidationError):
    code = "NotSimple"


# -- certificates -----------------------------------------------------------

class UnknownDigest(TreespanError):
    code = "UnknownDigest"


class DegreeMismatch(TreespanError):
    code = "DegreeMismatch"
