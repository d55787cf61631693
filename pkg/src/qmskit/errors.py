"""Exception types shared across the toolkit.

Every exception carries enough context (usually the offending residual) to

be actionable from batch reports.
"""


class QmsError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(QmsError):
    """Inputs have incompatible matrix dimensions."""


class SpanClosureFailure(QmsError):
    """Span closure of an algebra did not stabilize; numerical breakdown."""


class FaithfulnessViolated(QmsError):
    """A state eigenvalue fell below the faithfulness floor."""


class ModularInvarianceViolated(QmsError):
    """The modular group does not leave the subalgebra invariant, so no
    state-preserving conditional expectation exists (Takesaki)."""


class NotAGenerator(QmsError):
    """Map fails a structural generator requirement (unit kernel or
    hermiticity preservation)."""


class NotCND(QmsError):
    """Map is not conditionally negative definite."""


class NotSymmetric(QmsError):
    """Map is not GNS-symmetric with respect to the reference state."""


class NotCP(QmsError):
    """Map is not completely positive."""


class NotDBC(QmsError):
    """Generator does not satisfy the detailed balance condition."""


class NonFullAlgebra(QmsError):
    """Operation requires the full matrix algebra; extend the generator
    first."""


class StageError(QmsError):
    """An implementing vector was passed at the wrong pipeline stage."""


class ResidualTooLarge(QmsError):
    """A solver or consistency residual exceeded its tolerance."""


class StateMismatch(QmsError):
    """Restriction of the ambient state disagrees with the reference state."""
