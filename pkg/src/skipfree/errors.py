"""Exception hierarchy.

Input problems derive from :class:`InputError` (also a ``ValueError``);
failures of the analytic pipeline derive from :class:`AnalyticError`
(also an ``ArithmeticError``). The CLI maps the two families to exit
codes 2 and 3.
"""


class WalkError(Exception):
    pass


class InputError(WalkError, ValueError):
    pass


class AnalyticError(WalkError, ArithmeticError):
    pass


# -- input validation --------------------------------------------------------

class NegativeMass(InputError):
    pass


class MassNotOne(InputError):
    pass


class DuplicateSupportPoint(InputError):
    pass


class InvalidParameter(InputError):
    pass


class UnsupportedSupport(InputError):
    pass


class DomainError(InputError):
    pass


class WindowTooSmall(InputError):
    pass


class InvalidConfig(InputError):
    pass


class SpecError(InputError):
    """Malformed distribution spec document."""


# -- analytic pipeline -------------------------------------------------------

class MonotoneWalk(AnalyticError):
    """p_{-1} = 0: the walk never steps down."""


class NonPositiveDrift(AnalyticError):
    pass


class RootNotBracketed(AnalyticError):
    pass


class InconsistentRho(AnalyticError):
    pass


class AmbiguousRoot(AnalyticError):
    pass


class DegenerateExcursion(AnalyticError):
    pass


class OutOfRange(AnalyticError):
    pass


class Deterministic(AnalyticError):
    pass


class InvariantViolation(AnalyticError):
    pass


class SingularSystem(AnalyticError):
    pass


class ChainMismatch(AnalyticError):
    pass
