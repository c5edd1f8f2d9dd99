"""Exception hierarchy shared by every module."""


class TnLogicError(Exception):
    """Base class for all package errors."""


class InputError(TnLogicError, ValueError):
    """Malformed arguments: bad shapes, unknown names, invalid parameters."""


class DimensionError(InputError):
    """A variable is used with two different dimensions, or a shape disagrees."""


class StructureError(InputError):
    """A graph does not have the required structure (cycle, double output, not a tree)."""


class ParseError(InputError):
    """A file or expression could not be parsed."""


class InconsistencyError(TnLogicError):
    """A knowledge base or evidence set admits no model."""


class DegenerateNetworkError(TnLogicError):
    """A network cannot be normalized into a distribution (zero partition function)."""


class DegenerateActivationError(TnLogicError):
    """An activation vector is identically zero."""


class NonRepresentableMomentError(TnLogicError):
    """A moment target cannot be matched by a finite parameter."""


class StateError(TnLogicError):
    """An operation was called before its prerequisites were available."""


class ConvergenceError(TnLogicError):
    """An iterative routine exceeded its step budget."""
