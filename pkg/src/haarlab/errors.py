"""Exception types shared by all haarlab modules."""


class HaarLabError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveMeasure(HaarLabError):
    """An atom was given measure <= 0."""


class MassMismatch(HaarLabError):
    """An explicit internal measure disagrees with the sum over children."""


class CyclicStructure(HaarLabError):
    """Parent links do not form a forest."""


class UnknownAtom(HaarLabError):
    """An atom id is not present in the filtration."""


class ZeroMass(HaarLabError):
    """An average was requested over a set of zero mass."""


class GenerationOutOfRange(HaarLabError):
    """A generation index falls outside the tree's range."""


class NumericalFailure(HaarLabError):
    """An iterative solver did not converge within its budget."""


class BudgetExceeded(HaarLabError):
    """An exhaustive scan was requested on a problem too large for it."""


class UnsupportedSize(HaarLabError):
    """The requested size function is not supported by this operation."""


class SamplerEmpty(HaarLabError):
    """A sampling region produced no admissible pairs."""


class EpsilonOutOfRange(HaarLabError):
    """The counterexample parameter must lie in (0, 1/2)."""


class DegenerateMeasure(HaarLabError):
    """A weighted average was requested over an atom of zero mass."""


class DomainError(HaarLabError):
    """A point lies outside the domain of a function."""


class ParseError(HaarLabError):
    """An input file or spec dictionary is malformed."""
