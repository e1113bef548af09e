""" Custom exceptions for the LQCI toolkit.
"""


class LqciError(RuntimeError):
    """ Base class for all LQCI toolkit exceptions.
    """
    pass


class InvalidInstanceError(LqciError):
    """ Instance parameters violate the bounds an LQCI instance requires.
    """
    pass


# Greedy construction.


class GreedyConstructionError(LqciError):
    """ Base class for errors raised by the greedy constructions.
    """
    pass


class AlphaTooLargeError(GreedyConstructionError):
    """ The lower word bound times the label class size exceeds one.
    """
    pass


class BetaTooSmallError(GreedyConstructionError):
    """ The upper word bound times the label class size is below one.
    """
    pass


class AlphaBetaMismatchError(GreedyConstructionError):
    """ Equal word bounds do not split the label class exactly.
    """
    pass


class LabelBoundsInfeasibleError(GreedyConstructionError):
    """ The label count lies outside [1/rho, 1/lambda].
    """
    pass


# Automata.


class AutomatonError(LqciError):
    """ Base class for automaton errors.
    """
    pass


class InvalidDfaError(AutomatonError):
    """ DFA description is malformed, e.g. a partial transition table.
    """
    pass


class AlphabetMismatchError(AutomatonError):
    """ Two automata do not share an alphabet.
    """
    pass


class EmptyLanguageError(AutomatonError):
    """ No accepted word exists in the requested length range.
    """
    pass


# Improvisation schemes.


class SchemeError(LqciError):
    """ Base class for improviser construction errors.
    """
    pass


class BudgetExceededError(SchemeError):
    """ Accumulated costs would need more copies than the configured budget.
    """
    pass


class TooManyWordsError(SchemeError):
    """ Word enumeration would exceed the enumeration cap.
    """
    pass


class InfeasibleError(SchemeError):
    """ The instance has no improvising distribution.

    Attributes:
        report: The :class:`lqci.core.FeasibilityReport` (or an equivalent
            verdict object) explaining the failure.
    """

    def __init__(self, report, message=None):
        self.report = report
        super().__init__(message or f"Instance is infeasible: {getattr(report, 'reason', report)}")


# Approximate scheme oracles.


class OracleError(LqciError):
    """ A counting or sampling oracle failed or answered malformed output.
    """
    pass


class CapExceededError(OracleError):
    """ Exact enumeration would exceed its candidate cap.
    """
    pass


# Maximum entropy.


class MaxEntError(LqciError):
    """ Base class for maximum-entropy solver errors.
    """
    pass


class NoConvergenceError(MaxEntError):
    """ Entropy gap target not reached within the iteration budget.
    """
    pass


# Grid worlds.


class GridMapError(LqciError):
    """ Base class for grid map errors.
    """
    pass


class MalformedMapError(GridMapError):
    """ A map token could not be parsed.
    """
    pass


class MarkerCountError(GridMapError):
    """ Wrong number of start, end or charging markers.
    """
    pass


class NonRectangularError(GridMapError):
    """ Map rows have different lengths.
    """
    pass


class TooManyDropoffsError(GridMapError):
    """ More drop-off points than the visited bitmask supports.
    """
    pass


class TooManyStationsError(GridMapError):
    """ More charging stations than the label encoding supports.
    """
    pass


# Bundles.


class BundleError(LqciError):
    """ Instance bundle is missing fields or has malformed values.
    """
    pass
