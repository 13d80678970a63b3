"""Exception types raised across the package."""


class FoliataError(Exception):
    pass


class DegreeError(FoliataError, ValueError):
    pass


class InvalidGenerator(FoliataError, ValueError):
    pass


class UnsupportedHolonomy(FoliataError):
    pass


class InvarianceError(FoliataError, ValueError):
    pass


class EquivarianceError(FoliataError, ValueError):
    pass


class PerturbationError(FoliataError, ValueError):
    pass


class BranchCutError(FoliataError, ArithmeticError):
    """A plaquette sits on the branch cut of the SU(2) logarithm."""

    def __init__(self, message, chart=None, vertex=None, plane=None, iteration=None):
        super().__init__(message)
        self.chart = chart
        self.vertex = vertex
        self.plane = plane
        self.iteration = iteration
