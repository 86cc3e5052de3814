"""Exception hierarchy shared by all modules."""


class NibbleError(Exception):
    """Base class for every error raised by this package."""


class HypergraphError(NibbleError, ValueError):
    pass


class NonUniformEdge(HypergraphError):
    pass


class VertexOutOfRange(HypergraphError):
    pass


class DuplicateEdge(HypergraphError):
    pass


class SameVertex(HypergraphError):
    pass


class UnknownEdgeId(HypergraphError):
    pass


class FormatError(NibbleError, ValueError):
    """Malformed HGR / JSON input."""


class WeightError(NibbleError, ValueError):
    pass


class BadTuple(WeightError):
    pass


class HostMismatch(WeightError):
    pass


class TooLarge(NibbleError, ValueError):
    """Instance exceeds the size cap of an exact or enumerative routine."""


class BadParams(NibbleError, ValueError):
    pass


class BadDelta(BadParams):
    pass


class UniformityTooSmall(BadParams):
    pass


class ImproperColouring(NibbleError, ValueError):
    pass


class PatternRejected(NibbleError, ValueError):
    pass


class BudgetExceeded(NibbleError, ValueError):
    pass


class InfeasibleParams(NibbleError, ValueError):
    pass


class RetriesExhausted(NibbleError, RuntimeError):
    """A randomized step failed its checks on every attempt.

    ``transcript`` holds the checks of the best attempt seen.
    """

    def __init__(self, step: str, attempts: int, transcript: list):
        super().__init__(f"{step}: conditions failed on all {attempts} attempts")
        self.step = step
        self.attempts = attempts
        self.transcript = transcript
