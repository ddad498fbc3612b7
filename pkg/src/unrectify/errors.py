"""Exception types raised across the toolkit."""


class UnrectifyError(Exception):
    """Base class for all toolkit errors."""


class CycleCreated(UnrectifyError):
    """Adding the arc would close a directed cycle."""


class CycleDetected(UnrectifyError):
    """A cycle was found in a graph assumed acyclic."""


class DimMismatch(UnrectifyError):
    """Arc operation shape incompatible with the source node dimension."""


class InvalidGraph(UnrectifyError):
    """Graph violates structural invariants; carries the validation report."""

    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("; ".join(f"{code}: {msg}" for code, msg in self.findings))


class Unreachable(UnrectifyError):
    """Requested node has no path from the input node."""


class NotInSubgraph(UnrectifyError):
    """Node pair lacks the required containment relation."""


class LevelOutOfRange(UnrectifyError):
    """Level index outside 0..L."""


class TransformInSubgraph(UnrectifyError):
    """Region signatures are undefined below a non-linear transform arc."""


class TransformPresent(UnrectifyError):
    """Operation requires a transform-free network."""


class NonFiniteValue(UnrectifyError):
    """Evaluation produced inf or nan."""


class DegeneratePair(UnrectifyError):
    """Gain ratio requested for a pair with x == y."""


class Unscalable(UnrectifyError):
    """Identity arcs alone keep a level sum above one; scaling cannot fix it."""


class UnboundedTransform(UnrectifyError):
    """Network contains a transform without a declared Lipschitz bound."""


class ShapeError(UnrectifyError):
    """Matrix shapes not composable."""


class ParseError(UnrectifyError):
    """Malformed graph description file."""


class MissingWeights(UnrectifyError):
    """Weight CSV referenced by a graph file does not exist."""
