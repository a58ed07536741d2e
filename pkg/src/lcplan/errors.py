"""Exception hierarchy shared across the package."""


class LcplanError(Exception):
    """Base class for all library errors."""


class GraphError(LcplanError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class IntraBlockEdge(GraphError):
    pass


class UnknownVertex(GraphError):
    pass


class UnknownEdge(GraphError):
    pass


class ProbabilityOutOfRange(GraphError):
    pass


class BlockMismatch(LcplanError):
    pass


class DimensionMismatch(LcplanError):
    pass


class DegenerateData(LcplanError):
    pass


class NotPositiveDefinite(LcplanError):
    pass


class Disconnected(LcplanError):
    pass


class MissingEdgeContext(LcplanError):
    """An edge in the graph has no matching entry in an objective context."""


class InstanceTooLarge(LcplanError):
    pass


class SolverStall(LcplanError):
    """Simplex hit its iteration cap before reaching optimality."""


class InfeasiblePlan(LcplanError):
    pass


class DegenerateWorld(LcplanError):
    """World generation produced no candidate matches."""


class FileFormatError(LcplanError):
    """A JSON/CSV input failed schema or content validation."""
