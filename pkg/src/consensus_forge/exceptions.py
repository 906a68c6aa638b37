"""Exception types raised across the package."""


class ConsensusForgeError(Exception):
    """Base class for every error raised by consensus_forge."""


class NoSpanningTree(ConsensusForgeError):
    """The topology has no directed spanning tree (from the requested root)."""


class DimensionMismatch(ConsensusForgeError, ValueError):
    pass


class MissingRootPath(ConsensusForgeError, ValueError):
    pass


class Uncontrollable(ConsensusForgeError):
    pass


class BadTargets(ConsensusForgeError, ValueError):
    pass


class RootHasNeighbors(ConsensusForgeError):
    """The tree root receives information, so the triangular design does not apply."""


class RootHasNoNeighbors(ConsensusForgeError):
    """The tree root has no in-neighbor, so root feedback cannot be formed."""


class NonSquareBlocks(ConsensusForgeError, ValueError):
    pass


class SynthesisFailed(ConsensusForgeError):
    """Gain synthesis gave up; ``report`` holds the last Gershgorin report."""

    def __init__(self, message, report=None, gains=None):
        super().__init__(message)
        self.report = report
        self.gains = gains


class NonFiniteState(ConsensusForgeError, ArithmeticError):
    pass


class ScenarioError(ConsensusForgeError, ValueError):
    """Malformed scenario input. ``field`` names the offending JSON path."""

    def __init__(self, message, field=None, line=None):
        where = []
        if field:
            where.append(f"field {field}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line
