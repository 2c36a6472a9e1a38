"""Named machines used by the tests and the documentation."""
from __future__ import annotations

from ..ncl import EenclInstance, Kind, NclMachine, Orientation, Vertex

S = Orientation.TO_SECOND


def smallest_instance() -> EenclInstance:
    """One AND vertex with three pendant edges; edge 0 is the output.

    Targets: edge 1 pointing away from the vertex at the start, edge 0
    pointing away at the end.  No legal configuration has both, and the
    shortest solution reverses edge 1 and then edge 0.
    """
    m = NclMachine([Vertex(Kind.AND, 0)], [(0, None), (0, None), (None, 0)])
    return EenclInstance(m, 1, S, 0, S)


def two_vertex_instance() -> EenclInstance:
    """An AND vertex and an OR vertex, six pendant edges in all."""
    m = NclMachine(
        [Vertex(Kind.AND, 0), Vertex(Kind.OR)],
        [(0, None), (0, None), (None, 0), (1, None), (None, 1), (1, None)],
    )
    return EenclInstance(m, 1, S, 3, S)
