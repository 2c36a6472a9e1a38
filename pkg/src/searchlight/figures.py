"""Small hand-built instances reproducing the two-room examples.

``alcove_room()`` is a room lit by one ceiling guard with an L-shaped
alcove on its left wall whose far leg no guard can see; the target is a
rectangle on the right.  ``double_alcove_room()`` adds a mirrored alcove on
the right wall, and ``double_alcove_room(corner_guard=True)`` places a
second guard in the top-right corner.
"""
from __future__ import annotations

from .environment import Guard, Instance, PolygonWithHoles, TargetSpec
from .geometry import Direction, pt

#: width of each alcove's mouth; the verifier pitch must not exceed 1/4 of it
ALCOVE_WIDTH = 1

_LEFT_ALCOVE = [(0, 2), (-2, 2), (-2, -1), (-1, -1), (-1, 1), (0, 1)]
_RIGHT_ALCOVE = [(8, 1), (9, 1), (9, -1), (10, -1), (10, 2), (8, 2)]


def _ring(points):
    return [pt(x, y) for x, y in points]


def alcove_room() -> Instance:
    outer = _ring([(0, 0), (8, 0), (8, 4), (0, 4)] + _LEFT_ALCOVE)
    target = TargetSpec.region(_ring([(5, 1), (7, 1), (7, 2), (5, 2)]))
    return Instance(PolygonWithHoles(outer), [Guard("g", pt(4, 4))], target)


def double_alcove_room(corner_guard: bool = False, pinned: bool = False) -> Instance:
    outer = _ring([(0, 0), (8, 0)] + _RIGHT_ALCOVE + [(8, 4), (0, 4)] + _LEFT_ALCOVE)
    target = TargetSpec.region(_ring([(3, 1), (5, 1), (5, 2), (3, 2)]))
    guards = [Guard("g", pt(4, 4))]
    if corner_guard:
        # pinned variant starts the corner guard along the ceiling, so turning
        # its laser down is an explicit part of any schedule
        pin = Direction(-1, 0) if pinned else None
        guards.append(Guard("h", pt(8, 4), pin))
    return Instance(PolygonWithHoles(outer), guards, target)


def unit_square(guard=(2, 2), side=4) -> Instance:
    outer = _ring([(0, 0), (side, 0), (side, side), (0, side)])
    return Instance(PolygonWithHoles(outer), [Guard("g", pt(*guard))], TargetSpec.whole())
