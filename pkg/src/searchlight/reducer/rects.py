"""Free space as a union of axis-parallel rectangles, traced into rings."""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..environment import PolygonWithHoles
from ..geometry import Point, signed_area


class LayoutError(ValueError):
    """The requested layout cannot be realised with the given parameters."""


@dataclass(frozen=True)
class Rect:
    x0: Fraction
    y0: Fraction
    x1: Fraction
    y1: Fraction

    @classmethod
    def span(cls, xa, ya, xb, yb) -> "Rect":
        xa, xb = sorted((Fraction(xa), Fraction(xb)))
        ya, yb = sorted((Fraction(ya), Fraction(yb)))
        if xa == xb or ya == yb:
            raise LayoutError(f"degenerate rectangle {xa},{ya} .. {xb},{yb}")
        return cls(xa, ya, xb, yb)

    def overlaps(self, other: "Rect", gap=0) -> bool:
        """Positive-area overlap after growing ``self`` by ``gap``; touching counts when gap > 0."""
        if gap:
            return (self.x0 - gap < other.x1 and other.x0 < self.x1 + gap
                    and self.y0 - gap < other.y1 and other.y0 < self.y1 + gap)
        return self.x0 < other.x1 and other.x0 < self.x1 and self.y0 < other.y1 and other.y0 < self.y1

    def contains(self, p, strict=False) -> bool:
        if strict:
            return self.x0 < p[0] < self.x1 and self.y0 < p[1] < self.y1
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1

    def corners(self):
        return [Point(self.x0, self.y0), Point(self.x1, self.y0), Point(self.x1, self.y1), Point(self.x0, self.y1)]


def union_polygon(rects) -> PolygonWithHoles:
    """Trace the boundary of a connected union of rectangles.

    Raises LayoutError if the union is disconnected or two free cells meet
    only at a corner (the traced boundary would not be simple).
    """
    xs = sorted({r.x0 for r in rects} | {r.x1 for r in rects})
    ys = sorted({r.y0 for r in rects} | {r.y1 for r in rects})
    cov = np.zeros((len(xs) + 1, len(ys) + 1), dtype=bool)  # padded by one on the high side
    for r in rects:
        i0, i1 = bisect_left(xs, r.x0), bisect_left(xs, r.x1)
        j0, j1 = bisect_left(ys, r.y0), bisect_left(ys, r.y1)
        cov[i0:i1, j0:j1] = True

    def c(i, j):
        return 0 <= i < len(xs) - 1 and 0 <= j < len(ys) - 1 and cov[i, j]

    # directed unit edges on the compressed grid with free space on the left
    succ = {}
    for i in range(len(xs)):
        for j in range(len(ys)):
            # vertical edge at x=xs[i] spanning ys[j]..ys[j+1]
            if j < len(ys) - 1:
                left, right = c(i - 1, j), c(i, j)
                if right and not left:
                    _add(succ, (i, j + 1), (i, j))
                elif left and not right:
                    _add(succ, (i, j), (i, j + 1))
            if i < len(xs) - 1:
                below, above = c(i, j - 1), c(i, j)
                if above and not below:
                    _add(succ, (i, j), (i + 1, j))
                elif below and not above:
                    _add(succ, (i + 1, j), (i, j))
    for v, outs in succ.items():
        if len(outs) > 1:
            raise LayoutError(f"free space pinches at ({xs[v[0]]}, {ys[v[1]]})")
    rings = []
    seen = set()
    for start in succ:
        if start in seen:
            continue
        ring, v = [], start
        while v not in seen:
            seen.add(v)
            ring.append(v)
            v = succ[v][0]
        pts = [Point(xs[i], ys[j]) for i, j in ring]
        rings.append(_drop_collinear(pts))
    outers = [r for r in rings if signed_area(r) > 0]
    holes = [r for r in rings if signed_area(r) < 0]
    if len(outers) != 1:
        raise LayoutError(f"free space splits into {len(outers)} components")
    return PolygonWithHoles(tuple(outers[0]), tuple(tuple(h) for h in holes))


def _add(succ, a, b):
    succ.setdefault(a, []).append(b)


def _drop_collinear(pts):
    out = []
    n = len(pts)
    for k in range(n):
        a, b, c = pts[k - 1], pts[k], pts[(k + 1) % n]
        if (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x) != 0:
            out.append(b)
    return out
