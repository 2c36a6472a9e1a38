"""Exact rational 2D predicates and constructions.

Every coordinate is a :class:`fractions.Fraction`; angles never appear as
numbers.  A laser orientation is a :class:`Direction`, an integer vector in
lowest terms, and the cyclic order of directions is decided by
:func:`cmp_directions` with cross products only.
"""
from __future__ import annotations

import enum
from fractions import Fraction
from functools import cmp_to_key
from math import gcd
from typing import NamedTuple, Optional, Union


def Q(value) -> Fraction:
    """Coerce ints, Fractions and "p/q" strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


class Point(NamedTuple):
    x: Fraction
    y: Fraction

    def __add__(self, other):  # vector addition, not tuple concatenation
        return Point(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Point(self.x - other[0], self.y - other[1])

    def scaled(self, k) -> "Point":
        return Point(self.x * k, self.y * k)

    def __repr__(self):
        return f"Point({self.x}, {self.y})"


def pt(x, y) -> Point:
    return Point(Q(x), Q(y))


class _DirectionBase(NamedTuple):
    dx: int
    dy: int


class Direction(_DirectionBase):
    """A nonzero direction vector kept in canonical integer form.

    ``Direction(2, 4) == Direction(1, 2)`` and both hash alike, which is
    what lets planner states and critical-direction sets be compared
    structurally.
    """

    __slots__ = ()

    def __new__(cls, dx, dy):
        dx, dy = Q(dx), Q(dy)
        if dx == 0 and dy == 0:
            raise ValueError("zero direction")
        den = dx.denominator * dy.denominator
        nx, ny = int(dx * den), int(dy * den)
        g = gcd(nx, ny)
        return super().__new__(cls, nx // g, ny // g)

    @classmethod
    def between(cls, p: Point, q: Point) -> "Direction":
        return cls(q.x - p.x, q.y - p.y)

    def __neg__(self):
        return Direction(-self.dx, -self.dy)

    def perp(self) -> "Direction":
        """Rotate by a quarter turn counterclockwise."""
        return Direction(-self.dy, self.dx)

    def __str__(self):
        return f"{self.dx},{self.dy}"

    @classmethod
    def parse(cls, text: str) -> "Direction":
        a, b = text.split(",")
        return cls(Fraction(a.strip()), Fraction(b.strip()))


class Segment(NamedTuple):
    a: Point
    b: Point


def cross(ax, ay, bx, by):
    return ax * by - ay * bx


def orient(p, q, r) -> int:
    """Sign of the turn p -> q -> r: +1 left, -1 right, 0 collinear."""
    v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    return (v > 0) - (v < 0)


def _half(d) -> int:
    # 0 for angles in [0, pi), 1 for [pi, 2pi)
    return 0 if (d[1] > 0 or (d[1] == 0 and d[0] > 0)) else 1


def cmp_directions(d1, d2) -> int:
    """Cyclic order starting at (+1, 0) and turning counterclockwise."""
    h1, h2 = _half(d1), _half(d2)
    if h1 != h2:
        return -1 if h1 < h2 else 1
    c = cross(d1[0], d1[1], d2[0], d2[1])
    return -1 if c > 0 else (1 if c < 0 else 0)


direction_key = cmp_to_key(cmp_directions)


def sort_directions(dirs) -> list[Direction]:
    return sorted(set(dirs), key=direction_key)


def _relative(base, d):
    # d expressed in a frame where ``base`` points along +x
    return (d[0] * base[0] + d[1] * base[1], d[1] * base[0] - d[0] * base[1])


def strictly_ccw_between(d1, d, d2) -> bool:
    """True iff d lies strictly inside the counterclockwise arc d1 -> d2.

    When d1 and d2 coincide the arc is the full turn minus that direction.
    """
    rd, r2 = _relative(d1, d), _relative(d1, d2)
    if cmp_directions((1, 0), rd) == 0:
        return False
    if cmp_directions((1, 0), r2) == 0:
        return True
    return cmp_directions(rd, r2) < 0


def ccw_rank(base, d):
    """Sort key for directions measured counterclockwise from ``base``."""
    return direction_key(_relative(base, d))


def interior_direction(d1, d2) -> Direction:
    """An exact direction strictly inside the counterclockwise arc d1 -> d2.

    Mediant (vector sum) when the arc is narrower than a half turn, the
    quarter-turn rotation of ``d1`` otherwise.
    """
    if cross(d1[0], d1[1], d2[0], d2[1]) > 0:
        return Direction(d1[0] + d2[0], d1[1] + d2[1])
    return Direction(-d1[1], d1[0])


def ccw_gap_is_narrow(d1, d2) -> bool:
    return cross(d1[0], d1[1], d2[0], d2[1]) > 0


# ---------------------------------------------------------------- segments


def on_segment(p, a, b) -> bool:
    """p lies on the closed segment ab."""
    if orient(a, b, p) != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def segment_intersection(s1: Segment, s2: Segment) -> Union[None, Point, Segment]:
    """Exact intersection of two closed segments."""
    p, p2 = s1
    q, q2 = s2
    if p == p2 or q == q2:
        a, (b, c) = (p, s2) if p == p2 else (q, s1)
        return Point(Fraction(a[0]), Fraction(a[1])) if on_segment(a, b, c) else None
    rx, ry = p2[0] - p[0], p2[1] - p[1]
    sx, sy = q2[0] - q[0], q2[1] - q[1]
    den = cross(rx, ry, sx, sy)
    qpx, qpy = q[0] - p[0], q[1] - p[1]
    if den != 0:
        t = Fraction(cross(qpx, qpy, sx, sy)) / den
        u = Fraction(cross(qpx, qpy, rx, ry)) / den
        if 0 <= t <= 1 and 0 <= u <= 1:
            return Point(p[0] + t * rx, p[1] + t * ry)
        return None
    if cross(qpx, qpy, rx, ry) != 0:
        return None
    # collinear: project on the dominant axis of s1
    rr = rx * rx + ry * ry
    t0 = Fraction(qpx * rx + qpy * ry) / rr
    t1 = t0 + Fraction(sx * rx + sy * ry) / rr
    lo, hi = max(Fraction(0), min(t0, t1)), min(Fraction(1), max(t0, t1))
    if lo > hi:
        return None
    a = Point(p[0] + lo * rx, p[1] + lo * ry)
    if lo == hi:
        return a
    return Segment(a, Point(p[0] + hi * rx, p[1] + hi * ry))


def signed_area(ring) -> Fraction:
    s = Fraction(0)
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        s += a[0] * b[1] - a[1] * b[0]
    return s / 2


# ------------------------------------------------------------------ regions


class Location(enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def ring_location(p, ring) -> Location:
    inside = False
    n = len(ring)
    px, py = p
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        if on_segment(p, a, b):
            return Location.BOUNDARY
        if (a[1] > py) != (b[1] > py):
            x = a[0] + (py - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if x > px:
                inside = not inside
    return Location.INSIDE if inside else Location.OUTSIDE


def point_in_region(p, env) -> Location:
    """Classify p against the closed region (outer ring minus open holes)."""
    loc = ring_location(p, env.outer)
    if loc is not Location.INSIDE:
        return loc
    for hole in env.holes:
        h = ring_location(p, hole)
        if h is Location.BOUNDARY:
            return Location.BOUNDARY
        if h is Location.INSIDE:
            return Location.OUTSIDE
    return Location.INSIDE


def in_sector(d, prev_pt, v, next_pt) -> bool:
    """Is direction d inside the closed interior sector at ring vertex v?

    Rings are oriented with the region on the left of every edge, so the
    sector runs counterclockwise from (next - v) to (prev - v).
    """
    ax, ay = next_pt[0] - v[0], next_pt[1] - v[1]
    bx, by = prev_pt[0] - v[0], prev_pt[1] - v[1]
    dx, dy = d[0], d[1]
    cab = cross(ax, ay, bx, by)
    if cab > 0:
        return cross(ax, ay, dx, dy) >= 0 and cross(dx, dy, bx, by) >= 0
    if cab < 0:
        return not (cross(bx, by, dx, dy) > 0 and cross(dx, dy, ax, ay) > 0)
    return cross(ax, ay, dx, dy) >= 0


class EmptyLaser(Exception):
    """Raised internally when a boundary guard aims out of the region."""


def _scaled_origin(origin, scale):
    # integer coordinates of origin*scale*q plus the extra factor q
    x, y = Fraction(origin[0]) * scale, Fraction(origin[1]) * scale
    q = x.denominator * y.denominator // gcd(x.denominator, y.denominator)
    return int(x * q), int(y * q), q


def ray_stop(origin, d, env) -> Optional[Fraction]:
    """Parameter t at which the ray origin + t*d leaves the closed region.

    Returns None for an empty laser (origin on the boundary, d pointing
    outside).  Grazing vertex contacts do not stop the ray.  All arithmetic
    is on integers: ``env`` carries its coordinates scaled to a common
    denominator.
    """
    if not (isinstance(d[0], int) and isinstance(d[1], int)):
        D = Direction(d[0], d[1])
        lam = Fraction(D.dx) / d[0] if d[0] else Fraction(D.dy) / d[1]
        t = ray_stop(origin, D, env)
        return None if t is None else t * lam
    scale = env.scale
    ox, oy, q = _scaled_origin(origin, scale)
    dx, dy = d[0], d[1]
    if q != 1:
        edges = [(ax * q, ay * q, bx * q, by * q) for ax, ay, bx, by in env.int_edges]
    else:
        edges = env.int_edges
    k = scale * q  # int coordinates are k times the real ones
    # initial piece: only matters when the origin is on the boundary
    info = env.vertex_info.get((origin[0], origin[1]))
    if info is not None:
        if not in_sector((dx, dy), info[0], origin, info[1]):
            return None
    else:
        for ax, ay, bx, by in edges:
            ex, ey = bx - ax, by - ay
            if (ox - ax) * ey - (oy - ay) * ex != 0:
                continue
            if min(ax, bx) <= ox <= max(ax, bx) and min(ay, by) <= oy <= max(ay, by):
                if ex * dy - ey * dx < 0:
                    return None
                break
    best_num, best_den = None, None
    for ax, ay, bx, by in edges:
        ex, ey = bx - ax, by - ay
        den = dx * ey - dy * ex
        if den == 0:
            continue
        aox, aoy = ax - ox, ay - oy
        s_num = aox * dy - aoy * dx
        if den > 0:
            if not (0 < s_num < den):
                continue
            num = aox * ey - aoy * ex
        else:
            if not (den < s_num < 0):
                continue
            num, den = -(aox * ey - aoy * ex), -den
        if num <= 0:
            continue
        if best_num is None or num * best_den < best_num * den:
            best_num, best_den = num, den
    dd = dx * dx + dy * dy
    hits = []
    for v, prv, nxt in env.int_vertex_seq:
        vx, vy = v[0] * q - ox, v[1] * q - oy
        if vx * dy - vy * dx != 0:
            continue
        dot = vx * dx + vy * dy
        if dot <= 0:
            continue
        if best_num is None or dot * best_den < best_num * dd:
            hits.append((Fraction(dot, dd), v, prv, nxt))
    hits.sort(key=lambda h: h[0])
    for t, v, prv, nxt in hits:
        if not in_sector((dx, dy), prv, v, nxt):
            return t / k
    if best_num is None:
        raise ValueError(f"ray from {origin} along {d} never leaves the region")
    return Fraction(best_num, best_den * k)


def max_visible_segment(origin, d, env) -> Optional[Segment]:
    """Maximal segment from ``origin`` along ``d`` inside the closed region.

    ``None`` denotes an empty laser: the origin is on the boundary and d
    points out of the region.
    """
    if point_in_region(origin, env) is Location.OUTSIDE:
        raise ValueError(f"origin {origin} lies outside the region")
    t = ray_stop(origin, d, env)
    if t is None:
        return None
    return Segment(Point(origin[0], origin[1]), Point(origin[0] + t * d[0], origin[1] + t * d[1]))


def sees(p, q, env) -> bool:
    """True iff the closed segment pq lies in the closed region."""
    if p == q:
        return point_in_region(p, env) is not Location.OUTSIDE
    if point_in_region(p, env) is Location.OUTSIDE or point_in_region(q, env) is Location.OUTSIDE:
        return False
    d = Direction.between(p, q)
    t = ray_stop(p, d, env)
    # q = p + s*d with s = (q - p).d / |d|^2
    return t is not None and t * (d.dx ** 2 + d.dy ** 2) >= (q[0] - p[0]) * d.dx + (q[1] - p[1]) * d.dy
