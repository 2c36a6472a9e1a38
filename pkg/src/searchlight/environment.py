"""Instances: polygon with holes, guards, target region, and their file format.

The on-disk format is JSON.  Every coordinate is a string ``"p/q"`` or an
integer string (plain JSON integers are accepted on input)::

    {
      "outer":  [["0", "0"], ["8", "0"], ["8", "4"], ["0", "4"]],
      "holes":  [[["2", "1"], ["2", "2"], ["3", "2"], ["3", "1"]]],
      "guards": [{"id": "g", "x": "4", "y": "4", "pinned_start": ["1", "0"]}],
      "target": {"mode": "region", "polygon": [["5", "1"], ...]}
    }

``target.mode`` is ``"region"`` (with ``polygon``), ``"point"`` (with
``x``/``y``) or ``"whole"``.  ``pinned_start`` is optional.
"""
from __future__ import annotations

import json
import re
from math import lcm
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .geometry import (
    Direction,
    Location,
    Point,
    Segment,
    point_in_region,
    ring_location,
    segment_intersection,
    sees,
    signed_area,
)


def _ring(points, ccw: bool) -> tuple[Point, ...]:
    ring = tuple(Point(Fraction(x), Fraction(y)) for x, y in points)
    if len(ring) >= 3 and (signed_area(ring) > 0) != ccw:
        ring = ring[::-1]
    return ring


@dataclass(frozen=True)
class PolygonWithHoles:
    """Outer ring (counterclockwise) minus holes (clockwise).

    Orientation is normalised on construction, so the region always lies to
    the left of every directed edge in :attr:`edges`.
    """

    outer: tuple
    holes: tuple = ()
    edges: tuple = field(init=False, repr=False, compare=False)
    vertex_info: dict = field(init=False, repr=False, compare=False)
    scale: int = field(init=False, repr=False, compare=False)
    int_edges: tuple = field(init=False, repr=False, compare=False)
    int_vertex_seq: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        outer = _ring(self.outer, ccw=True)
        holes = tuple(_ring(h, ccw=False) for h in self.holes)
        object.__setattr__(self, "outer", outer)
        object.__setattr__(self, "holes", holes)
        edges, info = [], {}
        for ring in self.rings:
            n = len(ring)
            for i, v in enumerate(ring):
                edges.append((v, ring[(i + 1) % n]))
                info[v] = (ring[i - 1], ring[(i + 1) % n])
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "vertex_info", info)
        # integer copy on a common denominator for the fast ray kernel
        scale = 1
        for v in info:
            for c in v:
                scale = lcm(scale, c.denominator)

        def ip(p):
            return (int(p[0] * scale), int(p[1] * scale))

        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "int_edges", tuple(ip(a) + ip(b) for a, b in edges))
        object.__setattr__(self, "int_vertex_seq", tuple((ip(v), ip(p), ip(n)) for v, (p, n) in info.items()))

    def __hash__(self):
        return hash((self.outer, self.holes))

    @property
    def rings(self):
        return (self.outer,) + self.holes

    @property
    def vertices(self):
        return [v for ring in self.rings for v in ring]

    def area(self) -> Fraction:
        return signed_area(self.outer) + sum(signed_area(h) for h in self.holes)

    def bbox(self):
        xs = [p.x for p in self.outer]
        ys = [p.y for p in self.outer]
        return min(xs), min(ys), max(xs), max(ys)

    def is_orthogonal(self) -> bool:
        return all(a.x == b.x or a.y == b.y for a, b in self.edges)


@dataclass(frozen=True)
class Guard:
    id: str
    position: Point
    pinned_start: Optional[Direction] = None


@dataclass(frozen=True)
class TargetSpec:
    """``mode`` is "region", "point" or "whole"."""

    mode: str
    polygon: tuple = ()
    point: Optional[Point] = None

    @classmethod
    def region(cls, points) -> "TargetSpec":
        return cls("region", polygon=_ring(points, ccw=True))

    @classmethod
    def at_point(cls, x, y) -> "TargetSpec":
        return cls("point", point=Point(Fraction(x), Fraction(y)))

    @classmethod
    def whole(cls) -> "TargetSpec":
        return cls("whole")


@dataclass(frozen=True)
class Instance:
    env: PolygonWithHoles
    guards: tuple
    target: TargetSpec

    def __post_init__(self):
        object.__setattr__(self, "guards", tuple(self.guards))

    def guard(self, gid: str) -> Guard:
        for g in self.guards:
            if g.id == gid:
                return g
        raise KeyError(gid)

    @property
    def guard_ids(self):
        return [g.id for g in self.guards]


# ------------------------------------------------------------------ validation


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    witness: Optional[Point] = None

    def __str__(self):
        w = "" if self.witness is None else f" at ({self.witness.x}, {self.witness.y})"
        return f"{self.kind}: {self.message}{w}"


class InvalidInstance(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def _ring_edges(ring):
    n = len(ring)
    return [(ring[i], ring[(i + 1) % n]) for i in range(n)]


def _simplicity_violations(ring, name) -> list[Violation]:
    if len(ring) < 3:
        return [Violation("non-simple ring", f"{name} has fewer than 3 vertices")]
    out = []
    if len(set(ring)) != len(ring):
        dup = next(p for p in ring if ring.count(p) > 1)
        out.append(Violation("non-simple ring", f"{name} repeats a vertex", dup))
    if signed_area(ring) == 0:
        out.append(Violation("non-simple ring", f"{name} has zero area", ring[0]))
    edges = _ring_edges(ring)
    n = len(edges)
    for i in range(n):
        for j in range(i + 1, n):
            hit = segment_intersection(Segment(*edges[i]), Segment(*edges[j]))
            if hit is None:
                continue
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if adjacent and isinstance(hit, Point):
                continue
            w = hit if isinstance(hit, Point) else hit.a
            out.append(Violation("non-simple ring", f"{name} edges {i} and {j} intersect", w))
            return out
    return out


def _rings_touch(r1, r2) -> Optional[Point]:
    for e1 in _ring_edges(r1):
        for e2 in _ring_edges(r2):
            hit = segment_intersection(Segment(*e1), Segment(*e2))
            if hit is not None:
                return hit if isinstance(hit, Point) else hit.a
    return None


def validate_instance(inst: Instance) -> list[Violation]:
    """Every violated invariant of ``inst``; an empty list means valid."""
    env = inst.env
    out = _simplicity_violations(env.outer, "outer ring")
    for k, hole in enumerate(env.holes):
        out += _simplicity_violations(hole, f"hole {k}")
    for k, hole in enumerate(env.holes):
        touch = _rings_touch(env.outer, hole)
        if touch is not None:
            out.append(Violation("hole outside outer", f"hole {k} touches the outer ring", touch))
            continue
        if ring_location(hole[0], env.outer) is not Location.INSIDE:
            out.append(Violation("hole outside outer", f"hole {k} is not inside the outer ring", hole[0]))
        for j in range(k):
            other = env.holes[j]
            touch = _rings_touch(hole, other)
            if touch is None and ring_location(hole[0], other) is Location.INSIDE:
                touch = hole[0]
            if touch is None and ring_location(other[0], hole) is Location.INSIDE:
                touch = other[0]
            if touch is not None:
                out.append(Violation("holes overlap", f"holes {j} and {k} are not disjoint", touch))
    if out:
        # containment tests below assume sane rings
        return out

    if not inst.guards:
        out.append(Violation("no guards", "an instance needs at least one guard"))
    ids = [g.id for g in inst.guards]
    for gid in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(Violation("duplicate guard id", f"guard id {gid!r} is used twice"))
    for g in inst.guards:
        if point_in_region(g.position, env) is Location.OUTSIDE:
            out.append(Violation("guard outside", f"guard {g.id} is outside the environment", g.position))

    t = inst.target
    if t.mode == "region":
        ring = t.polygon
        sub = _simplicity_violations(ring, "target polygon")
        if sub:
            out += [Violation("target escaping P", v.message, v.witness) for v in sub]
        else:
            out += _target_containment(ring, env)
    elif t.mode == "point":
        if point_in_region(t.point, env) is Location.OUTSIDE:
            out.append(Violation("target escaping P", "target point is outside the environment", t.point))
    elif t.mode != "whole":
        out.append(Violation("bad target", f"unknown target mode {t.mode!r}"))
    return out


def _target_containment(ring, env) -> list[Violation]:
    for v in ring:
        if point_in_region(v, env) is Location.OUTSIDE:
            return [Violation("target escaping P", "target vertex outside the environment", v)]
    for a, b in _ring_edges(ring):
        if not sees(a, b, env):
            # report a boundary crossing as the witness
            for e in env.edges:
                hit = segment_intersection(Segment(a, b), Segment(*e))
                if isinstance(hit, Point) and hit not in (a, b):
                    return [Violation("target escaping P", "target edge leaves the environment", hit)]
            return [Violation("target escaping P", "target edge leaves the environment", a)]
    for k, hole in enumerate(env.holes):
        if ring_location(hole[0], ring) is Location.INSIDE:
            return [Violation("target escaping P", f"target region contains hole {k}", hole[0])]
    return []


def check_instance(inst: Instance) -> Instance:
    """Return ``inst`` unchanged, or raise :class:`InvalidInstance`."""
    violations = validate_instance(inst)
    if violations:
        raise InvalidInstance(violations)
    return inst


# ------------------------------------------------------------------ file format


class FormatError(ValueError):
    """Malformed document; ``where`` names the offending line or field."""

    def __init__(self, message, where=""):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


_RATIONAL = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(value, where="") -> Fraction:
    if isinstance(value, bool):
        raise FormatError("non-rational coordinate literal", where)
    if isinstance(value, int):
        return Fraction(value)
    if not isinstance(value, str):
        raise FormatError(f"non-rational coordinate literal {value!r}", where)
    m = _RATIONAL.match(value)
    if not m:
        raise FormatError(f"non-rational coordinate literal {value!r}", where)
    num, den = m.group(1), m.group(2)
    if den is not None and int(den) == 0:
        raise FormatError("zero denominator", where)
    return Fraction(int(num), int(den) if den else 1)


def format_rational(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _parse_points(raw, where):
    if not isinstance(raw, list):
        raise FormatError("expected a list of [x, y] pairs", where)
    pts = []
    for i, p in enumerate(raw):
        if not isinstance(p, list) or len(p) != 2:
            raise FormatError("expected an [x, y] pair", f"{where}[{i}]")
        pts.append((parse_rational(p[0], f"{where}[{i}][0]"), parse_rational(p[1], f"{where}[{i}][1]")))
    return pts


def loads_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None


def instance_from_dict(doc) -> Instance:
    if not isinstance(doc, dict):
        raise FormatError("top level must be an object")
    for key in ("outer", "guards", "target"):
        if key not in doc:
            raise FormatError("missing field", key)
    outer = _parse_points(doc["outer"], "outer")
    holes = [_parse_points(h, f"holes[{k}]") for k, h in enumerate(doc.get("holes", []))]
    guards = []
    if not isinstance(doc["guards"], list):
        raise FormatError("expected a list", "guards")
    for k, g in enumerate(doc["guards"]):
        w = f"guards[{k}]"
        if not isinstance(g, dict) or not {"id", "x", "y"} <= g.keys():
            raise FormatError("guard needs id, x and y", w)
        pin = None
        if g.get("pinned_start") is not None:
            raw = g["pinned_start"]
            if not isinstance(raw, list) or len(raw) != 2:
                raise FormatError("expected [dx, dy]", f"{w}.pinned_start")
            try:
                pin = Direction(parse_rational(raw[0], f"{w}.pinned_start[0]"),
                                parse_rational(raw[1], f"{w}.pinned_start[1]"))
            except ValueError as exc:
                if isinstance(exc, FormatError):
                    raise
                raise FormatError(str(exc), f"{w}.pinned_start") from None
        pos = Point(parse_rational(g["x"], f"{w}.x"), parse_rational(g["y"], f"{w}.y"))
        guards.append(Guard(str(g["id"]), pos, pin))
    t = doc["target"]
    if not isinstance(t, dict) or "mode" not in t:
        raise FormatError("target needs a mode", "target")
    if t["mode"] == "region":
        if "polygon" not in t:
            raise FormatError("missing field", "target.polygon")
        target = TargetSpec.region(_parse_points(t["polygon"], "target.polygon"))
    elif t["mode"] == "point":
        target = TargetSpec("point", point=Point(parse_rational(t.get("x"), "target.x"),
                                                 parse_rational(t.get("y"), "target.y")))
    elif t["mode"] == "whole":
        target = TargetSpec.whole()
    else:
        raise FormatError(f"unknown mode {t['mode']!r}", "target.mode")
    return Instance(PolygonWithHoles(outer, holes), guards, target)


def _pts(ring):
    return [[format_rational(p.x), format_rational(p.y)] for p in ring]


def instance_to_dict(inst: Instance) -> dict:
    guards = []
    for g in inst.guards:
        d = {"id": g.id, "x": format_rational(g.position.x), "y": format_rational(g.position.y)}
        if g.pinned_start is not None:
            d["pinned_start"] = [str(g.pinned_start.dx), str(g.pinned_start.dy)]
        guards.append(d)
    t = inst.target
    if t.mode == "region":
        target = {"mode": "region", "polygon": _pts(t.polygon)}
    elif t.mode == "point":
        target = {"mode": "point", "x": format_rational(t.point.x), "y": format_rational(t.point.y)}
    else:
        target = {"mode": "whole"}
    return {
        "outer": _pts(inst.env.outer),
        "holes": [_pts(h) for h in inst.env.holes],
        "guards": guards,
        "target": target,
    }


def load_instance(text: str) -> Instance:
    return instance_from_dict(loads_json(text))


def save_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1) + "\n"


def read_instance(path) -> Instance:
    with open(path) as fh:
        return load_instance(fh.read())


def write_instance(inst: Instance, path) -> None:
    with open(path, "w") as fh:
        fh.write(save_instance(inst))
