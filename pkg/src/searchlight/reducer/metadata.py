"""Gadget metadata: which guard plays which part in the construction."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ..geometry import Direction, Point, Segment
from .rects import Rect


@dataclass
class NookInfo:
    mouth: Segment
    window: Segment
    rects: list
    bottom: Rect


@dataclass
class PipeInfo:
    id: str
    kind: str                 # "straight" or "turning"
    owner: str                # e.g. "vertex:0:P3", "joint:e2:1", "room:g_a"
    guard: Optional[str]
    column: tuple             # x-range of the vertical leg
    lower_mouth: Segment
    upper_mouth: Optional[Segment]
    part: str                 # "left", "right" or "wall"
    nook: Optional[NookInfo]
    start: Optional[Direction] = None
    clear: Optional[Direction] = None
    sense: str = "CW"
    caps: list = field(default_factory=list)       # [guard id, Direction] pairs
    channel: list = field(default_factory=list)    # CCW polygon seen from the pipe guard
    crossings: list = field(default_factory=list)


@dataclass
class SubsegmentInfo:
    guard: str
    a: Point                  # axis end nearer the edge's first endpoint
    b: Point
    toward_a: Direction
    toward_b: Direction
    leave_a: str              # rotation sense when the laser leaves its cap at end a
    leave_b: str
    cap_a: Optional[str]      # pipe capped when aiming at end a (None for a dead end)
    cap_b: Optional[str]


@dataclass
class CorridorInfo:
    edge: int
    role: str                 # "edge", "pendant", "e_a" or "e_b"
    path: list
    subsegments: list
    joints: list              # pipe ids of the turning points, in path order


@dataclass
class CrossingInfo:
    id: str
    pipe: str
    corridor: str             # "e3" or "hall:1:L" style label of the crossed channel
    guards: list              # intersection guard ids
    directions: list
    gaps: list                # segments each crossing laser must cover


@dataclass
class VertexInfo:
    index: int
    kind: str
    origin: Point
    mirror: int
    ports: dict               # "L"/"R"/"B" -> edge index or None
    pipes: list
    c_guard: Optional[str] = None
    c_east: Optional[Direction] = None
    c_west: Optional[Direction] = None


@dataclass
class RoomInfo:
    x_left: Fraction
    x_split: Fraction
    x_right: Fraction
    floor_right: Fraction
    ceiling: Fraction
    target_low: Fraction
    target_high: Fraction
    steps: list               # [pipe id, height] in left-to-right order
    shadows: list             # rightmost shadow abscissa on the target's lower border per step
    d_caps: list              # [pipe id, Direction] in d's sweep order
    nooks: dict               # "h" / "i" -> NookInfo
    left_part: Rect
    right_part: Rect


@dataclass
class GadgetMetadata:
    machine: dict
    params: dict
    roles: dict               # guard id -> role label
    corridors: dict           # edge index -> CorridorInfo
    pipes: dict               # pipe id -> PipeInfo
    crossings: list
    vertices: dict
    room: RoomInfo
    special: dict             # "d", "f", "j" -> guard id

    def to_dict(self) -> dict:
        return _enc(self)

    @classmethod
    def from_dict(cls, doc) -> "GadgetMetadata":
        obj = _dec(doc)
        if not isinstance(obj, cls):
            raise ValueError("not a metadata document")
        return obj

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "GadgetMetadata":
        return cls.from_dict(json.loads(text))


_CLASSES = {c.__name__: c for c in (NookInfo, PipeInfo, SubsegmentInfo, CorridorInfo, CrossingInfo,
                                     VertexInfo, RoomInfo, GadgetMetadata, Rect)}


def _q(x: Fraction) -> str:
    return str(x)


def _enc(o):
    if isinstance(o, bool) or o is None or isinstance(o, (str, int)):
        return o
    if isinstance(o, Fraction):
        return {"$q": _q(o)}
    if isinstance(o, Direction):
        return {"$d": str(o)}
    if isinstance(o, Point):
        return {"$p": [_q(o.x), _q(o.y)]}
    if isinstance(o, Segment):
        return {"$s": [[_q(o.a.x), _q(o.a.y)], [_q(o.b.x), _q(o.b.y)]]}
    if dataclasses.is_dataclass(o):
        d = {f.name: _enc(getattr(o, f.name)) for f in dataclasses.fields(o)}
        d["$t"] = type(o).__name__
        return d
    if isinstance(o, dict):
        return {"$m": [[_enc(k), _enc(v)] for k, v in o.items()]}
    if isinstance(o, tuple):
        return {"$tuple": [_enc(v) for v in o]}
    if isinstance(o, list):
        return [_enc(v) for v in o]
    raise TypeError(f"cannot encode {type(o).__name__}")


def _dec(o):
    if isinstance(o, list):
        return [_dec(v) for v in o]
    if not isinstance(o, dict):
        return o
    if "$q" in o:
        return Fraction(o["$q"])
    if "$d" in o:
        return Direction.parse(o["$d"])
    if "$p" in o:
        return Point(Fraction(o["$p"][0]), Fraction(o["$p"][1]))
    if "$s" in o:
        (ax, ay), (bx, by) = o["$s"]
        return Segment(Point(Fraction(ax), Fraction(ay)), Point(Fraction(bx), Fraction(by)))
    if "$m" in o:
        return {_dec(k): _dec(v) for k, v in o["$m"]}
    if "$tuple" in o:
        return tuple(_dec(v) for v in o["$tuple"])
    if "$t" in o:
        cls = _CLASSES[o["$t"]]
        return cls(**{k: _dec(v) for k, v in o.items() if k != "$t"})
    raise ValueError(f"unrecognised metadata node {sorted(o)}")
