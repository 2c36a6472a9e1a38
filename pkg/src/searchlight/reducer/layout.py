"""Compile an EE-NCL instance into an orthogonal searchlight instance.

Coordinates: vertex halls sit on the line y = 0 in a row, edge tracks run
below them at y = -T, -2T, ..., and every pipe climbs to the room above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Optional

from ..environment import Guard, Instance, TargetSpec, validate_instance
from ..geometry import Direction, Point, Segment, cross
from ..ncl import EenclInstance, Kind, Orientation, machine_to_dict
from .metadata import (CorridorInfo, CrossingInfo, GadgetMetadata, NookInfo, PipeInfo, RoomInfo,
                       SubsegmentInfo, VertexInfo)
from .rects import LayoutError, Rect, union_polygon

Q = Fraction
UP, DOWN, LEFT, RIGHT = Direction(0, 1), Direction(0, -1), Direction(-1, 0), Direction(1, 0)


@dataclass(frozen=True)
class LayoutParams:
    corridor_width: Fraction = Q(4)
    pipe_width: Fraction = Q(1)
    nook_width: Fraction = Q(1)
    nook_depth: Fraction = Q(1)
    grid_pitch: Fraction = Q(1)
    slot_spacing: Fraction = Q(8)

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, Q(getattr(self, f.name)))

    def diagnostics(self) -> list:
        out = [f"{f.name} must be positive" for f in fields(self) if getattr(self, f.name) <= 0]
        if out:
            return out
        if self.pipe_width >= self.corridor_width:
            out.append("pipe_width must be smaller than corridor_width")
        elif 4 * self.pipe_width > self.corridor_width:
            out.append("pipe_width may be at most a quarter of corridor_width "
                       "(two pipe widths must fit in half a corridor at every bend)")
        if self.grid_pitch > min(self.pipe_width, self.nook_width):
            out.append("grid_pitch must not exceed pipe_width or nook_width")
        if self.slot_spacing < self.corridor_width:
            out.append("slot_spacing must be at least corridor_width")
        return out

    def to_dict(self) -> dict:
        return {f.name: str(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, doc) -> "LayoutParams":
        return cls(**{k: Q(v) for k, v in doc.items()})


@dataclass
class ReductionOutput:
    instance: Instance
    metadata: GadgetMetadata
    eencl: EenclInstance
    params: LayoutParams


def _snap_up(x, g):
    return math.ceil(x / g) * g


def _snap_down(x, g):
    return math.floor(x / g) * g


def make_nook(p0: Point, t, n, nw, nd) -> NookInfo:
    """L-shaped pocket behind a wall.

    The neck is ``nw`` wide and ``nw`` deep, starting at ``p0`` and running
    along unit axis vector ``t``; the cavity behind it is ``nd`` thick and
    extends ``2*nw`` back along ``-t``.  ``n`` points into the wall.
    """
    def at(alpha, beta):
        return Point(p0.x + alpha * t[0] + beta * n[0], p0.y + alpha * t[1] + beta * n[1])

    neck = Rect.span(*at(0, 0), *at(nw, nw))
    cavity = Rect.span(*at(-2 * nw, nw), *at(nw, nw + nd))
    bottom = Rect.span(*at(-2 * nw, nw), *at(-2 * nw + nw / 2, nw + nd))
    return NookInfo(Segment(at(0, 0), at(nw, 0)), Segment(at(0, nw), at(nw, nw)), [neck, cavity], bottom)


def leave_sense(g: Point, cap: Direction, mouth: Optional[Segment]) -> str:
    """Rotate toward the mouth being capped, so the seal sweeps inward."""
    if mouth is None:
        return "CW"
    mx = (mouth.a.x + mouth.b.x) / 2 - g.x
    my = (mouth.a.y + mouth.b.y) / 2 - g.y
    return "CCW" if cross(cap.dx, cap.dy, mx, my) > 0 else "CW"


@dataclass
class _Tube:
    """Straight pipe leaving a horizontal wall upward."""
    x0: Fraction
    x1: Fraction
    y: Fraction               # height of its lower mouth


@dataclass
class _Turn:
    """Pipe leaving a bend sideways along the floor, then climbing."""
    J: Point
    s: int                    # side of the horizontal corridor leg; the pipe heads to -s


@dataclass
class _Piece:
    """A pipe under construction."""
    id: str
    owner: str
    shape: object             # _Tube or _Turn
    part: str = "left"
    caps: list = field(default_factory=list)   # (guard id, corner or direction)
    top: Optional[Fraction] = None
    guard: Optional[str] = None
    static: bool = False
    crossings: list = field(default_factory=list)   # (crossing id, y bottom, y top, bulge)
    nook: Optional[NookInfo] = None
    start: Optional[Direction] = None
    clear: Optional[Direction] = None
    sense: str = "CW"


# ------------------------------------------------------------------ ports


def _end_key(inst: EenclInstance, e: int, v: int):
    """Where the far side of edge e (seen from vertex v) lies along the row."""
    m = inst.machine
    a, b = m.edges[e]
    other = b if a == v else a
    if e in (inst.e_a, inst.e_b):
        tgt = inst.target_a if e == inst.e_a else inst.target_b
        target_end = a if tgt is Orientation.TO_FIRST else b
        if target_end == v and other != v:
            return None  # ignored contribution: no corridor at v
        return -math.inf if e == inst.e_a else math.inf
    if other is None:
        return v
    return other


def assign_ports(inst: EenclInstance, v: int):
    """Return (mirror, {"L": e, "R": e, "B": e}) with None for empty ports."""
    m = inst.machine
    vx = m.vertices[v]
    inc = list(m.incident[v])
    keys = {e: _end_key(inst, e, v) for e in inc}

    def sort_key(e):
        k = keys[e]
        return (0 if k is None else 1, v if k is None else k, e)

    if vx.kind is Kind.AND:
        bottom = vx.output
        rest = sorted((e for e in inc if e != bottom), key=sort_key)
    else:
        order = sorted(inc, key=sort_key)
        bottom, rest = order[1], [order[0], order[2]]
    kb = keys[bottom]
    mirror = -1 if (kb is not None and kb < v) else 1
    phys_left, phys_right = rest
    ports = {"L": phys_left, "R": phys_right} if mirror == 1 else {"L": phys_right, "R": phys_left}
    ports["B"] = bottom
    return mirror, {p: (e if keys[e] is not None else None) for p, e in ports.items()}


# ------------------------------------------------------------------ vertex gadgets

# Local gadget geometry, in units of the pipe width, for a vertex whose
# bottom port leads right (mirror +1).  Tubes are (name, left edge); caps
# map a port to (tube name, corner abscissa); the corner sits on the
# core ceiling.
_GADGETS = {
    Kind.OR: dict(right=4, tubes=[("P", 1)], caps={"B": ("P", 1), "L": ("P", 1), "R": ("P", 2)}, c=None),
    Kind.AND: dict(right=13, tubes=[("P3", 1), ("P2", 6), ("P1", 10)],
                   caps={"B": ("P3", 1), "L": ("P2", 6), "R": ("P1", 11)}, c=4),
}


def _sign(v):
    return (v > 0) - (v < 0)


class _Builder:
    def __init__(self, inst: EenclInstance, p: LayoutParams, margin=Q(0)):
        self.inst, self.p = inst, p
        self.margin = margin      # extra room to the left of the first pipe
        self.h = p.corridor_width / 2
        self.w, self.nw, self.nd = p.pipe_width, p.nook_width, p.nook_depth
        self.g, self.S = p.grid_pitch, p.slot_spacing
        self.Lh = self.w + 2 * self.nw + self.g          # horizontal leg of a turning pipe
        self.Ls = 3 * self.S                             # stub length
        self.T = self.S + 2 * self.h                     # track spacing
        self.rects = []           # (Rect, group)
        self.nook_rects = []      # (Rect, group); only checked after the fact
        self.allowed = set()      # frozenset({group, group}) pairs allowed to overlap
        self.guards = {}          # id -> Guard
        self.roles = {}
        self.pieces = {}          # pipe id -> _Piece
        self.paths = {}           # edge -> list of points
        self.ends = {}            # edge -> [start handler, end handler]
        self.croles = {}
        self.vinfo = {}
        self.obstacles = {}       # (edge, segment index) -> crossing centres on the axis
        self.crossings = []

    def allow(self, a, b):
        self.allowed.add(frozenset((a, b)))

    def add_guard(self, gid, pos, role, pinned=None):
        if gid in self.guards:
            raise LayoutError(f"duplicate guard id {gid}")
        if any(g.position == pos for g in self.guards.values()):
            raise LayoutError(f"two guards at {pos}")
        self.guards[gid] = Guard(gid, pos, pinned)
        self.roles[gid] = role

    # -- slots ------------------------------------------------------------

    def place_vertices(self):
        h, w, Ls, Lh, S = self.h, self.w, self.Ls, self.Lh, self.S
        cursor = Q(0)
        for v, vx in enumerate(self.inst.machine.vertices):
            mirror, ports = assign_ports(self.inst, v)
            gad = _GADGETS[vx.kind]
            R = gad["right"] * w
            left_l, right_l = -2 * h - Ls - Lh, R + Ls + h + Lh
            X0 = cursor - (left_l if mirror == 1 else -right_l)
            X = lambda lx, X0=X0, m=mirror: X0 + m * lx
            cursor = max(X(left_l), X(right_l)) + S
            core = Rect.span(X(-h), -h, X(R), h - w)
            self.rects.append((core, f"v{v}"))
            pipes = []
            for name, tx in gad["tubes"]:
                pid = f"v{v}.{name}"
                x0, x1 = sorted((X(tx * w), X(tx * w + w)))
                self.pieces[pid] = _Piece(pid, f"vertex:{v}:{name}", _Tube(x0, x1, h - w))
                self.allow(f"pipe:{pid}", f"v{v}")
                pipes.append(pid)
            port_geo = {
                "L": (Point(X(-h), Q(0)), Direction(-mirror, 0)),
                "R": (Point(X(R), Q(0)), Direction(mirror, 0)),
                "B": (Point(X0, -h), DOWN),
            }
            caps = {}
            for port, (name, cx) in gad["caps"].items():
                caps[port] = (f"v{v}.{name}", Point(X(cx * w), h - w))
            info = VertexInfo(v, vx.kind.value, Point(X0, Q(0)), mirror, ports, pipes)
            if gad["c"] is not None:
                gid = f"v{v}.c"
                self.add_guard(gid, Point(X(gad["c"] * w), h - w), f"AND cover guard of vertex {v}")
                info.c_guard, info.c_east, info.c_west = gid, Direction(mirror, 0), Direction(-mirror, 0)
            self.vinfo[v] = dict(info=info, X=X, R=R, port_geo=port_geo, caps=caps,
                                 col={"L": X(-h - Ls), "R": X(R + Ls), "B": X0})
        self.x_first = min(min(d["X"](-2 * h - Ls - Lh), d["X"](d["R"] + Ls + h + Lh)) for d in self.vinfo.values())
        self.X_B = cursor + h
        self.X_A = self.x_first - S - h
        self.X_L = _snap_down(self.X_A - h - Lh - S / 2 - self.margin, self.g)
        self.X_end = self.X_L - S

    # -- corridor paths ---------------------------------------------------

    def port_leg(self, v, port, row_y):
        """Path from a vertex port down to the track at row_y (ending on the track)."""
        d = self.vinfo[v]
        start, _ = d["port_geo"][port]
        col = d["col"][port]
        if port == "B":
            return [start, Point(col, row_y)]
        return [start, Point(col, Q(0)), Point(col, row_y)]

    def port_stub(self, v, port):
        d = self.vinfo[v]
        start, _ = d["port_geo"][port]
        return [start, Point(d["col"][port], Q(0))]

    def route(self):
        inst, m = self.inst, self.inst.machine
        where = {}   # (edge, vertex) -> port
        for v, d in self.vinfo.items():
            for port, e in d["info"].ports.items():
                if e is not None:
                    where[(e, v)] = port
        row = 0
        for e, (a, b) in enumerate(m.edges):
            role = "e_a" if e == inst.e_a else "e_b" if e == inst.e_b else "edge"
            ends = [x for x in (a, b) if x is not None and (e, x) in where]
            if role == "edge" and len(ends) == 1:
                role = "pendant"
            if role in ("e_a", "e_b"):
                tgt = inst.target_a if role == "e_a" else inst.target_b
                first_is_target = tgt is Orientation.TO_FIRST
                row += 1
                y = -self.T * row
                if role == "e_a":
                    room = [Point(self.X_A, y), Point(self.X_A, Q(0)), Point(self.X_end, Q(0))]
                    room_end = ("pipe", "g_a")
                else:
                    room = [Point(self.X_B, y), Point(self.X_B, Q(0))]
                    room_end = ("pipe", "g_b")
                if ends:
                    u = ends[0]
                    path = self.port_leg(u, where[(e, u)], y) + room
                    hs = [("port", u, where[(e, u)]), room_end]
                else:
                    path = room
                    hs = [("dead",), room_end]
                if first_is_target:   # the room end belongs to the first endpoint
                    path, hs = path[::-1], hs[::-1]
            elif role == "pendant":
                u = ends[0]
                if where[(e, u)] == "B":
                    # a bare stub would run into the tracks below; give it a row
                    row += 1
                    y = -self.T * row
                    mirror = self.vinfo[u]["info"].mirror
                    path = self.port_leg(u, "B", y)
                    path.append(Point(path[-1].x + mirror * self.S, y))
                else:
                    path = self.port_stub(u, where[(e, u)])
                hs = [("port", u, where[(e, u)]), ("dead",)]
                if b == u:
                    path, hs = path[::-1], hs[::-1]
            else:
                row += 1
                y = -self.T * row
                pa, pb = self.port_leg(a, where[(e, a)], y), self.port_leg(b, where[(e, b)], y)
                path = pa + pb[::-1]
                hs = [("port", a, where[(e, a)]), ("port", b, where[(e, b)])]
            self.paths[e], self.ends[e], self.croles[e] = path, hs, role
        self.rows = row

    def corridor_rects(self):
        h = self.h
        self.hsegs, self.vsegs = [], []   # (edge, index, rect, axis coordinate, lo, hi)
        for e, path in self.paths.items():
            n = len(path)
            for i in range(n - 1):
                p, q = path[i], path[i + 1]
                ext_p = 0 if (i == 0 and self.ends[e][0][0] == "port") else h
                ext_q = 0 if (i == n - 2 and self.ends[e][1][0] == "port") else h
                if p.y == q.y:
                    sp = _sign(q.x - p.x)
                    r = Rect.span(p.x - sp * ext_p, p.y - h, q.x + sp * ext_q, p.y + h)
                    self.hsegs.append((e, i, r, p.y, min(p.x, q.x), max(p.x, q.x)))
                elif p.x == q.x:
                    sp = _sign(q.y - p.y)
                    r = Rect.span(p.x - h, p.y - sp * ext_p, p.x + h, q.y + sp * ext_q)
                    self.vsegs.append((e, i, r, p.x, min(p.y, q.y), max(p.y, q.y)))
                else:
                    raise LayoutError(f"edge {e}: path is not axis-parallel")
                self.rects.append((r, f"e{e}"))
                self.obstacles[(e, i)] = []
            for hnd in self.ends[e]:
                if hnd[0] == "port":
                    self.allow(f"e{e}", f"v{hnd[1]}")

    # -- pipes at bends and dead ends -----------------------------------

    def make_joint_pipes(self):
        h, w = self.h, self.w
        self.corner_of = {}   # (edge, point index, neighbour index) -> (pipe id, corner)
        for e, path in self.paths.items():
            for i in range(1, len(path) - 1):
                J, nbrs = path[i], (i - 1, i + 1)
                vert = [k for k in nbrs if path[k].x == J.x]
                horz = [k for k in nbrs if path[k].y == J.y]
                if len(vert) != 1 or len(horz) != 1:
                    raise LayoutError(f"edge {e}: bend {J} is not a right angle")
                vk, hk = vert[0], horz[0]
                s = _sign(path[hk].x - J.x)
                pid = f"e{e}.j{i}"
                if path[vk].y < J.y:
                    x0, x1 = sorted((J.x + s * w, J.x + 2 * s * w))
                    shape = _Tube(x0, x1, J.y + h)
                    self.corner_of[(e, i, vk)] = (pid, Point(J.x + s * w, J.y + h))
                    self.corner_of[(e, i, hk)] = (pid, Point(J.x + 2 * s * w, J.y + h))
                else:
                    shape = _Turn(J, s)
                    c = Point(J.x - s * h, J.y - h + w)
                    self.corner_of[(e, i, vk)] = self.corner_of[(e, i, hk)] = (pid, c)
                self.pieces[pid] = _Piece(pid, f"joint:e{e}:{i}", shape)
                self.allow(f"pipe:{pid}", f"e{e}")
        for e, role in self.croles.items():
            if role == "e_a":
                self.pieces["g_a"] = _Piece("g_a", "room:g_a", _Tube(self.X_end - w, self.X_end, h), part="wall",
                                            static=True)
                self.allow("pipe:g_a", f"e{e}")
            elif role == "e_b":
                self.pieces["g_b"] = _Piece("g_b", "room:g_b", _Tube(self.X_B + w, self.X_B + 2 * w, h), part="right")
                self.allow("pipe:g_b", f"e{e}")
        for pc in self.pieces.values():
            if pc.part == "left" and self.column(pc)[0] > self.X_B - self.h:
                pc.part = "right"

    def column(self, pc):
        sh = pc.shape
        if isinstance(sh, _Tube):
            return sh.x0, sh.x1
        a = self.turn_outer(sh)
        return (a, a + self.w) if sh.s == 1 else (a - self.w, a)

    def turn_outer(self, sh: _Turn):
        """Abscissa of the outer wall of a turning pipe's climbing leg."""
        return sh.J.x - sh.s * (self.h + self.Lh)

    def leg_bottom(self, pc):
        sh = pc.shape
        return sh.y if isinstance(sh, _Tube) else sh.J.y - self.h

    def lower_mouth(self, pc) -> Segment:
        sh = pc.shape
        if isinstance(sh, _Tube):
            return Segment(Point(sh.x0, sh.y), Point(sh.x1, sh.y))
        x = sh.J.x - sh.s * self.h
        b = sh.J.y - self.h
        return Segment(Point(x, b), Point(x, b + self.w))

    # -- crossings --------------------------------------------------------

    def find_crossings(self):
        h, g = self.h, self.g
        for (e1, i1, r1, x, lo1, hi1) in self.vsegs:
            for (e2, i2, r2, y, lo2, hi2) in self.hsegs:
                if e1 == e2 or not r1.overlaps(r2):
                    continue
                if not (lo1 + 2 * h <= y <= hi1 - 2 * h and lo2 + 2 * h <= x <= hi2 - 2 * h):
                    raise LayoutError(f"corridors of edges {e1} and {e2} meet near a bend at ({x}, {y})")
                self.obstacles[(e1, i1)].append(y)
                self.obstacles[(e2, i2)].append(x)
                self.allowed.add(frozenset((("seg", e1, i1), ("seg", e2, i2))))
        n = 0
        for pid in sorted(self.pieces):
            pc = self.pieces[pid]
            c0, c1 = self.column(pc)
            bottom = self.leg_bottom(pc)
            for (e2, i2, r2, y, lo2, hi2) in self.hsegs:
                if not (r2.x0 - g < c1 and c0 < r2.x1 + g and r2.y1 > bottom + self.w):
                    continue
                if f"e{e2}" == pc.owner.split(":")[1] and r2.y0 < bottom + self.w + g:
                    continue   # the pipe's own bend square
                if isinstance(pc.shape, _Tube) or not (lo2 + g <= c0 and c1 <= hi2 - g):
                    raise LayoutError(f"pipe {pid} runs into corridor of edge {e2} at y={y}")
                self.add_crossing(f"x{n}", pc, e2, i2, y)
                n += 1

    def add_crossing(self, xid, pc, e2, i2, y):
        h, w, s = self.h, self.w, pc.shape.s
        yb, yt = y - h, y + h
        a = self.turn_outer(pc.shape)
        x_in = a + s * w
        gy = pc.shape.J.y - h + w
        q = math.ceil((yb - gy) / w) + 1
        tau = 2 * h / q
        down, tilt = Direction(0, -1), Direction(-s, q)
        self.add_guard(f"{xid}.down", Point(x_in, yt), f"intersection guard ({pc.id} x edge {e2})", down)
        self.add_guard(f"{xid}.tilt", Point(a, yb), f"intersection guard ({pc.id} x edge {e2})", tilt)
        gaps = [Segment(Point(x_in, yt), Point(x_in, yb)), Segment(Point(a, yb), Point(a - s * tau, yt))]
        info = CrossingInfo(xid, pc.id, f"e{e2}", [f"{xid}.down", f"{xid}.tilt"], [down, tilt], gaps)
        self.crossings.append(info)
        pc.crossings.append((xid, yb, yt, tau))
        self.obstacles[(e2, i2)].append(a + s * w / 2)
        self.allowed.add(frozenset((("seg", e2, i2), ("leg", pc.id))))

    # -- corridor guards ----------------------------------------------------

    def place_on_axis(self, e, i, p, q):
        """Nearest half-grid point to the middle of p..q clear of crossings and ends."""
        h, g = self.h, self.g
        horizontal = p.y == q.y
        lo, hi = (min(p.x, q.x), max(p.x, q.x)) if horizontal else (min(p.y, q.y), max(p.y, q.y))
        obst = self.obstacles[(e, i)]
        mid = _snap_down((lo + hi) / 2, g / 2)
        step, k = g / 2, 0
        while mid - k * step >= lo or mid + k * step <= hi:
            for t in (mid - k * step, mid + k * step):
                if (lo + h + 2 * g <= t <= hi - h - 2 * g
                        and all(abs(t - o) >= 2 * h + 2 * g for o in obst)):
                    return Point(t, p.y) if horizontal else Point(p.x, t)
            k += 1
        raise LayoutError(f"edge {e}: no room for a guard between {p} and {q}")

    def end_cap(self, e, j, from_k, G, gid):
        """(pipe id, direction, mouth) for a guard at G aiming at path point j."""
        path = self.paths[e]
        n = len(path)
        if 0 < j < n - 1:
            pid, corner = self.corner_of[(e, j, from_k)]
        else:
            hnd = self.ends[e][0 if j == 0 else 1]
            if hnd[0] == "dead":
                return None, Direction.between(G, path[j]), None
            if hnd[0] == "port":
                pid, corner = self.vinfo[hnd[1]]["caps"][hnd[2]]
            else:
                pid = hnd[1]
                sh = self.pieces[pid].shape
                corner = Point(sh.x1, sh.y) if pid == "g_a" else Point(sh.x0, sh.y)
        pc = self.pieces[pid]
        d = Direction.between(G, corner)
        pc.caps.append((gid, d))
        return pid, d, self.lower_mouth(pc)

    def corridor_guards(self):
        self.cinfo = {}
        for e, path in self.paths.items():
            subs, joints = [], []
            for i in range(len(path) - 1):
                p, q = path[i], path[i + 1]
                G = self.place_on_axis(e, i, p, q)
                gid = f"e{e}.s{i}"
                self.add_guard(gid, G, f"subsegment guard {i} of edge {e}")
                cap_a, da, ma = self.end_cap(e, i, i + 1, G, gid)
                cap_b, db, mb = self.end_cap(e, i + 1, i, G, gid)
                subs.append(SubsegmentInfo(gid, p, q, da, db, leave_sense(G, da, ma), leave_sense(G, db, mb),
                                           cap_a, cap_b))
            for i in range(1, len(path) - 1):
                joints.append(f"e{e}.j{i}")
            self.cinfo[e] = CorridorInfo(e, self.croles[e], list(path), subs, joints)

    # -- pipe guards --------------------------------------------------------

    def cap_hit(self, pc, gid, d):
        """Height where a cap laser meets the far wall of a straight pipe."""
        G = self.guards[gid].position
        sh = pc.shape
        if d.dx == 0:
            raise LayoutError(f"guard {gid} looks straight up pipe {pc.id}")
        xw = sh.x1 if d.dx > 0 else sh.x0
        return G.y + d.dy * (xw - G.x) / d.dx

    def pipe_guards(self):
        h, w, g, nw = self.h, self.w, self.g, self.nw
        hits = [self.cap_hit(pc, gid, d) for pc in self.pieces.values() if isinstance(pc.shape, _Tube)
                for gid, d in pc.caps]
        self.Y_N = _snap_up(max(hits + [h]) + 4 * nw + g, g)
        for pid in sorted(self.pieces):
            pc = self.pieces[pid]
            pc.guard = f"{pid}.g"
            sh = pc.shape
            if pc.static:
                continue   # placed with the room
            if isinstance(sh, _Tube):
                pos = Point(sh.x0, self.Y_N)
                pc.start, pc.clear, pc.sense = UP, DOWN, "CW"
                pc.nook = make_nook(Point(sh.x0, self.Y_N - 2 * nw), (0, 1), (-1, 0), nw, self.nd)
            else:
                a, s = self.turn_outer(sh), sh.s
                x_in, b = a + s * w, sh.J.y - h
                pos = Point(x_in, b + w)
                pc.start, pc.clear, pc.sense = Direction(s, 0), UP, ("CW" if s == 1 else "CCW")
                pc.nook = make_nook(Point(x_in, b + w + 2 * nw + g), (0, 1), (s, 0), nw, self.nd)
            self.add_guard(pc.guard, pos, f"pipe guard of {pid}")


def staircase_heights(pipes, d: Point, target_low, base, grid):
    """Heights at which left-part pipes open into the room, left to right.

    ``pipes`` is a list of (x0, x1, guard position).  Pipe k opens at the
    lowest grid height above pipe k-1 for which the line from ``d`` through
    its upper-left corner crosses ``y = target_low`` strictly to the right
    of every laser pipe k-1's guard can shine through its own upper mouth.
    Returns (heights, shadows), where shadows[k] is that rightmost crossing
    for pipe k.
    """
    heights, shadows = [], []
    for k, (x0, x1, G) in enumerate(pipes):
        if k == 0:
            s = base
        else:
            c = shadows[-1]
            if c <= d.x or x0 <= c:
                raise LayoutError(f"pipe at x={x0} lies inside the previous pipe's light fan")
            bound = d.y - (x0 - d.x) * (d.y - target_low) / (c - d.x)
            s = max(heights[-1] + grid, _snap_down(bound, grid) + grid)
        if not G.y < s < target_low:
            raise LayoutError(f"pipe at x={x0} cannot open between its guard and the target")
        shadows.append(max(G.x + (cx - G.x) * (target_low - G.y) / (s - G.y) for cx in (x0, x1)))
        heights.append(s)
    return heights, shadows


def _try_staircase(pipes, d, target_low, base, grid):
    try:
        heights, shadows = staircase_heights(pipes, d, target_low, base, grid)
    except LayoutError:
        return None
    return (heights, shadows) if heights[-1] <= target_low - 2 * grid else None


class _SteepCap(LayoutError):
    pass


def _room(b: _Builder):
    h, w, g, nw, nd, S = b.h, b.w, b.g, b.nw, b.nd, b.S
    left = sorted((pc for pc in b.pieces.values() if pc.part == "left"), key=lambda pc: b.column(pc)[0])
    right = [pc for pc in b.pieces.values() if pc.part == "right"]
    K = len(left)
    cols = [b.column(pc) for pc in left]
    for (l0, l1), (r0, r1) in zip(cols, cols[1:]):
        if r0 - l1 < 2 * g:
            raise LayoutError(f"pipes at x={l0} and x={r0} are too close for a riser between them")
    X_L = b.X_L
    if cols[0][0] - X_L < 2 * g:
        raise LayoutError("leftmost pipe touches the room's left wall")
    s1 = _snap_up(b.Y_N + (4 * K + 8) * g, g)
    F_r = s1 - 2 * g
    m_a = s1 + 2 * g
    y_h = m_a + w + 2 * nw + g
    T_lo = _snap_up(max(s1 + (2 * K + 4) * g, y_h + nw + 2 * g), g)
    x_j = _snap_down((cols[-1][1] + b.X_B - h) / 2, g)
    W = _snap_up(b.X_B + h + b.Lh + S / 2, g)
    spec = [(c0, c1, b.guards[pc.guard].position) for pc, (c0, c1) in zip(left, cols)]

    def attempt(D):
        return _try_staircase(spec, Point(X_L, T_lo + D), T_lo, s1, g)

    lo, D = Q(0), S
    while attempt(D) is None:
        lo, D = D, 2 * D
        if D > 2 ** 40 * S:
            raise LayoutError("no ceiling height makes the staircase feasible")
    hi = D
    while hi - lo > g:   # smallest feasible ceiling on the grid
        mid = _snap_down((lo + hi) / 2, g)
        if mid == lo:
            break
        if attempt(mid) is None:
            lo = mid
        else:
            hi = mid
    H = T_lo + hi
    heights, shadows = attempt(hi)
    for (c0, _, _), s in zip(spec, heights):
        # d's cap enters at the upper-left corner and must meet the right
        # wall above the pipe guard, where the walls have no openings
        if s - w * (H - s) / (c0 - X_L) <= b.Y_N + g:
            raise _SteepCap(f"d's cap of the pipe at x={c0} runs too deep")
    sK = heights[-1]
    for pc, s in zip(left, heights):
        pc.top = s
    for pc in right:
        pc.top = F_r
    d_pos, f_pos, j_pos = Point(X_L, H), Point(W, F_r), Point(x_j, H)
    b.add_guard("d", d_pos, "room sweeper (caps every left-part pipe in turn)")
    b.add_guard("f", f_pos, "right-part sweeper")
    b.add_guard("j", j_pos, "room separator", DOWN)

    ga = b.pieces.get("g_a")
    if ga is not None:
        ga.top = m_a + w
        b.add_guard(ga.guard, Point(ga.shape.x0, m_a + w), "pipe guard of g_a (never moves)", DOWN)
        ga.start = ga.clear = DOWN
    room = "room"
    risers = [X_L] + [_snap_down((l1 + r0) / 2, g) for (_, l1), (r0, _) in zip(cols, cols[1:])] + [x_j]
    b.rects.append((Rect.span(X_L, sK, W, H), room))
    for k in range(K - 1):
        b.rects.append((Rect.span(risers[k], heights[k], risers[k + 1], sK), room))
    b.rects.append((Rect.span(x_j, F_r, W, sK), room))
    nooks = {
        "h": make_nook(Point(X_L, y_h), (0, 1), (-1, 0), nw, nd),
        "i": make_nook(Point(W, F_r + 2 * nw + g), (0, 1), (1, 0), nw, nd),
    }
    d_caps = []
    for pc, s in zip(left, heights):
        d_caps.append((pc.id, Direction.between(d_pos, Point(b.column(pc)[0], s))))
    d_caps.reverse()   # d turns clockwise from east, meeting the rightmost pipe first
    target_high = H - g
    b.room = RoomInfo(X_L, x_j, W, F_r, H, T_lo, target_high,
                      [(pc.id, s) for pc, s in zip(left, heights)], shadows, d_caps, nooks,
                      Rect.span(X_L, sK, x_j, H), Rect.span(x_j, F_r, W, H))
    b.target = [Point(X_L + g, T_lo), Point(W - g, T_lo), Point(W - g, target_high), Point(X_L + g, target_high)]
    b.m_a = m_a


def _pipe_geometry(b: _Builder, pc: _Piece):
    """Rectangles (keyed) and the visibility channel of one pipe."""
    w, h = b.w, b.h
    sh, grp = pc.shape, f"pipe:{pc.id}"
    x0, x1 = b.column(pc)
    out = []
    if isinstance(sh, _Tube):
        out.append((Rect.span(x0, sh.y, x1, pc.top), grp, ("leg", pc.id)))
        channel = [Point(x0, sh.y), Point(x1, sh.y), Point(x1, pc.top), Point(x0, pc.top)]
        if pc.id == "g_a":
            out.append((Rect.span(x0, b.m_a, b.X_L, b.m_a + w), grp, ("hleg", pc.id)))
            channel = None
        return out, channel
    s, bot = sh.s, sh.J.y - h
    a, xm = b.turn_outer(sh), sh.J.x - s * h
    out.append((Rect.span(a, bot, xm, bot + w), grp, ("hleg", pc.id)))
    out.append((Rect.span(x0, bot, x1, pc.top), grp, ("leg", pc.id)))

    def X(u):
        return a + s * u

    ring = [Point(X(0), bot), Point(xm, bot), Point(xm, bot + w), Point(X(w), bot + w),
            Point(X(w), pc.top), Point(X(0), pc.top)]
    for _, yb, yt, tau in sorted(pc.crossings, key=lambda c: -c[1]):
        ring += [Point(X(0), yt), Point(X(-tau), yt), Point(X(0), yb)]
    if s == -1:
        ring = ring[::-1]
    return out, ring


def _check_collisions(b: _Builder, items):
    """Reject overlaps that are not designed crossings or attachments."""
    g = b.g
    for i in range(len(items)):
        ri, gi, ki = items[i]
        for j in range(i + 1, len(items)):
            rj, gj, kj = items[j]
            if gi == gj or frozenset((ki, kj)) in b.allowed:
                continue
            related = frozenset((gi, gj)) in b.allowed or any(
                frozenset((gi, x)) in b.allowed and frozenset((gj, x)) in b.allowed for x in b.hubs)
            if ri.overlaps(rj, 0 if related else g):
                raise LayoutError(f"{gi} collides with {gj} near ({max(ri.x0, rj.x0)}, {max(ri.y0, rj.y0)})")


def _assemble(b: _Builder):
    items = []
    for idx, (r, grp) in enumerate(b.rects):
        items.append((r, grp, ("rect", idx)))
    for (e, i, r, *_rest) in b.hsegs + b.vsegs:
        for k, (r2, grp, key) in enumerate(items):
            if r2 is r and grp == f"e{e}":
                items[k] = (r, grp, ("seg", e, i))
                break
    channels = {}
    for pid in sorted(b.pieces):
        pc = b.pieces[pid]
        b.allow(f"pipe:{pid}", "room")
        rs, channels[pid] = _pipe_geometry(b, pc)
        items.extend(rs)
    b.hubs = [f"v{v}" for v in b.vinfo] + ["room"]
    _check_collisions(b, items)
    free = [r for r, _, _ in items]
    nooks = [pc.nook for pc in b.pieces.values() if pc.nook] + list(b.room.nooks.values())
    for nk in nooks:
        free.extend(nk.rects)
    env = union_polygon(free)
    return env, channels


def reduce(eencl: EenclInstance, params: Optional[LayoutParams] = None) -> ReductionOutput:
    """Build the searchlight instance for ``eencl``; raises LayoutError if the parameters cannot work."""
    p = params or LayoutParams()
    problems = p.diagnostics()
    if problems:
        raise LayoutError("; ".join(problems))
    margin = Q(0)
    while True:
        b = _Builder(eencl, p, margin)
        b.place_vertices()
        b.route()
        b.corridor_rects()
        b.make_joint_pipes()
        b.find_crossings()
        b.corridor_guards()
        b.pipe_guards()
        try:
            _room(b)
            break
        except _SteepCap:
            if margin > 2 ** 20 * p.slot_spacing:
                raise
            margin = 2 * margin if margin else p.slot_spacing
    env, channels = _assemble(b)
    guards = [b.guards[k] for k in sorted(b.guards)]
    inst = Instance(env, guards, TargetSpec.region(b.target))
    bad = validate_instance(inst)
    if bad:
        raise LayoutError("construction produced an invalid instance: " + "; ".join(map(str, bad[:3])))
    pipes = {}
    for pid in sorted(b.pieces):
        pc = b.pieces[pid]
        x0, x1 = b.column(pc)
        if pid == "g_a":
            upper = Segment(Point(b.X_L, b.m_a), Point(b.X_L, b.m_a + b.w))
        else:
            upper = Segment(Point(x0, pc.top), Point(x1, pc.top))
        pipes[pid] = PipeInfo(
            pid, "straight" if isinstance(pc.shape, _Tube) else "turning", pc.owner, pc.guard, (x0, x1),
            b.lower_mouth(pc), upper, pc.part, pc.nook, pc.start, pc.clear, pc.sense,
            [[gid, d] for gid, d in pc.caps], channels[pid] or [], [c[0] for c in pc.crossings])
    meta = GadgetMetadata(
        machine=machine_to_dict(eencl), params=p.to_dict(), roles=dict(sorted(b.roles.items())),
        corridors=b.cinfo, pipes=pipes, crossings=b.crossings,
        vertices={v: d["info"] for v, d in b.vinfo.items()}, room=b.room,
        special={"d": "d", "f": "f", "j": "j"})
    return ReductionOutput(inst, meta, eencl, p)
