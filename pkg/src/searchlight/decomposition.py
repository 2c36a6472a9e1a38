"""Exact cell decomposition induced by critical laser directions.

The arrangement is built from the polygon edges, the target edges and, for
every guard and every critical direction, the laser segment the guard casts
in that direction.  Its bounded faces inside the environment are the cells;
two cells sharing a positive-length non-wall arrangement edge are linked by
a portal.

For planning, each interval between two cyclically adjacent critical
directions of a guard is preprocessed into a :class:`WedgeSweep`: the cells
inside the wedge the laser sweeps, the micro-event directions at which the
laser passes an arrangement vertex, and for every laser position between
events which cells the laser cuts in two.
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .environment import Instance, TargetSpec
from .geometry import (
    Direction,
    Location,
    Point,
    Segment,
    ccw_rank,
    interior_direction,
    max_visible_segment,
    on_segment,
    orient,
    point_in_region,
    ray_stop,
    ring_location,
    segment_intersection,
    signed_area,
    sort_directions,
    strictly_ccw_between,
)

log = logging.getLogger(__name__)

WALL = ("wall",)
TARGET = ("target",)


def ray_owner(gid: str, d: Direction):
    return ("ray", gid, d)


def critical_directions(inst: Instance, guard) -> list[Direction]:
    """Sorted directions from ``guard`` to every vertex, other guard and
    target vertex along which its laser is not empty."""
    g = guard.position
    pts = list(inst.env.vertices)
    pts += [o.position for o in inst.guards if o.id != guard.id]
    if inst.target.mode == "region":
        pts += list(inst.target.polygon)
    elif inst.target.mode == "point":
        pts.append(inst.target.point)
    dirs = {Direction.between(g, p) for p in pts if p != g}
    if guard.pinned_start is not None:
        dirs.add(guard.pinned_start)
    return [d for d in sort_directions(dirs) if ray_stop(g, d, inst.env) is not None]


@dataclass
class Cell:
    id: int
    outer: tuple
    holes: tuple
    area: Fraction
    sample: Point

    def closure_contains(self, p) -> bool:
        if ring_location(p, self.outer) is Location.OUTSIDE:
            return False
        return all(ring_location(p, h) is not Location.INSIDE for h in self.holes)


@dataclass(frozen=True)
class Portal:
    id: int
    c1: int
    c2: int
    carrier: Segment
    owners: frozenset


@dataclass
class WedgeSweep:
    """Preprocessed rotation of one guard across one open interval.

    ``positions`` alternates interior directions and event directions in
    counterclockwise order.  For each position, ``sides[i]`` maps wedge cell
    -> -1/0/+1 (clockwise of the laser, cut by it, counterclockwise of it)
    and ``portal_sides[i]`` maps affected portal -> -1/0/+1, with ``None``
    meaning the carrier lies on the laser.
    """

    guard: str
    index: int
    start: Direction
    end: Direction
    empty: bool
    cells: frozenset = frozenset()
    events: tuple = ()
    positions: tuple = ()
    sides: tuple = ()
    portal_sides: tuple = ()


class CellDecomposition:
    def __init__(self, inst: Instance, critical, cells, portals, pieces, vertices):
        self.instance = inst
        self.critical = critical
        self.cells = cells
        self.portals = portals
        self.pieces = pieces  # (p, q, owners, left cell or None, right cell or None)
        self.vertices = vertices
        self.lasers = {}
        self.block_masks = {}
        self.cell_portals = defaultdict(list)
        for p in portals:
            self.cell_portals[p.c1].append(p.id)
            self.cell_portals[p.c2].append(p.id)
        for gid, dirs in critical.items():
            pos = inst.guard(gid).position
            for i, d in enumerate(dirs):
                self.lasers[gid, i] = max_visible_segment(pos, d, inst.env)
                owner = ray_owner(gid, d)
                mask = 0
                for p in portals:
                    if owner in p.owners:
                        mask |= 1 << p.id
                self.block_masks[gid, i] = mask
        self._wedges = {}
        self._frame = None

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def total_area(self) -> Fraction:
        return sum((c.area for c in self.cells), Fraction(0))

    def wedge(self, gid: str, k: int) -> WedgeSweep:
        key = (gid, k)
        if key not in self._wedges:
            self._wedges[key] = _build_wedge(self, gid, k)
        return self._wedges[key]

    def dump(self) -> str:
        lines = [f"cells {len(self.cells)}"]
        for c in self.cells:
            chain = " ".join(f"({p.x},{p.y})" for p in c.outer)
            lines.append(f"cell {c.id} area {c.area} : {chain}")
            for h in c.holes:
                lines.append("  hole " + " ".join(f"({p.x},{p.y})" for p in h))
        lines.append(f"portals {len(self.portals)}")
        for p in self.portals:
            own = ",".join(sorted(_owner_str(o) for o in p.owners))
            lines.append(
                f"portal {p.id} {p.c1}-{p.c2} ({p.carrier.a.x},{p.carrier.a.y})-"
                f"({p.carrier.b.x},{p.carrier.b.y}) {own}"
            )
        for gid, dirs in self.critical.items():
            lines.append(f"critical {gid} " + " ".join(str(d) for d in dirs))
        return "\n".join(lines) + "\n"


def _owner_str(o) -> str:
    return "ray:%s:%s" % (o[1], o[2]) if o[0] == "ray" else o[0]


# ---------------------------------------------------------------- arrangement


def _bbox(a, b):
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1]))


def _split_segments(segments):
    """Split (a, b, owner) segments at all mutual intersections."""
    n = len(segments)
    boxes = [_bbox(a, b) for a, b, _ in segments]
    cuts = [{a, b} for a, b, _ in segments]
    for i in range(n):
        bi = boxes[i]
        si = Segment(segments[i][0], segments[i][1])
        for j in range(i + 1, n):
            bj = boxes[j]
            if bi[2] < bj[0] or bj[2] < bi[0] or bi[3] < bj[1] or bj[3] < bi[1]:
                continue
            hit = segment_intersection(si, Segment(segments[j][0], segments[j][1]))
            if hit is None:
                continue
            if isinstance(hit, Segment):
                cuts[i].update(hit)
                cuts[j].update(hit)
            else:
                cuts[i].add(hit)
                cuts[j].add(hit)
    pieces = {}
    for (a, b, owner), pts in zip(segments, cuts):
        dx, dy = b[0] - a[0], b[1] - a[1]
        ordered = sorted(pts, key=lambda p: (p[0] - a[0]) * dx + (p[1] - a[1]) * dy)
        for p, q in zip(ordered, ordered[1:]):
            key = (p, q) if p < q else (q, p)
            pieces.setdefault(key, set()).add(owner)
    return pieces


def _first_hit(origin, d, segs) -> Optional[Fraction]:
    best = None
    for p, q in segs:
        ex, ey = q[0] - p[0], q[1] - p[1]
        den = d[0] * ey - d[1] * ex
        px, py = p[0] - origin[0], p[1] - origin[1]
        if den == 0:
            if px * d[1] - py * d[0] != 0:
                continue
            dd = d[0] * d[0] + d[1] * d[1]
            ts = [Fraction(px * d[0] + py * d[1], 1) / dd,
                  Fraction((q[0] - origin[0]) * d[0] + (q[1] - origin[1]) * d[1], 1) / dd]
            ts = [t for t in ts if t > 0]
            if ts:
                t = min(ts)
                best = t if best is None else min(best, t)
            continue
        nt, ns = px * ey - py * ex, px * d[1] - py * d[0]
        if den < 0:
            den, nt, ns = -den, -nt, -ns
        # sign tests first; divide only for real hits
        if nt > 0 and 0 <= ns <= den:
            t = Fraction(nt) / den
            best = t if best is None else min(best, t)
    return best


def build_decomposition(inst: Instance) -> CellDecomposition:
    env = inst.env
    critical = {g.id: critical_directions(inst, g) for g in inst.guards}
    segments = [(a, b, WALL) for a, b in env.edges]
    if inst.target.mode == "region":
        ring = inst.target.polygon
        segments += [(ring[i], ring[(i + 1) % len(ring)], TARGET) for i in range(len(ring))]
    for g in inst.guards:
        for d in critical[g.id]:
            seg = max_visible_segment(g.position, d, env)
            segments.append((seg.a, seg.b, ray_owner(g.id, d)))
    pieces = _split_segments(segments)
    log.debug("arrangement: %d segments, %d pieces", len(segments), len(pieces))

    out = defaultdict(list)
    for p, q in pieces:
        out[p].append(q)
        out[q].append(p)
    order = {}
    for v, nbrs in out.items():
        nbrs.sort(key=lambda w: _dir_key(w[0] - v[0], w[1] - v[1]))
        for k, w in enumerate(nbrs):
            order[v, w] = k

    # faces: follow next(u->v) = clockwise neighbour of (v->u) at v
    face_of = {}
    cycles = []
    for start in order:
        if start in face_of:
            continue
        cyc = []
        h = start
        while h not in face_of:
            face_of[h] = len(cycles)
            cyc.append(h[0])
            u, v = h
            nbrs = out[v]
            k = order[v, u]
            h = (v, nbrs[k - 1])
        cycles.append(cyc)

    # connected components, to attach floating components as holes
    parent = {v: v for v in out}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, q in pieces:
        parent[find(p)] = find(q)
    areas = [signed_area(c) for c in cycles]
    outer_root = find(env.outer[0])
    bounded = [i for i, a in enumerate(areas) if a > 0]
    holes_of = defaultdict(list)
    for i, a in enumerate(areas):
        if a > 0:
            continue
        root = find(cycles[i][0])
        if root == outer_root:
            continue  # unbounded face
        probe = cycles[i][0]
        best = None
        for j in bounded:
            if find(cycles[j][0]) == root:
                continue
            if ring_location(probe, cycles[j]) is Location.INSIDE:
                if best is None or areas[j] < areas[best]:
                    best = j
        if best is not None:
            holes_of[best].append(i)

    all_segs = [(float(p[0]), float(q[0]), float(min(p[1], q[1])), float(max(p[1], q[1])), p, q) for p, q in pieces]
    cells = []
    cell_of_cycle = {}
    for j in bounded:
        cyc = cycles[j]
        sample = _interior_sample(cyc, all_segs)
        if point_in_region(sample, env) is not Location.INSIDE:
            continue
        holes = tuple(tuple(cycles[i]) for i in holes_of[j])
        area = areas[j] + sum(areas[i] for i in holes_of[j])
        cell_of_cycle[j] = len(cells)
        for i in holes_of[j]:
            cell_of_cycle[i] = len(cells)
        cells.append(Cell(len(cells), tuple(cyc), holes, area, sample))

    piece_list = []
    portals = []
    for (p, q), owners in sorted(pieces.items()):
        left = cell_of_cycle.get(face_of[p, q])
        right = cell_of_cycle.get(face_of[q, p])
        owners = frozenset(owners)
        piece_list.append((p, q, owners, left, right))
        if left is not None and right is not None and left != right:
            portals.append(Portal(len(portals), left, right, Segment(p, q), owners))
    return CellDecomposition(inst, critical, cells, portals, piece_list, sorted(out))


def _dir_key(dx, dy):
    from .geometry import direction_key

    return direction_key((dx, dy))


def _interior_sample(cyc, boxed) -> Point:
    """``boxed`` holds float (x_lo, x_hi, y_lo, y_hi) and (p, q) per arrangement piece."""
    # the first hit along the inward normal lies inside the face's bbox;
    # the float filter is padded so it only ever keeps extra candidates
    xs = [p[0] for p in cyc]
    ys = [p[1] for p in cyc]
    pad = 1e-9 * (1 + max(abs(float(v)) for v in xs + ys))
    x0, x1 = float(min(xs)) - pad, float(max(xs)) + pad
    y0, y1 = float(min(ys)) - pad, float(max(ys)) + pad
    segs = [(p, q) for xl, xh, yl, yh, p, q in boxed if xh >= x0 and xl <= x1 and yh >= y0 and yl <= y1]
    n = len(cyc)
    for i in range(n):
        a, b = cyc[i], cyc[(i + 1) % n]
        if a == b:
            continue
        m = Point((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        normal = (-(b[1] - a[1]), b[0] - a[0])
        t = _first_hit(m, normal, segs)
        if t is None:
            continue
        return Point(m[0] + t / 2 * normal[0], m[1] + t / 2 * normal[1])
    raise ValueError("face without interior sample")


# ------------------------------------------------------------------ queries


def goal_cells(dec: CellDecomposition, target: TargetSpec) -> frozenset:
    """Cells that must be clear at the end for the given goal."""
    if target.mode == "whole":
        return frozenset(range(dec.n_cells))
    if target.mode == "point":
        return frozenset(c.id for c in dec.cells if c.closure_contains(target.point))
    ring = target.polygon
    out = {c.id for c in dec.cells if ring_location(c.sample, ring) is Location.INSIDE}
    # cells meeting the target along a boundary piece
    for p, q, owners, left, right in dec.pieces:
        if TARGET in owners:
            out.update(c for c in (left, right) if c is not None)
    return frozenset(out)


def laser_segments(dec: CellDecomposition, lasers: dict) -> list[Segment]:
    segs = []
    for gid, d in lasers.items():
        if d is None:
            continue
        seg = max_visible_segment(dec.instance.guard(gid).position, d, dec.instance.env)
        if seg is not None:
            segs.append(seg)
    return segs


def covered(carrier: Segment, segs) -> bool:
    """Is the carrier covered by the union of the given segments?"""
    a, b = carrier
    dx, dy = b[0] - a[0], b[1] - a[1]
    dd = dx * dx + dy * dy
    spans = []
    for s in segs:
        if orient(a, b, s.a) != 0 or orient(a, b, s.b) != 0:
            continue
        t0 = Fraction((s.a[0] - a[0]) * dx + (s.a[1] - a[1]) * dy) / dd
        t1 = Fraction((s.b[0] - a[0]) * dx + (s.b[1] - a[1]) * dy) / dd
        spans.append((min(t0, t1), max(t0, t1)))
    spans.sort()
    reach = Fraction(0)
    for lo, hi in spans:
        if lo > reach:
            break
        reach = max(reach, hi)
    return reach >= 1


def blocked_portals(dec: CellDecomposition, lasers: dict) -> frozenset:
    """Portals covered by the union of the given lasers (guard id -> direction)."""
    segs = laser_segments(dec, lasers)
    return frozenset(p.id for p in dec.portals if covered(p.carrier, segs))


def micro_events(dec: CellDecomposition, gid: str, k: int) -> list[Direction]:
    """Event directions strictly inside interval k of guard ``gid``."""
    return list(dec.wedge(gid, k).events)


def _line_hit(g, d, a, b) -> Point:
    ex, ey = b[0] - a[0], b[1] - a[1]
    den = d[0] * ey - d[1] * ex
    t = Fraction((a[0] - g[0]) * ey - (a[1] - g[1]) * ex) / den
    return Point(g[0] + t * d[0], g[1] + t * d[1])


def wedge_triangle(dec: CellDecomposition, gid: str, k: int):
    """(apex, A1, A2) of the region lit while sweeping interval k, or None."""
    dirs = dec.critical[gid]
    n = len(dirs)
    d1, d2 = dirs[k], dirs[(k + 1) % n]
    g = dec.instance.guard(gid).position
    mid = interior_direction(d1, d2)
    seg = max_visible_segment(g, mid, dec.instance.env)
    if seg is None:
        return None
    for a, b in dec.instance.env.edges:
        if on_segment(seg.b, a, b):
            return g, _line_hit(g, d1, a, b), _line_hit(g, d2, a, b)
    raise AssertionError("laser end not on a wall")


def _in_triangle(p, tri) -> bool:
    g, a1, a2 = tri
    s1, s2, s3 = orient(g, a1, p), orient(a1, a2, p), orient(a2, g, p)
    return (s1 >= 0 and s2 >= 0 and s3 >= 0) or (s1 <= 0 and s2 <= 0 and s3 <= 0)


def _scaler(dec: CellDecomposition):
    """Map a point to its coordinates times one positive factor shared by
    the whole decomposition; known points come back as plain ints."""
    if dec._frame is None:
        pts = set(dec.vertices) | {c.sample for c in dec.cells}
        pts |= {g.position for g in dec.instance.guards}
        scale = 1
        for p in pts:
            scale = math.lcm(scale, p[0].denominator, p[1].denominator)
        table = {p: (int(p[0] * scale), int(p[1] * scale)) for p in pts}
        dec._frame = (scale, table)
    scale, table = dec._frame

    def at(p):
        hit = table.get(p)
        # orientation signs are scale invariant, so stray points stay exact as Fractions
        return hit if hit is not None else (p[0] * scale, p[1] * scale)

    return at


def _sign_of(values) -> int:
    pos = any(v > 0 for v in values)
    neg = any(v < 0 for v in values)
    if pos and neg:
        return 0
    if pos:
        return 1
    if neg:
        return -1
    return None


def _build_wedge(dec: CellDecomposition, gid: str, k: int) -> WedgeSweep:
    dirs = dec.critical[gid]
    n = len(dirs)
    d1, d2 = dirs[k], dirs[(k + 1) % n]
    tri = wedge_triangle(dec, gid, k)
    if tri is None:
        return WedgeSweep(gid, k, d1, d2, empty=True)
    g = tri[0]
    at = _scaler(dec)
    itri = [at(t) for t in tri]
    cells = frozenset(c.id for c in dec.cells if _in_triangle(at(c.sample), itri))
    evs = set()
    for v in dec.vertices:
        if v == g:
            continue
        dv = Direction.between(g, v)
        if strictly_ccw_between(d1, dv, d2) and _in_triangle(at(v), itri):
            evs.add(dv)
    events = sorted(evs, key=lambda d: ccw_rank(d1, d))
    bounds = [d1] + events + [d2]
    positions = []
    for i in range(len(bounds) - 1):
        positions.append(interior_direction(bounds[i], bounds[i + 1]))
        if i + 1 < len(bounds) - 1:
            positions.append(bounds[i + 1])
    wedge_portals = sorted({pid for c in cells for pid in dec.cell_portals[c]})
    pts = {v for c in cells for v in dec.cells[c].outer}
    pts |= {q for pid in wedge_portals for q in dec.portals[pid].carrier}
    gx, gy = itri[0]
    rel = {}
    for v in pts:
        x, y = at(v)
        rel[v] = (x - gx, y - gy)
    sides, portal_sides = [], []
    for theta in positions:
        tx, ty = theta[0], theta[1]

        def side(v):
            x, y = rel[v]
            c = tx * y - ty * x
            return (c > 0) - (c < 0)

        cs = {}
        for c in cells:
            cs[c] = _sign_of([side(v) for v in dec.cells[c].outer])
        straddle = {c for c, s in cs.items() if s == 0}
        ps = {}
        for pid in wedge_portals:
            p = dec.portals[pid]
            s = _sign_of([side(p.carrier.a), side(p.carrier.b)])
            if s is None or p.c1 in straddle or p.c2 in straddle:
                ps[pid] = s
        sides.append(cs)
        portal_sides.append(ps)
    return WedgeSweep(gid, k, d1, d2, False, cells, tuple(events), tuple(positions),
                      tuple(sides), tuple(portal_sides))


def laser_alignment_violations(dec: CellDecomposition) -> list:
    """(guard, direction) pairs whose critical laser crosses a cell interior."""
    piece_keys = {(p, q) for p, q, *_ in dec.pieces}
    bad = []
    for (gid, i), seg in dec.lasers.items():
        if seg is None:
            continue
        a, b = seg
        on = [v for v in dec.vertices if on_segment(v, a, b)]
        dx, dy = b[0] - a[0], b[1] - a[1]
        on.sort(key=lambda p: (p[0] - a[0]) * dx + (p[1] - a[1]) * dy)
        for p, q in zip(on, on[1:]):
            key = (p, q) if p < q else (q, p)
            if key not in piece_keys:
                bad.append((gid, dec.critical[gid][i]))
                break
    return bad


def never_visible_cells(dec: CellDecomposition) -> frozenset:
    """Cells whose interior sample no guard can see."""
    from .geometry import sees

    env = dec.instance.env
    return frozenset(
        c.id for c in dec.cells if not any(sees(g.position, c.sample, env) for g in dec.instance.guards)
    )
