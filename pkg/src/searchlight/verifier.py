"""Sampled continuous-time replay of a schedule against a fast intruder.

Free space is sampled on a square grid.  Each grid node inside the closed
region is a possible intruder position, and 4-neighbour links whose segment
stays in the region are the moves available to it.  Time is sampled along
every rotation.  At each sample the lasers catch the nodes they touch and
cut the links they cross, and contamination then spreads through everything
still connected.  Between two samples of a rotating laser, nodes inside the
triangle the laser provably swept are cleared.

This module shares only the geometry kernel with the planner.  An evasion
verdict carries a path traced through a log of contamination events, and a
clearance verdict is relative to the sampling resolution.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .environment import Instance
from .geometry import Direction, Location, Point, Segment, on_segment, orient, ray_stop, ring_location, sees, segment_intersection
from .planner import Schedule, Sense

log = logging.getLogger(__name__)

CLEARING_RULE = (
    "between samples, nodes in the triangle spanned by the guard and both "
    "laser ends on the wall hit at mid-rotation are cleared when that "
    "triangle holds no polygon vertex and both lasers reach the wall"
)


def _row_intervals(rings, y, axis):
    """Closed intervals of the line {coord[1-axis] == y} inside the region."""
    o = 1 - axis
    xs = []
    spans = []
    for ring in rings:
        n = len(ring)
        for i in range(n):
            a, b = ring[i], ring[(i + 1) % n]
            if a[o] == b[o]:
                if a[o] == y:
                    spans.append((min(a[axis], b[axis]), max(a[axis], b[axis])))
                continue
            lo, hi = (a, b) if a[o] < b[o] else (b, a)
            if lo[o] <= y < hi[o]:
                xs.append(lo[axis] + (y - lo[o]) * (hi[axis] - lo[axis]) / (hi[o] - lo[o]))
    xs.sort()
    spans += [(xs[i], xs[i + 1]) for i in range(0, len(xs) - 1, 2)]
    # points where the line touches the top of a ring (upper endpoints) are
    # missed by the half-open rule; they only matter as isolated nodes
    for ring in rings:
        n = len(ring)
        for i in range(n):
            v = ring[i]
            if v[o] == y:
                spans.append((v[axis], v[axis]))
    spans.sort()
    merged = []
    for lo, hi in spans:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged


def _in_spans(v, spans) -> int:
    for k, (lo, hi) in enumerate(spans):
        if lo <= v <= hi:
            return k
    return -1


@dataclass
class SampledFreeSpace:
    pitch: Fraction
    origin: Point
    nodes: set  # (i, j) grid indices, plus ("probe", k) for extra points
    hlinks: set  # (i, j) stands for the link (i, j) -- (i + 1, j)
    vlinks: set  # (i, j) stands for the link (i, j) -- (i, j + 1)
    probes: dict = field(default_factory=dict)  # probe node -> (point, [(corner point, key)])
    probe_adj: dict = field(default_factory=dict)  # node -> [(neighbour, key)] for probe links

    def point(self, node) -> Point:
        if node in self.probes:
            return self.probes[node][0]
        return Point(self.origin[0] + node[0] * self.pitch, self.origin[1] + node[1] * self.pitch)

    def to_grid(self, p):
        return ((Fraction(p[0]) - self.origin[0]) / self.pitch,
                (Fraction(p[1]) - self.origin[1]) / self.pitch)

    def neighbours(self, n):
        out = list(self.probe_adj.get(n, ()))
        if n[0] == "probe":
            return out
        i, j = n
        if n in self.hlinks:
            out.append(((i + 1, j), ("h", i, j)))
        if (i - 1, j) in self.hlinks:
            out.append(((i - 1, j), ("h", i - 1, j)))
        if n in self.vlinks:
            out.append(((i, j + 1), ("v", i, j)))
        if (i, j - 1) in self.vlinks:
            out.append(((i, j - 1), ("v", i, j - 1)))
        return out

    @property
    def n_edges(self) -> int:
        return len(self.hlinks) + len(self.vlinks) + sum(len(v) for v in self.probe_adj.values()) // 2


def _span_indices(lo, hi, base, pitch):
    return math.ceil((lo - base) / pitch), math.floor((hi - base) / pitch)


def sample_free_space(inst: Instance, pitch, probes=()) -> SampledFreeSpace:
    """Grid nodes and links inside the region.

    Each probe point becomes an extra node linked to the corners of its
    grid square that it sees.
    """
    pitch = Fraction(pitch)
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    env = inst.env
    x0, y0, x1, y1 = env.bbox()
    nx = math.floor((x1 - x0) / pitch)
    ny = math.floor((y1 - y0) / pitch)
    rings = env.rings
    nodes, hlinks, vlinks = set(), set(), set()
    for j in range(ny + 1):
        for lo, hi in _row_intervals(rings, y0 + j * pitch, 0):
            a, b = _span_indices(lo, hi, x0, pitch)
            nodes.update((i, j) for i in range(a, b + 1))
            hlinks.update((i, j) for i in range(a, b))
    for i in range(nx + 1):
        for lo, hi in _row_intervals(rings, x0 + i * pitch, 1):
            a, b = _span_indices(lo, hi, y0, pitch)
            vlinks.update((i, j) for j in range(a, b) if (i, j) in nodes and (i, j + 1) in nodes)
    space = SampledFreeSpace(pitch, Point(x0, y0), nodes, hlinks, vlinks)
    for k, p in enumerate(probes):
        p = Point(Fraction(p[0]), Fraction(p[1]))
        gx, gy = space.to_grid(p)
        if gx.denominator == 1 and gy.denominator == 1:
            if (int(gx), int(gy)) in nodes:
                space.probes[int(gx), int(gy)] = (p, [])
            continue
        node = ("probe", k)
        corners = {(i, j) for i in (math.floor(gx), math.ceil(gx)) for j in (math.floor(gy), math.ceil(gy))}
        links = []
        nodes.add(node)
        for c in sorted(corners):
            if c in nodes and sees(p, space.point(c), env):
                key = ("probe", k, c)
                links.append((space.point(c), key))
                space.probe_adj.setdefault(node, []).append((c, key))
                space.probe_adj.setdefault(c, []).append((node, key))
        space.probes[node] = (p, links)
    return space


def _common(*qs):
    d = 1
    for q in qs:
        d = d * q.denominator // math.gcd(d, q.denominator)
    return d, [int(q * d) for q in qs]


def _laser_hits(space: SampledFreeSpace, a, b):
    """Grid nodes on segment ab and grid links it crosses (grid units)."""
    (ax, ay), (bx, by) = space.to_grid(a), space.to_grid(b)
    L, (AX, AY, BX, BY) = _common(ax, ay, bx, by)
    nodes, links = set(), set()
    DX, DY = BX - AX, BY - AY
    if DY != 0:
        den = L * DY
        base = AX * DY - AY * DX
        if den < 0:
            den, base, sdx = -den, -base, -DX
        else:
            sdx = DX
        for j in range(-(-min(AY, BY) // L), max(AY, BY) // L + 1):
            num = base + j * L * sdx
            q, r = divmod(num, den)
            if r == 0:
                nodes.add((q, j))
            else:
                links.add(("h", q, j))
    elif AY % L == 0:
        j = AY // L
        lo, hi = min(AX, BX), max(AX, BX)
        for i in range(-(-lo // L), hi // L + 1):
            nodes.add((i, j))
        for i in range(lo // L, -(-hi // L)):
            links.add(("h", i, j))
    if DX != 0:
        den = L * DX
        base = AY * DX - AX * DY
        if den < 0:
            den, base, sdy = -den, -base, -DY
        else:
            sdy = DY
        for i in range(-(-min(AX, BX) // L), max(AX, BX) // L + 1):
            num = base + i * L * sdy
            q, r = divmod(num, den)
            if r == 0:
                nodes.add((i, q))
            else:
                links.add(("v", i, q))
    elif AX % L == 0:
        i = AX // L
        lo, hi = min(AY, BY), max(AY, BY)
        for j in range(-(-lo // L), hi // L + 1):
            nodes.add((i, j))
        for j in range(lo // L, -(-hi // L)):
            links.add(("v", i, j))
    for node, (p, plinks) in space.probes.items():
        if on_segment(p, a, b):
            nodes.add(node)
        for q, key in plinks:
            if segment_intersection(Segment(p, q), Segment(a, b)) is not None:
                links.add(key)
    return nodes, links


def _laser_end(inst, g, d):
    t = ray_stop(g, d, inst.env)
    if t is None:
        return None
    return Point(g[0] + t * d[0], g[1] + t * d[1])


def _waypoints(d_from, d_to, sense: Sense):
    """Directions splitting a rotation into pieces narrower than a half turn."""
    sign = 1 if sense is Sense.CCW else -1
    pts = [d_from]
    cur = d_from
    while True:
        c = cur[0] * d_to[1] - cur[1] * d_to[0]
        same = c == 0 and cur[0] * d_to[0] + cur[1] * d_to[1] > 0
        if same and len(pts) > 1:
            break
        if c * sign > 0:
            pts.append(d_to)
            break
        cur = (-sign * cur[1], sign * cur[0])
        pts.append(cur)
    if pts[-1] != tuple(d_to):
        pts[-1] = d_to
    return pts


def rotation_samples(d_from, d_to, sense: Sense, steps: int, extra=()):
    """Sampled directions along a rotation, chord-interpolated.

    Directions in ``extra`` that fall strictly inside the swept sector are
    inserted in rotation order as additional samples.
    """
    if tuple(d_from) == tuple(d_to):
        return [Direction(*d_from)]
    out = [Direction(*d_from)]
    wps = _waypoints(d_from, d_to, sense)
    sign = 1 if sense is Sense.CCW else -1
    for u, v in zip(wps, wps[1:]):
        keyed = {}
        for s in range(1, steps + 1):
            keyed[Direction(u[0] * (steps - s) + v[0] * s, u[1] * (steps - s) + v[1] * s)] = Fraction(s, steps)
        for w in extra:
            cu = u[0] * w[1] - u[1] * w[0]
            cv = w[0] * v[1] - w[1] * v[0]
            if cu * sign > 0 and cv * sign > 0:
                # chord parameter of w on the segment from u to v
                lam = Fraction(cu, cu + cv)
                keyed.setdefault(Direction(*w), lam)
        out.extend(sorted(keyed, key=keyed.get))
    return out


def _swept_nodes(inst, space, g, u, v):
    """Nodes provably swept by a laser turning from u to v (narrow turn)."""
    m = (u[0] + v[0], u[1] + v[1])
    end_m = _laser_end(inst, g, m)
    if end_m is None:
        return ()
    wall = None
    for a, b in inst.env.edges:
        if orient(a, b, end_m) == 0 and min(a[0], b[0]) <= end_m[0] <= max(a[0], b[0]) \
                and min(a[1], b[1]) <= end_m[1] <= max(a[1], b[1]):
            wall = (a, b)
            break
    if wall is None:
        return ()
    a, b = wall
    corners = []
    for d in (u, v):
        ex, ey = b[0] - a[0], b[1] - a[1]
        den = d[0] * ey - d[1] * ex
        if den == 0:
            return ()
        t = ((a[0] - g[0]) * ey - (a[1] - g[1]) * ex) / den
        s = ((a[0] - g[0]) * d[1] - (a[1] - g[1]) * d[0]) / den
        if t <= 0 or not 0 <= s <= 1:
            return ()
        stop = ray_stop(g, d, inst.env)
        if stop is None or stop < t:
            return ()
        corners.append(Point(g[0] + t * d[0], g[1] + t * d[1]))
    tri = (Point(*g), corners[0], corners[1])
    if orient(*tri) == 0:
        return ()
    bx0, bx1 = min(p[0] for p in tri), max(p[0] for p in tri)
    by0, by1 = min(p[1] for p in tri), max(p[1] for p in tri)
    for p in inst.env.vertices:
        if bx0 < p[0] < bx1 and by0 < p[1] < by1 and _strictly_inside(p, tri):
            return ()
    gx = [Point(*space.to_grid(p)) for p in tri]
    sides = list(zip(gx, gx[1:] + gx[:1]))
    out = []
    nodes = space.nodes
    for i in range(math.ceil(min(p[0] for p in gx)), math.floor(max(p[0] for p in gx)) + 1):
        ys = []
        for p, q in sides:
            if p[0] == q[0]:
                if p[0] == i:
                    ys += [p[1], q[1]]
            elif min(p[0], q[0]) <= i <= max(p[0], q[0]):
                ys.append(p[1] + (i - p[0]) * (q[1] - p[1]) / (q[0] - p[0]))
        if not ys:
            continue
        for j in range(math.ceil(min(ys)), math.floor(max(ys)) + 1):
            if (i, j) in nodes:
                out.append((i, j))
    return out


def _strictly_inside(p, tri) -> bool:
    s = [orient(tri[0], tri[1], p), orient(tri[1], tri[2], p), orient(tri[2], tri[0], p)]
    return all(x > 0 for x in s) or all(x < 0 for x in s)


@dataclass
class VerificationReport:
    verdict: str  # "NoEvasionFound" or "EvasionFound"
    path: list  # [(sample index, Point)], earliest first
    final_contaminated: frozenset
    pitch: Fraction
    steps_per_move: int
    samples: int
    nodes: int
    goal_nodes: int
    warnings: list = field(default_factory=list)
    clearing_rule: str = CLEARING_RULE

    @property
    def evasion(self) -> bool:
        return self.verdict == "EvasionFound"

    def summary(self) -> str:
        lines = [
            f"verdict: {self.verdict}",
            f"pitch: {self.pitch}",
            f"steps per move: {self.steps_per_move}",
            f"time samples: {self.samples}",
            f"free-space nodes: {self.nodes}",
            f"goal nodes: {self.goal_nodes}",
            f"contaminated at end: {len(self.final_contaminated)}",
            f"clearing rule: {self.clearing_rule}",
            "verdicts of no evasion hold at this resolution only",
        ]
        for w in self.warnings:
            lines.append(f"warning: {w}")
        if self.path:
            lines.append("evasion path (sample: x, y):")
            for s, p in self.path:
                lines.append(f"  {s}: {p.x}, {p.y}")
        return "\n".join(lines) + "\n"


def default_pitch(inst: Instance) -> Fraction:
    shortest = None
    for a, b in inst.env.edges:
        d2 = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
        if shortest is None or d2 < shortest:
            shortest = d2
    # largest power of two not exceeding the shortest edge length, over 8
    f = Fraction(shortest)
    k = 0
    while Fraction(4) ** k > f:
        k -= 1
    while Fraction(4) ** (k + 1) <= f:
        k += 1
    return Fraction(2) ** k / 8


def goal_nodes(inst: Instance, space: SampledFreeSpace) -> set:
    t = inst.target
    if t.mode == "whole":
        return set(space.nodes)
    if t.mode == "point":
        return {n for n, (p, _) in space.probes.items() if p == t.point}
    ring = list(t.polygon)
    x0, y0 = space.origin
    ys = [p[1] for p in ring]
    out = set()
    lo_j, hi_j = _span_indices(min(ys), max(ys), y0, space.pitch)
    for j in range(lo_j, hi_j + 1):
        for lo, hi in _row_intervals([ring], y0 + j * space.pitch, 0):
            a, b = _span_indices(lo, hi, x0, space.pitch)
            out.update(n for n in ((i, j) for i in range(a, b + 1)) if n in space.nodes)
    for n, (p, _) in space.probes.items():
        if n[0] == "probe" and ring_location(p, ring) is not Location.OUTSIDE:
            out.add(n)
    return out


def _visible_vertices(inst, g):
    """Directions from g to the polygon vertices it sees."""
    out = []
    for p in inst.env.vertices:
        if p == g:
            continue
        d = Direction.between(g, p)
        t = ray_stop(g, d, inst.env)
        if t is not None and t * (d[0] ** 2 + d[1] ** 2) >= (p[0] - g[0]) * d[0] + (p[1] - g[1]) * d[1]:
            out.append(d)
    return out


def simulate(
    inst: Instance,
    schedule: Schedule,
    pitch=None,
    steps_per_move: int = 16,
    space: Optional[SampledFreeSpace] = None,
) -> VerificationReport:
    """Replay ``schedule`` on a sampled free space.

    Besides the ``steps_per_move`` chord samples, every rotation is also
    sampled at the directions of the polygon vertices its guard sees, so
    that consecutive lasers always end on a common wall.
    """
    if steps_per_move < 2:
        raise ValueError("need at least two time steps per move")
    schedule.check_chain()
    ids = inst.guard_ids
    if sorted(ids) != sorted(schedule.guards):
        raise ValueError("schedule guards do not match the instance")
    pitch = Fraction(pitch) if pitch is not None else default_pitch(inst)
    space = space or sample_free_space(inst, pitch, _probes(inst))
    pos = {g.id: g.position for g in inst.guards}
    goal = goal_nodes(inst, space)
    warnings = []
    if not goal:
        warnings.append("no grid node falls in the goal; refine the pitch")

    vis = {}
    sweeps = []
    for m in schedule.moves:
        if m.guard not in vis:
            vis[m.guard] = _visible_vertices(inst, pos[m.guard])
        d_from = schedule.direction(m.guard, m.from_index)
        d_to = schedule.direction(m.guard, m.to_index)
        dirs = rotation_samples(d_from, d_to, m.sense, steps_per_move, vis[m.guard])
        sweeps.extend((m.guard, u, v) for u, v in zip(dirs, dirs[1:]))

    hitc, linkc, laser = {}, {}, {}

    def aim(gid, d):
        end = _laser_end(inst, pos[gid], d)
        new = _laser_hits(space, pos[gid], end) if end is not None else (set(), set())
        old = laser.get(gid, (set(), set()))
        laser[gid] = new
        for n in new[0]:
            hitc[n] = hitc.get(n, 0) + 1
        for k in new[1]:
            linkc[k] = linkc.get(k, 0) + 1
        released, unblocked = [], []
        for n in old[0]:
            c = hitc[n] - 1
            if c:
                hitc[n] = c
            else:
                del hitc[n]
                released.append(n)
        for k in old[1]:
            c = linkc[k] - 1
            if c:
                linkc[k] = c
            else:
                del linkc[k]
                unblocked.append(k)
        return new[0], released, unblocked

    # event log: event id -> (node, sample, parent event id)
    grid = sorted(n for n in space.nodes if n[0] != "probe")
    grid += sorted((n for n in space.nodes if n[0] == "probe"), key=lambda n: n[1])
    events = [(n, 0, None) for n in grid]
    owner = {n: k for k, n in enumerate(grid)}
    for gid in ids:
        hit, _, _ = aim(gid, schedule.direction(gid, schedule.start[gid]))
        for n in hit:
            owner.pop(n, None)

    for s, (gid, u, v) in enumerate(sweeps, start=1):
        hit, released, unblocked = aim(gid, v)
        for n in hit:
            owner.pop(n, None)
        swept = _swept_nodes(inst, space, pos[gid], u, v)
        for n in swept:
            owner.pop(n, None)
        seeds = []
        for group in (released, swept):
            for n in group:
                if n in hitc:
                    continue
                for m, key in space.neighbours(n):
                    if key not in linkc and m in owner:
                        seeds.append(m)
        for key in unblocked:
            for n in _link_ends(key):
                if n in owner:
                    seeds.append(n)
        queue = deque(seeds)
        while queue:
            n = queue.popleft()
            for m, key in space.neighbours(n):
                if m in owner or m in hitc or key in linkc:
                    continue
                owner[m] = len(events)
                events.append((m, s, owner[n]))
                queue.append(m)

    bad = sorted((n for n in goal if n in owner), key=str)
    path = []
    if bad:
        e = owner[bad[0]]
        while e is not None:
            n, s, parent = events[e]
            path.append((s, space.point(n)))
            e = parent
        path.reverse()
    return VerificationReport(
        "EvasionFound" if bad else "NoEvasionFound",
        path,
        frozenset(owner),
        pitch,
        steps_per_move,
        len(sweeps) + 1,
        len(space.nodes),
        len(goal),
        warnings,
    )


def _probes(inst: Instance):
    return [inst.target.point] if inst.target.mode == "point" else []


def _link_ends(key):
    if key[0] == "probe":
        return (("probe", key[1]), key[2])
    kind, i, j = key
    return ((i, j), (i + 1, j)) if kind == "h" else ((i, j), (i, j + 1))


def check_time_reversal(inst: Instance, schedule: Schedule, pitch=None, steps_per_move: int = 16):
    pitch = Fraction(pitch) if pitch is not None else default_pitch(inst)
    space = sample_free_space(inst, pitch, _probes(inst))
    fwd = simulate(inst, schedule, pitch, steps_per_move, space)
    back = simulate(inst, schedule.reversed(), pitch, steps_per_move, space)
    return fwd, back
