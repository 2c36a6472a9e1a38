"""Structural checks on a reducer output.

Each check recomputes its facts from the instance geometry (ray casting
and visibility) rather than trusting the layout code, and reports a
concrete witness when it fails.
"""
from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field
from fractions import Fraction

from ..geometry import Direction, Point, Segment, max_visible_segment, on_segment, orient, sees, \
    segment_intersection
from .metadata import GadgetMetadata, NookInfo


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class CheckReport:
    results: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def failures(self) -> list:
        return [r for r in self.results if not r.ok]

    def add(self, name, ok, detail=""):
        self.results.append(CheckResult(name, bool(ok), detail))

    def summary(self) -> str:
        lines = [f"{'PASS' if r.ok else 'FAIL'} {r.name}" + (f": {r.detail}" if r.detail else "")
                 for r in self.results]
        lines.append(f"{len(self.results) - len(self.failures)}/{len(self.results)} checks passed")
        return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ visibility helpers


def _ray_hits_line(g, v, a, b):
    """Parameter along a->b where the ray g->v crosses it, or None."""
    dx, dy = v[0] - g[0], v[1] - g[1]
    ex, ey = b[0] - a[0], b[1] - a[1]
    den = dx * ey - dy * ex
    if den == 0:
        return None
    t = ((a[0] - g[0]) * ey - (a[1] - g[1]) * ex) / den
    s = ((a[0] - g[0]) * dy - (a[1] - g[1]) * dx) / den
    return s if t > 0 else None


def visible_point_on(g: Point, seg: Segment, env):
    """Some point of ``seg`` that ``g`` sees, or None (exact).

    Visibility along the segment only changes where a ray from g through
    a polygon vertex meets it or where a polygon edge crosses it, so testing
    those parameters and the midpoints between them decides the question.
    """
    a, b = seg
    ts = {Fraction(0), Fraction(1)}
    for v in env.vertices:
        s = _ray_hits_line(g, v, a, b)
        if s is not None and 0 <= s <= 1:
            ts.add(s)
    for p, q in env.edges:
        x = segment_intersection(Segment(a, b), Segment(p, q))
        if isinstance(x, Point):
            ts.add(_param(a, b, x))
        elif isinstance(x, Segment):
            ts.update((_param(a, b, x.a), _param(a, b, x.b)))
    ts = sorted(ts)
    probes = ts + [(u + v) / 2 for u, v in zip(ts, ts[1:])]
    for t in probes:
        p = Point(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
        if p != g and sees(g, p, env):
            return p
    return None


def _param(a, b, p):
    if b.x != a.x:
        return (p.x - a.x) / (b.x - a.x)
    return (p.y - a.y) / (b.y - a.y)


def nook_seen_by(g: Point, nook: NookInfo, env):
    """A point of the nook's bottom that g sees, or None."""
    m = nook.mouth
    side = orient(m.a, m.b, nook.window.a)   # side of the mouth line where the nook lies
    if orient(m.a, m.b, g) == side or orient(m.a, m.b, g) == 0:
        return None
    r = nook.bottom
    c = r.corners()
    if _enclosed(nook, env) and not _cone_meet(g, m, nook.window, c):
        return None
    for i in range(4):
        p = visible_point_on(g, Segment(c[i], c[(i + 1) % 4]), env)
        if p is not None:
            return p
    return None


def _in_cone(g, d, p, q):
    """Is direction d within the closed cone from g over segment pq?"""
    ux, uy, vx, vy = p[0] - g[0], p[1] - g[1], q[0] - g[0], q[1] - g[1]
    if ux * vy - uy * vx < 0:
        ux, uy, vx, vy = vx, vy, ux, uy
    return ux * d[1] - uy * d[0] >= 0 and d[0] * vy - d[1] * vx >= 0 and ux * d[0] + uy * d[1] + vx * d[0] + vy * d[1] > 0


def _covered(a, b, env) -> bool:
    """Is segment ab (axis-parallel) covered by polygon edges?"""
    ax = 0 if a[1] == b[1] else 1          # coordinate that varies
    fixed = a[1 - ax]
    lo, hi = sorted((a[ax], b[ax]))
    spans = sorted(sorted((p[ax], q[ax])) for p, q in env.edges
                   if p[1 - ax] == fixed and q[1 - ax] == fixed)
    reach = lo
    for s0, s1 in spans:
        if s0 > reach:
            break
        reach = max(reach, s1)
    return reach >= hi


def _enclosed(nook: NookInfo, env) -> bool:
    """Are the nook's walls (everything but its mouth) part of the polygon boundary?"""
    neck, cavity = nook.rects
    w = nook.window
    pieces = []
    nc = neck.corners()
    for i in range(4):
        p, q = nc[i], nc[(i + 1) % 4]
        if {p, q} not in ({nook.mouth.a, nook.mouth.b}, {w.a, w.b}):
            pieces.append((p, q))
    cc = cavity.corners()
    for i in range(4):
        p, q = cc[i], cc[(i + 1) % 4]
        if on_segment(w.a, p, q) and on_segment(w.b, p, q):
            # drop the window from this side
            ax = 0 if p.y == q.y else 1
            ends = sorted([p, q, w.a, w.b], key=lambda r: r[ax])
            pieces += [(ends[0], ends[1]), (ends[2], ends[3])]
        else:
            pieces.append((p, q))
    return all(_covered(p, q, env) for p, q in pieces if p != q)


def _cone_meet(g, mouth, window, corners):
    """Can a single ray from g pass the mouth, the window and the bottom rectangle?

    Each of the three cones is narrower than a half turn, so if they share
    a direction they share one on some cone boundary.
    """
    targets = [mouth.a, mouth.b, window.a, window.b] + list(corners)
    n = len(corners)
    for t in targets:
        d = (t[0] - g[0], t[1] - g[1])
        if d == (0, 0):
            continue
        if not (_in_cone(g, d, mouth.a, mouth.b) and _in_cone(g, d, window.a, window.b)):
            continue
        if any(_in_cone(g, d, corners[i], corners[j]) for i in range(n) for j in range(i + 1, n)):
            return True
    return False


def _laser(inst, gid, d):
    return max_visible_segment(inst.guard(gid).position, d, inst.env)


def bit_length(q: Fraction) -> int:
    q = Fraction(q)
    return abs(q.numerator).bit_length() + q.denominator.bit_length()


BIT_CONSTANT = 4
BIT_OFFSET = 16


def bit_bound(n_edges: int) -> float:
    """Allowed bits per coordinate: BIT_CONSTANT * (|E| log2(|E|+1) + BIT_OFFSET)."""
    return BIT_CONSTANT * (n_edges * math.log2(n_edges + 1) + BIT_OFFSET)


# ------------------------------------------------------------------ the checks


def _nooks(meta: GadgetMetadata):
    for pid, p in meta.pipes.items():
        if p.nook is not None:
            yield f"pipe {pid}", p.nook
    for name, nk in meta.room.nooks.items():
        yield f"room nook {name}", nk


def check_nooks(inst, meta, report):
    for label, nk in _nooks(meta):
        seen = None
        for g in inst.guards:
            p = nook_seen_by(g.position, nk, inst.env)
            if p is not None:
                seen = f"guard {g.id} sees {p}"
                break
        report.add(f"nook invisible ({label})", seen is None, seen or "")


def check_pipe_kernels(inst, meta, report):
    for pid, p in meta.pipes.items():
        if not p.channel:
            continue
        g = inst.guard(p.guard).position
        ring = p.channel
        bad = [(a, b) for a, b in zip(ring, ring[1:] + ring[:1]) if orient(a, b, g) < 0]
        report.add(f"pipe guard sees its whole channel ({pid})", not bad,
                   f"guard {p.guard} is outside the half-plane of channel edge {bad[0]}" if bad else "")


def check_intersections(inst, meta, report):
    ids = set(inst.guard_ids)
    for x in meta.crossings:
        problems = []
        for gid, d, gap in zip(x.guards, x.directions, x.gaps):
            if gid not in ids:
                problems.append(f"intersection guard {gid} is missing")
                continue
            g = inst.guard(gid)
            if g.pinned_start != d:
                problems.append(f"{gid} is not pinned to {d}")
                continue
            seg = _laser(inst, gid, d)
            if seg is None or not (on_segment(gap.a, seg.a, seg.b) and on_segment(gap.b, seg.a, seg.b)):
                problems.append(f"laser of {gid} does not span {gap}")
        report.add(f"intersection separated ({x.id}: {x.pipe} x {x.corridor})", not problems, "; ".join(problems))


def check_crossing_blindness(inst, meta, report):
    """No subsegment guard sees through a corridor it crosses."""
    subs = [(e, s) for e, c in meta.corridors.items() for s in c.subsegments]
    for e1, s1 in subs:
        g = inst.guard(s1.guard).position
        for e2, s2 in subs:
            if e2 == e1:
                continue
            if segment_intersection(Segment(s1.a, s1.b), Segment(s2.a, s2.b)) is None:
                continue
            far = [p for p in (s2.a, s2.b, inst.guard(s2.guard).position) if sees(g, p, inst.env)]
            report.add(f"crossing blind ({s1.guard} across edge {e2})", not far,
                       f"sees {far[0]}" if far else "")
    for x in meta.crossings:
        p = meta.pipes[x.pipe]
        e2 = int(x.corridor[1:])
        mid = (p.column[0] + p.column[1]) / 2
        ys = sorted(q.y for gap in x.gaps for q in gap)
        w = p.column[1] - p.column[0]
        beyond = [Point(mid, ys[0] - w), Point(mid, ys[-1] + w)]
        for s in meta.corridors[e2].subsegments:
            g = inst.guard(s.guard).position
            far = [q for q in beyond if sees(g, q, inst.env)]
            if far or segment_intersection(Segment(s.a, s.b), Segment(beyond[0], beyond[1])) is not None:
                report.add(f"crossing blind ({s.guard} across pipe {x.pipe})", not far,
                           f"sees {far[0]}" if far else "")


def _inside_pipe(pt, p, meta):
    x0, x1 = p.column
    return x0 <= pt.x <= x1 and pt.y <= p.upper_mouth.a.y


def _nook_floor(p):
    if p.nook is None:
        return None
    return min(min(r.y0 for r in p.nook.rects), p.nook.mouth.a.y, p.nook.mouth.b.y)


def check_caps(inst, meta, report):
    """Every cap laser crosses the pipe's lower mouth and ends inside it below the nook."""
    for pid, p in meta.pipes.items():
        for gid, d in p.caps:
            seg = _laser(inst, gid, d)
            problems = []
            if seg is None:
                problems.append("empty laser")
            else:
                m = p.lower_mouth
                if segment_intersection(seg, m) is None:
                    problems.append(f"laser {seg} misses the mouth {m}")
                end = seg.b
                floor = _nook_floor(p)
                if p.kind == "straight":
                    if not (p.column[0] <= end.x <= p.column[1] and end.y > m.a.y):
                        problems.append(f"laser ends at {end}, outside the pipe")
                else:
                    lo = min(m.a.y, m.b.y)
                    if not (min(p.column[0], m.a.x) <= end.x <= max(p.column[1], m.a.x) and end.y >= lo):
                        problems.append(f"laser ends at {end}, outside the pipe")
                if floor is not None and end.y >= floor:
                    problems.append(f"laser ends at {end}, at or above the nook")
            report.add(f"cap reaches pipe ({gid} -> {pid})", not problems, "; ".join(problems))


def check_d_caps(inst, meta, report):
    """d's cap of each left pipe passes its upper corner and meets the far wall above every opening."""
    room = meta.room
    for pid, d in room.d_caps:
        p = meta.pipes[pid]
        seg = _laser(inst, meta.special["d"], d)
        ok = seg is not None and seg.b.x == p.column[1] and seg.b.y < p.upper_mouth.a.y
        report.add(f"d caps pipe {pid}", ok, "" if ok else f"laser {seg}")
        if not ok:
            continue
        ok = on_segment(p.upper_mouth.a, seg.a, seg.b)
        report.add(f"d's cap of {pid} passes its upper corner", ok, "" if ok else f"laser {seg}")
        openings = [max(r.y1 for r in p.nook.rects)] if p.nook else []
        openings += [max(gap.a.y, gap.b.y) for x in meta.crossings if x.pipe == pid for gap in x.gaps]
        low = max(openings, default=None)
        ok = low is None or seg.b.y > low
        report.add(f"d's cap of {pid} seals above the pipe's openings", ok,
                   "" if ok else f"laser ends at {seg.b}, not above {low}")


def check_j(inst, meta, report):
    room = meta.room
    j = inst.guard(meta.special["j"])
    seg = _laser(inst, j.id, j.pinned_start) if j.pinned_start else None
    ok = seg is not None and seg.b.y == room.floor_right and seg.b.x == room.x_split
    report.add("j separates the two room parts", ok, "" if ok else f"laser {seg}")


def check_vertex_gadgets(inst, meta, report):
    for v, vi in meta.vertices.items():
        if vi.kind == "OR":
            # the nook of the OR pipe must be recontaminating unless some cap is present
            p = meta.pipes[vi.pipes[0]]
            floor = _nook_floor(p)
            ok = floor is not None and floor > p.lower_mouth.a.y
            report.add(f"OR nook above every cap (vertex {v})", ok)
            continue
        c = vi.c_guard
        east, west = _laser(inst, c, vi.c_east), _laser(inst, c, vi.c_west)
        by_name = {pid.split(".")[-1]: meta.pipes[pid] for pid in vi.pipes}
        for name, seg in (("P1", east), ("P2", east), ("P3", west)):
            m = by_name[name].lower_mouth
            ok = seg is not None and on_segment(m.a, seg.a, seg.b) and on_segment(m.b, seg.a, seg.b)
            report.add(f"AND cover guard spans {name} (vertex {v})", ok, "" if ok else f"laser {seg}")
        for name in ("P1", "P2"):
            m = by_name[name].lower_mouth
            ok = west is None or segment_intersection(west, m) is None
            report.add(f"AND cover guard's other side misses {name} (vertex {v})", ok)


def check_staircase(inst, meta, report):
    room = meta.room
    d = inst.guard(meta.special["d"]).position
    steps = room.steps
    heights = [h for _, h in steps]
    ok = all(a < b for a, b in zip(heights, heights[1:])) and heights[-1] < room.target_low
    report.add("staircase rises left to right below the target", ok, "" if ok else str(heights))
    prev_shadow = None
    for pid, s in steps:
        p = meta.pipes[pid]
        x0, x1 = p.column
        if prev_shadow is not None:
            # where d's cap line through the upper-left corner meets the target's lower border
            cross_x = d.x + (x0 - d.x) * (d.y - room.target_low) / (d.y - s)
            ok = cross_x > prev_shadow
            report.add(f"d's cap of {pid} clears the previous pipe's light", ok,
                       "" if ok else f"crosses at {cross_x}, shadow at {prev_shadow}")
        g = inst.guard(p.guard).position
        reach = []
        for cx in (x0, x1):
            dirn = Direction(cx - g.x, s - g.y)
            seg = max_visible_segment(g, dirn, inst.env)
            if seg is not None and seg.b.y >= room.target_low:
                t = (room.target_low - g.y) / (seg.b.y - g.y)
                reach.append(g.x + t * (seg.b.x - g.x))
        prev_shadow = max(reach) if reach else x1
    dirs = [dd for _, dd in room.d_caps]
    ok = all(orient((0, 0), b, a) > 0 for a, b in zip(dirs, dirs[1:]))
    report.add("d's caps are in clockwise order", ok)


def check_bits(inst, meta, report, n_edges):
    worst = 0
    where = None
    pts = list(inst.env.vertices) + [g.position for g in inst.guards] + list(inst.target.polygon)
    for p in pts:
        for c in p:
            b = bit_length(c)
            if b > worst:
                worst, where = b, p
    for g in inst.guards:
        if g.pinned_start is not None:
            for c in g.pinned_start:
                worst = max(worst, bit_length(Fraction(c)))
    bound = bit_bound(n_edges)
    report.add("coordinate bit length within bound", worst <= bound,
               f"max {worst} bits at {where}, bound {bound:.1f}")


_FAMILIES = (check_nooks, check_pipe_kernels, check_intersections, check_crossing_blindness, check_caps,
             check_d_caps, check_j, check_vertex_gadgets, check_staircase, check_bits)
_SHARED = None


def _run_family(k, out=None):
    out = out if out is not None else _SHARED
    report = CheckReport()
    fam = _FAMILIES[k]
    if fam is check_bits:
        fam(out.instance, out.metadata, report, out.eencl.machine.n_edges)
    else:
        fam(out.instance, out.metadata, report)
    return report.results


def structural_checks(out, jobs: int = 1) -> CheckReport:
    """Run every structural check on a ReductionOutput.

    With ``jobs > 1`` the check families run in forked worker processes;
    results are merged in the same fixed order either way.
    """
    global _SHARED
    report = CheckReport()
    if jobs <= 1 or "fork" not in multiprocessing.get_all_start_methods():
        parts = [_run_family(k, out) for k in range(len(_FAMILIES))]
    else:
        _SHARED = out
        try:
            with multiprocessing.get_context("fork").Pool(min(jobs, len(_FAMILIES))) as pool:
                parts = pool.map(_run_family, range(len(_FAMILIES)))
        finally:
            _SHARED = None
    for part in parts:
        report.results.extend(part)
    return report
