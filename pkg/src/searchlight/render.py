"""SVG renderings of instances, decompositions and schedules.

Coordinates are exact until this point; they are printed as decimals with
``precision`` digits after the point.  The y axis is flipped so that the
picture has y pointing up.
"""
from __future__ import annotations

from fractions import Fraction
from xml.sax.saxutils import escape

from .environment import Instance
from .geometry import max_visible_segment
from .planner import Schedule

_LASER = "#d62728"
_GUARD = "#1f77b4"


class _Canvas:
    def __init__(self, inst: Instance, precision: int, size: int = 800):
        x0, y0, x1, y1 = inst.env.bbox()
        span = max(x1 - x0, y1 - y0) or Fraction(1)
        self.pad = span / 20
        self.x0, self.y1 = x0 - self.pad, y1 + self.pad
        self.w, self.h = x1 - x0 + 2 * self.pad, y1 - y0 + 2 * self.pad
        self.scale = Fraction(size) / max(self.w, self.h)
        self.precision = precision
        self.items = []

    def num(self, v) -> str:
        return f"{float(v):.{self.precision}f}"

    def xy(self, p) -> str:
        return f"{self.num((p[0] - self.x0) * self.scale)},{self.num((self.y1 - p[1]) * self.scale)}"

    def path(self, rings, **style):
        d = " ".join("M " + " L ".join(self.xy(p) for p in ring) + " Z" for ring in rings if ring)
        self.items.append(f'<path d="{d}" {_style(style)}/>')

    def line(self, a, b, **style):
        (ax, ay), (bx, by) = self.xy(a).split(","), self.xy(b).split(",")
        self.items.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" {_style(style)}/>')

    def dot(self, p, r=3, **style):
        x, y = self.xy(p).split(",")
        self.items.append(f'<circle cx="{x}" cy="{y}" r="{r}" {_style(style)}/>')

    def text(self, p, s, size=10, **style):
        x, y = self.xy(p).split(",")
        self.items.append(f'<text x="{x}" y="{y}" font-size="{size}" {_style(style)}>{escape(s)}</text>')

    def svg(self, title="") -> str:
        w, h = self.num(self.w * self.scale), self.num(self.h * self.scale)
        head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">'
        t = f"<title>{escape(title)}</title>" if title else ""
        return "\n".join([head, t, '<rect width="100%" height="100%" fill="white"/>', *self.items, "</svg>"]) + "\n"


def _style(style) -> str:
    return " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in style.items())


def _base(inst: Instance, precision: int, labels: bool = True) -> _Canvas:
    c = _Canvas(inst, precision)
    c.path([inst.env.outer, *inst.env.holes], fill="#f2f2f2", stroke="black", stroke_width=1,
           fill_rule="evenodd")
    if inst.target.mode == "region":
        c.path([inst.target.polygon], fill="#9ecae1", fill_opacity=0.5, stroke="#3182bd")
    elif inst.target.mode == "point":
        c.dot(inst.target.point, r=4, fill="#3182bd")
    for g in inst.guards:
        c.dot(g.position, fill=_GUARD)
        if labels:
            c.text(g.position, g.id, size=8, fill=_GUARD)
    return c


def _lasers(c: _Canvas, inst: Instance, directions: dict):
    for gid, d in directions.items():
        seg = max_visible_segment(inst.guard(gid).position, d, inst.env)
        if seg is not None:
            c.line(seg.a, seg.b, stroke=_LASER, stroke_width=1.5)


def render_instance(inst: Instance, precision: int = 3, directions=None, contaminated_points=(),
                    labels: bool = True) -> str:
    """Polygon, holes, target and guards; lasers for any given directions."""
    c = _base(inst, precision, labels)
    if directions:
        _lasers(c, inst, directions)
    for p in contaminated_points:
        c.dot(p, r=1, fill="#ff7f0e")
    return c.svg("instance")


def render_decomposition(dec, precision: int = 3) -> str:
    """Cells outlined, critical rays drawn, cell ids at their sample points."""
    inst = dec.instance
    c = _base(inst, precision)
    for cell in dec.cells:
        c.path([cell.outer, *cell.holes], fill="none", stroke="#888888", stroke_width=0.5)
        c.text(cell.sample, str(cell.id), size=7, fill="#555555")
    for (gid, _), seg in dec.lasers.items():
        if seg is not None:
            c.line(seg.a, seg.b, stroke=_LASER, stroke_width=0.5, stroke_dasharray="3,2")
    return c.svg("cell decomposition")


def render_schedule(inst: Instance, schedule: Schedule, precision: int = 3) -> list:
    """One frame per state: the start, then the state after each move."""
    cur = {g: schedule.direction(g, schedule.start[g]) for g in schedule.guards}
    frames = []
    for k in range(len(schedule.moves) + 1):
        if k:
            m = schedule.moves[k - 1]
            cur[m.guard] = schedule.direction(m.guard, m.to_index)
        c = _base(inst, precision, labels=False)
        _lasers(c, inst, cur)
        title = "start" if k == 0 else f"after move {k}: {schedule.moves[k - 1].guard}"
        x0, _, _, y1 = inst.env.bbox()
        c.text((x0, y1 + c.pad / 2), title, size=12)
        frames.append(c.svg(title))
    return frames


def render_metadata(inst: Instance, meta, precision: int = 3) -> str:
    """Instance with pipe channels and nooks highlighted and starting lasers of pinned guards."""
    c = _base(inst, precision)
    for p in meta.pipes.values():
        if p.channel:
            c.path([p.channel], fill="#c7e9c0", stroke="none")
        if p.nook is not None:
            for r in p.nook.rects:
                c.path([r.corners()], fill="#fdae6b", stroke="none")
    for nk in meta.room.nooks.values():
        for r in nk.rects:
            c.path([r.corners()], fill="#fdae6b", stroke="none")
    _lasers(c, inst, {g.id: g.pinned_start for g in inst.guards if g.pinned_start is not None})
    return c.svg("reduction")
