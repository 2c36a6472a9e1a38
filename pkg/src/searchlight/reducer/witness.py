"""Turn an EE-NCL solution into a searchlight schedule for the reduced instance."""
from __future__ import annotations

from ..geometry import Direction
from ..ncl import MoveSeq, Orientation
from ..planner import Move, Schedule, Sense

F = Orientation.TO_FIRST


class _Plan:
    def __init__(self, guards):
        self.critical = {}
        self.start = {}
        self.cur = {}
        self.moves = []
        self.guards = guards

    def guard(self, gid, dirs, start):
        self.critical[gid] = list(dirs)
        self.start[gid] = self.cur[gid] = start

    def turn(self, gid, to, sense: str):
        n = len(self.critical[gid])
        frm = self.cur[gid]
        if frm == to:
            return
        step = 1 if sense == "CCW" else -1
        if (frm + step) % n != to:
            raise ValueError(f"guard {gid}: {frm}->{to} is not a single {sense} step")
        self.moves.append(Move(gid, frm, to, Sense(sense)))
        self.cur[gid] = to

    def schedule(self) -> Schedule:
        return Schedule(list(self.guards), self.critical, self.start, self.moves)


def _check_solution(eencl, sol: MoveSeq):
    m = eencl.machine
    if len(sol.initial) != m.n_edges:
        raise ValueError("solution does not orient every edge")
    if not sol.all_legal(m):
        raise ValueError("solution passes through an illegal configuration")
    if sol.initial[eencl.e_a] != eencl.target_a:
        raise ValueError("solution must start with e_a in its target orientation")
    if sol.final()[eencl.e_b] != eencl.target_b:
        raise ValueError("solution must end with e_b in its target orientation")
    for k, e in enumerate(sol.moves):
        if not 0 <= e < m.n_edges:
            raise ValueError(f"move {k} names unknown edge {e}")
        if e == eencl.e_a and k != 0:
            raise ValueError("e_a may only be reversed as the first move")
        if e == eencl.e_b and k != len(sol.moves) - 1:
            raise ValueError("e_b may only be reversed as the last move")


def _c_sense(vi, to_west: bool) -> str:
    # c sits on the core ceiling and always turns through the hall below it
    east_is_plus_x = vi.c_east.dx > 0
    return "CW" if to_west == east_is_plus_x else "CCW"


def witness_schedule(out, sol: MoveSeq) -> Schedule:
    """Schedule mimicking ``sol`` on the instance in ``out`` (see module docstring)."""
    eencl, meta, inst = out.eencl, out.metadata, out.instance
    _check_solution(eencl, sol)
    plan = _Plan(inst.guard_ids)
    config = list(sol.initial)
    assigned = set()

    for e, c in meta.corridors.items():
        head_a = config[e] is F
        for s in c.subsegments:
            plan.guard(s.guard, [s.toward_a, s.toward_b], 0 if head_a else 1)
            assigned.add(s.guard)
    for pid, p in meta.pipes.items():
        if p.start == p.clear:
            plan.guard(p.guard, [p.start], 0)
        else:
            plan.guard(p.guard, [p.start, p.clear], 0)
        assigned.add(p.guard)
    out_in = {}
    for v, vi in meta.vertices.items():
        if vi.c_guard is None:
            continue
        o = eencl.machine.vertices[v].output
        out_in[v] = eencl.machine.head(o, config[o]) == v
        plan.guard(vi.c_guard, [vi.c_east, vi.c_west], 0 if out_in[v] else 1)
        assigned.add(vi.c_guard)
    for x in meta.crossings:
        for gid, d in zip(x.guards, x.directions):
            plan.guard(gid, [d], 0)
            assigned.add(gid)
    room = meta.room
    caps = [d for _, d in room.d_caps]          # clockwise order
    south, east = Direction(0, -1), Direction(1, 0)
    d_id, f_id, j_id = meta.special["d"], meta.special["f"], meta.special["j"]
    plan.guard(d_id, [south] + caps[::-1] + [east], len(caps) + 1)
    plan.guard(f_id, [Direction(-1, 0), Direction(0, 1)], 0)
    plan.guard(j_id, [inst.guard(j_id).pinned_start], 0)
    assigned |= {d_id, f_id, j_id}
    missing = set(inst.guard_ids) - assigned
    if missing:
        raise ValueError(f"guards without a role: {sorted(missing)}")

    # preamble: d caps the left-part pipes right to left, each pipe guard clears its pipe
    for k, (pid, _) in enumerate(room.d_caps):
        plan.turn(d_id, len(caps) - k, "CW")
        p = meta.pipes[pid]
        plan.turn(p.guard, 1, p.sense)
    plan.turn(d_id, 0, "CW")

    # one corridor reversal per NCL move, starting at the old head
    m = eencl.machine
    for e in sol.moves:
        c = meta.corridors[e]
        old = config[e]
        new = old.flipped()
        for v, vi in meta.vertices.items():
            if vi.c_guard and m.vertices[v].output == e and m.head(e, old) == v:
                plan.turn(vi.c_guard, 1, _c_sense(vi, True))
        subs = c.subsegments if old is F else c.subsegments[::-1]
        for s in subs:
            if old is F:
                plan.turn(s.guard, 1, s.leave_a)
            else:
                plan.turn(s.guard, 0, s.leave_b)
        config[e] = new
        for v, vi in meta.vertices.items():
            if vi.c_guard and m.vertices[v].output == e and m.head(e, new) == v:
                plan.turn(vi.c_guard, 0, _c_sense(vi, False))

    # finale: clear the right part's pipes, then f turns up
    for pid, p in sorted(meta.pipes.items()):
        if p.part == "right":
            plan.turn(p.guard, 1, p.sense)
    plan.turn(f_id, 1, "CW")
    return plan.schedule()
