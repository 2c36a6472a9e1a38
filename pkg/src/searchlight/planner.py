"""Breadth-first search over guard angles and cell contamination.

A state records, for every guard, the index of its current critical
direction and the set of contaminated cells (a bitmask).  One guard moves
at a time, rotating to a cyclically adjacent critical direction.  The
rotation is simulated exactly on the decomposition: the laser is placed at
every micro-event direction and at an interior direction of every gap
between events, and contamination is closed under portal adjacency at each
placement.

While the laser is strictly inside a wedge cell it cuts that cell in two.
The part already swept starts clear and only becomes contaminated through
closure; the part still ahead keeps the status the cell had on entry.  Bits
``0..n-1`` of the working mask hold whole cells and ahead parts, bits
``n..2n-1`` hold swept parts.
"""
from __future__ import annotations

import json
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Optional, Union

from .decomposition import CellDecomposition, build_decomposition, goal_cells
from .environment import FormatError, Instance, loads_json
from .geometry import Direction

log = logging.getLogger(__name__)


class Sense(str, Enum):
    CW = "CW"
    CCW = "CCW"

    def flipped(self) -> "Sense":
        return Sense.CCW if self is Sense.CW else Sense.CW


@dataclass(frozen=True)
class SearchState:
    angles: tuple
    contaminated: int

    def is_contaminated(self, cell: int) -> bool:
        return bool(self.contaminated >> cell & 1)


@dataclass(frozen=True)
class Move:
    guard: str
    from_index: int
    to_index: int
    sense: Sense


class ChainError(ValueError):
    pass


@dataclass
class Schedule:
    """Start index per guard plus an ordered list of moves.

    ``critical`` maps each guard id to its critical directions, making the
    file readable without rebuilding the decomposition.
    """

    guards: list
    critical: dict
    start: dict
    moves: list = field(default_factory=list)

    def check_chain(self) -> None:
        cur = dict(self.start)
        for i, m in enumerate(self.moves):
            if m.guard not in cur:
                raise ChainError(f"move {i}: unknown guard {m.guard!r}")
            if cur[m.guard] != m.from_index:
                raise ChainError(f"move {i}: guard {m.guard} is at {cur[m.guard]}, not {m.from_index}")
            n = len(self.critical[m.guard])
            step = 1 if m.sense is Sense.CCW else -1
            if (m.from_index + step) % n != m.to_index:
                raise ChainError(f"move {i}: {m.from_index}->{m.to_index} is not a {m.sense.value} step")
            cur[m.guard] = m.to_index

    def final(self) -> dict:
        cur = dict(self.start)
        for m in self.moves:
            cur[m.guard] = m.to_index
        return cur

    def reversed(self) -> "Schedule":
        moves = [Move(m.guard, m.to_index, m.from_index, m.sense.flipped()) for m in reversed(self.moves)]
        return Schedule(list(self.guards), dict(self.critical), self.final(), moves)

    def direction(self, gid: str, index: int) -> Direction:
        return self.critical[gid][index]

    def to_dict(self) -> dict:
        return {
            "guards": [
                {"id": g, "critical": [str(d) for d in self.critical[g]], "start": self.start[g]}
                for g in self.guards
            ],
            "moves": [
                {"guard": m.guard, "from": m.from_index, "to": m.to_index, "sense": m.sense.value}
                for m in self.moves
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Schedule":
        try:
            guards, critical, start = [], {}, {}
            for g in data["guards"]:
                guards.append(g["id"])
                critical[g["id"]] = [Direction.parse(s) for s in g["critical"]]
                start[g["id"]] = int(g["start"])
            moves = [
                Move(m["guard"], int(m["from"]), int(m["to"]), Sense(m["sense"]))
                for m in data.get("moves", [])
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed schedule: {exc}") from exc
        return cls(guards, critical, start, moves)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "Schedule":
        return cls.from_dict(loads_json(text))


@dataclass
class Solved:
    schedule: Schedule
    states_explored: int


@dataclass
class Unsolvable:
    states_explored: int


@dataclass
class ResourceExhausted:
    states_explored: int
    reason: str


PlanResult = Union[Solved, Unsolvable, ResourceExhausted]


def _components(nodes: int, edges, blocked: int) -> list:
    """Bitmasks of the connected groups with two or more nodes."""
    parent = list(range(nodes))
    for pid, a, b in edges:
        if blocked >> pid & 1:
            continue
        while parent[a] != a:
            parent[a] = a = parent[parent[a]]
        while parent[b] != b:
            parent[b] = b = parent[parent[b]]
        if a != b:
            parent[a] = b
    groups = {}
    for x in range(nodes):
        r = x
        while parent[r] != r:
            r = parent[r]
        if r != x:
            groups[r] = groups.get(r, 1 << r) | 1 << x
    return list(groups.values())


def _merge(base, edges, blocked: int) -> list:
    """Groups of ``base`` (node -> group index, group masks) joined by ``edges``."""
    comp_of, masks = base
    parent = {}
    get = parent.get

    def find(x):
        root = x
        while True:
            up = get(root, root)
            if up == root:
                break
            root = up
        while x != root:
            parent[x], x = root, parent[x]
        return root

    # base groups are keyed by index, lone nodes by their bitwise complement
    key = comp_of.get
    pairs = {(key(a, ~a), key(b, ~b)) for pid, a, b in edges if not blocked >> pid & 1}
    for ka, kb in pairs:
        ra, rb = find(ka), find(kb)
        if ra != rb:
            parent[ra] = rb
            parent.setdefault(rb, rb)
        else:
            parent.setdefault(ra, ra)
    groups = {}
    for x in parent:
        r = find(x)
        groups[r] = groups.get(r, 0) | (masks[x] if x >= 0 else 1 << ~x)
    out = [m for m in groups.values() if m & (m - 1)]
    out += [m for i, m in enumerate(masks) if i not in parent]
    return out


def _indexed(comps) -> tuple:
    comp_of = {}
    for i, m in enumerate(comps):
        x = 0
        while m:
            if m & 1:
                comp_of[x] = i
            m >>= 1
            x += 1
    return comp_of, comps


def _close(mask: int, comps) -> int:
    out = mask
    for c in comps:
        if mask & c:
            out |= c
    return out


class Dynamics:
    """Cached contamination dynamics over one decomposition."""

    def __init__(self, dec: CellDecomposition):
        self.dec = dec
        self.n = dec.n_cells
        self.all_cells = (1 << self.n) - 1
        self.guard_ids = dec.instance.guard_ids
        self.default_edges = [(p.id, p.c1, p.c2) for p in dec.portals]
        self._static = {}
        self._sweep = {}
        self._steps = {}

    def blocked_mask(self, angles, skip: Optional[int] = None) -> int:
        m = 0
        for i, gid in enumerate(self.guard_ids):
            if i != skip:
                m |= self.dec.block_masks[gid, angles[i]]
        return m

    def static_closure(self, mask: int, blocked: int) -> int:
        comps = self._static.get(blocked)
        if comps is None:
            comps = self._static[blocked] = _components(self.n, self.default_edges, blocked)
        return _close(mask, comps)

    def _steps_for(self, gid: str, k: int, sense: Sense):
        """Per-position (new cut mask, released mask, edges) for one sweep."""
        key = (gid, k, sense)
        if key in self._steps:
            return self._steps[key]
        w = self.dec.wedge(gid, k)
        n = self.n
        behind = -1 if sense is Sense.CCW else 1
        order = range(len(w.positions))
        if sense is Sense.CW:
            order = reversed(order)
        steps = []
        cut_prev = 0
        for i in order:
            sides, psides = w.sides[i], w.portal_sides[i]
            cut = 0
            for c, s in sides.items():
                if s == 0:
                    cut |= 1 << c
            edges = []
            for p in self.dec.portals:
                if p.id not in psides:
                    edges.append((p.id, p.c1, p.c2))
                    continue
                s = psides[p.id]
                if s is None:
                    continue  # lies on the laser
                c1_cut, c2_cut = cut >> p.c1 & 1, cut >> p.c2 & 1
                if s == 0 and c1_cut and c2_cut:
                    edges.append((p.id, p.c1, p.c2))
                    edges.append((p.id, n + p.c1, n + p.c2))
                    continue
                ends = []
                for c, is_cut in ((p.c1, c1_cut), (p.c2, c2_cut)):
                    if not is_cut:
                        ends.append([c])
                    elif s == behind:
                        ends.append([n + c])
                    elif s == -behind:
                        ends.append([c])
                    else:
                        ends.append([c, n + c])
                for a in ends[0]:
                    for b in ends[1]:
                        edges.append((p.id, a, b))
            steps.append((cut & ~cut_prev, cut_prev & ~cut, edges, i))
            cut_prev = cut
        # edges present at every position are joined once per blocked set
        shared = set.intersection(*(set(e) for _, _, e, _ in steps)) if steps else set()
        steps = tuple((a, b, [e for e in edges if e not in shared], i) for a, b, edges, i in steps)
        result = (steps, cut_prev, sorted(shared))
        self._steps[key] = result
        return result

    def _sweep_comps(self, gid, k, sense, pos, edges, blocked):
        key = (gid, k, sense, pos, blocked)
        comps = self._sweep.get(key)
        if comps is None:
            bkey = (gid, k, sense, blocked)
            base = self._sweep.get(bkey)
            if base is None:
                shared = self._steps_for(gid, k, sense)[2]
                base = self._sweep[bkey] = _indexed(_components(2 * self.n, shared, blocked))
            comps = self._sweep[key] = _merge(base, edges, blocked)
        return comps

    def apply(self, state: SearchState, gi: int, to_index: int, sense: Sense) -> SearchState:
        gid = self.guard_ids[gi]
        dirs = self.dec.critical[gid]
        frm = state.angles[gi]
        k = frm if sense is Sense.CCW else to_index
        others = self.blocked_mask(state.angles, skip=gi)
        angles = state.angles[:gi] + (to_index,) + state.angles[gi + 1:]
        w = self.dec.wedge(gid, k)
        mask = state.contaminated
        if not w.empty:
            n = self.n
            steps, last_cut, _ = self._steps_for(gid, k, sense)
            for new_cut, released, edges, pos in steps:
                mask &= ~(new_cut << n)
                mask = _release(mask, released, n)
                mask = _close(mask, self._sweep_comps(gid, k, sense, pos, edges, others))
            mask = _release(mask, last_cut, n)
        else:
            mask = self.static_closure(mask, others)
        mask = self.static_closure(mask, others | self.dec.block_masks[gid, to_index])
        return SearchState(angles, mask)


def _release(mask: int, released: int, n: int) -> int:
    """Cells leaving the laser take the status of their swept part."""
    if not released:
        return mask
    swept = (mask >> n) & released
    return (mask & ~released & ~(released << n)) | swept


def initial_state(dec: CellDecomposition, start_angles) -> SearchState:
    return SearchState(tuple(start_angles), (1 << dec.n_cells) - 1)


def closure(dec: CellDecomposition, contaminated, blocked) -> frozenset:
    """Least superset of ``contaminated`` closed under unblocked portals."""
    out = set(contaminated)
    stack = list(out)
    while stack:
        c = stack.pop()
        for pid in dec.cell_portals[c]:
            if pid in blocked:
                continue
            p = dec.portals[pid]
            o = p.c2 if p.c1 == c else p.c1
            if o not in out:
                out.add(o)
                stack.append(o)
    return frozenset(out)


def _move_parts(dec: CellDecomposition, m: Move):
    gi = dec.instance.guard_ids.index(m.guard)
    n = len(dec.critical[m.guard])
    step = 1 if m.sense is Sense.CCW else -1
    if n < 2 or (m.from_index + step) % n != m.to_index:
        raise ChainError(f"{m.from_index}->{m.to_index} is not a {m.sense.value} step")
    return gi


def apply_move(dec: CellDecomposition, s: SearchState, m: Move, dyn: Optional[Dynamics] = None) -> SearchState:
    gi = _move_parts(dec, m)
    if s.angles[gi] != m.from_index:
        raise ChainError(f"guard {m.guard} is at {s.angles[gi]}, not {m.from_index}")
    dyn = dyn or Dynamics(dec)
    return dyn.apply(s, gi, m.to_index, m.sense)


def goal_reached(s: SearchState, goal) -> bool:
    if isinstance(goal, int):
        return not s.contaminated & goal
    return not any(s.is_contaminated(c) for c in goal)


def _mask(cells) -> int:
    m = 0
    for c in cells:
        m |= 1 << c
    return m


def replay(dec: CellDecomposition, schedule: Schedule, dyn: Optional[Dynamics] = None) -> SearchState:
    dyn = dyn or Dynamics(dec)
    s = initial_state(dec, [schedule.start[g] for g in dec.instance.guard_ids])
    for m in schedule.moves:
        s = apply_move(dec, s, m, dyn)
    return s


def start_tuples(dec: CellDecomposition):
    ranges = []
    for g in dec.instance.guards:
        dirs = dec.critical[g.id]
        if g.pinned_start is not None:
            ranges.append([dirs.index(g.pinned_start)])
        else:
            ranges.append(range(len(dirs)))
    return product(*ranges)


def plan(
    inst: Instance,
    max_states: int = 2_000_000,
    max_time: Optional[float] = None,
    dec: Optional[CellDecomposition] = None,
) -> PlanResult:
    """Search for a schedule clearing the target; breadth first, so the
    schedule returned has the fewest moves among those the search sees."""
    t0 = time.monotonic()
    dec = dec or build_decomposition(inst)
    dyn = Dynamics(dec)
    goal = _mask(goal_cells(dec, inst.target))
    ids = inst.guard_ids
    parents = {}
    queue = deque()
    for angles in start_tuples(dec):
        s = initial_state(dec, angles)
        if s not in parents:
            parents[s] = None
            queue.append(s)
    explored = 0
    while queue:
        s = queue.popleft()
        explored += 1
        if not s.contaminated & goal:
            return Solved(_unwind(dec, parents, s), explored)
        if max_time is not None and time.monotonic() - t0 > max_time:
            return ResourceExhausted(explored, "time limit")
        for gi, gid in enumerate(ids):
            n = len(dec.critical[gid])
            if n < 2:
                continue
            a = s.angles[gi]
            for sense, to in ((Sense.CW, (a - 1) % n), (Sense.CCW, (a + 1) % n)):
                t = dyn.apply(s, gi, to, sense)
                if t not in parents:
                    if len(parents) >= max_states:
                        return ResourceExhausted(explored, "state limit")
                    parents[t] = (s, Move(gid, a, to, sense))
                    queue.append(t)
    log.info("exhausted %d states", explored)
    return Unsolvable(explored)


def _unwind(dec: CellDecomposition, parents, s) -> Schedule:
    moves = []
    while parents[s] is not None:
        s, m = parents[s]
        moves.append(m)
    moves.reverse()
    ids = dec.instance.guard_ids
    return Schedule(list(ids), {g: list(dec.critical[g]) for g in ids},
                    dict(zip(ids, s.angles)), moves)
