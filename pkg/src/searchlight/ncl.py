"""Nondeterministic constraint logic on AND/OR machines.

A machine is a graph of AND and OR vertices of degree three.  Edges may be
pendant (one endpoint ``None``), which lets a lone vertex carry its three
edges.  A configuration orients every edge toward its first or second
endpoint.  OR vertices need at least one edge pointing in; AND vertices
need their output edge pointing in or both other edges pointing in.

In asynchronous traces an edge is ``UNDEFINED`` while it is being reversed
and then points toward no vertex.

File formats are JSON::

    machine:  {"vertices": [{"kind": "AND", "output": 0}, {"kind": "OR"}],
               "edges": [[0, 1], [0, null], ...],
               "a": {"edge": 0, "target": "ToFirst"},
               "b": {"edge": 3, "target": "ToSecond"}}
    moveseq:  {"initial": ["ToFirst", ...], "moves": [2, 0, ...]}
    trace:    {"initial": [...], "events": [{"edge": 1, "s": "0", "t": "1/2"}]}
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

from .environment import FormatError, format_rational, loads_json, parse_rational


class Kind(str, Enum):
    AND = "AND"
    OR = "OR"


class Orientation(str, Enum):
    TO_FIRST = "ToFirst"
    TO_SECOND = "ToSecond"
    UNDEFINED = "Undefined"

    def flipped(self) -> "Orientation":
        if self is Orientation.UNDEFINED:
            raise ValueError("cannot flip an undefined orientation")
        return Orientation.TO_SECOND if self is Orientation.TO_FIRST else Orientation.TO_FIRST


F, S, U = Orientation.TO_FIRST, Orientation.TO_SECOND, Orientation.UNDEFINED


@dataclass(frozen=True)
class Vertex:
    kind: Kind
    output: Optional[int] = None


class MachineError(ValueError):
    pass


@dataclass(frozen=True)
class NclMachine:
    vertices: tuple
    edges: tuple  # (first, second); an endpoint may be None

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        incident = [[] for _ in self.vertices]
        for i, (a, b) in enumerate(self.edges):
            if a is None and b is None:
                raise MachineError(f"edge {i} has no endpoint")
            if a is not None and a == b:
                raise MachineError(f"edge {i} is a loop")
            for v in (a, b):
                if v is not None:
                    if not 0 <= v < len(self.vertices):
                        raise MachineError(f"edge {i} names unknown vertex {v}")
                    incident[v].append(i)
        for v, inc in enumerate(incident):
            if len(inc) != 3:
                raise MachineError(f"vertex {v} has degree {len(inc)}, expected 3")
            vx = self.vertices[v]
            if vx.kind is Kind.AND and vx.output not in inc:
                raise MachineError(f"AND vertex {v} has output {vx.output}, not one of its edges {inc}")
        object.__setattr__(self, "incident", tuple(tuple(i) for i in incident))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def head(self, e: int, o: Orientation):
        """Vertex the edge points to, or None."""
        if o is U:
            return None
        return self.edges[e][0] if o is F else self.edges[e][1]


def _inward(machine: NclMachine, config, v: int) -> list:
    return [e for e in machine.incident[v] if machine.head(e, config[e]) == v]


def vertex_ok(machine: NclMachine, config, v: int) -> bool:
    inward = _inward(machine, config, v)
    vx = machine.vertices[v]
    if vx.kind is Kind.OR:
        return bool(inward)
    if vx.output in inward:
        return True
    return len([e for e in inward if e != vx.output]) == 2


def is_legal(machine: NclMachine, config) -> bool:
    if len(config) != machine.n_edges:
        raise ValueError("configuration does not cover every edge")
    return all(vertex_ok(machine, config, v) for v in range(len(machine.vertices)))


def flip(config, e: int) -> tuple:
    return config[:e] + (config[e].flipped(),) + config[e + 1:]


def legal_moves(machine: NclMachine, config) -> list:
    config = tuple(config)
    if U in config:
        raise ValueError("synchronous moves need every edge oriented")
    out = []
    for e in range(machine.n_edges):
        c = flip(config, e)
        ends = [v for v in machine.edges[e] if v is not None]
        if all(vertex_ok(machine, c, v) for v in ends):
            out.append(e)
    return out


@dataclass
class MoveSeq:
    initial: tuple
    moves: list = field(default_factory=list)

    def configs(self) -> list:
        out = [tuple(self.initial)]
        for e in self.moves:
            out.append(flip(out[-1], e))
        return out

    def final(self) -> tuple:
        return self.configs()[-1]

    def all_legal(self, machine: NclMachine) -> bool:
        return all(is_legal(machine, c) for c in self.configs())

    def to_dict(self) -> dict:
        return {"initial": [o.value for o in self.initial], "moves": list(self.moves)}

    @classmethod
    def from_dict(cls, data) -> "MoveSeq":
        try:
            return cls(tuple(Orientation(o) for o in data["initial"]), [int(e) for e in data["moves"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed move sequence: {exc}") from exc


@dataclass(frozen=True)
class EenclInstance:
    machine: NclMachine
    e_a: int
    target_a: Orientation
    e_b: int
    target_b: Orientation

    def __post_init__(self):
        if self.e_a == self.e_b:
            raise MachineError("distinguished edges must differ")
        for e in (self.e_a, self.e_b):
            if not 0 <= e < self.machine.n_edges:
                raise MachineError(f"distinguished edge {e} out of range")
        if U in (self.target_a, self.target_b):
            raise MachineError("target orientations must be defined")


class TooLarge(ValueError):
    pass


def _decode(bits: int, n: int) -> tuple:
    return tuple(S if bits >> e & 1 else F for e in range(n))


def _encode(config) -> int:
    return sum(1 << e for e, o in enumerate(config) if o is S)


def legal_configs(machine: NclMachine, max_edges: int = 20) -> list:
    n = machine.n_edges
    if n > max_edges:
        raise TooLarge(f"{n} edges exceed the exhaustive-search limit of {max_edges}")
    return [b for b in range(1 << n) if is_legal(machine, _decode(b, n))]


def solve_eencl(inst: EenclInstance, max_edges: int = 20) -> Optional[MoveSeq]:
    """Shortest legal move sequence from an e_a-targeted configuration to an
    e_b-targeted one, or None.  Breadth first from all sources at once."""
    m = inst.machine
    n = m.n_edges
    legal = set(legal_configs(m, max_edges))
    a_bit = 1 if inst.target_a is S else 0
    b_bit = 1 if inst.target_b is S else 0
    parent = {}
    queue = deque()
    for c in sorted(legal):
        if (c >> inst.e_a & 1) == a_bit:
            parent[c] = None
            queue.append(c)
    while queue:
        c = queue.popleft()
        if (c >> inst.e_b & 1) == b_bit:
            moves = []
            while parent[c] is not None:
                c, e = parent[c]
                moves.append(e)
            moves.reverse()
            return MoveSeq(_decode(c, n), moves)
        for e in range(n):
            d = c ^ (1 << e)
            if d in legal and d not in parent:
                parent[d] = (c, e)
                queue.append(d)
    return None


def is_restricted(inst: EenclInstance, max_edges: int = 20) -> bool:
    """True when no legal configuration has both distinguished edges targeted."""
    a_bit = 1 if inst.target_a is S else 0
    b_bit = 1 if inst.target_b is S else 0
    return not any((c >> inst.e_a & 1) == a_bit and (c >> inst.e_b & 1) == b_bit
                   for c in legal_configs(inst.machine, max_edges))


def solve_eencl_once(inst: EenclInstance, max_edges: int = 20) -> Optional[MoveSeq]:
    """Shortest solution reversing e_a exactly once, first, and e_b exactly
    once, last; None if no solution has that shape."""
    m = inst.machine
    n = m.n_edges
    legal = set(legal_configs(m, max_edges))
    ea, eb = 1 << inst.e_a, 1 << inst.e_b
    a_bit = ea if inst.target_a is S else 0
    b_bit = eb if inst.target_b is S else 0
    parent = {}
    queue = deque()
    for c in sorted(legal):
        d = c ^ ea
        if c & ea == a_bit and c & eb != b_bit and d in legal and d not in parent:
            parent[d] = c
            queue.append(d)
    while queue:
        c = queue.popleft()
        if c ^ eb in legal:
            moves = [inst.e_b]
            while isinstance(parent[c], tuple):
                c, e = parent[c]
                moves.append(e)
            moves.append(inst.e_a)
            moves.reverse()
            return MoveSeq(_decode(parent[c], n), moves)
        for e in range(n):
            d = c ^ (1 << e)
            if e not in (inst.e_a, inst.e_b) and d in legal and d not in parent:
                parent[d] = (c, e)
                queue.append(d)
    return None


# ------------------------------------------------------------- async traces


@dataclass(frozen=True)
class Event:
    edge: int
    s: Fraction
    t: Fraction


@dataclass
class AsyncTrace:
    initial: tuple
    events: list

    def to_dict(self) -> dict:
        return {
            "initial": [o.value for o in self.initial],
            "events": [
                {"edge": ev.edge, "s": format_rational(ev.s), "t": format_rational(ev.t)}
                for ev in self.events
            ],
        }

    @classmethod
    def from_dict(cls, data) -> "AsyncTrace":
        try:
            initial = tuple(Orientation(o) for o in data["initial"])
            events = [
                Event(int(ev["edge"]), parse_rational(ev["s"]), parse_rational(ev["t"]))
                for ev in data["events"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed trace: {exc}") from exc
        return cls(initial, events)


class TraceError(ValueError):
    pass


@dataclass
class LegalityReport:
    legal: bool
    interval: Optional[tuple] = None  # (lo, hi); hi is None after the last boundary
    vertex: Optional[int] = None
    config: Optional[tuple] = None

    def describe(self) -> str:
        if self.legal:
            return "legal"
        lo, hi = self.interval
        span = f"({format_rational(lo)}, {format_rational(hi)})" if hi is not None else \
            f"after {format_rational(lo)}" if lo is not None else "initially"
        return f"illegal at vertex {self.vertex} during {span}"


def _check_phases(trace: AsyncTrace, n: int) -> None:
    per_edge = {}
    for i, ev in enumerate(trace.events):
        if not 0 <= ev.edge < n:
            raise TraceError(f"event {i} names unknown edge {ev.edge}")
        if ev.t <= ev.s:
            raise TraceError(f"event {i} ends at {ev.t}, not after its start {ev.s}")
        per_edge.setdefault(ev.edge, []).append(ev)
    for e, evs in per_edge.items():
        evs.sort(key=lambda ev: ev.s)
        for a, b in zip(evs, evs[1:]):
            if b.s < a.t:
                raise TraceError(f"reversal phases of edge {e} overlap at {b.s}")


def config_at(trace: AsyncTrace, lo: Fraction, hi: Fraction) -> tuple:
    """Configuration on the open interval (lo, hi) between boundaries."""
    config = list(trace.initial)
    for ev in trace.events:
        if ev.t <= lo:
            config[ev.edge] = config[ev.edge].flipped()
    for ev in trace.events:
        if ev.s <= lo and hi <= ev.t:
            config[ev.edge] = U
    return tuple(config)


def check_async_trace(machine: NclMachine, trace: AsyncTrace) -> LegalityReport:
    n = machine.n_edges
    if len(trace.initial) != n or U in trace.initial:
        raise TraceError("initial configuration must orient every edge")
    _check_phases(trace, n)
    bounds = sorted({ev.s for ev in trace.events} | {ev.t for ev in trace.events})
    windows = [(None, bounds[0] if bounds else None)]
    windows += list(zip(bounds, bounds[1:]))
    if bounds:
        windows.append((bounds[-1], None))
    cur = list(trace.initial)
    by_end = sorted(trace.events, key=lambda ev: ev.t)
    k = 0
    for lo, hi in windows:
        if lo is not None:
            while k < len(by_end) and by_end[k].t <= lo:
                cur[by_end[k].edge] = cur[by_end[k].edge].flipped()
                k += 1
        config = list(cur)
        if lo is not None and hi is not None:
            for ev in trace.events:
                if ev.s <= lo and hi <= ev.t:
                    config[ev.edge] = U
        for v in range(len(machine.vertices)):
            if not vertex_ok(machine, config, v):
                return LegalityReport(False, (lo, hi), v, tuple(config))
    return LegalityReport(True)


def trace_final(trace: AsyncTrace) -> tuple:
    config = list(trace.initial)
    for ev in trace.events:
        config[ev.edge] = config[ev.edge].flipped()
    return tuple(config)


def serialize_trace(machine: NclMachine, trace: AsyncTrace) -> MoveSeq:
    """Reversals ordered by start time, ties broken by event order."""
    report = check_async_trace(machine, trace)
    if not report.legal:
        raise TraceError("cannot serialize an illegal trace: " + report.describe())
    order = sorted(range(len(trace.events)), key=lambda i: (trace.events[i].s, i))
    return MoveSeq(tuple(trace.initial), [trace.events[i].edge for i in order])


# ------------------------------------------------------------ file formats


def machine_to_dict(inst: EenclInstance) -> dict:
    m = inst.machine
    return {
        "vertices": [
            {"kind": v.kind.value, **({"output": v.output} if v.kind is Kind.AND else {})}
            for v in m.vertices
        ],
        "edges": [list(e) for e in m.edges],
        "a": {"edge": inst.e_a, "target": inst.target_a.value},
        "b": {"edge": inst.e_b, "target": inst.target_b.value},
    }


def machine_from_dict(data) -> EenclInstance:
    try:
        vertices = [Vertex(Kind(v["kind"]), v.get("output")) for v in data["vertices"]]
        edges = [tuple(e) for e in data["edges"]]
        m = NclMachine(vertices, edges)
        return EenclInstance(
            m,
            int(data["a"]["edge"]), Orientation(data["a"]["target"]),
            int(data["b"]["edge"]), Orientation(data["b"]["target"]),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed machine: {exc}") from exc


def load_json_file(path, parser):
    with open(path, encoding="utf-8") as fh:
        return parser(loads_json(fh.read()))


def dump_json_file(path, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


# ------------------------------------------------------------- generators


def random_machine(rng: random.Random, max_edges: int = 8, and_share: float = 0.5) -> NclMachine:
    """Random machine: vertex slots paired at random, leftovers pendant."""
    while True:
        nv = rng.randint(1, max(1, (2 * max_edges) // 3))
        slots = [v for v in range(nv) for _ in range(3)]
        rng.shuffle(slots)
        edges = []
        while slots:
            a = slots.pop()
            if slots and rng.random() < 0.75:
                b = slots.pop()
                edges.append((a, b) if rng.random() < 0.5 else (b, a))
            else:
                edges.append((a, None) if rng.random() < 0.5 else (None, a))
        if len(edges) > max_edges or any(a == b for a, b in edges):
            continue
        rng.shuffle(edges)
        incident = [[i for i, e in enumerate(edges) if v in e] for v in range(nv)]
        vertices = [
            Vertex(Kind.AND, rng.choice(incident[v])) if rng.random() < and_share else Vertex(Kind.OR)
            for v in range(nv)
        ]
        return NclMachine(vertices, edges)


def random_legal_trace(rng: random.Random, machine: NclMachine, steps: int = 12,
                       attempts: int = 50) -> Optional[AsyncTrace]:
    """A trace that is legal by construction, or None if none was produced.

    Phase starts and ends are applied one at a time, keeping the
    configuration legal after each; several may share a time stamp.
    """
    n = machine.n_edges
    legal = legal_configs(machine, max_edges=max(20, n))
    if not legal:
        return None
    for _ in range(attempts):
        start = _decode(rng.choice(legal), n)
        cur = list(start)
        before = {}  # edge -> orientation before its open phase
        begun = {}  # edge -> start time
        events = []
        time = Fraction(0)

        def options():
            out = []
            for e in range(n):
                c = list(cur)
                c[e] = before[e].flipped() if e in before else U
                if is_legal(machine, c):
                    out.append(e)
            return out

        def apply(e):
            nonlocal time
            if e in before:
                t = time if time > begun[e] else begun[e] + Fraction(1, 7)
                time = t
                cur[e] = before.pop(e).flipped()
                events.append(Event(e, begun.pop(e), t))
            else:
                before[e] = cur[e]
                begun[e] = time
                cur[e] = U

        for _ in range(steps):
            if rng.random() < 0.6:
                time += Fraction(rng.randint(1, 4), rng.randint(1, 3))
            opts = options()
            if not opts:
                break
            apply(rng.choice(opts))
        while before:
            time += 1
            closable = [e for e in options() if e in before]
            if not closable:
                break
            apply(rng.choice(closable))
        if not before:
            return AsyncTrace(start, events)
    return None
