import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import hole_instance, oracle_ray_end
from searchlight.decomposition import (TARGET, WALL, blocked_portals, build_decomposition, covered,
                                       critical_directions, goal_cells, laser_alignment_violations,
                                       micro_events, never_visible_cells, ray_owner)
from searchlight.environment import Guard, Instance, PolygonWithHoles, TargetSpec
from searchlight.figures import alcove_room, double_alcove_room, unit_square
from searchlight.generate import random_instance
from searchlight.geometry import (Direction, Location, Segment, cmp_directions, on_segment, point_in_region, pt,
                                  ring_location, sees)


def suite():
    rng = random.Random(2024)
    out = [("alcove", alcove_room()), ("double", double_alcove_room()),
           ("double+corner", double_alcove_room(corner_guard=True)), ("hole", hole_instance())]
    for k in range(12):
        out.append((f"random{k}", random_instance(rng, max_guards=2)))
    return out


SUITE = suite()
_DECS = {}


def dec_of(name, inst):
    if name not in _DECS:
        _DECS[name] = build_decomposition(inst)
    return _DECS[name]


# ------------------------------------------------------------------ critical directions


def test_square_center_has_four_corner_directions():
    inst = unit_square()
    assert critical_directions(inst, inst.guards[0]) == [Direction(1, 1), Direction(-1, 1),
                                                         Direction(-1, -1), Direction(1, -1)]


def test_alcove_mouth_directions():
    inst = alcove_room()
    dirs = critical_directions(inst, inst.guards[0])
    g = inst.guards[0].position
    for mouth in (pt(0, 1), pt(0, 2)):
        assert Direction.between(g, mouth) in dirs


@pytest.mark.parametrize("name,inst", SUITE, ids=[n for n, _ in SUITE])
def test_critical_directions_exhaustive_oracle(name, inst):
    for g in inst.guards:
        pts = list(inst.env.vertices) + [o.position for o in inst.guards]
        if inst.target.mode == "region":
            pts += list(inst.target.polygon)
        elif inst.target.mode == "point":
            pts.append(inst.target.point)
        want = set()
        for p in pts:
            if p == g.position:
                continue
            d = Direction.between(g.position, p)
            end = oracle_ray_end(g.position, d, inst.env)
            if end is not None and end != g.position:
                want.add(d)
        got = critical_directions(inst, g)
        assert set(got) == want
        assert all(cmp_directions(a, b) < 0 for a, b in zip(got, got[1:]))
        for o in inst.guards:
            if o.id != g.id and sees(g.position, o.position, inst.env):
                assert Direction.between(g.position, o.position) in got


# ------------------------------------------------------------------ the arrangement


def test_square_center_four_triangles():
    dec = build_decomposition(unit_square())
    assert dec.n_cells == 4
    assert all(len(c.outer) == 3 and not c.holes for c in dec.cells)
    assert dec.total_area() == 16


@pytest.mark.parametrize("name,inst", SUITE, ids=[n for n, _ in SUITE])
def test_partition_and_portal_carriers(name, inst):
    dec = dec_of(name, inst)
    assert dec.total_area() == inst.env.area()
    assert all(c.area > 0 for c in dec.cells)
    walls = list(inst.env.edges)
    tgt = []
    if inst.target.mode == "region":
        r = inst.target.polygon
        tgt = [(r[i], r[(i + 1) % len(r)]) for i in range(len(r))]
    rays = [seg for seg in dec.lasers.values() if seg is not None]
    for p in dec.portals:
        a, b = p.carrier
        on = [s for s in walls + tgt + rays if on_segment(a, s[0], s[1]) and on_segment(b, s[0], s[1])]
        assert on, f"portal {p.id} not on an input edge, target edge or critical ray"
        assert WALL not in p.owners


@pytest.mark.parametrize("name,inst", SUITE, ids=[n for n, _ in SUITE])
def test_laser_alignment(name, inst):
    dec = dec_of(name, inst)
    assert laser_alignment_violations(dec) == []
    # independent check: midpoints between arrangement vertices on a laser are never strictly inside a cell
    for seg in dec.lasers.values():
        if seg is None:
            continue
        on = sorted((v for v in dec.vertices if on_segment(v, seg.a, seg.b)),
                    key=lambda v: (v.x - seg.a.x) * (seg.b.x - seg.a.x) + (v.y - seg.a.y) * (seg.b.y - seg.a.y))
        for p, q in zip(on, on[1:]):
            m = pt((p.x + q.x) / 2, (p.y + q.y) / 2)
            for c in dec.cells:
                inside = ring_location(m, c.outer) is Location.INSIDE and all(
                    ring_location(m, h) is Location.OUTSIDE for h in c.holes)
                assert not inside


@pytest.mark.parametrize("name,inst", SUITE, ids=[n for n, _ in SUITE])
def test_cell_count_polynomial(name, inst):
    dec = dec_of(name, inst)
    e = len(inst.env.edges)
    v = len(inst.env.vertices)
    gd = sum(len(d) for d in dec.critical.values())
    assert dec.n_cells <= (e + v * gd) ** 2


@pytest.mark.parametrize("name,inst", SUITE, ids=[n for n, _ in SUITE])
def test_sweep_atomicity(name, inst):
    dec = dec_of(name, inst)
    for g in inst.guards:
        for k in range(len(dec.critical[g.id])):
            w = dec.wedge(g.id, k)
            for c in w.cells:
                # every wedge cell is fully lit from g: its vertices are all visible
                assert all(sees(g.position, v, inst.env) for v in dec.cells[c].outer)


def test_alcove_has_never_visible_cells():
    inst = alcove_room()
    dec = build_decomposition(inst)
    hidden = never_visible_cells(dec)
    assert hidden
    for c in hidden:
        s = dec.cells[c].sample
        assert s.x < 0  # inside the alcove
        assert not sees(inst.guards[0].position, s, inst.env)


def test_dump_lists_everything():
    dec = build_decomposition(unit_square())
    text = dec.dump()
    assert text.startswith("cells 4")
    assert "portals 4" in text and "critical g" in text


# ------------------------------------------------------------------ goal cells


def test_goal_cells_modes():
    inst = unit_square()
    dec = build_decomposition(inst)
    assert goal_cells(dec, TargetSpec.whole()) == frozenset(range(4))
    assert len(goal_cells(dec, TargetSpec.at_point(2, Fraction(1, 2)))) == 1
    # a point on a diagonal portal belongs to both incident cells
    on_portal = goal_cells(dec, TargetSpec.at_point(1, 1))
    assert len(on_portal) == 2
    for c in range(4):
        cell_env = PolygonWithHoles(dec.cells[c].outer, dec.cells[c].holes)
        assert (c in on_portal) == (point_in_region(pt(1, 1), cell_env) is not Location.OUTSIDE)


@pytest.mark.parametrize("name,inst", SUITE[:4], ids=[n for n, _ in SUITE[:4]])
def test_goal_cells_region_closure(name, inst):
    dec = dec_of(name, inst)
    if inst.target.mode != "region":
        return
    goal = goal_cells(dec, inst.target)
    ring = inst.target.polygon
    for c in dec.cells:
        if ring_location(c.sample, ring) is Location.INSIDE:
            assert c.id in goal


# ------------------------------------------------------------------ blocked portals


def test_blocked_portals_examples():
    inst = unit_square()
    dec = build_decomposition(inst)
    assert blocked_portals(dec, {}) == frozenset()
    assert blocked_portals(dec, {"g": None}) == frozenset()
    for d in dec.critical["g"]:
        want = {p.id for p in dec.portals if ray_owner("g", d) in p.owners}
        assert blocked_portals(dec, {"g": d}) == want
        seg = dec.lasers["g", dec.critical["g"].index(d)]
        assert want == {p.id for p in dec.portals
                        if on_segment(p.carrier.a, *seg) and on_segment(p.carrier.b, *seg)}


def test_collinear_lasers_jointly_cover():
    carrier = Segment(pt(0, 0), pt(4, 0))
    assert covered(carrier, [Segment(pt(0, 0), pt(2, 0)), Segment(pt(3, 0), pt(1, 0)), Segment(pt(3, 0), pt(4, 0))])
    assert not covered(carrier, [Segment(pt(0, 0), pt(2, 0)), Segment(pt(3, 0), pt(4, 0))])
    assert not covered(carrier, [Segment(pt(0, 1), pt(4, 1))])


@given(st.lists(st.tuples(st.integers(-2, 10), st.integers(-2, 10)), max_size=5), st.integers(1, 8))
def test_covered_interval_oracle(spans, length):
    carrier = Segment(pt(0, 0), pt(length, 0))
    segs = [Segment(pt(a, 0), pt(b, 0)) for a, b in spans if a != b]
    # with integer endpoints, checking every half-integer point decides coverage exactly
    want = all(any(min(s.a.x, s.b.x) <= Fraction(k, 2) <= max(s.a.x, s.b.x) for s in segs)
               for k in range(0, 2 * length + 1))
    assert covered(carrier, segs) == want


def test_two_guard_lasers_cover_shared_carrier():
    # two guards on the same horizontal line, lasers meeting in the middle
    env = PolygonWithHoles([pt(0, 0), pt(8, 0), pt(8, 4), pt(0, 4)])
    inst = Instance(env, [Guard("a", pt(0, 2)), Guard("b", pt(8, 2))], TargetSpec.whole())
    dec = build_decomposition(inst)
    both = blocked_portals(dec, {"a": Direction(1, 0), "b": Direction(-1, 0)})
    one = blocked_portals(dec, {"a": Direction(1, 0)})
    assert one <= both
    for p in dec.portals:
        if p.carrier.a.y == 2 == p.carrier.b.y:
            assert p.id in both


# ------------------------------------------------------------------ micro-events


def test_micro_events_empty_in_plain_wedge():
    dec = build_decomposition(unit_square())
    assert all(micro_events(dec, "g", k) == [] for k in range(4))


@pytest.mark.parametrize("name,inst", SUITE, ids=[n for n, _ in SUITE])
def test_micro_events_vertex_scan_oracle(name, inst):
    dec = dec_of(name, inst)
    for g in inst.guards:
        dirs = dec.critical[g.id]
        n = len(dirs)
        for k in range(n):
            d1, d2 = dirs[k], dirs[(k + 1) % n]
            evs = micro_events(dec, g.id, k)
            if dec.wedge(g.id, k).empty:
                assert evs == []
                continue

            def strictly_inside(d):
                if n == 1:
                    return d != d1
                if cmp_directions(d1, d2) < 0:
                    return cmp_directions(d1, d) < 0 < cmp_directions(d2, d)
                return cmp_directions(d1, d) < 0 or cmp_directions(d, d2) < 0

            want = {Direction.between(g.position, v) for v in dec.vertices
                    if v != g.position and strictly_inside(Direction.between(g.position, v))
                    and sees(g.position, v, inst.env)}
            assert set(evs) == want
            assert len(evs) == len(set(evs))


def test_micro_events_from_foreign_ray():
    inst = double_alcove_room(corner_guard=True)
    dec = build_decomposition(inst)
    total = sum(len(micro_events(dec, "g", k)) for k in range(len(dec.critical["g"])))
    assert total > 0
