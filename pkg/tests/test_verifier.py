from fractions import Fraction

import pytest

from conftest import oracle_sees

from searchlight.environment import Guard, Instance, PolygonWithHoles, TargetSpec
from searchlight.figures import ALCOVE_WIDTH, alcove_room, unit_square
from searchlight.geometry import Direction, Location, Segment, max_visible_segment, point_in_region, pt, ring_location, \
    sees, segment_intersection
from searchlight.planner import Move, Schedule, Sense, plan
from searchlight.verifier import (CLEARING_RULE, _visible_vertices, check_time_reversal, default_pitch,
                                  rotation_samples, sample_free_space, simulate)

ALCOVE = alcove_room()
CW = plan(ALCOVE).schedule
CCW = CW.reversed()
PITCH = Fraction(ALCOVE_WIDTH, 4)


def _links(space):
    for i, j in space.hlinks:
        yield (i, j), (i + 1, j)
    for i, j in space.vlinks:
        yield (i, j), (i, j + 1)


# ------------------------------------------------------------------ free space


def test_unit_square_grid():
    inst = Instance(PolygonWithHoles([pt(0, 0), pt(1, 0), pt(1, 1), pt(0, 1)]), [Guard("g", pt(0, 0))],
                    TargetSpec.whole())
    space = sample_free_space(inst, Fraction(1, 4))
    assert len(space.nodes) == 25
    assert len(space.hlinks) == len(space.vlinks) == 20


def test_hole_nodes_excluded():
    env = PolygonWithHoles([pt(0, 0), pt(8, 0), pt(8, 8), pt(0, 8)], [[pt(3, 3), pt(5, 3), pt(5, 5), pt(3, 5)]])
    space = sample_free_space(Instance(env, [Guard("g", pt(1, 1))], TargetSpec.whole()), Fraction(1, 2))
    assert all(point_in_region(space.point(n), env) is not Location.OUTSIDE for n in space.nodes)
    assert space.to_grid(pt(4, 4)) not in space.nodes
    assert space.to_grid(pt(3, 4)) in space.nodes  # on the hole boundary


def test_thin_wall_cuts_links():
    # a hole thinner than the pitch lies between two rows of nodes
    wall = [pt(1, Fraction(19, 10)), pt(3, Fraction(19, 10)), pt(3, Fraction(21, 10)), pt(1, Fraction(21, 10))]
    env = PolygonWithHoles([pt(0, 0), pt(4, 0), pt(4, 4), pt(0, 4)], [wall])
    space = sample_free_space(Instance(env, [Guard("g", pt(0, 0))], TargetSpec.whole()), Fraction(1, 2))
    for a, b in _links(space):
        assert oracle_sees(space.point(a), space.point(b), env)
    # (4, 3) is x = 2, y = 3/2: its link upward crosses the wall
    assert (4, 3) not in space.vlinks and (0, 3) in space.vlinks


@pytest.mark.parametrize("inst", [ALCOVE, unit_square(guard=(1, 1))])
def test_links_are_exactly_visible_neighbours(inst):
    space = sample_free_space(inst, Fraction(1, 2))
    for n in space.nodes:
        i, j = n
        for m, links in (((i + 1, j), space.hlinks), ((i, j + 1), space.vlinks)):
            if m in space.nodes:
                assert (n in links) == sees(space.point(n), space.point(m), inst.env)


def test_default_pitch():
    assert default_pitch(ALCOVE) == Fraction(1, 8)
    assert default_pitch(unit_square(side=3)) == Fraction(2, 8)


def test_rotation_samples_are_ordered_and_end_exactly():
    d0, d1 = Direction(1, 0), Direction(0, 1)
    ds = rotation_samples(d0, d1, Sense.CCW, 8)
    assert ds[0] == d0 and ds[-1] == d1 and len(ds) == 9
    ds = rotation_samples(d0, d1, Sense.CCW, 4, extra=[Direction(1, 1), Direction(1, 3)])
    assert Direction(1, 1) in ds and Direction(1, 3) in ds
    cw = rotation_samples(d1, d0, Sense.CW, 4)
    assert cw[0] == d1 and cw[-1] == d0


# ------------------------------------------------------------------ simulate


def test_alcove_clockwise_clears():
    rep = simulate(ALCOVE, CW, PITCH)
    assert rep.verdict == "NoEvasionFound" and not rep.evasion
    assert rep.path == []
    assert "resolution" in rep.summary() and rep.clearing_rule == CLEARING_RULE


def _lasers_at(inst, sched, steps, s):
    pos = {g.id: g.position for g in inst.guards}
    cur = {g: sched.direction(g, sched.start[g]) for g in sched.guards}
    samples = [dict(cur)]
    for m in sched.moves:
        ds = rotation_samples(sched.direction(m.guard, m.from_index), sched.direction(m.guard, m.to_index),
                              m.sense, steps, _visible_vertices(inst, pos[m.guard]))
        for d in ds[1:]:
            cur[m.guard] = d
            samples.append(dict(cur))
    return [max_visible_segment(pos[g], d, inst.env) for g, d in samples[s].items()]


def test_alcove_counterclockwise_escape_path_is_certified():
    rep = simulate(ALCOVE, CCW, PITCH)
    assert rep.verdict == "EvasionFound"
    path = rep.path
    assert path[0][0] == 0
    assert ring_location(path[-1][1], ALCOVE.target.polygon) is not Location.OUTSIDE
    for (s0, p), (s1, q) in zip(path, path[1:]):
        assert s0 <= s1
        assert abs(p.x - q.x) + abs(p.y - q.y) == PITCH
        assert sees(p, q, ALCOVE.env)
        for seg in _lasers_at(ALCOVE, CCW, 16, s1):
            if seg is not None:
                assert segment_intersection(Segment(p, q), seg) is None


def test_empty_schedule_has_stationary_intruder():
    sched = Schedule(CW.guards, CW.critical, CW.start, [])
    rep = simulate(ALCOVE, sched, PITCH)
    assert rep.verdict == "EvasionFound"
    assert len(rep.path) == 1 and rep.path[0][0] == 0


def test_refining_keeps_the_escape():
    for pitch in (PITCH, PITCH / 2):
        assert simulate(ALCOVE, CCW, pitch, 32).evasion


def test_time_reversal():
    fwd, back = check_time_reversal(ALCOVE, CW, PITCH)
    assert not fwd.evasion and back.evasion
    # a sweep of the whole square from a corner works both ways
    sq = unit_square(guard=(0, 0))
    sched = plan(sq).schedule
    fwd, back = check_time_reversal(sq, sched, Fraction(1, 2))
    assert not fwd.evasion and not back.evasion
    # no moves: both directions are the same run
    still = Schedule(CW.guards, CW.critical, CW.start, [])
    fwd, back = check_time_reversal(ALCOVE, still, PITCH)
    assert fwd.verdict == back.verdict and fwd.final_contaminated == back.final_contaminated


def test_point_target_uses_probe():
    inst = Instance(ALCOVE.env, ALCOVE.guards, TargetSpec.at_point(Fraction(61, 10), Fraction(3, 2)))
    res = plan(inst)
    rep = simulate(inst, res.schedule, PITCH)
    assert rep.goal_nodes == 1 and not rep.evasion


def test_rejects_mismatched_schedule():
    sched = Schedule(["x"], {"x": [Direction(1, 0), Direction(0, 1)]}, {"x": 0}, [])
    with pytest.raises(ValueError):
        simulate(ALCOVE, sched, PITCH)
    with pytest.raises(ValueError):
        simulate(ALCOVE, CW, PITCH, steps_per_move=1)
    bad = Schedule(CW.guards, CW.critical, CW.start, [Move("g", 3, 4, Sense.CCW)])
    with pytest.raises(ValueError):
        simulate(ALCOVE, bad, PITCH)
