import random
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import hole_instance
from searchlight.decomposition import blocked_portals, build_decomposition, goal_cells, never_visible_cells
from searchlight.environment import Instance, TargetSpec
from searchlight.figures import alcove_room, double_alcove_room, unit_square
from searchlight.generate import random_instance
from searchlight.geometry import orient
from searchlight.planner import (ChainError, Dynamics, Move, ResourceExhausted, Schedule, SearchState, Sense, Solved,
                                 Unsolvable, apply_move, closure, goal_reached, initial_state, plan, replay,
                                 start_tuples)

ALCOVE = alcove_room()
ALCOVE_DEC = build_decomposition(ALCOVE)


def reachable(dec, limit=20_000):
    dyn = Dynamics(dec)
    seen = set()
    queue = deque()
    for a in start_tuples(dec):
        s = initial_state(dec, a)
        seen.add(s)
        queue.append(s)
    while queue and len(seen) < limit:
        s = queue.popleft()
        for gi, gid in enumerate(dec.instance.guard_ids):
            n = len(dec.critical[gid])
            if n < 2:
                continue
            a = s.angles[gi]
            for sense, to in ((Sense.CW, (a - 1) % n), (Sense.CCW, (a + 1) % n)):
                t = dyn.apply(s, gi, to, sense)
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
    return seen


# ------------------------------------------------------------------ states and closure


def test_initial_state():
    s = initial_state(ALCOVE_DEC, [0])
    assert all(s.is_contaminated(c) for c in range(ALCOVE_DEC.n_cells))
    assert s == initial_state(ALCOVE_DEC, [0]) and hash(s) == hash(initial_state(ALCOVE_DEC, [0]))
    assert s != initial_state(ALCOVE_DEC, [1])


def test_closure_examples():
    dec = ALCOVE_DEC
    assert closure(dec, set(), frozenset()) == frozenset()
    assert closure(dec, {0}, frozenset()) == frozenset(range(dec.n_cells))  # P is connected
    # a laser through the alcove mouth and the alcove's inner corner seals the hidden pocket
    hidden = never_visible_cells(dec)
    mouth = next(i for i, d in enumerate(dec.critical["g"]) if (d.dx, d.dy) == (-5, -3))
    blocked = blocked_portals(dec, {"g": dec.critical["g"][mouth]})
    reach = closure(dec, hidden, blocked)
    g = ALCOVE.guards[0].position
    tip = g + dec.critical["g"][mouth]
    for c in hidden:
        if orient(g, tip, dec.cells[c].sample) > 0:
            # the pocket below the laser is sealed completely
            assert closure(dec, {c}, blocked) == {c}
    assert len(reach) < dec.n_cells
    assert not reach & goal_cells(dec, ALCOVE.target)
    # without the laser the pocket leaks everywhere
    assert closure(dec, hidden, frozenset()) == frozenset(range(dec.n_cells))


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(0, ALCOVE_DEC.n_cells - 1)), st.sets(st.integers(0, len(ALCOVE_DEC.portals) - 1)),
       st.sets(st.integers(0, ALCOVE_DEC.n_cells - 1)), st.sets(st.integers(0, len(ALCOVE_DEC.portals) - 1)))
def test_closure_properties(c1, b1, c2, b2):
    dec = ALCOVE_DEC
    b1, b2 = frozenset(b1), frozenset(b2)
    k = closure(dec, c1, b1)
    assert k >= c1
    assert closure(dec, k, b1) == k
    assert closure(dec, c1 | c2, b1) >= k
    assert closure(dec, c1, b1 & b2) >= k


# ------------------------------------------------------------------ moves


def _sweep(dec, start, sense, k):
    dyn = Dynamics(dec)
    n = len(dec.critical["g"])
    s = initial_state(dec, [start])
    step = 1 if sense is Sense.CCW else -1
    for _ in range(k):
        a = s.angles[0]
        s = apply_move(dec, s, Move("g", a, (a + step) % n, sense), dyn)
    return s


def test_alcove_clockwise_sweep_clears_target():
    goal = goal_cells(ALCOVE_DEC, ALCOVE.target)
    assert goal_reached(_sweep(ALCOVE_DEC, 0, Sense.CW, 4), goal)


def test_alcove_counterclockwise_never_clears_target():
    goal = goal_cells(ALCOVE_DEC, ALCOVE.target)
    n = len(ALCOVE_DEC.critical["g"])
    for start in range(n):
        for k in range(1, n + 1):
            assert not goal_reached(_sweep(ALCOVE_DEC, start, Sense.CCW, k), goal)


def test_empty_laser_move_only_closes():
    dec = ALCOVE_DEC
    dirs = dec.critical["g"]
    k = next(k for k in range(len(dirs)) if dec.wedge("g", k).empty)
    frm, to = (k + 1) % len(dirs), k
    # a partly cleared state, reached by the clockwise sweep
    s = _sweep(dec, 0, Sense.CW, 4)
    s = SearchState((frm,), s.contaminated) if s.angles[0] != frm else s
    t = apply_move(dec, s, Move("g", frm, to, Sense.CW))
    before = {c for c in range(dec.n_cells) if s.is_contaminated(c)}
    after = {c for c in range(dec.n_cells) if t.is_contaminated(c)}
    assert after >= before
    assert after == closure(dec, before, blocked_portals(dec, {"g": dirs[to]}))


def test_apply_move_rejects_bad_chain():
    s = initial_state(ALCOVE_DEC, [0])
    with pytest.raises(ChainError):
        apply_move(ALCOVE_DEC, s, Move("g", 1, 2, Sense.CCW))
    with pytest.raises(ChainError):
        apply_move(ALCOVE_DEC, s, Move("g", 0, 2, Sense.CCW))


def test_goal_reached_examples():
    dec = ALCOVE_DEC
    clear = SearchState((0,), 0)
    full = initial_state(dec, [0])
    assert goal_reached(clear, goal_cells(dec, ALCOVE.target))
    assert goal_reached(clear, frozenset())
    assert not goal_reached(full, goal_cells(dec, ALCOVE.target))
    # whole-polygon goal is the plain search criterion: every cell clear
    assert goal_cells(dec, TargetSpec.whole()) == frozenset(range(dec.n_cells))


# ------------------------------------------------------------------ planning


def test_plan_alcove_clockwise():
    res = plan(ALCOVE)
    assert isinstance(res, Solved)
    assert res.schedule.moves and all(m.sense is Sense.CW for m in res.schedule.moves)
    # the laser passes the alcove mouth before it reaches the target
    d = [res.schedule.direction("g", m.to_index) for m in res.schedule.moves]
    assert d[-1].dx > 0


def test_plan_double_alcove_unsolvable():
    assert isinstance(plan(double_alcove_room()), Unsolvable)


def test_plan_corner_guard_points_down_first():
    res = plan(double_alcove_room(corner_guard=True, pinned=True))
    assert isinstance(res, Solved)
    first = res.schedule.moves[0]
    assert first.guard == "h"
    assert res.schedule.direction("h", first.to_index).dy < 0


def test_plan_budget():
    res = plan(ALCOVE, max_states=1)
    assert isinstance(res, ResourceExhausted) and res.reason == "state limit"
    res = plan(double_alcove_room(), max_time=0)
    assert isinstance(res, (ResourceExhausted, Unsolvable))


def test_time_reversal_fails_on_replay():
    sched = plan(ALCOVE).schedule
    goal = goal_cells(ALCOVE_DEC, ALCOVE.target)
    assert goal_reached(replay(ALCOVE_DEC, sched), goal)
    assert not goal_reached(replay(ALCOVE_DEC, sched.reversed()), goal)


def test_square_sweep_is_time_symmetric():
    inst = unit_square(guard=(0, 0))
    dec = build_decomposition(inst)
    res = plan(inst)
    assert isinstance(res, Solved)
    assert goal_reached(replay(dec, res.schedule.reversed()), goal_cells(dec, inst.target))


RANDOM = [random_instance(random.Random(s), max_guards=2) for s in range(15)]


@pytest.mark.parametrize("inst", RANDOM + [hole_instance()])
def test_solved_schedules_replay(inst):
    dec = build_decomposition(inst)
    res = plan(inst, max_states=50_000)
    if isinstance(res, Solved):
        res.schedule.check_chain()
        goal = goal_cells(dec, inst.target)
        assert goal_reached(replay(dec, res.schedule), goal)
        assert replay(dec, res.schedule) == replay(dec, res.schedule)


@pytest.mark.parametrize("inst", [ALCOVE, double_alcove_room(), hole_instance()] + RANDOM[:6])
def test_never_visible_cells_stay_contaminated(inst):
    dec = build_decomposition(inst)
    hidden = never_visible_cells(dec)
    for s in reachable(dec, limit=5000):
        assert all(s.is_contaminated(c) for c in hidden)


def test_schedule_round_trip_and_chain():
    sched = plan(ALCOVE).schedule
    assert Schedule.loads(sched.dumps()) == sched
    assert Schedule.from_dict(sched.reversed().to_dict()) == sched.reversed()
    assert sched.reversed().reversed() == sched
    bad = Schedule(sched.guards, sched.critical, sched.start, [Move("g", 5, 6, Sense.CCW)])
    with pytest.raises(ChainError):
        bad.check_chain()
