"""End-to-end acceptance criteria, one test each.

Each test prints a PASS/FAIL line in the terminal summary under
"acceptance criteria".
"""
import random
import time
from fractions import Fraction

import pytest

from conftest import hole_instance
from test_ncl import oracle_components, oracle_legal
from searchlight.decomposition import build_decomposition, laser_alignment_violations
from searchlight.figures import ALCOVE_WIDTH, alcove_room, double_alcove_room
from searchlight.generate import random_instance
from searchlight.ncl import (EenclInstance, Orientation, random_legal_trace, random_machine, serialize_trace,
                             solve_eencl, solve_eencl_once, trace_final)
from searchlight.planner import Sense, Solved, Unsolvable, plan
from searchlight.reducer import BIT_CONSTANT, BIT_OFFSET, bit_bound, reduce, smallest_instance, \
    structural_checks, two_vertex_instance, witness_schedule
from searchlight.verifier import default_pitch, simulate

F, S = Orientation.TO_FIRST, Orientation.TO_SECOND


def _note(request, text):
    request.node.criterion_detail = text


def _timed(fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t


@pytest.mark.criterion(1, "alcove room triptych")
def test_criterion_1_triptych(request):
    a, ta = _timed(plan, alcove_room())
    assert isinstance(a, Solved)
    assert all(m.sense is Sense.CW for m in a.schedule.moves) and set(a.schedule.guards) == {"g"}
    b, tb = _timed(plan, double_alcove_room())
    assert isinstance(b, Unsolvable)
    c, tc = _timed(plan, double_alcove_room(corner_guard=True, pinned=True))
    assert isinstance(c, Solved)
    first = c.schedule.moves[0]
    assert first.guard == "h" and c.schedule.direction("h", first.to_index).dy < 0
    assert max(ta, tb, tc) < 1
    _note(request, f"{ta:.2f} s, {tb:.2f} s, {tc:.2f} s")


@pytest.mark.criterion(2, "time-reversal asymmetry")
def test_criterion_2_time_reversal(request):
    inst = alcove_room()
    sched = plan(inst).schedule
    pitch = Fraction(ALCOVE_WIDTH, 4)
    assert simulate(inst, sched, default_pitch(inst)).verdict == "NoEvasionFound"
    assert simulate(inst, sched, pitch).verdict == "NoEvasionFound"
    back = simulate(inst, sched.reversed(), pitch)
    assert back.verdict == "EvasionFound"
    _note(request, f"reversed schedule refuted at pitch {pitch}")


@pytest.mark.criterion(3, "planner and verifier agree on random instances")
def test_criterion_3_agreement(request):
    start = time.perf_counter()
    counts = {"Solved": 0, "Unsolvable": 0, "ResourceExhausted": 0}
    disagreements = []
    n = 50
    for seed in range(n):
        inst = random_instance(random.Random(seed), max_vertices=12, max_guards=3)
        assert len(inst.guards) <= 3 and len(inst.env.vertices) <= 12
        res = plan(inst, max_states=200_000)
        counts[type(res).__name__] += 1
        if not isinstance(res, Solved):
            continue
        pitch = default_pitch(inst)
        for p in (pitch, pitch / 2):
            if simulate(inst, res.schedule, p).evasion:
                disagreements.append((seed, p))
    elapsed = time.perf_counter() - start
    assert not disagreements, disagreements
    assert counts["Solved"] > 0
    assert elapsed < 300
    _note(request, f"{n} instances, {counts['Solved']} solved and verified at two pitches, "
                   f"{counts['Unsolvable']} unsolvable, {counts['ResourceExhausted']} over budget")


@pytest.mark.criterion(4, "decomposition exactness")
def test_criterion_4_decomposition(request):
    suite = [alcove_room(), double_alcove_room(), double_alcove_room(corner_guard=True), hole_instance()]
    rng = random.Random(4)
    suite += [random_instance(rng) for _ in range(20)]
    pairs = 0
    for inst in suite:
        dec = build_decomposition(inst)
        assert dec.total_area() == inst.env.area()
        assert laser_alignment_violations(dec) == []
        pairs += sum(len(d) for d in dec.critical.values())
    _note(request, f"{len(suite)} instances, {pairs} guard/direction pairs")


@pytest.mark.criterion(5, "EE-NCL solver agrees with brute force")
def test_criterion_5_ncl(request):
    start = time.perf_counter()
    rng = random.Random(5)
    n = solvable = 0
    while n < 200:
        m = random_machine(rng, max_edges=8)
        if m.n_edges < 2:
            continue
        a, b = rng.sample(range(m.n_edges), 2)
        inst = EenclInstance(m, a, rng.choice([F, S]), b, rng.choice([F, S]))
        legal, find = oracle_components(m)
        b_roots = {find(c) for c in legal if c[b] == inst.target_b}
        want = any(find(c) in b_roots for c in legal if c[a] == inst.target_a)
        seq = solve_eencl(inst)
        assert (seq is not None) == want
        if seq is not None:
            assert all(oracle_legal(m, c) for c in seq.configs())
            assert seq.initial[a] == inst.target_a and seq.final()[b] == inst.target_b
            solvable += 1
        n += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 60
    _note(request, f"{n} machines, {solvable} solvable")


@pytest.mark.criterion(6, "serialized traces stay legal")
def test_criterion_6_serialization(request):
    rng = random.Random(6)
    n = events = 0
    while n < 100:
        m = random_machine(rng, max_edges=10)
        trace = random_legal_trace(rng, m, steps=16)
        if trace is None or not trace.events:
            continue
        seq = serialize_trace(m, trace)
        assert all(oracle_legal(m, c) for c in seq.configs())
        assert seq.final() == trace_final(trace)
        n += 1
        events += len(trace.events)
    _note(request, f"{n} traces, {events} reversal events")


def _machines_for_7():
    # seeds picked so the sizes span 3..10 edges while the suite stays a few minutes long
    out = [smallest_instance(), two_vertex_instance()]
    for seed in (1000, 1001, 1002, 1005, 1007):
        rng = random.Random(seed)
        m = random_machine(rng, max_edges=10)
        a, b = rng.sample(range(m.n_edges), 2)
        out.append(EenclInstance(m, a, rng.choice([F, S]), b, rng.choice([F, S])))
    return out


@pytest.mark.criterion(7, "reduction structural suite")
def test_criterion_7_structure(request):
    checks = worst_ratio = 0
    sizes = []
    failures = []
    for eencl in _machines_for_7():
        n = eencl.machine.n_edges
        assert n <= 10
        out = reduce(eencl)
        rep = structural_checks(out)
        failures += [(n, r.name, r.detail) for r in rep.failures]
        checks += len(rep.results)
        sizes.append(n)
        bits = next(r for r in rep.results if r.name.startswith("coordinate bit length"))
        worst = int(bits.detail.split()[1])
        worst_ratio = max(worst_ratio, worst / bit_bound(n))
    assert not failures, failures
    assert max(sizes) == 10
    _note(request, f"{len(sizes)} machines with {min(sizes)}..{max(sizes)} edges, {checks} checks, "
                   f"bits at most {worst_ratio:.0%} of {BIT_CONSTANT}(|E| log2(|E|+1) + {BIT_OFFSET})")


@pytest.mark.criterion(8, "witness schedule end to end")
def test_criterion_8_witness(request):
    eencl = smallest_instance()
    sol = solve_eencl_once(eencl)
    out = reduce(eencl)
    sched = witness_schedule(out, sol)
    assert witness_schedule(out, sol) == sched
    pitch = default_pitch(out.instance)
    rep, secs = _timed(simulate, out.instance, sched, pitch)
    assert rep.verdict == "NoEvasionFound", rep.summary()
    assert secs < 600
    _note(request, f"{len(sched.moves)} moves verified at pitch {pitch} in {secs:.0f} s")
