import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import hole_instance
from searchlight.environment import (FormatError, Guard, Instance, InvalidInstance, PolygonWithHoles, TargetSpec,
                                     check_instance, load_instance, parse_rational, read_instance, save_instance,
                                     validate_instance, write_instance)
from searchlight.figures import alcove_room, double_alcove_room
from searchlight.generate import random_instance
from searchlight.geometry import Location, point_in_region, pt


def _square(guard=(2, 2), target=None):
    env = PolygonWithHoles([pt(0, 0), pt(4, 0), pt(4, 4), pt(0, 4)])
    return Instance(env, [Guard("g", pt(*guard))], target or TargetSpec.whole())


def test_alcove_room_is_valid():
    assert validate_instance(alcove_room()) == []
    assert validate_instance(double_alcove_room(corner_guard=True, pinned=True)) == []


def test_guard_outside():
    bad = validate_instance(_square(guard=(5, 5)))
    assert [v.kind for v in bad] == ["guard outside"]
    assert bad[0].witness == pt(5, 5)
    with pytest.raises(InvalidInstance):
        check_instance(_square(guard=(5, 5)))


def test_target_protruding_has_witness():
    t = TargetSpec.region([pt(3, 1), pt(6, 1), pt(6, 2), pt(3, 2)])
    bad = validate_instance(_square(target=t))
    assert bad and bad[0].kind == "target escaping P"
    # oracle: the witness is a target vertex outside P or a point on the boundary
    assert point_in_region(bad[0].witness, _square().env) is not Location.INSIDE


def test_target_crossing_a_notch():
    # both target vertices inside, the edge between them leaves P
    env = PolygonWithHoles([pt(0, 0), pt(2, 0), pt(2, 2), pt(3, 2), pt(3, 0), pt(5, 0), pt(5, 4), pt(0, 4)])
    t = TargetSpec.region([pt(1, 1), pt(4, 1), pt(4, 3), pt(1, 3)])
    bad = validate_instance(Instance(env, [Guard("g", pt(1, 3))], t))
    assert bad and bad[0].kind == "target escaping P"
    assert bad[0].witness in (pt(2, 1), pt(3, 1))


def test_other_violations():
    env = PolygonWithHoles([pt(0, 0), pt(4, 0), pt(0, 4), pt(4, 4)])  # bow tie
    assert any(v.kind == "non-simple ring" for v in validate_instance(Instance(env, [Guard("g", pt(1, 1))],
                                                                                TargetSpec.whole())))
    sq = _square()
    dup = Instance(sq.env, [Guard("g", pt(1, 1)), Guard("g", pt(2, 1))], TargetSpec.whole())
    assert [v.kind for v in validate_instance(dup)] == ["duplicate guard id"]
    holes = PolygonWithHoles(sq.env.outer, [[pt(1, 1), pt(3, 1), pt(3, 3), pt(1, 3)],
                                            [pt(2, 2), pt(3, 2), pt(3, 3), pt(2, 3)]])
    assert any(v.kind == "holes overlap" for v in validate_instance(Instance(holes, [Guard("g", pt(0, 0))],
                                                                             TargetSpec.whole())))


def test_parse_rational():
    assert parse_rational("1/3") == Fraction(1, 3)
    assert parse_rational(" -7 / 2 ") == Fraction(-7, 2)
    assert parse_rational(5) == 5
    with pytest.raises(FormatError, match="zero denominator"):
        parse_rational("1/0")
    for bad in ("0.5", "1e3", True, 2.5, "x"):
        with pytest.raises(FormatError):
            parse_rational(bad)


def test_round_trip_examples(tmp_path):
    inst = alcove_room()
    assert load_instance(save_instance(inst)) == inst
    p = tmp_path / "i.json"
    write_instance(hole_instance(), p)
    assert read_instance(p) == hole_instance()
    pinned = double_alcove_room(corner_guard=True, pinned=True)
    assert load_instance(save_instance(pinned)) == pinned


def test_malformed_documents():
    good = json.loads(save_instance(alcove_room()))
    for mutate in (
        lambda d: d.pop("outer"),
        lambda d: d["guards"][0].pop("x"),
        lambda d: d["target"].update(mode="blob"),
        lambda d: d["outer"][0].append("1"),
        lambda d: d["guards"][0].update(pinned_start=["0", "0"]),
    ):
        d = json.loads(json.dumps(good))
        mutate(d)
        with pytest.raises(FormatError):
            load_instance(json.dumps(d))
    with pytest.raises(FormatError):
        load_instance("{not json")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_random_round_trip_and_totality(seed):
    inst = random_instance(random.Random(seed))
    assert validate_instance(inst) == []
    assert load_instance(save_instance(inst)) == inst
    assert validate_instance(inst) == validate_instance(inst)


@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=3, max_size=6),
       st.tuples(st.integers(-1, 7), st.integers(-1, 7)))
@settings(max_examples=100, deadline=None)
def test_validate_total(ring, g):
    # every raw input yields either no violations or a nonempty list; never an exception
    try:
        env = PolygonWithHoles([pt(*p) for p in ring])
    except ValueError:
        return
    out = validate_instance(Instance(env, [Guard("g", pt(*g))], TargetSpec.whole()))
    assert isinstance(out, list)
    if not out:
        assert check_instance(Instance(env, [Guard("g", pt(*g))], TargetSpec.whole()))
