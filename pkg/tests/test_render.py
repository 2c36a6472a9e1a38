import re
import xml.etree.ElementTree as ET

from conftest import hole_instance
from searchlight.decomposition import build_decomposition
from searchlight.figures import alcove_room, unit_square
from searchlight.geometry import Direction
from searchlight.planner import plan
from searchlight.reducer import reduce, smallest_instance
from searchlight.render import render_decomposition, render_instance, render_metadata, render_schedule

NS = "{http://www.w3.org/2000/svg}"


def _tags(svg):
    root = ET.fromstring(svg)
    assert root.tag == NS + "svg"
    return [el.tag[len(NS):] for el in root.iter()]


def test_instance_shows_polygon_holes_guards_target():
    inst = hole_instance()
    svg = render_instance(inst)
    tags = _tags(svg)
    assert tags.count("circle") == len(inst.guards)
    assert 'fill-rule="evenodd"' in svg
    outline = re.search(r'<path d="([^"]*)"', svg).group(1)
    assert outline.count("M ") == 1 + len(inst.env.holes)
    region = render_instance(alcove_room())
    assert region.count("<path") == 2  # the polygon and the shaded target
    with_laser = render_instance(alcove_room(), directions={"g": Direction(1, 0)})
    assert _tags(with_laser).count("line") == 1


def test_precision_controls_digits():
    coarse, fine = render_instance(alcove_room(), precision=1), render_instance(alcove_room(), precision=5)
    assert re.search(r'cx="\d+\.\d{1}"', coarse) and re.search(r'cx="\d+\.\d{5}"', fine)


def test_decomposition_has_cells_and_rays():
    dec = build_decomposition(unit_square())
    tags = _tags(render_decomposition(dec))
    assert tags.count("path") == 1 + dec.n_cells
    rays = sum(1 for seg in dec.lasers.values() if seg is not None)
    assert tags.count("line") == rays
    # one label per cell plus one per guard
    assert tags.count("text") == dec.n_cells + len(dec.instance.guards)


def test_one_frame_per_move():
    inst = alcove_room()
    sched = plan(inst).schedule
    frames = render_schedule(inst, sched)
    assert len(frames) == len(sched.moves) + 1
    for f in frames:
        assert _tags(f).count("line") == 1
    assert "start" in frames[0] and "after move 1" in frames[1]


def test_metadata_render_parses():
    out = reduce(smallest_instance())
    tags = _tags(render_metadata(out.instance, out.metadata, precision=2))
    pinned = sum(1 for g in out.instance.guards if g.pinned_start is not None)
    assert tags.count("line") <= pinned and tags.count("path") > len(out.metadata.pipes)
