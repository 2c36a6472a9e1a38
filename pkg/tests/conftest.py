import random
from fractions import Fraction

import pytest

from searchlight.environment import Guard, Instance, PolygonWithHoles, TargetSpec
from searchlight.geometry import Location, Segment, point_in_region, pt, segment_intersection


def square_with_hole():
    outer = [pt(0, 0), pt(8, 0), pt(8, 8), pt(0, 8)]
    hole = [pt(3, 3), pt(5, 3), pt(5, 5), pt(3, 5)]
    return PolygonWithHoles(outer, [hole])


def hole_instance():
    env = square_with_hole()
    return Instance(env, [Guard("g", pt(1, 1)), Guard("h", pt(7, 7))], TargetSpec.whole())


def pieces_inside(p, q, env):
    """Split pq at every boundary contact and classify each open piece by its midpoint."""
    ts = {Fraction(0), Fraction(1)}
    dx, dy = q[0] - p[0], q[1] - p[1]
    dd = dx * dx + dy * dy
    for a, b in env.edges:
        hit = segment_intersection(Segment(p, q), Segment(a, b))
        pts = [] if hit is None else list(hit) if isinstance(hit, Segment) else [hit]
        for h in pts:
            ts.add(Fraction((h[0] - p[0]) * dx + (h[1] - p[1]) * dy) / dd)
    ts = sorted(ts)
    out = []
    for t0, t1 in zip(ts, ts[1:]):
        m = (t0 + t1) / 2
        out.append((t0, t1, point_in_region(pt(p[0] + m * dx, p[1] + m * dy), env) is not Location.OUTSIDE))
    return out


def oracle_sees(p, q, env):
    if point_in_region(p, env) is Location.OUTSIDE or point_in_region(q, env) is Location.OUTSIDE:
        return False
    return all(ok for _, _, ok in pieces_inside(p, q, env))


def oracle_ray_end(origin, d, env):
    """Far end of the visible piece along d, or None when the first piece is outside."""
    x0, y0, x1, y1 = env.bbox()
    span = (x1 - x0) + (y1 - y0) + 1
    n = max(abs(d[0]), abs(d[1]))
    far = pt(origin[0] + d[0] * span / n * 2, origin[1] + d[1] * span / n * 2)
    end = None
    for t0, t1, ok in pieces_inside(origin, far, env):
        if not ok:
            break
        end = t1
    if end is None:
        return None
    return pt(origin[0] + end * (far[0] - origin[0]), origin[1] + end * (far[1] - origin[1]))


@pytest.fixture
def rng():
    return random.Random(12345)


# ------------------------------------------------------------------ acceptance reporting

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    if rep.failed or (rep.when == "call" and number not in _CRITERIA):
        detail = getattr(item, "criterion_detail", "")
        _CRITERIA[number] = (title, "PASS" if rep.passed else "FAIL", detail, call.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict, detail, secs = _CRITERIA[number]
        extra = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"criterion {number} {verdict}: {title}{extra} [{secs:.1f} s]")
