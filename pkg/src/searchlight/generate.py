"""Random small instances for regression and agreement testing."""
from __future__ import annotations

import math
import random
from fractions import Fraction

from .environment import Guard, Instance, PolygonWithHoles, TargetSpec, validate_instance
from .geometry import Location, Point, point_in_region


def _star_polygon(rng: random.Random, k: int, size: int):
    cx, cy = Fraction(size, 2) + Fraction(1, 3), Fraction(size, 2) + Fraction(1, 7)
    pts = set()
    while len(pts) < k:
        pts.add((rng.randint(0, size), rng.randint(0, size)))
    ring = sorted(pts, key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
    return [Point(Fraction(x), Fraction(y)) for x, y in ring], Point(cx, cy)


def _orthogonal_polygon(rng: random.Random, size: int):
    # staircase-free rectangle with up to two rectangular notches cut in
    w, h = rng.randint(4, size), rng.randint(3, size)
    ring = [(0, 0), (w, 0), (w, h), (0, h)]
    if rng.random() < 0.7:
        a = rng.randint(1, w - 2)
        b = rng.randint(a + 1, w - 1)
        d = rng.randint(1, h - 1)
        ring = [(0, 0), (a, 0), (a, d), (b, d), (b, 0), (w, 0), (w, h), (0, h)]
    if rng.random() < 0.5:
        a = rng.randint(1, w - 2)
        b = rng.randint(a + 1, w - 1)
        d = rng.randint(1, h - 1)
        top = [(w, h), (b, h), (b, h - d), (a, h - d), (a, h), (0, h)]
        ring = ring[:-2] + top
    return [Point(Fraction(x), Fraction(y)) for x, y in ring]


def _random_inside(rng, env, size, tries=200):
    for _ in range(tries):
        p = Point(Fraction(rng.randint(0, 2 * size), 2), Fraction(rng.randint(0, 2 * size), 2))
        if point_in_region(p, env) is Location.INSIDE:
            return p
    return None


def random_instance(rng: random.Random, max_vertices: int = 12, max_guards: int = 3, size: int = 8) -> Instance:
    """A valid instance with a simple outer boundary and no holes."""
    while True:
        if rng.random() < 0.5:
            outer = _orthogonal_polygon(rng, size)
        else:
            outer, _ = _star_polygon(rng, rng.randint(4, max_vertices), size)
        try:
            env = PolygonWithHoles(outer)
        except ValueError:
            continue
        if env.area() == 0:
            continue
        guards = []
        for i in range(rng.randint(1, max_guards)):
            r = rng.random()
            verts = env.vertices
            if r < 0.45:
                p = rng.choice(verts)
            elif r < 0.75:
                a, b = rng.choice(env.edges)
                p = Point((a.x + b.x) / 2, (a.y + b.y) / 2)
            else:
                p = _random_inside(rng, env, size)
            if p is None or any(g.position == p for g in guards):
                continue
            guards.append(Guard(f"g{i}", p))
        if not guards:
            continue
        r = rng.random()
        if r < 0.2:
            target = TargetSpec.whole()
        elif r < 0.35:
            p = _random_inside(rng, env, size)
            if p is None:
                continue
            target = TargetSpec.at_point(p.x, p.y)
        else:
            p = _random_inside(rng, env, size)
            if p is None:
                continue
            s = Fraction(1, 2)
            target = TargetSpec.region([
                Point(p.x - s, p.y - s), Point(p.x + s, p.y - s),
                Point(p.x + s, p.y + s), Point(p.x - s, p.y + s),
            ])
        inst = Instance(env, guards, target)
        if not validate_instance(inst):
            return inst
