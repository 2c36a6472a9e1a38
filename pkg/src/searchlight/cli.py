"""Command-line interface: ``searchlight <command> ...``.

Exit codes: 0 when the command's verdict is positive (Solved, NoEvasionFound,
all checks pass, legal), 1 when it is negative, 2 for unreadable input or bad
usage, 3 when a search ran out of budget.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import figures, ncl, render
from .decomposition import build_decomposition
from .environment import (FormatError, Instance, TargetSpec, instance_from_dict, instance_to_dict,
                          loads_json, parse_rational, validate_instance)
from .generate import random_instance
from .planner import ResourceExhausted, Schedule, Solved, plan
from .verifier import default_pitch, simulate

log = logging.getLogger("searchlight")

OK, NEGATIVE, PARSE_ERROR, EXHAUSTED = 0, 1, 2, 3


@dataclass
class CommandOutcome:
    code: int
    report: str
    artifacts: list = field(default_factory=list)


class _InputError(Exception):
    pass


def _read_json(path):
    try:
        return loads_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise _InputError(f"{path}: {exc.strerror}") from exc
    except FormatError as exc:
        raise _InputError(f"{path}: {exc}") from exc


def _parse(path, parser):
    data = _read_json(path)
    try:
        return parser(data)
    except (FormatError, ValueError, KeyError, TypeError) as exc:
        raise _InputError(f"{path}: {exc}") from exc


def _instance(path) -> Instance:
    return _parse(path, instance_from_dict)


def _machine(path):
    """An EE-NCL instance, or a bare machine when the file names no distinguished edges."""
    def parse(data):
        if isinstance(data, dict) and "a" not in data and "b" not in data:
            vertices = [ncl.Vertex(ncl.Kind(v["kind"]), v.get("output")) for v in data["vertices"]]
            return ncl.NclMachine(vertices, [tuple(e) for e in data["edges"]])
        return ncl.machine_from_dict(data)
    return _parse(path, parse)


def _bare_machine(m) -> dict:
    return {
        "vertices": [{"kind": v.kind.value, **({"output": v.output} if v.kind is ncl.Kind.AND else {})}
                     for v in m.vertices],
        "edges": [list(e) for e in m.edges],
    }


def _write(path, text) -> str:
    Path(path).write_text(text, encoding="utf-8")
    return str(path)


def _write_json(path, data) -> str:
    ncl.dump_json_file(path, data)
    return str(path)


def _q(text) -> Fraction:
    try:
        return parse_rational(text)
    except FormatError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


# ------------------------------------------------------------------ commands


def cmd_validate(args) -> CommandOutcome:
    inst = _instance(args.instance)
    bad = validate_instance(inst)
    if bad:
        return CommandOutcome(NEGATIVE, "invalid instance:\n" + "\n".join(f"  {v}" for v in bad))
    return CommandOutcome(OK, f"valid instance: {len(inst.env.vertices)} vertices, {len(inst.guards)} guards")


def cmd_plan(args) -> CommandOutcome:
    inst = _instance(args.instance)
    bad = validate_instance(inst)
    if bad:
        return CommandOutcome(NEGATIVE, "invalid instance:\n" + "\n".join(f"  {v}" for v in bad))
    if args.goal_whole:
        inst = Instance(inst.env, inst.guards, TargetSpec.whole())
    elif args.goal_point:
        inst = Instance(inst.env, inst.guards, TargetSpec.at_point(*args.goal_point))
    if args.jobs > 1:
        log.info("the planner runs single-threaded; --jobs is ignored")
    res = plan(inst, max_states=args.max_states, max_time=args.max_time)
    if isinstance(res, ResourceExhausted):
        return CommandOutcome(EXHAUSTED, f"ResourceExhausted ({res.reason}) after {res.states_explored} states")
    if not isinstance(res, Solved):
        return CommandOutcome(NEGATIVE, f"Unsolvable ({res.states_explored} states explored)")
    lines = [f"Solved: {len(res.schedule.moves)} moves, {res.states_explored} states explored"]
    lines += [f"  {m.guard}: {m.from_index} -> {m.to_index} {m.sense.value}" for m in res.schedule.moves]
    arts = [_write(args.out, res.schedule.dumps())] if args.out else []
    return CommandOutcome(OK, "\n".join(lines), arts)


def cmd_verify(args) -> CommandOutcome:
    inst = _instance(args.instance)
    sched = _parse(args.schedule, Schedule.from_dict)
    if args.reverse:
        sched = sched.reversed()
    pitch = args.pitch if args.pitch is not None else default_pitch(inst)
    try:
        rep = simulate(inst, sched, pitch, args.steps_per_move)
    except ValueError as exc:
        raise _InputError(str(exc)) from exc
    arts = []
    if args.out:
        arts.append(_write(args.out, rep.summary()))
    if args.frames:
        for k, svg in enumerate(render.render_schedule(inst, sched, args.precision)):
            arts.append(_write(f"{args.frames}_{k:03d}.svg", svg))
    return CommandOutcome(NEGATIVE if rep.evasion else OK, rep.summary().rstrip(), arts)


def cmd_ncl(args) -> CommandOutcome:
    obj = _machine(args.machine)
    if args.ncl_command == "solve":
        if not isinstance(obj, ncl.EenclInstance):
            raise _InputError(f"{args.machine}: solving needs distinguished edges a and b")
        solver = ncl.solve_eencl_once if args.once else ncl.solve_eencl
        try:
            sol = solver(obj, max_edges=args.max_edges)
        except ncl.TooLarge as exc:
            return CommandOutcome(EXHAUSTED, f"ResourceExhausted: {exc}")
        if sol is None:
            return CommandOutcome(NEGATIVE, "no solution")
        arts = [_write_json(args.out, sol.to_dict())] if args.out else []
        return CommandOutcome(OK, f"solution with {len(sol.moves)} moves: {sol.moves}", arts)
    machine = obj.machine if isinstance(obj, ncl.EenclInstance) else obj
    trace = _parse(args.trace, ncl.AsyncTrace.from_dict)
    try:
        rep = ncl.check_async_trace(machine, trace)
    except ncl.TraceError as exc:
        return CommandOutcome(NEGATIVE, f"malformed trace: {exc}")
    if not rep.legal:
        return CommandOutcome(NEGATIVE, rep.describe())
    if args.ncl_command == "check-trace":
        return CommandOutcome(OK, "legal")
    seq = ncl.serialize_trace(machine, trace)
    arts = [_write_json(args.out, seq.to_dict())] if args.out else []
    return CommandOutcome(OK, f"serialized into {len(seq.moves)} moves: {seq.moves}", arts)


def cmd_reduce(args) -> CommandOutcome:
    from .reducer import LayoutError, LayoutParams, reduce, structural_checks, witness_schedule

    eencl = _machine(args.machine)
    if not isinstance(eencl, ncl.EenclInstance):
        raise _InputError(f"{args.machine}: the reduction needs distinguished edges a and b")
    given = {k: getattr(args, k) for k in ("corridor_width", "pipe_width", "nook_width", "nook_depth",
                                          "grid_pitch", "slot_spacing") if getattr(args, k) is not None}
    try:
        out = reduce(eencl, LayoutParams(**given))
    except LayoutError as exc:
        return CommandOutcome(NEGATIVE, f"layout failed: {exc}")
    checks = structural_checks(out, jobs=args.jobs)
    prefix = args.out or Path(args.machine).with_suffix("").name
    arts = [
        _write(f"{prefix}.instance.json", json.dumps(instance_to_dict(out.instance), indent=1) + "\n"),
        _write(f"{prefix}.meta.json", out.metadata.dumps() + "\n"),
        _write(f"{prefix}.checks.txt", checks.summary()),
    ]
    lines = [f"{len(out.instance.guards)} guards, {len(out.instance.env.vertices)} vertices",
             checks.summary().splitlines()[-1]]
    lines += [f"  FAIL {r.name}: {r.detail}" for r in checks.failures]
    if args.witness:
        sol = _parse(args.witness, ncl.MoveSeq.from_dict)
        try:
            sched = witness_schedule(out, sol)
        except ValueError as exc:
            return CommandOutcome(NEGATIVE, "\n".join(lines + [f"witness rejected: {exc}"]), arts)
        arts.append(_write(f"{prefix}.schedule.json", sched.dumps()))
        lines.append(f"witness schedule: {len(sched.moves)} moves")
    return CommandOutcome(OK if checks.ok else NEGATIVE, "\n".join(lines), arts)


def _kind(data) -> str:
    if isinstance(data, dict):
        if "outer" in data:
            return "instance"
        if data.get("$t") == "GadgetMetadata":
            return "metadata"
        if "guards" in data and "moves" in data:
            return "schedule"
    return "unknown"


def cmd_render(args) -> CommandOutcome:
    from .reducer import GadgetMetadata

    data = _read_json(args.artifact)
    kind = _kind(data)
    if kind == "unknown":
        raise _InputError(f"{args.artifact}: not an instance, schedule or metadata file")
    out = Path(args.out)
    if kind == "instance":
        inst = _parse(args.artifact, instance_from_dict)
        if args.decomposition:
            svg = render.render_decomposition(build_decomposition(inst), args.precision)
        else:
            svg = render.render_instance(inst, args.precision)
        return CommandOutcome(OK, f"wrote {out}", [_write(out, svg)])
    if not args.instance:
        raise _InputError(f"rendering a {kind} file needs --instance")
    inst = _instance(args.instance)
    if kind == "metadata":
        meta = _parse(args.artifact, GadgetMetadata.from_dict)
        return CommandOutcome(OK, f"wrote {out}", [_write(out, render.render_metadata(inst, meta, args.precision))])
    sched = _parse(args.artifact, Schedule.from_dict)
    stem = out.with_suffix("")
    arts = [_write(f"{stem}_{k:03d}.svg", svg)
            for k, svg in enumerate(render.render_schedule(inst, sched, args.precision))]
    return CommandOutcome(OK, f"wrote {len(arts)} frames", arts)


_FIGURES = {
    "fig1a": figures.alcove_room,
    "fig1b": figures.double_alcove_room,
    "fig1b-guard": lambda: figures.double_alcove_room(corner_guard=True, pinned=True),
}


def cmd_generate(args) -> CommandOutcome:
    from .reducer import smallest_instance, two_vertex_instance

    rng = random.Random(args.seed)
    what = args.what
    if what in _FIGURES or what == "instance":
        inst = _FIGURES[what]() if what in _FIGURES else random_instance(rng)
        doc = instance_to_dict(inst)
    elif what in ("smallest", "two-vertex", "machine"):
        if what == "machine":
            while True:
                m = ncl.random_machine(rng, max_edges=args.max_edges)
                if m.n_edges >= 2:
                    break
            a, b = rng.sample(range(m.n_edges), 2)
            eencl = ncl.EenclInstance(m, a, rng.choice([ncl.Orientation.TO_FIRST, ncl.Orientation.TO_SECOND]),
                                      b, rng.choice([ncl.Orientation.TO_FIRST, ncl.Orientation.TO_SECOND]))
        else:
            eencl = smallest_instance() if what == "smallest" else two_vertex_instance()
        doc = ncl.machine_to_dict(eencl)
    else:
        m = None
        while m is None or m.n_edges == 0:
            m = ncl.random_machine(rng, max_edges=args.max_edges)
        trace = ncl.random_legal_trace(rng, m)
        if trace is None:
            return CommandOutcome(NEGATIVE, "the machine has no legal configuration")
        if args.machine_out:
            _write_json(args.machine_out, _bare_machine(m))
        doc = trace.to_dict()
    text = json.dumps(doc, indent=1) + "\n"
    if args.out:
        return CommandOutcome(OK, f"wrote {args.out}", [_write(args.out, text)])
    return CommandOutcome(OK, text.rstrip())


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized tooling (default 0)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes where supported")

    p = argparse.ArgumentParser(prog="searchlight", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check an instance file")
    s.add_argument("instance")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("plan", parents=[common], help="search for a schedule")
    s.add_argument("instance")
    s.add_argument("--max-states", type=int, default=2_000_000)
    s.add_argument("--max-time", type=float, default=None, help="seconds")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--goal-whole", action="store_true", help="clear the whole polygon instead of the target")
    g.add_argument("--goal-point", nargs=2, type=_q, metavar=("X", "Y"), help="clear one point")
    s.add_argument("--out", help="schedule file to write")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("verify", parents=[common], help="simulate a schedule on a sampled free space")
    s.add_argument("instance")
    s.add_argument("schedule")
    s.add_argument("--pitch", type=_q, default=None, help="grid pitch, e.g. 1/4")
    s.add_argument("--steps-per-move", type=int, default=16)
    s.add_argument("--reverse", action="store_true", help="verify the time-reversed schedule")
    s.add_argument("--out", help="report file to write")
    s.add_argument("--frames", help="stem for per-move SVG frames")
    s.add_argument("--precision", type=int, default=3)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("ncl", help="constraint logic tools")
    nsub = s.add_subparsers(dest="ncl_command", required=True)
    n = nsub.add_parser("solve", parents=[common])
    n.add_argument("machine")
    n.add_argument("--max-edges", type=int, default=20)
    n.add_argument("--once", action="store_true",
                   help="only solutions reversing a first and b last, once each")
    n.add_argument("--out")
    for name in ("check-trace", "serialize"):
        n = nsub.add_parser(name, parents=[common])
        n.add_argument("machine")
        n.add_argument("trace")
        n.add_argument("--out")
    s.set_defaults(func=cmd_ncl)

    s = sub.add_parser("reduce", parents=[common], help="compile an EE-NCL instance into a searchlight instance")
    s.add_argument("machine")
    for name in ("corridor-width", "pipe-width", "nook-width", "nook-depth", "grid-pitch", "slot-spacing"):
        s.add_argument(f"--{name}", type=_q, default=None)
    s.add_argument("--witness", help="move sequence file; emits PREFIX.schedule.json")
    s.add_argument("--out", help="output prefix (default: machine file stem)")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("render", parents=[common], help="write an SVG of an artifact file")
    s.add_argument("artifact")
    s.add_argument("--out", required=True)
    s.add_argument("--instance", help="instance file, needed for schedules and metadata")
    s.add_argument("--decomposition", action="store_true", help="draw the cell decomposition")
    s.add_argument("--precision", type=int, default=3, help="decimal digits in the SVG")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("generate", parents=[common], help="write a sample input file")
    s.add_argument("what", choices=[*_FIGURES, "instance", "smallest", "two-vertex", "machine", "trace"])
    s.add_argument("--max-edges", type=int, default=8)
    s.add_argument("--machine-out", help="with 'trace': also write the machine")
    s.add_argument("--out")
    s.set_defaults(func=cmd_generate)
    return p


def run(argv=None) -> CommandOutcome:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        return CommandOutcome(PARSE_ERROR, f"error: {exc}")


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("SEARCHLIGHT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    outcome = run(argv)
    print(outcome.report, file=sys.stdout if outcome.code in (OK, NEGATIVE) else sys.stderr)
    for a in outcome.artifacts:
        log.info("wrote %s", a)
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
