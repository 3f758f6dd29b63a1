"""Command-line front end: one subcommand per operation plus the acceptance ``suite``.

Results are canonical JSON (sorted keys, ``schema_version``, resolved
constants) on stdout or in ``--out``; timings go to stderr. Malformed input
exits with status 2, a failed ``suite`` with status 1.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .config import SCHEMA_VERSION, Config, load_config
from .errors import FinecapError, MalformedInput
from .grid import Ball, RadiusSchedule


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())
    except ValueError:
        raise MalformedInput(f"expected comma-separated numbers, got {text!r}") from None


def _schedule(text: str) -> RadiusSchedule:
    """``r0[,ratio[,count[,window]]]``."""
    v = _floats(text)
    if not 1 <= len(v) <= 4:
        raise MalformedInput("schedule is r0[,ratio[,count[,window]]]")
    args = [v[0]] + [v[1] if len(v) > 1 else 0.5] + [int(x) for x in v[2:]]
    try:
        return RadiusSchedule(*args)
    except ValueError as exc:
        raise MalformedInput(f"bad schedule: {exc}") from None


def _points(path: str) -> list[tuple[float, ...]]:
    rows = io._read_numbers(Path(path))
    if not rows or len({len(r) for r in rows}) != 1:
        raise MalformedInput(f"{path}: expected one point per row with equal lengths")
    return [tuple(r) for r in rows]


def _stencil(cfg: Config, domain):
    from .capacity import default_stencil

    return default_stencil(domain, cfg.stencil)


def _measure(args, domain):
    from .measure import GridMeasure

    if getattr(args, "measure", None):
        return io.read_measure(args.measure, domain)
    return GridMeasure.lebesgue(domain)


# subcommands: each returns the result payload


def cmd_capacity(args, cfg):
    from .capacity import capa1, rcapa1

    A = io.read_nodeset(args.set)
    st = _stencil(cfg, A.domain)
    if args.window:
        W = io.read_nodeset(args.window, A.domain)
        res = rcapa1(A, W, st)
        kind = "rcapa1"
    else:
        res = capa1(A, st)
        kind = "capa1"
    if args.optimal_set:
        io.write_nodeset(res.optimal_set, args.optimal_set)
    return A.domain.dim, {"kind": kind, "stencil": st.name, **res.to_json()}


def cmd_tv(args, cfg):
    from .capacity import coarea_integral, total_variation

    u = io.read_scalar(args.field)
    st = _stencil(cfg, u.domain)
    window = io.read_nodeset(args.window, u.domain) if args.window else None
    out = {"stencil": st.name, "total_variation": total_variation(u, window, st)}
    if args.coarea:
        out["coarea_integral"] = coarea_integral(u, window, st)
    return u.domain.dim, out


def cmd_lip(args, cfg):
    from .finetopo import lip_from_carving, vanishing_budgets

    u = io.read_scalar(args.field)
    sched = _schedule(args.schedule)
    nu = _measure(args, u.domain)
    x = _floats(args.x)
    if args.delta == 0:
        prof = lip_from_carving(u, x, nu, 0.0, sched, _stencil(cfg, u.domain),
                                budgets=vanishing_budgets(sched, u.domain.dim))
    else:
        prof = lip_from_carving(u, x, nu, args.delta, sched, _stencil(cfg, u.domain))
    return u.domain.dim, {"x": list(x), "delta": args.delta, "profile": prof.to_json()}


def cmd_finediff(args, cfg):
    from .lipnum import fine_derivative_fit

    u = io.read_scalar(args.field)
    x = _floats(args.x)
    fit = fine_derivative_fit(u, x, Ball(x, args.radius), args.beta, _stencil(cfg, u.domain))
    return u.domain.dim, {"x": list(x), "radius": args.radius, "fit": fit.to_json()}


def cmd_stepanov(args, cfg):
    from .lipnum import stepanov_set

    u = io.read_scalar(args.field)
    S = stepanov_set(u, args.threshold, _schedule(args.schedule), _stencil(cfg, u.domain))
    if args.set_out:
        io.write_nodeset(S, args.set_out)
    return u.domain.dim, {"threshold": args.threshold, "count": S.count,
                          "fraction": S.count / u.domain.size}


def cmd_boundary(args, cfg):
    from .bvtools import capacitary_boundary

    F = io.read_nodeset(args.set)
    rep = capacitary_boundary(F, args.c, _schedule(args.schedule), _stencil(cfg, F.domain))
    if args.band_out:
        io.write_nodeset(rep.band, args.band_out)
    return F.domain.dim, rep.to_json()


def cmd_certify(args, cfg):
    from .bvtools import bv_certificate

    u = io.read_scalar(args.field)
    cert = bv_certificate(u, _measure(args, u.domain), args.delta, _points(args.points),
                          _schedule(args.schedule), _stencil(cfg, u.domain))
    return u.domain.dim, cert.to_json()


def cmd_maxfn(args, cfg):
    from .maximal import maximal_function, weak_type_diagnostic

    u = io.read_scalar(args.field)
    R = math.inf if args.R in ("inf", "infinity") else float(args.R)
    M = maximal_function(u, R)
    out = {"R": R, "max": float(np.max(M.values))}
    if args.t:
        rows = weak_type_diagnostic(u, _floats(args.t), R, _stencil(cfg, u.domain), Mu=M)
        out["weak_type"] = [r.to_json() for r in rows]
    if args.field_out:
        io.write_scalar(M, args.field_out)
    return u.domain.dim, out


def cmd_distortion(args, cfg):
    from .distortion import distortion_profile, fine_distortion, generalized_distortion

    f = io.read_vector(args.map)
    x = _floats(args.x)
    sched = _schedule(args.schedule)
    out = {"x": list(x)}
    if args.fine:
        prof = fine_distortion(f, x, args.beta, args.eta, sched, _stencil(cfg, f.domain), box_side=args.box)
        out["fine"] = {**prof.to_json(), "extra": prof.extra}
    else:
        out["profile"] = distortion_profile(f, x, sched, box_side=args.box).to_json()
    if args.measure:
        lip, hp = generalized_distortion(f, x, _measure(args, f.domain), sched, box_side=args.box)
        out["generalized"] = {"lip": lip.to_json(), "h": hp.to_json()}
    return f.domain.dim, out


def cmd_rankexp(args, cfg):
    from .distortion import grows, rank_experiment

    if args.jump:
        levels = rank_experiment(jump=True, refinements=args.refinements, beta=args.beta, eta=args.eta)
        A = None
    else:
        v = _floats(args.matrix or "")
        if len(v) != 4:
            raise MalformedInput("--matrix needs four entries a11,a12,a21,a22 (or use --jump)")
        A = np.array(v).reshape(2, 2)
        levels = rank_experiment(A, refinements=args.refinements, beta=args.beta, eta=args.eta)
    tails = [lv.tail for lv in levels]
    out = {"matrix": None if A is None else A.tolist(), "jump": args.jump,
           "levels": [lv.to_json() for lv in levels], "grows_10x": grows(tails)}
    if A is not None:
        s = np.linalg.svd(A, compute_uv=False)
        out["rank"] = int(np.sum(s > 1e-12 * s[0])) if s[0] > 0 else 0
    return 2, out


def cmd_whitney(args, cfg):
    import json

    from .covering import BoxWindow, verify_cover, whitney_cover

    pts = _points(args.points)
    try:
        W = BoxWindow.from_json(json.loads(Path(args.window).read_text()))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise MalformedInput(f"bad window file {args.window}: {exc}") from None
    try:
        cov = whitney_cover(pts, W, args.R)
    except ValueError as exc:
        raise MalformedInput(str(exc)) from None
    out = {"covering": cov.to_json()}
    if not args.no_verify:
        out["verification"] = verify_cover(cov, pts).to_json()
    return W.dim, out


def cmd_corpus(args, cfg):
    from .corpus import standard_fields

    cat = standard_fields()
    if args.list or not args.name:
        return 2, {"entries": [{"name": e.name, "kind": e.kind, "dim": e.dim, "tags": list(e.tags),
                                "truth": e.truth} for e in cat.values()]}
    if args.name not in cat:
        raise MalformedInput(f"unknown corpus entry {args.name!r}")
    e = cat[args.name]
    obj = e.build(args.h)
    if args.field_out:
        if e.kind == "scalar":
            io.write_scalar(obj, args.field_out)
        elif e.kind == "set":
            io.write_nodeset(obj, args.field_out)
        else:
            io.write_vector(obj, args.field_out)
    return e.dim, {"name": e.name, "kind": e.kind, "h": args.h, "grid": obj.domain.to_json(), "truth": e.truth}


COMMANDS = {
    "capacity": cmd_capacity, "tv": cmd_tv, "lip": cmd_lip, "finediff": cmd_finediff,
    "stepanov": cmd_stepanov, "boundary": cmd_boundary, "certify": cmd_certify, "maxfn": cmd_maxfn,
    "distortion": cmd_distortion, "rankexp": cmd_rankexp, "whitney": cmd_whitney, "corpus": cmd_corpus,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--seed", type=int)
    common.add_argument("--stencil", choices=["l1-4", "cc-8"])
    common.add_argument("--C-I", dest="C_I", type=float, help="isoperimetric constant override")
    common.add_argument("--C-maz", dest="C_maz", type=float, help="Maz'ya constant override")
    common.add_argument("--N1", dest="N_1", type=int, help="Besicovitch count in 1D")
    common.add_argument("--N2", dest="N_2", type=int, help="Besicovitch count in 2D")
    common.add_argument("--cn", dest="c_n", type=float, help="override of the constant c(n)")
    common.add_argument("--out", help="write the JSON result here instead of stdout")

    p = argparse.ArgumentParser(prog="finecap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("capacity", parents=[common], help="capa1, or rcapa1 with --window")
    s.add_argument("--set", required=True, help="PGM or 0/1 CSV with a .grid.json sidecar")
    s.add_argument("--window", help="node set W for the relative capacity")
    s.add_argument("--optimal-set", help="write the minimizing set here")

    s = sub.add_parser("tv", parents=[common], help="discrete total variation")
    s.add_argument("--field", required=True)
    s.add_argument("--window")
    s.add_argument("--coarea", action="store_true", help="also report the level-set perimeter integral")

    s = sub.add_parser("lip", parents=[common], help="carving Lipschitz profile")
    s.add_argument("--field", required=True)
    s.add_argument("--x", required=True, help="center, comma separated")
    s.add_argument("--measure", help="measure JSON (default Lebesgue)")
    s.add_argument("--delta", type=float, default=0.0, help="capacity budget factor; 0 means vanishing budgets")
    s.add_argument("--schedule", required=True, help="r0[,ratio[,count[,window]]]")

    s = sub.add_parser("finediff", parents=[common], help="fine derivative fit on a ball")
    s.add_argument("--field", required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--radius", type=float, required=True)
    s.add_argument("--beta", type=float, default=0.5)

    s = sub.add_parser("stepanov", parents=[common], help="nodes with bounded lip0 profile")
    s.add_argument("--field", required=True)
    s.add_argument("--threshold", type=float, required=True)
    s.add_argument("--schedule", required=True)
    s.add_argument("--set-out")

    s = sub.add_parser("boundary", parents=[common], help="capacitary boundary band and its length")
    s.add_argument("--set", required=True)
    s.add_argument("--c", type=float, default=0.5)
    s.add_argument("--schedule", required=True)
    s.add_argument("--band-out")

    s = sub.add_parser("certify", parents=[common], help="BV certificate at sample points")
    s.add_argument("--field", required=True)
    s.add_argument("--measure")
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--points", required=True, help="CSV, one point per row")
    s.add_argument("--schedule", required=True)

    s = sub.add_parser("maxfn", parents=[common], help="maximal function and weak-type rows")
    s.add_argument("--field", required=True)
    s.add_argument("--R", default="inf")
    s.add_argument("--t", help="levels for the weak-type diagnostic, comma separated")
    s.add_argument("--field-out")

    s = sub.add_parser("distortion", parents=[common], help="distortion profiles of a planar map")
    s.add_argument("--map", required=True, help="vector CSV with a .grid.json sidecar")
    s.add_argument("--x", required=True)
    s.add_argument("--schedule", required=True)
    s.add_argument("--measure", help="also compute the measure-normalized numbers")
    s.add_argument("--fine", action="store_true", help="carve before measuring")
    s.add_argument("--beta", type=float, default=0.5)
    s.add_argument("--eta", type=float, default=0.25)
    s.add_argument("--box", type=float, help="side of the search box for l")

    s = sub.add_parser("rankexp", parents=[common], help="fine distortion under refinement")
    s.add_argument("--matrix", help="a11,a12,a21,a22")
    s.add_argument("--jump", action="store_true")
    s.add_argument("--refinements", type=int, default=3)
    s.add_argument("--beta", type=float, default=0.5)
    s.add_argument("--eta", type=float, default=0.25)

    s = sub.add_parser("whitney", parents=[common], help="Whitney-type covering of a point set")
    s.add_argument("--points", required=True)
    s.add_argument("--window", required=True, help='JSON {"box": {"lo": [...], "hi": [...]}}')
    s.add_argument("--R", type=float, required=True)
    s.add_argument("--no-verify", action="store_true")

    s = sub.add_parser("corpus", parents=[common], help="list or build catalog objects")
    s.add_argument("--name")
    s.add_argument("--h", type=float, default=1 / 32)
    s.add_argument("--list", action="store_true")
    s.add_argument("--field-out")

    s = sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    s.add_argument("--quick", action="store_true")
    s.add_argument("--only", help="criterion numbers, comma separated")
    return p


def _emit(payload: dict, out: str | None) -> None:
    text = io.dumps(payload)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        overrides = {k: getattr(args, k) for k in ("seed", "stencil", "C_I", "C_maz", "N_1", "N_2", "c_n")}
        cfg = load_config(args.config, overrides)
        if args.command == "suite":
            from .acceptance import run_suite

            only = None
            if args.only:
                only = [int(v) for v in _floats(args.only)]
                if any(k not in range(1, 14) for k in only):
                    raise MalformedInput("criteria are numbered 1..13")
            log = lambda line: print(line, file=sys.stderr, flush=True)
            report = run_suite(cfg, quick=args.quick, only=only, log=log)
            report["command"] = "suite"
            _emit(report, args.out)
            print(f"elapsed {time.perf_counter() - t0:.2f}s", file=sys.stderr)
            return 0 if report["passed"] else 1
        dim, result = COMMANDS[args.command](args, cfg)
        payload = {"schema_version": SCHEMA_VERSION, "command": args.command,
                   "config": cfg.resolved(dim if dim in (1, 2, 3) else 2), "result": result}
        _emit(payload, args.out)
    except (FinecapError, ValueError) as exc:
        print(f"finecap {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"elapsed {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
