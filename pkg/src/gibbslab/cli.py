"""Command-line entry point ``gibbslab``."""

from __future__ import annotations

import argparse
import json
import sys

from .engines import ENGINES, CapacityError, default_workers


def _site(text: str) -> tuple:
    return tuple(int(c) for c in text.split(","))


def _targets(text: str):
    """``0=+1`` or ``0,0=+1;1,0=-1``."""
    out = {}
    for part in text.split(";"):
        site, _, val = part.partition("=")
        if not val:
            raise ValueError(f"bad target {part!r}; use <site>=<value>")
        out[_site(site)] = int(val)
    return out


def _sigma_boundary(text: str):
    from .lattice import parse_pattern

    return None if text == "free" else parse_pattern(text)


def cmd_gamma(args) -> dict:
    from .interaction import parse_interaction
    from .lattice import Configuration, Volume, box, fill, parse_pattern
    from .specification import ConditionalQuery, gamma

    phi = parse_interaction(args.phi, args.d)
    boundary = _sigma_boundary(args.boundary)
    tg = _targets(args.target)
    if any(len(s) != args.d for s in tg):
        raise ValueError(f"target sites must have {args.d} coordinates")
    tv = Volume(tg)
    target = Configuration(tv, [tg[s] for s in tv])
    win = box(args.window, args.d)
    if not tv.issubset(win):
        raise ValueError("target sites fall outside the window")
    rest = win.difference(tv)
    given_pattern = parse_pattern(args.given) if args.given else boundary
    given = None
    if rest is not None:
        if given_pattern is None:
            raise ValueError("free boundary needs --given for the rest of the window")
        given = fill(rest, given_pattern)
    p = gamma(phi, ConditionalQuery(target, given, boundary), args.engine)
    return {"gamma": p}


def cmd_evolve(args) -> dict:
    from .dynamics import TrajectoryConfig, evolve_exclusion_batch, evolve_glauber_batch, sample_gibbs_batch
    from .interaction import parse_interaction
    from .io import write_samples
    from .lattice import rect

    dims = tuple(int(x) for x in args.volume.lower().split("x"))
    d = len(dims)
    vol = rect(dims)
    phi = parse_interaction(args.phi, d)
    psi = parse_interaction(args.psi, d)
    boundary = _sigma_boundary(args.boundary)
    init = sample_gibbs_batch(phi, vol, boundary, args.sweeps, args.seed, args.reps)
    cfg = TrajectoryConfig(args.dynamics, args.t, boundary, args.seed, psi, args.periodic)
    if args.dynamics == "glauber":
        final = evolve_glauber_batch(init, cfg, volume=vol)
    else:
        final = evolve_exclusion_batch(init, cfg, volume=vol)
    path = write_samples(args.out, vol, phi.alphabet, final, args.seed, args.t)
    return {"out": str(path), "reps": args.reps, "sites": len(vol), "magnetization": float(final.mean())}


def cmd_evolved_cond(args) -> dict:
    from .interaction import parse_interaction
    from .lattice import box, fill, parse_pattern, strip
    from .twolayer import evolved_conditional

    d = 2 if args.strip_width else args.d
    phi = parse_interaction(args.phi, d)
    eta = parse_pattern(args.eta)
    win = strip(args.window, args.strip_width) if args.strip_width else box(args.window, d)
    ring = win.difference(box(0, d))
    inner = fill(ring, eta) if ring is not None else None
    p = evolved_conditional(phi, args.t, inner, args.eta0, args.engine, _sigma_boundary(args.sigma_boundary), args.margin)
    return {"conditional": p}


def cmd_experiment(args) -> dict:
    from .harness import ExperimentSpec, emit, run_experiment

    spec = ExperimentSpec.from_file(args.config)
    workers = args.workers or default_workers()
    report = run_experiment(spec, workers)
    out = args.out or spec.output or "results"
    paths = emit(report, out, tuple(args.format.split(",")))
    return {"experiment": spec.name, "written": [str(p) for p in paths], "wall_time_s": report.metadata["wall_time_s"]}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gibbslab", description="Exact and Monte Carlo lattice spin measures.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gamma", help="specification kernel of a finite window")
    g.add_argument("--phi", required=True, help="ising:<beta>[:h=<h>], afm:<beta> or zero")
    g.add_argument("--d", type=int, default=1)
    g.add_argument("--window", type=int, default=0, help="radius of the conditioning window")
    g.add_argument("--target", required=True, help="<site>=<value>[;...], site coordinates comma-separated")
    g.add_argument("--given", help="pattern on the window outside the target (default: boundary)")
    g.add_argument("--boundary", default="plus", help="pattern outside the window, or free")
    g.add_argument("--engine", choices=ENGINES, default="enum")
    g.set_defaults(func=cmd_gamma)

    e = sub.add_parser("evolve", help="sample Gibbs initial states and run dynamics")
    e.add_argument("--phi", required=True)
    e.add_argument("--psi", default="zero")
    e.add_argument("--t", type=float, required=True)
    e.add_argument("--volume", required=True, help="extents such as 64x64")
    e.add_argument("--boundary", default="plus")
    e.add_argument("--seed", type=int, required=True)
    e.add_argument("--reps", type=int, default=1)
    e.add_argument("--sweeps", type=int, default=100, help="heat-bath burn-in sweeps")
    e.add_argument("--dynamics", choices=("glauber", "exclusion"), default="glauber")
    e.add_argument("--periodic", action="store_true", help="periodic bonds for exclusion")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evolve)

    c = sub.add_parser("evolved-cond", help="exact conditional of the time-evolved measure")
    c.add_argument("--phi", required=True)
    c.add_argument("--t", type=float, required=True)
    c.add_argument("--eta", default="alternating")
    c.add_argument("--eta0", type=int, default=1, choices=(-1, 1))
    c.add_argument("--window", type=int, required=True)
    c.add_argument("--d", type=int, default=1)
    c.add_argument("--strip-width", type=int, default=None)
    c.add_argument("--engine", choices=ENGINES, default="enum")
    c.add_argument("--sigma-boundary", default="free")
    c.add_argument("--margin", type=int, default=0)
    c.set_defaults(func=cmd_evolved_cond)

    x = sub.add_parser("experiment", help="run a canned experiment from a config file")
    x.add_argument("--config", required=True)
    x.add_argument("--workers", type=int, default=None, help="overrides GIBBSLAB_WORKERS")
    x.add_argument("--out", default=None)
    x.add_argument("--format", default="csv,json")
    x.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except (ValueError, OSError, CapacityError) as exc:
        record = {"status": "error", "command": args.command, "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 2
    print(json.dumps({"status": "ok", **result}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
