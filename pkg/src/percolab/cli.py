"""Command-line entry point.

Each subcommand writes one CSV per result table plus ``<subcommand>_manifest.json``
into ``--out`` (default ``$PERCOLAB_OUT``, else the current directory).
Exit codes: 0 success, 1 invalid flags or plan, 2 failure while running.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__, experiments as ex, oracle, rng
from .experiments import ExperimentPlan, ExperimentReport, PlanError, Table

OUT_ENV = "PERCOLAB_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _pairs(text: str) -> tuple[tuple[int, float], ...]:
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        a, sep, b = item.partition(":")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected a:b items, got {item!r}")
        try:
            out.append((int(a), float(b)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad pair {item!r}")
    return tuple(out)


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _common(p: argparse.ArgumentParser, replicates: int) -> None:
    p.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    p.add_argument("--replicates", type=int, default=replicates)
    p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    p.add_argument("--p", type=float, default=0.5, help="bond density (default 1/2)")
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUT_ENV} or .)")


def _plan_flags(p: argparse.ArgumentParser, n_default: str = "32,64,128") -> None:
    p.add_argument("--n", type=_ints, default=_ints(n_default), help="comma-separated box sizes")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--eps", type=_floats, default=ex.DEFAULT_EPS)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--alphas", type=_floats, default=ex.DEFAULT_ALPHAS)
    p.add_argument("--xs", type=_floats, default=ex.DEFAULT_XS)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--pi-replicates", type=int, default=20000)
    p.add_argument("--s-override", type=_pairs, default=(), help="fixed s(n) values as n:s,...")
    p.add_argument("--check-fraction", type=float, default=0.01)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="percolab", description="Critical bond percolation experiments.")
    parser.add_argument("--version", action="version", version=f"percolab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pi", help="one-arm probability pi(n) and s(n)")
    _common(p, 100000)
    p.add_argument("--n", type=_ints, default=(64,))

    p = sub.add_parser("ratio", help="pi(m)/pi(n) and its exponent")
    _common(p, 100000)
    p.add_argument("--pairs", type=_ints, default=(32, 64, 64, 128),
                   help="flattened m,n pairs, e.g. 32,64,64,128")

    p = sub.add_parser("gaps", help="gaps between the k largest clusters")
    _common(p, 20000)
    _plan_flags(p)

    p = sub.add_parser("interval", help="a cluster size inside (x, x+eps) s(n)")
    _common(p, 20000)
    _plan_flags(p, "64")
    p.add_argument("--x", type=float, default=0.2)

    p = sub.add_parser("voldiam", help="large volume with small diameter")
    _common(p, 20000)
    _plan_flags(p, "64")

    p = sub.add_parser("diamq", help="small diameter among the k largest clusters")
    _common(p, 20000)
    _plan_flags(p, "64")

    p = sub.add_parser("scaling", help="E|C^(i)| / s(n)")
    _common(p, 20000)
    _plan_flags(p)

    p = sub.add_parser("spanning", help="E|SC_n| / s(n) and its conditional law")
    _common(p, 20000)
    _plan_flags(p)

    p = sub.add_parser("goodboxes", help="good boxes of large clusters")
    _common(p, 2000)
    _plan_flags(p, "96")
    p.add_argument("--beta", type=int, default=2)

    p = sub.add_parser("circuits", help="fluctuations of X_gamma inside sampled circuits")
    _common(p, 10000)
    p.add_argument("--t", type=_ints, default=(12, 24, 48))
    p.add_argument("--a", type=float, default=0.25)
    p.add_argument("--xi", type=_floats, default=ex.DEFAULT_XI)
    p.add_argument("--circuits", type=int, default=4)
    p.add_argument("--sweeps", type=int, default=ex.DEFAULT_SWEEPS)
    p.add_argument("--pi-replicates", type=int, default=20000)

    p = sub.add_parser("concentration", help="concentration of sums of X_gamma")
    _common(p, 10000)
    p.add_argument("--t", type=int, default=12)
    p.add_argument("--m", type=_ints, default=(4, 8, 16, 32, 64))
    p.add_argument("--xi", type=float, default=0.1)
    p.add_argument("--circuits", type=int, default=8)
    p.add_argument("--sums", type=int, default=20000)
    p.add_argument("--sweeps", type=int, default=ex.DEFAULT_SWEEPS)
    p.add_argument("--pi-replicates", type=int, default=20000)

    p = sub.add_parser("crossing", help="left-right crossing of the (n+1) x n rectangle")
    _common(p, 100000)
    p.add_argument("--n", type=_ints, default=(8, 16, 32))

    p = sub.add_parser("oracle", help="exact value by enumerating every configuration")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--rect", type=_ints, default=None, help="width,height instead of a box")
    p.add_argument("--stat", choices=sorted(oracle.STATISTICS), default="pi")
    p.add_argument("--out", type=Path, default=None)
    return parser


def _plan(args) -> ExperimentPlan:
    return ExperimentPlan(n_values=args.n, k=args.k, eps_grid=args.eps, alpha=args.alpha,
                          alpha_grid=args.alphas, x_grid=args.xs, eta=args.eta,
                          replicates=args.replicates, pi_replicates=args.pi_replicates,
                          seed=args.seed, p=args.p, s_override=args.s_override,
                          check_fraction=args.check_fraction)


def _validate(args) -> None:
    if getattr(args, "threads", 1) < 1:
        raise PlanError("--threads must be >= 1")
    if getattr(args, "replicates", 1) < 1:
        raise PlanError("--replicates must be >= 1")
    p = getattr(args, "p", 0.5)
    if not 0 <= p <= 1:
        raise PlanError("--p must lie in [0, 1]")
    if args.command == "ratio":
        if len(args.pairs) % 2 or not args.pairs:
            raise PlanError("--pairs needs an even number of integers")
        for m, n in zip(args.pairs[0::2], args.pairs[1::2]):
            if not 1 <= m <= n:
                raise PlanError(f"ratio needs 1 <= m <= n, got {m},{n}")
    if args.command in ("pi", "crossing") and any(n < 1 for n in args.n):
        raise PlanError("--n values must be >= 1")
    if args.command == "circuits":
        if any(t < 3 or t % 3 for t in args.t):
            raise PlanError("--t values must be positive multiples of 3")
        if not 0 < args.a < 0.5:
            raise PlanError("--a must lie in (0, 1/2)")
    if args.command == "concentration" and (args.t < 3 or args.t % 3):
        raise PlanError("--t must be a positive multiple of 3")
    if args.command == "oracle" and (args.n is None) == (args.rect is None):
        raise PlanError("oracle needs exactly one of --n and --rect")


def _execute(args) -> ExperimentReport:
    th = args.threads
    cmd = args.command
    if cmd == "pi":
        return ex.pi_experiment(args.n, args.replicates, args.seed, args.p, th)
    if cmd == "ratio":
        pairs = list(zip(args.pairs[0::2], args.pairs[1::2]))
        return ex.ratio_report(pairs, args.replicates, args.seed, args.p, th)
    if cmd == "crossing":
        return ex.crossing_report(args.n, args.replicates, args.seed, args.p, th)
    if cmd == "circuits":
        return ex.circuit_fluctuation_experiment(
            args.t, args.replicates, args.seed, args.a, args.xi, args.circuits, args.p,
            args.sweeps, args.pi_replicates, threads=th)
    if cmd == "concentration":
        return ex.concentration_scaling_experiment(
            args.t, args.m, args.replicates, args.seed, args.xi, args.circuits, args.sums,
            args.p, args.sweeps, args.pi_replicates, threads=th)
    plan = _plan(args)
    if cmd == "gaps":
        return ex.gap_experiment(plan, th)
    if cmd == "interval":
        return ex.interval_experiment(plan, args.x, th)
    if cmd == "voldiam":
        return ex.voldiam_experiment(plan, threads=th)
    if cmd == "diamq":
        return ex.diam_quantile_experiment(plan, th)
    if cmd == "scaling":
        return ex.largest_cluster_scaling(plan, th)
    if cmd == "spanning":
        return ex.spanning_scaling(plan, th)
    if cmd == "goodboxes":
        return ex.goodbox_experiment(plan, args.beta, th)
    raise PlanError(f"unknown subcommand {cmd}")


def _oracle(args) -> ExperimentReport:
    started = time.time()
    rect = tuple(args.rect) if args.rect is not None else None
    if rect is not None and len(rect) != 2:
        raise PlanError("--rect takes width,height")
    res = oracle.exact(args.stat, n=args.n, rect=rect)
    v = res.value
    print(f"{v.numerator}/{v.denominator}")
    print(repr(float(v)))
    tab = Table("oracle", ("stat", "region", "bonds", "numerator", "denominator", "value"))
    region = f"box{args.n}" if rect is None else f"rect{rect[0]}x{rect[1]}"
    tab.add(args.stat, region, res.bonds, v.numerator, v.denominator, float(v))
    manifest = {"experiment": "oracle", "tool_version": __version__, "started": started,
                "finished": time.time(), "params": {"stat": args.stat, "n": args.n,
                                                    "rect": list(rect) if rect else None}}
    return ExperimentReport("oracle", {"oracle": tab}, manifest)


def write_report(report: ExperimentReport, out: Path, argv: list[str]) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    for tab in report.tables.values():
        data = tab.to_csv().encode("utf-8")
        path = out / f"{tab.name}.csv"
        path.write_bytes(data)
        digests[path.name] = {"sha256": hashlib.sha256(data).hexdigest(), "schema": tab.schema}
    manifest = dict(report.manifest)
    manifest.setdefault("generator", rng.GENERATOR_ID)
    manifest["argv"] = argv
    manifest["outputs"] = digests
    (out / f"{report.name}_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        if args.command == "oracle":
            report = _oracle(args)
        else:
            report = _execute(args)
    except (UsageError, PlanError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except oracle.InstanceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surface any runtime failure as exit 2
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    out = args.out if args.out is not None else Path(os.environ.get(OUT_ENV, "."))
    try:
        write_report(report, out, argv)
    except OSError as exc:
        print(f"runtime failure: cannot write outputs: {exc}", file=sys.stderr)
        return 2
    for tab in report.tables.values():
        print(f"wrote {out / (tab.name + '.csv')}", file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(run())
