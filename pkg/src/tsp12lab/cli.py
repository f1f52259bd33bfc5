"""Command-line entry point: ``tsp12lab <command> ...``.

Exit codes: 0 success, 1 usage, 2 input format, 3 resource guard,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import gadget as gd
from .instance import (FormatError, format_fraction, parse_instance, parse_lpsol, parse_tour,
                       serialize_instance, serialize_lpsol, serialize_tour, tour_cost)
from .lp_core import solution_from_values, solve_ser, solve_ser_plus, is_feasible
from .matching import InvariantError, RunStats, run_algorithm1, run_directed
from .simplex import SolverError
from .tour import approx_ratio, complete_to_tour
from .transform import (PreconditionError, convergence_bound, double_asym, double_sym,
                        iterate, subdivide)
from .verify import ResourceLimitError, exact_opt, gap_report, min_components

EXIT_USAGE, EXIT_FORMAT, EXIT_RESOURCE, EXIT_INVARIANT = 1, 2, 3, 4
COMMON_DEFAULTS = {"seed": 0, "jobs": 1, "output": None}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fmt(q) -> str:
    return format_fraction(q) if isinstance(q, Fraction) else str(q)


def _load_solution(inst, path: str | None):
    if path is None:
        return solve_ser(inst)
    n, values, cuts = parse_lpsol(_read(path))
    if n != inst.n:
        raise FormatError(f"solution is for n = {n}, instance has n = {inst.n}")
    x = solution_from_values(inst, values, cuts)
    if not is_feasible(inst, x):
        raise UsageError("the given LP solution is not feasible")
    return x


# --------------------------------------------------------------------------
# per-file jobs (top-level so they can run in worker processes)


def _solve_one(path: str, plus: bool) -> str:
    inst = parse_instance(_read(path))
    base = solve_ser(inst)
    x = solve_ser_plus(inst, base) if plus else base
    head = [f"# opt_ser = {_fmt(base.objective)}"]
    if plus:
        head.append(f"# opt_ser_plus = {_fmt(x.objective)}")
    head += [f"# {k} = {str(v).lower()}" for k, v in sorted(x.flags.items())]
    return "\n".join(head) + "\n" + serialize_lpsol(inst.n, x.values, x.cuts)


def _verify_one(path: str, oracle: bool, alpha) -> str:
    inst = parse_instance(_read(path))
    return str(gap_report(inst, oracle=oracle, alpha=alpha))


def _oracle_one(path: str, what: str) -> str:
    inst = parse_instance(_read(path))
    if what == "opt":
        return f"opt = {exact_opt(inst)}\n"
    return f"min_components = {min_components(inst)}\n"


def _run_files(func, files, jobs: int, *args) -> list[str]:
    if jobs > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, files, *([a] * len(files) for a in args)))
    return [func(f, *args) for f in files]


def _multi(texts: list[str], files: list[str]) -> str:
    if len(files) == 1:
        return texts[0]
    return "".join(f"# file {f}\n{t}" for f, t in zip(files, texts))


# --------------------------------------------------------------------------
# commands


def cmd_solve(a) -> None:
    _emit(_multi(_run_files(_solve_one, a.files, a.jobs, not a.no_plus), a.files), a.output)


def _pipeline(a, directed: bool) -> None:
    inst = parse_instance(_read(a.instance))
    if directed == inst.symmetric:
        raise UsageError("use 'improve' for symmetric and 'directed' for asymmetric instances")
    stats = RunStats()
    x, M = (run_directed(inst, stats) if directed else run_algorithm1(inst, stats=stats))
    tour = complete_to_tour(M, inst, x)
    if a.trace:
        Path(a.trace).write_text("\n".join(stats.trace) + ("\n" if stats.trace else ""),
                                 encoding="utf-8")
    if a.tour:
        Path(a.tour).write_text(serialize_tour(tour), encoding="utf-8")
    lines = [f"opt_ser_plus = {_fmt(x.objective)}",
             f"components = {len(M.components())}",
             f"steps = {stats.steps}",
             f"tour_cost = {tour_cost(inst, tour)}",
             f"ratio = {_fmt(approx_ratio(tour, x, inst))}",
             "matching = " + " ".join(f"{u}-{v}" for u, v in sorted(M.edges))]
    if stats.rejections:
        raise InvariantError(f"rejected witnesses: {stats.rejections[:3]}")
    _emit("\n".join(lines) + "\n", a.output)


def cmd_improve(a) -> None:
    _pipeline(a, directed=False)


def cmd_directed(a) -> None:
    _pipeline(a, directed=True)


def cmd_verify(a) -> None:
    alpha = Fraction(a.alpha) if a.alpha is not None else None
    _emit(_multi(_run_files(_verify_one, a.files, a.jobs, a.oracle, alpha), a.files), a.output)


def cmd_oracle(a) -> None:
    _emit(_multi(_run_files(_oracle_one, a.files, a.jobs, a.what), a.files), a.output)


def cmd_amplify(a) -> None:
    if a.op == "beta":
        if a.alpha is None or a.c is None or a.gamma is None:
            raise UsageError("beta needs --alpha, --c and --gamma")
        beta = convergence_bound(Fraction(a.alpha), a.c, Fraction(a.gamma))
        _emit(f"beta = {_fmt(beta)}\nbeta_decimal = {float(beta):.6f}\n", a.output)
        return
    if not a.instance or not a.prefix:
        raise UsageError(f"{a.op} needs an instance file and --prefix")
    inst = parse_instance(_read(a.instance))
    x = _load_solution(inst, a.lpsol)
    if a.op == "subdivide":
        if a.iterate:
            new, x2 = iterate(inst, x, a.iterate)
        else:
            new, x2 = subdivide(inst, x)
    else:
        if a.vertex is None:
            raise UsageError(f"{a.op} needs --vertex")
        if a.op == "double-sym":
            new, x2 = double_sym(inst, x, a.vertex, a.s)
        else:
            new, x2 = double_asym(inst, x, a.vertex, a.s, trust=a.trust)
    Path(a.prefix + ".tsp").write_text(serialize_instance(new), encoding="utf-8")
    Path(a.prefix + ".lpsol").write_text(serialize_lpsol(new.n, x2.values, x2.cuts),
                                         encoding="utf-8")
    _emit(f"n = {new.n}\nobjective = {_fmt(x2.objective)}\n", a.output)


def _clique_input(a) -> gd.CliqueInput:
    n, edges = gd.parse_graph(_read(a.graph))
    return gd.CliqueInput(n, tuple(edges), a.t)


def cmd_gadget(a) -> None:
    inp = _clique_input(a)
    red = gd.build_reduction(inp)
    if a.op == "build":
        if not a.prefix:
            raise UsageError("gadget build needs --prefix")
        Path(a.prefix + ".tsp").write_text(serialize_instance(red.instance), encoding="utf-8")
        Path(a.prefix + ".C.tour").write_text(serialize_tour(red.tour_C), encoding="utf-8")
        Path(a.prefix + ".layout").write_text(gd.serialize_layout(red), encoding="utf-8")
        _emit(f"vertices = {red.instance.n}\ncost_C = {tour_cost(red.instance, red.tour_C)}\n"
              f"k = {red.k}\n", a.output)
    elif a.op == "clique-tour":
        if not a.clique:
            raise UsageError("clique-tour needs --clique")
        clique = [int(v) for v in a.clique.split(",")]
        try:
            tour = gd.clique_tour(inp, clique, red)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if a.prefix:
            Path(a.prefix + ".tour").write_text(serialize_tour(tour), encoding="utf-8")
        _emit(f"cost = {tour_cost(red.instance, tour)}\n"
              f"distance = {gd.edge_change_distance(red.tour_C, tour)}\n"
              f"edges_removed = {gd.edges_removed(red.tour_C, tour)}\n", a.output)
    else:
        if not a.tour:
            raise UsageError("gadget check needs --tour")
        tour = parse_tour(_read(a.tour))
        if tour.n != red.instance.n:
            raise FormatError("tour length does not match the reduction")
        rep = gd.check_gadget_traversal(tour, red)
        _emit(f"cost = {rep.cost}\nupper = {rep.count('upper')}\nlower = {rep.count('lower')}\n"
              f"invalid = {rep.count('invalid')}\nactive_segments = {len(rep.active_segments)}\n",
              a.output)


def cmd_generate(a) -> None:
    from .generators import random_instance
    rng = np.random.default_rng(a.seed)
    inst = random_instance(rng, a.kind, a.n, a.family)
    _emit(serialize_instance(inst), a.output)


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for randomized commands (default 0)")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                        help="worker processes across input files (default 1)")
    common.add_argument("-o", "--output", default=argparse.SUPPRESS,
                        help="write the report here instead of stdout")
    p = _Parser(prog="tsp12lab", description="Exact LP laboratory for (1,2)-TSP.",
                parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    s = sub.add_parser("solve", help="SER and SER+ optimum as an LPSOL file")
    s.add_argument("files", nargs="+")
    s.add_argument("--no-plus", action="store_true", help="stop at the plain relaxation")
    s.set_defaults(func=cmd_solve)

    for name, func, what in (("improve", cmd_improve, "symmetric improvement algorithm"),
                             ("directed", cmd_directed, "directed pipeline")):
        s = sub.add_parser(name, help=f"run the {what} and complete a tour")
        s.add_argument("instance")
        s.add_argument("--trace", help="write the per-step log here")
        s.add_argument("--tour", help="write the completed tour here")
        s.set_defaults(func=func)

    s = sub.add_parser("verify", help="gap report with bound verdicts")
    s.add_argument("files", nargs="+")
    s.add_argument("--alpha", help="also decide LP(x) feasibility at this alpha")
    s.add_argument("--oracle", action="store_true", help="include exact optimum fields")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("oracle", help="exact optimum or minimum component count")
    s.add_argument("what", choices=["opt", "min-components"])
    s.add_argument("files", nargs="+")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("amplify", help="gap-preserving constructions")
    s.add_argument("op", choices=["subdivide", "double-sym", "double-asym", "beta"])
    s.add_argument("instance", nargs="?")
    s.add_argument("--lpsol", help="use this LP solution instead of solving")
    s.add_argument("--prefix", help="output prefix for .tsp and .lpsol")
    s.add_argument("--vertex", type=int)
    s.add_argument("--s", type=int, help="which support neighbour plays s")
    s.add_argument("--trust", action="store_true", help="skip the path-pair check above its limit")
    s.add_argument("--iterate", type=int, default=0, help="subdivide, then double this many times")
    s.add_argument("--alpha")
    s.add_argument("--c", type=int)
    s.add_argument("--gamma")
    s.set_defaults(func=cmd_amplify)

    s = sub.add_parser("gadget", help="clique to k-edge-change reduction")
    s.add_argument("op", choices=["build", "clique-tour", "check"])
    s.add_argument("graph")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--prefix")
    s.add_argument("--clique", help="comma-separated vertices of H")
    s.add_argument("--tour")
    s.set_defaults(func=cmd_gadget)

    s = sub.add_parser("generate", help="random instance from a seeded family")
    s.add_argument("kind", choices=["sym", "asym"])
    s.add_argument("n", type=int)
    s.add_argument("--family", default="gnp")
    s.set_defaults(func=cmd_generate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    # set here, not via set_defaults: the option actions are shared with every subparser
    for key, value in COMMON_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    try:
        args.func(args)
    except (UsageError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvariantError, SolverError, AssertionError) as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
