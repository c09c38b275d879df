"""Command-line entry point: every operation behind one dispatcher with
reproducible, machine-readable reports.

Reports are JSON (optionally CSV for tabular walk/lamplighter output) with
the tool version, the full configuration echo, and per-claim kind labels
("exact", "interval", "statistical").  Runs with identical configuration,
including the seed and whatever --threads value, produce byte-identical
reports.

Exit codes: 0 success; 2 precondition violation; 3 truncation or
insufficient data (an inconclusive finite-radius answer, distinguished
from failure); 64 usage errors.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from . import __version__, construct, laplace, lca, walks
from .errors import (
    GraphParseError,
    HarmlabError,
    InsufficientSamplesError,
    PreconditionError,
    TruncationError,
    UnsupportedFeatureError,
)
from .graphs import (
    AsymHittingFamily,
    FiniteGraphFamily,
    GraphFamily,
    TrofimovLadderFamily,
    WeightedGraph,
    asym_hitting_graph,
    cycle_graph,
    path_graph,
    rat_str,
    trofimov_ladder,
)
from .groups import (
    CayleyFamily,
    FiniteCyclic,
    FreeAbelian,
    GroupModel,
    Lamplighter,
    SymmetricMeasure,
    VirtuallyCyclic,
    boundary_constant,
    cayley_ball,
    load_group,
    standard_measure,
)

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- spec parsing -----------------------------------------------------------------


def parse_group(spec: str) -> GroupModel:
    if spec == "z":
        return FreeAbelian(1)
    if spec.startswith("z") and spec[1:].isdigit():
        return FreeAbelian(int(spec[1:]))
    if spec.startswith("zmod:"):
        return FiniteCyclic(int(spec.split(":", 1)[1]))
    if spec in ("dinf", "dihedral"):
        return VirtuallyCyclic(order=2, twist=True)
    if spec in ("ll", "lamplighter"):
        return Lamplighter()
    if spec.startswith("@"):
        return load_group(open(spec[1:]).read())[0]
    raise GraphParseError(f"unknown group spec {spec!r}")


def parse_measure(model: GroupModel, spec: str) -> SymmetricMeasure:
    if spec == "standard":
        return standard_measure(model)
    if spec.startswith("@"):
        doc = json.loads(open(spec[1:]).read())
        return load_group({"family": model.family, "params": _params(model), "measure": doc})[1]
    if spec.startswith("uniform:"):
        gens = []
        for tok in spec.split(":", 1)[1].split(","):
            tok = tok.strip()
            if tok.startswith("pm") and isinstance(model, FreeAbelian) and model.d == 1:
                gens.append((int(tok[2:]),))
            else:
                gens.append(model.word(tok))
        return SymmetricMeasure.uniform(model, gens)
    if spec.startswith("explicit:"):
        entries = []
        for item in spec.split(":", 1)[1].split(";"):
            word, _, w = item.partition("=")
            entries.append((model.word(word.strip()), Fraction(w)))
        return SymmetricMeasure.make(model, entries)
    raise GraphParseError(f"unknown measure spec {spec!r}")


def _params(model: GroupModel) -> Dict:
    if isinstance(model, FreeAbelian):
        return {"d": model.d}
    if isinstance(model, FiniteCyclic):
        return {"m": model.m}
    if isinstance(model, VirtuallyCyclic):
        return {"order": model.order, "twist": model.twist}
    return {}


def parse_graph_family(spec: str) -> GraphFamily:
    if spec.startswith("gallery:trofimov:"):
        return TrofimovLadderFamily()
    if spec.startswith("gallery:asym:"):
        return AsymHittingFamily()
    if spec.startswith("gallery:c"):
        return FiniteGraphFamily(cycle_graph(int(spec.split("gallery:c", 1)[1])), name=spec)
    if spec.startswith("@"):
        return FiniteGraphFamily(WeightedGraph.from_json(open(spec[1:]).read()), name=spec)
    raise GraphParseError(f"unknown graph spec {spec!r}")


def parse_graph(spec: str) -> WeightedGraph:
    if spec.startswith("gallery:trofimov:"):
        return trofimov_ladder(int(spec.rsplit(":", 1)[1]))
    if spec.startswith("gallery:asym:"):
        return asym_hitting_graph(int(spec.rsplit(":", 1)[1]))
    if spec.startswith("gallery:c"):
        return cycle_graph(int(spec.split("gallery:c", 1)[1]))
    if spec.startswith("path:"):
        _, lo, hi = spec.split(":")
        return path_graph(int(lo), int(hi))
    if spec.startswith("@"):
        return WeightedGraph.from_json(open(spec[1:]).read())
    raise GraphParseError(f"unknown graph spec {spec!r}")


def _family_for(args) -> GraphFamily:
    if getattr(args, "graph", None):
        return parse_graph_family(args.graph)
    model = parse_group(args.group)
    measure = parse_measure(model, args.measure)
    return CayleyFamily(model, measure)


# -- report plumbing ----------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, Fraction):
        return rat_str(x)
    if isinstance(x, walks.Interval):
        return {"kind": "interval", "lo": rat_str(x.lo), "hi": rat_str(x.hi)}
    if isinstance(x, construct.McEstimate):
        return x.to_jsonable()
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    if hasattr(x, "to_jsonable"):
        return _jsonable(x.to_jsonable())
    return str(x)


def write_report(args, results: Dict, conclusive: bool = True) -> int:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    doc = {
        "tool": "harmlab",
        "version": __version__,
        "config": _jsonable(config),
        "conclusive": conclusive,
        "results": _jsonable(results),
    }
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if getattr(args, "format", "json") == "csv" and "csv_rows" in results:
        rows = results["csv_rows"]
        buf = io.StringIO()
        for row in rows:
            buf.write(",".join(str(_jsonable(c)) for c in row) + "\n")
        text = buf.getvalue()
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if conclusive else EXIT_INCONCLUSIVE


# -- subcommands ----------------------------------------------------------------------


def cmd_cayley(args) -> int:
    model = parse_group(args.group)
    measure = parse_measure(model, args.measure)
    graph, elems = cayley_ball(model, measure, args.radius)
    probe = measure.generation_probe()
    results = {
        "vertices": graph.n,
        "edges": sum(len(a) for a in graph.adj) // 2,
        "hold": graph.hold,
        "distances": {graph.ids[i]: graph.dist[i] for i in range(graph.n)},
        "graph": json.loads(graph.to_json()),
        "generation_probe": probe,
        "kind": "exact",
    }
    return write_report(args, results)


def cmd_dirichlet(args) -> int:
    graph = parse_graph(args.graph)
    region = {graph.index[v] for v in args.region.split(",")}
    boundary = {}
    for item in args.boundary.split(","):
        vid, _, val = item.partition("=")
        boundary[graph.index[vid]] = Fraction(val)
    problem = laplace.BoundaryValueProblem(
        graph,
        region,
        boundary,
        frontier_policy=args.frontier,
        frontier_value=Fraction(args.frontier_value),
    )
    sol = laplace.dirichlet_solve(problem)
    results = {
        "values": {graph.ids[v]: val for v, val in sorted(sol.values.items())},
        "kind": "exact",
    }
    return write_report(args, results)


def cmd_harmdim(args) -> int:
    family = _family_for(args)
    rep = laplace.harmonic_restriction_dimension(
        family, args.window, args.max_depth, stall=args.stall, transpose=args.transpose
    )
    results = {"report": rep.to_jsonable(), "kind": "exact"}
    return write_report(args, results, conclusive=rep.stabilized is not None)


def cmd_duality(args) -> int:
    family = _family_for(args)
    X = [x.strip() for x in args.X.split(",")]
    rep = laplace.duality_test(family, X, args.depth)
    return write_report(args, {"report": rep.to_jsonable(), "kind": "exact"},
                        conclusive=rep.conclusive)


def _automaton_for(args):
    model = parse_group(args.group)
    measure = parse_measure(model, args.measure)
    return lca.GroupAutomaton.laplacian(model, measure)


def cmd_gofe(args) -> int:
    tau = _automaton_for(args)
    surj = lca.ball_surjectivity(tau, args.radius)
    wit = lca.kernel_witness_search(tau.transpose(), args.radius - 1)
    results = {
        "surjectivity": surj.to_jsonable(),
        "transpose_witness": None
        if wit is None
        else {f"{nm}#{i}": v for (nm, i), v in sorted(wit.items())},
        "slice_agreement": surj.surjective_on_ball == (wit is None),
        "kind": "exact",
        "radius": args.radius,
    }
    conclusive = (not surj.surjective_on_ball) or wit is not None
    if args.preimage_delta:
        target = {tau.model.name(tau.model.identity()): Fraction(1)}
        pre = lca.preimage_construct(tau, target, args.radius)
        results["preimage"] = {
            "values": {f"{nm}#{i}": v for (nm, i), v in sorted(pre.values.items())},
            "stabilized": pre.stabilized,
        }
    return write_report(args, results, conclusive=conclusive or args.preimage_delta)


def cmd_mdim(args) -> int:
    tau = _automaton_for(args)
    rep = lca.mean_dimension_estimate(tau, args.nmax)
    return write_report(args, {"report": rep.to_jsonable(), "kind": "exact"})


def cmd_linharm(args) -> int:
    model = parse_group(args.group)
    measure = parse_measure(model, args.measure)
    harm = construct.build_linear_harmonic(model, measure, args.coordinate)
    results = {
        "phi": {model.name(t): v for t, v in sorted(harm.phi.items(), key=lambda kv: model.key(kv[0]))},
        "verified_radius": 6,
        "kind": "exact",
    }
    return write_report(args, results)


def cmd_walk(args) -> int:
    sub = args.walk_op
    if sub == "nstep":
        graph = parse_graph(args.graph)
        absorbing = args.absorbing.split(",") if args.absorbing else []
        wd = walks.n_step_distribution(graph, args.start, args.n, absorbing)
        rows = [["vertex", "probability"]] + [
            [k, v] for k, v in sorted(wd.probs.items())
        ]
        results = {
            "distribution": wd.probs,
            "absorbed": wd.absorbed,
            "escaped": wd.escaped,
            "kind": "exact",
            "csv_rows": rows,
        }
        return write_report(args, results)
    if sub == "hitdist":
        graph = parse_graph(args.graph)
        rep = walks.hitting_time_distribution(graph, args.x, args.y, args.nmax)
        rows = [["n", "prob"]] + [[n, v] for n, v in enumerate(rep.values)]
        results = {
            "values": rep.values,
            "escaped": rep.escaped,
            "exact": rep.exact,
            "kind": "exact" if rep.exact else "interval",
            "csv_rows": rows,
        }
        return write_report(args, results, conclusive=rep.exact)
    if sub == "race":
        if args.graph:
            graph = parse_graph(args.graph)
            value = walks.race(graph, args.start, args.A.split(","), args.B.split(","))
            return write_report(args, {"value": value, "kind": "exact"})
        model = parse_group(args.group)
        measure = parse_measure(model, args.measure)
        start = model.parse(args.start)
        value = walks.level_race(model, measure, args.m, args.R, start)
        M = boundary_constant(model, measure)
        tr_zeta = walks.Transversal.standard(model).zeta(start)
        approx = Fraction(tr_zeta - args.m, args.R + M)
        results = {
            "value": value,
            "linear_estimate": approx,
            "boundary_constant": M,
            "abs_error": abs(value - approx),
            "kind": "exact",
        }
        return write_report(args, results)
    if sub == "symcheck":
        graph = parse_graph(args.graph)
        a = walks.hitting_time_distribution(graph, args.x, args.y, args.nmax)
        b = walks.hitting_time_distribution(graph, args.y, args.x, args.nmax)
        equal = a.values == b.values and a.exact and b.exact
        results = {
            "equal": equal,
            "x_to_y": a.values,
            "y_to_x": b.values,
            "kind": "exact",
        }
        return write_report(args, results, conclusive=a.exact and b.exact)
    if sub == "offdiag":
        if args.graph:
            rep = walks.check_offdiag_graph(parse_graph(args.graph), args.nmax)
        else:
            model = parse_group(args.group)
            measure = parse_measure(model, args.measure)
            rep = walks.check_offdiag(model, measure, args.nmax, args.pair_radius)
        return write_report(args, {"report": rep, "kind": "exact"})
    if sub == "taboo":
        graph = parse_graph(args.graph)
        rep = walks.taboo_loop_symmetry(graph, args.x, args.y, args.nmax)
        return write_report(args, {"report": rep, "kind": "exact"})
    if sub == "transience":
        rep = walks.transience_partial_sums(args.d, args.nmax)
        return write_report(args, {"report": rep.to_jsonable(), "kind": "exact"})
    if sub == "hitsfirst":
        model = parse_group(args.group)
        measure = parse_measure(model, args.measure)
        rep = walks.hits_first_relation(
            model, measure, model.parse(args.x), model.parse(args.y), args.depth
        )
        return write_report(args, {"report": rep, "kind": "interval"})
    if sub == "critscan":
        model = parse_group(args.group)
        measure = parse_measure(model, args.measure)
        radii = [int(r) for r in args.radii.split(",")]
        rep = walks.crit_radius_scan(
            model, measure, model.parse(args.x), model.parse(args.y), radii
        )
        return write_report(args, {"report": rep, "kind": "interval"})
    raise PreconditionError(f"unknown walk op {sub!r}")


def cmd_ll(args) -> int:
    sub = args.ll_op
    model = Lamplighter()
    if sub == "h":
        g = model.parse(args.g)
        if args.method == "exact":
            value = construct.lamplighter_h_exact(g, args.R, state_budget=args.state_budget)
            return write_report(args, {"value": value, "kind": "exact"})
        est = construct.lamplighter_h_mc(
            g, args.R, args.samples, args.seed, threads=args.threads
        )
        return write_report(args, {"value": est.to_jsonable(), "kind": "statistical"})
    if sub == "props":
        R_list = [int(r) for r in args.R_list.split(",")]
        rep = construct.hr_property_check(R_list, state_budget=args.state_budget)
        return write_report(args, {"report": rep, "kind": "exact"})
    if sub == "limit":
        R_list = [int(r) for r in args.R_list.split(",")]
        gs = [model.parse(s) for s in args.g_list.split(";")]
        rep = construct.pointwise_limit_probe(gs, R_list, state_budget=args.state_budget)
        rows = [["g", "R", "R*h_R"]]
        for name, data in rep["table"].items():
            for R, v in data["values"]:
                rows.append([name, R, v])
        rep2 = dict(rep)
        rep2["csv_rows"] = rows
        return write_report(args, {"report": rep2, "kind": "exact", "csv_rows": rows})
    if sub == "decay":
        n_list = [int(n) for n in args.n_list.split(",")]
        rep = construct.coset_escape_decay_probe(
            n_list, args.R, args.samples, args.seed,
            g=model.parse(args.g), threads=args.threads,
        )
        insufficient = any(r["flag"] for r in rep["rows"])
        return write_report(
            args, {"report": rep, "kind": "statistical"}, conclusive=not insufficient
        )
    raise PreconditionError(f"unknown ll op {sub!r}")


# -- parser ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="harmlab", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--out", help="report file (default stdout)")
        sp.add_argument("--format", choices=["json", "csv"], default="json")
        sp.add_argument("--threads", type=int, default=1)
        if seed:
            sp.add_argument("--seed", type=int, required=True)

    def group_args(sp):
        sp.add_argument("--group", required=True)
        sp.add_argument("--measure", default="standard")

    sp = sub.add_parser("cayley", help="weighted Cayley ball")
    group_args(sp)
    sp.add_argument("--radius", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_cayley)

    sp = sub.add_parser("dirichlet", help="exact boundary-value solve")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--region", required=True, help="comma-separated vertex ids")
    sp.add_argument("--boundary", required=True, help="id=p/q,...")
    sp.add_argument("--frontier", choices=["error", "absorb"], default="error")
    sp.add_argument("--frontier-value", default="0")
    common(sp)
    sp.set_defaults(func=cmd_dirichlet)

    sp = sub.add_parser("harmdim", help="harmonic restriction dimension sweep")
    sp.add_argument("--group")
    sp.add_argument("--measure", default="standard")
    sp.add_argument("--graph")
    sp.add_argument("--window", type=int, required=True)
    sp.add_argument("--max-depth", dest="max_depth", type=int, required=True)
    sp.add_argument("--stall", type=int, default=4)
    sp.add_argument("--transpose", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_harmdim)

    sp = sub.add_parser("duality", help="harmonic extension vs finite witness")
    sp.add_argument("--group")
    sp.add_argument("--measure", default="standard")
    sp.add_argument("--graph")
    sp.add_argument("--X", required=True, help="comma-separated vertex ids")
    sp.add_argument("--depth", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_duality)

    sp = sub.add_parser("gofe", help="ball surjectivity + transpose witness")
    group_args(sp)
    sp.add_argument("--radius", type=int, required=True)
    sp.add_argument("--preimage-delta", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_gofe)

    sp = sub.add_parser("mdim", help="mean dimension over boxes")
    group_args(sp)
    sp.add_argument("--nmax", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_mdim)

    sp = sub.add_parser("linharm", help="linear-growth harmonic builder")
    group_args(sp)
    sp.add_argument("--coordinate", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_linharm)

    sp = sub.add_parser("walk", help="random walk computations")
    wsub = sp.add_subparsers(dest="walk_op", required=True)

    w = wsub.add_parser("nstep")
    w.add_argument("--graph", required=True)
    w.add_argument("--start", required=True)
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--absorbing", default="")
    common(w)
    w.set_defaults(func=cmd_walk)

    w = wsub.add_parser("hitdist")
    w.add_argument("--graph", required=True)
    w.add_argument("--x", required=True)
    w.add_argument("--y", required=True)
    w.add_argument("--nmax", type=int, required=True)
    common(w)
    w.set_defaults(func=cmd_walk)

    w = wsub.add_parser("race")
    w.add_argument("--graph")
    w.add_argument("--start", required=True)
    w.add_argument("--A")
    w.add_argument("--B")
    w.add_argument("--group")
    w.add_argument("--measure", default="standard")
    w.add_argument("--m", type=int, default=0)
    w.add_argument("--R", type=int, default=10)
    common(w)
    w.set_defaults(func=cmd_walk)

    w = wsub.add_parser("symcheck")
    w.add_argument("--graph", required=True)
    w.add_argument("--x", default="v0")
    w.add_argument("--y", default="v1")
    w.add_argument("--nmax", type=int, default=20)
    common(w)
    w.set_defaults(func=cmd_walk)

    w = wsub.add_parser("offdiag")
    w.add_argument("--graph")
    w.add_argument("--group")
    w.add_argument("--measure", default="standard")
    w.add_argument("--nmax", type=int, required=True)
    w.add_argument("--pair-radius", dest="pair_radius", type=int, default=4)
    common(w)
    w.set_defaults(func=cmd_walk)

    w = wsub.add_parser("taboo")
    w.add_argument("--graph", required=True)
    w.add_argument("--x", required=True)
    w.add_argument("--y", required=True)
    w.add_argument("--nmax", type=int, required=True)
    common(w)
    w.set_defaults(func=cmd_walk)

    w = wsub.add_parser("transience")
    w.add_argument("--d", type=int, required=True)
    w.add_argument("--nmax", type=int, required=True)
    common(w)
    w.set_defaults(func=cmd_walk)

    w = wsub.add_parser("hitsfirst")
    w.add_argument("--group", required=True)
    w.add_argument("--measure", default="standard")
    w.add_argument("--x", required=True)
    w.add_argument("--y", required=True)
    w.add_argument("--depth", type=int, required=True)
    common(w)
    w.set_defaults(func=cmd_walk)

    w = wsub.add_parser("critscan")
    w.add_argument("--group", required=True)
    w.add_argument("--measure", default="standard")
    w.add_argument("--x", required=True)
    w.add_argument("--y", required=True)
    w.add_argument("--radii", required=True)
    common(w)
    w.set_defaults(func=cmd_walk)

    sp = sub.add_parser("ll", help="lamplighter h_R toolkit")
    lsub = sp.add_subparsers(dest="ll_op", required=True)

    l = lsub.add_parser("h")
    l.add_argument("--R", type=int, required=True)
    l.add_argument("--g", default="identity")
    l.add_argument("--method", choices=["exact", "mc"], default="exact")
    l.add_argument("--samples", type=int, default=100_000)
    l.add_argument("--state-budget", dest="state_budget", type=int, default=200_000)
    l.add_argument("--seed", type=int, default=None)
    common(l)
    l.set_defaults(func=cmd_ll)

    l = lsub.add_parser("props")
    l.add_argument("--R-list", dest="R_list", default="4,6,8")
    l.add_argument("--state-budget", dest="state_budget", type=int, default=200_000)
    common(l)
    l.set_defaults(func=cmd_ll)

    l = lsub.add_parser("limit")
    l.add_argument("--R-list", dest="R_list", default="4,6,8,10")
    l.add_argument("--g-list", dest="g_list", default="identity;0|-1")
    l.add_argument("--state-budget", dest="state_budget", type=int, default=200_000)
    common(l)
    l.set_defaults(func=cmd_ll)

    l = lsub.add_parser("decay")
    l.add_argument("--n-list", dest="n_list", default="0,1,2,4")
    l.add_argument("--R", type=int, default=10)
    l.add_argument("--g", default="identity")
    l.add_argument("--samples", type=int, default=200_000)
    common(l, seed=True)
    l.set_defaults(func=cmd_ll)

    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "ll_op", None) == "h" and args.method == "mc" and args.seed is None:
        parser.error("--seed is mandatory for Monte Carlo runs")
    try:
        return args.func(args)
    except (PreconditionError, GraphParseError, UnsupportedFeatureError) as exc:
        sys.stderr.write(f"precondition error: {exc}\n")
        return EXIT_PRECONDITION
    except (TruncationError, InsufficientSamplesError) as exc:
        sys.stderr.write(f"inconclusive: {exc}\n")
        return EXIT_INCONCLUSIVE
    except HarmlabError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
