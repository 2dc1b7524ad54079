"""Command-line front end: ``kgraph VERB [options]``.

Every verb prints a short text summary, or a JSON report with ``--json``.
Exit codes: 0 when every check passes, 1 when a check fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from importlib import resources
from typing import Sequence

from .errors import KGraphError, NotStronglyConnected
from .inductive import (
    GaugePoint,
    default_choice,
    direct_sum_nonzero_check,
    gauge_check,
    gauge_samples,
    prefixing_map_agreement,
    shift_tail_intertwiner,
    verify_ck_inductive,
)
from .kgraph import (
    KGraph,
    Path,
    infinite_path,
    path_from_edges,
    point_from_dict,
    shift_point,
    structural_flags,
    validate_kgraph,
    vertex_matrix,
)
from .l2rep import verify_ck_l2
from .library import LIBRARY, standard_library
from .measures import (
    check_kolmogorov,
    equivalence_verdict,
    measure_from_spec,
    pf_data,
    rn_at_point,
)
from .sbfs import SBFS_LIBRARY, load_sbfs, rn_table, validate_sbfs_conditions

DEFAULT_GRAPH = "one_vertex_fefe"


def report_schema(verb: str) -> dict:
    """The published JSON schema for ``verb --json`` output (``error`` for failures)."""
    return json.loads(resources.files("kgraphs").joinpath("schemas", f"{verb}.json").read_text())


class InputError(Exception):
    """Bad flags or unreadable input; maps to exit code 2."""


# -- argument readers -------------------------------------------------------


def _read_json(source: str):
    try:
        if source == "-":
            return json.load(sys.stdin)
        if source.lstrip().startswith(("{", "[")):
            return json.loads(source)
        with open(source) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{source} is not valid JSON: {exc}") from None


def load_graph(source: str | None, params: dict | None = None) -> KGraph:
    """A library name, a JSON file, inline JSON or ``-`` for stdin."""
    source = source or DEFAULT_GRAPH
    if source in LIBRARY or source == "lambda_2n":
        return standard_library(source, params)
    data = _read_json(source)
    if not isinstance(data, dict):
        raise InputError("graph JSON must be an object")
    return KGraph.from_dict(data)


_SHORTHAND = [
    (re.compile(r"^pf$"), lambda m: {"kind": "pf"}),
    (re.compile(r"^markov_x([0-9./]+)$"), lambda m: {"kind": "markov", "params": {"x": m.group(1)}}),
    (
        re.compile(r"^kakutani_c([0-9./]+)_r([0-9./]+)$"),
        lambda m: {"kind": "kakutani", "params": {"gammas": {"type": "geometric", "c": m.group(1), "r": m.group(2)}}},
    ),
    (re.compile(r"^lambda2n_x([0-9./]+)$"), None),
]


def measure_spec(text: str, g: KGraph) -> dict:
    """Shorthands ``pf``, ``markov_x0.3``, ``kakutani_c1_r0.25``, ``lambda2n_x0.3``; else JSON."""
    for pattern, build in _SHORTHAND:
        m = pattern.match(text)
        if not m:
            continue
        if build is not None:
            return build(m)
        # same two-point vector on every cycle of the star graph
        x = Fraction(m.group(1))
        n = (len(g.vertices) - 1) // 2
        return {"kind": "lambda2n", "params": {"x": [[str(x), str(1 - x)]] * n}}
    data = _read_json(text)
    if not isinstance(data, dict):
        raise InputError("measure spec must be a JSON object")
    return data


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t != ""]
    except ValueError:
        raise InputError(f"{what} must be comma-separated integers, got {text!r}") from None


def _ids(text: str) -> list[str]:
    return [t for t in text.replace(" ", "").split(",") if t]


def parse_point(g: KGraph, text: str | None):
    """``prefix|cycle`` edge lists, a bare cycle, or JSON ``{"prefix", "cycle"}``."""
    if text is None:
        return default_choice(g)[g.vertices[0]]
    if text.lstrip().startswith("{") or text.endswith(".json"):
        data = _read_json(text)
        if not isinstance(data, dict):
            raise InputError("point spec must be an object")
        return point_from_dict(g, data)
    prefix, _, cycle = text.rpartition("|")
    if not _ids(cycle):
        raise InputError("point needs a nonempty cycle")
    return infinite_path(g, _ids(prefix), _ids(cycle))


def parse_z(text: str) -> GaugePoint:
    """``re,im;re,im`` complex entries or ``root:order:e1,e2`` exact roots."""
    if text.startswith("root:"):
        try:
            _, order, exps = text.split(":")
            return GaugePoint.roots(int(order), _ints(exps, "exponents"))
        except ValueError:
            raise InputError(f"bad root spec {text!r}") from None
    vals = []
    for part in text.split(";"):
        try:
            re_, im = (float(t) for t in part.split(","))
        except ValueError:
            raise InputError(f"bad complex entry {part!r}") from None
        vals.append(complex(re_, im))
    return GaugePoint.complex(vals)


def workers() -> int:
    raw = os.environ.get("KGRAPH_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"KGRAPH_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError("KGRAPH_THREADS must be at least 1")
    return n


def _num(x):
    return str(x) if isinstance(x, Fraction) else float(x)


def _path(p: Path) -> list[str]:
    return list(p.edges)


# -- verbs ------------------------------------------------------------------
# each returns (passed, result dict, text lines)


def cmd_validate(a):
    try:
        g = load_graph(a.graph or "-")
    except KGraphError as exc:
        return False, {"pass": False, "checks": {}, "errors": [exc.code], "details": [str(exc)]}, [f"invalid: {exc}"]
    rep = validate_kgraph(g)
    res = rep.to_dict()
    res["flags"] = structural_flags(g)
    lines = [f"{name}: {'ok' if ok else 'FAIL'}" for name, ok in sorted(rep.checks.items())]
    lines += [f"error: {e}" for e in res["errors"]]
    return rep.passed, res, lines


def cmd_info(a):
    g = load_graph(a.graph)
    mats = {str(i): vertex_matrix(g, i).tolist() for i in range(1, g.k + 1)}
    res = {"k": g.k, "vertices": list(g.vertices), "edges": len(g.edges), "flags": structural_flags(g), "matrices": mats}
    try:
        res["pf"] = pf_data(g).to_dict()
    except NotStronglyConnected:
        res["pf"] = None
    lines = [f"k = {g.k}, {len(g.vertices)} vertices, {len(g.edges)} edges"]
    lines += [f"{k}: {v}" for k, v in sorted(res["flags"].items())]
    if res["pf"] is not None:
        lines.append(f"rho = {res['pf']['radii']}, kappa = {res['pf']['kappa']}")
    return True, res, lines


def cmd_measure(a):
    g = load_graph(a.graph)
    m = measure_from_spec(g, measure_spec(a.spec, g))
    lam = path_from_edges(g, _ids(a.cylinder))
    mass = m.mass(lam)
    res = {"cylinder": _path(lam), "degree": list(lam.degree), "mass": _num(mass), "massFloat": float(mass), "measure": m.to_dict()}
    return True, res, [f"mass of Z({','.join(lam.edges)}) = {mass}"]


def cmd_consistency(a):
    g = load_graph(a.graph)
    m = measure_from_spec(g, measure_spec(a.spec, g))
    rep = check_kolmogorov(m, a.depth)
    res = rep.to_dict()
    return rep.passed, res, [f"depth {a.depth}: {rep.cases} cases, worst defect {rep.worst_defect}, {'pass' if rep.passed else 'FAIL'}"]


def cmd_rn(a):
    g = load_graph(a.graph)
    m = measure_from_spec(g, measure_spec(a.spec, g))
    lam = path_from_edges(g, _ids(a.edge))
    x = parse_point(g, a.point)
    est = rn_at_point(m, lam, x, a.depth)
    res = est.to_dict()
    res["path"] = _path(lam)
    res["point"] = x.to_dict()
    ok = float(est.value) > 0
    return ok, res, [f"RN of {','.join(lam.edges)} at {x.to_dict()} = {est.value} (x{est.mult_error:.9g}, stable from {est.stable_from})"]


def cmd_compare(a):
    g = load_graph(a.graph)
    mu = measure_from_spec(g, measure_spec(a.mu, g))
    nu = measure_from_spec(g, measure_spec(a.nu, g))
    v = equivalence_verdict(mu, nu, a.depth)
    res = v.to_dict()
    ok = v.verdict != "inconclusive" if a.expect is None else v.verdict == a.expect
    tail = v.ratios[-1] if v.ratios else None
    return ok, res, [f"verdict: {v.verdict}", f"H_{a.depth} = {v.profile[-1]:.12g}, last ratio {tail}"]


def cmd_ck_l2(a):
    g = load_graph(a.graph)
    m = measure_from_spec(g, measure_spec(a.spec, g))
    rep = verify_ck_l2(m, a.level, _ints(a.bound, "bound"), tol=a.tol, exact=True if a.exact else None, workers=workers())
    res = rep.to_dict()
    lines = [f"{r.name}: {r.cases} cases, max defect {r.max_defect}" for r in rep.relations]
    return rep.passed, res, lines


def cmd_ck_inductive(a):
    g = load_graph(a.graph)
    x = parse_point(g, a.point)
    d, s = _bounds(a.bounds)
    rep = verify_ck_inductive(g, x, d, s)
    res = rep.to_dict()
    res["point"] = x.to_dict()
    return rep.passed, res, [f"{c.relation}: {c.probed_cases} cases, {'ok' if c.passed else 'FAIL'}" for c in rep.checks]


def _bounds(text: str) -> tuple[int, int]:
    vals = _ints(text, "bounds")
    if len(vals) != 2 or min(vals) < 0:
        raise InputError("bounds are 'degree,stage'")
    return vals[0], vals[1]


def cmd_gauge(a):
    g = load_graph(a.graph)
    x = parse_point(g, a.point)
    d, s = _bounds(a.bounds)
    zs = [parse_z(a.z)] if a.z else gauge_samples(g.k)
    out, ok, lines = [], True, []
    for z in zs:
        chk = gauge_check(g, x, z, d, s)
        ok &= chk.passed
        out.append({"z": z.to_dict(), **chk.to_dict()})
        lines.append(f"z = {z.to_dict()}: {chk.probed_cases} cases, {'ok' if chk.passed else 'FAIL'}")
    return ok, {"pass": ok, "point": x.to_dict(), "samples": out}, lines


def cmd_intertwine(a):
    g = load_graph(a.graph)
    x = parse_point(g, a.x)
    if a.y.startswith("shift:"):
        y = shift_point(g, x, _ints(a.y[6:], "shift")[0])
    else:
        y = parse_point(g, a.y)
    d, s = _bounds(a.bounds)
    rep = shift_tail_intertwiner(g, x, y, _ints(a.m, "m"), _ints(a.n, "n"), d, s)
    res = rep.to_dict()
    return rep.passed, res, [f"{c.relation}: {c.probed_cases} cases, {'ok' if c.passed else 'FAIL'}" for c in rep.checks]


def cmd_direct_sum(a):
    g = load_graph(a.graph)
    d, s = _bounds(a.bounds)
    rep = direct_sum_nonzero_check(g, degree_bound=d, run_ck=a.ck, stage_bound=s)
    res = rep.to_dict()
    return rep.passed, res, [f"{c.relation}: {c.probed_cases} cases, {'ok' if c.passed else 'FAIL'}" for c in rep.checks]


def cmd_prefixing(a):
    g = load_graph(a.graph)
    x = parse_point(g, a.point)
    d, s = _bounds(a.bounds)
    chk = prefixing_map_agreement(g, x, d, s)
    res = {"pass": chk.passed, "point": x.to_dict(), "checks": [chk.to_dict()]}
    return chk.passed, res, [f"prefixing map: {chk.probed_cases} cases, {'ok' if chk.passed else 'FAIL'}"]


def cmd_sbfs_check(a):
    try:
        s = load_sbfs(a.system)
    except OSError as exc:
        raise InputError(f"cannot read {a.system}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{a.system} is not valid JSON: {exc}") from None
    rep = validate_sbfs_conditions(s, grid=a.grid)
    res = rep.to_dict()
    res["rn"] = rn_table(s)
    lines = [f"({c.name}) {'ok' if c.passed else 'FAIL'} [{c.method}]" for c in rep.conditions]
    lines += [f"Phi_{e} = {v}" for e, v in sorted(res["rn"].items())]
    return rep.passed, res, lines


def cmd_library(a):
    if a.name in SBFS_LIBRARY:
        data = SBFS_LIBRARY[a.name]().to_json()
    else:
        params = {}
        if a.N is not None:
            params["N"] = a.N
        if a.perm is not None:
            params["perm"] = _ints(a.perm, "perm")
        data = standard_library(a.name, params).to_dict()
    text = json.dumps(data, sort_keys=True, indent=2)
    if a.output:
        with open(a.output, "w") as fh:
            fh.write(text + "\n")
        return True, {"written": a.output}, [f"wrote {a.output}"]
    return True, data, None


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON report")
    p = argparse.ArgumentParser(prog="kgraph", description="Checks for k-graphs, their measures and representations.")
    sub = p.add_subparsers(dest="verb", required=True)

    def verb(name, fn, help_, graph="flag"):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if graph == "positional":
            sp.add_argument("graph", nargs="?", help="graph JSON file, '-' or library name")
            sp.add_argument("--graph", dest="graph_opt", help="same as the positional graph")
        elif graph == "flag":
            sp.add_argument("--graph", default=DEFAULT_GRAPH, help="graph JSON file, '-' or library name")
        sp.set_defaults(fn=fn)
        return sp

    verb("validate", cmd_validate, "check the factorization property", "positional")
    sp = verb("info", cmd_info, "flags, vertex matrices and PF data", "positional")
    sp.set_defaults(graph=DEFAULT_GRAPH)
    sp = verb("measure", cmd_measure, "mass of a cylinder set", "positional")
    sp.set_defaults(graph=DEFAULT_GRAPH)
    sp.add_argument("--spec", default="pf")
    sp.add_argument("--cylinder", required=True, help="comma-separated edge ids")

    sp = verb("consistency", cmd_consistency, "Kolmogorov consistency of a measure")
    sp.add_argument("--spec", default="pf")
    sp.add_argument("--depth", type=int, default=6)

    sp = verb("rn", cmd_rn, "Radon-Nikodym derivative of a prefixing map at a point")
    sp.add_argument("--spec", default="pf")
    sp.add_argument("--edge", required=True, help="edge id, or comma-separated path")
    sp.add_argument("--point", help="prefix|cycle edge lists")
    sp.add_argument("--depth", type=int, default=8)

    sp = verb("compare", cmd_compare, "equivalence or singularity of two measures")
    sp.add_argument("--mu", required=True)
    sp.add_argument("--nu", required=True)
    sp.add_argument("--depth", type=int, default=30)
    sp.add_argument("--expect", choices=["equivalent", "singular", "inconclusive"])

    sp = verb("ck-l2", cmd_ck_l2, "Cuntz-Krieger relations on L^2 step functions")
    sp.add_argument("--spec", default="pf")
    sp.add_argument("--level", type=int, default=2)
    sp.add_argument("--bound", default="2,2")
    sp.add_argument("--exact", action="store_true")
    sp.add_argument("--tol", type=float)

    sp = verb("ck-inductive", cmd_ck_inductive, "Cuntz-Krieger relations on the inductive-limit space")
    sp.add_argument("--point")
    sp.add_argument("--bounds", default="2,3")

    sp = verb("gauge", cmd_gauge, "gauge intertwining on the inductive-limit space")
    sp.add_argument("--point")
    sp.add_argument("--z", help="'re,im;re,im' or 'root:order:e1,e2'; default: 8th roots")
    sp.add_argument("--bounds", default="2,3")

    sp = verb("intertwine", cmd_intertwine, "shift-tail unitary between two points")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True, help="a point, or 'shift:t' for sigma^(t,...,t)(x)")
    sp.add_argument("--m", required=True)
    sp.add_argument("--n", required=True)
    sp.add_argument("--bounds", default="2,3")

    sp = verb("direct-sum", cmd_direct_sum, "nonvanishing of T_mu in the direct sum over vertices")
    sp.add_argument("--bounds", default="2,2")
    sp.add_argument("--ck", action="store_true", help="also check the relations in each summand")

    sp = verb("prefixing", cmd_prefixing, "T_lam against the discrete prefixing maps")
    sp.add_argument("--point")
    sp.add_argument("--bounds", default="2,3")

    sp = verb("sbfs-check", cmd_sbfs_check, "conditions for a geometric semibranching system", graph=None)
    sp.add_argument("system", help="system JSON file or library system name")
    sp.add_argument("--grid", type=int, default=100)

    sp = verb("library", cmd_library, "write a library graph or system", graph=None)
    sp.add_argument("name", choices=sorted(set(LIBRARY) | set(SBFS_LIBRARY)))
    sp.add_argument("--N", type=int)
    sp.add_argument("--perm")
    sp.add_argument("-o", "--output")
    return p


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if getattr(args, "graph_opt", None):
        args.graph = args.graph_opt
    try:
        passed, result, lines = args.fn(args)
    except (InputError, ValueError) as exc:
        code = getattr(exc, "code", "InputError")
        msg = {"command": args.verb, "error": code, "message": str(exc)}
        if args.json:
            print(json.dumps(msg, sort_keys=True, indent=2), file=out)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if lines is None:
        print(json.dumps(result, sort_keys=True, indent=2), file=out)
    elif args.json:
        print(json.dumps({"command": args.verb, "pass": passed, "result": result}, sort_keys=True, indent=2), file=out)
    else:
        for line in lines:
            print(line, file=out)
        print("PASS" if passed else "FAIL", file=out)
    return 0 if passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
