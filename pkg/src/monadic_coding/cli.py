"""Command-line front end.

Every command writes a JSON run report (command echo, input digests, payload,
verdict, wall time) to stdout, or a short text summary with ``--format text``.
With ``--out DIR`` the report and any produced files go to DIR as well.

Exit status: 0 verified / witness found, 1 none or unverified, 2 usage or
input error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .coding import (
    CodingTriple,
    check_encoding,
    check_order_embedding,
    embed_equiv_in_order,
    encode_graph,
    symmetric_closure,
    verify_coding,
)
from .detectors import (
    DEFAULT_BUDGET,
    FCP,
    FINDERS,
    INDEPENDENCE,
    ORDER,
    STABLE,
    UNSTABLE,
    ConfigFamily,
    certify_config,
    certify_witness,
    find_config_family,
)
from .logic import FormulaSyntaxError, PartitionedFormula, evaluate, parse_formula, solution_set, to_text
from .mutual_algebraicity import (
    DisjointFamily,
    canonical_monadic_presentation,
    certify_family,
    check_presentation,
    extract_disjoint_family,
    greedy_size_bound,
    multiplicity,
    union_multiplicity_check,
)
from .overlay import OverlayPlan, plan_prop1, plan_prop2, roundtrip_inverse, run_overlay
from .pipelines import RunReport, canonical_json, digest, load_graph, pipeline_t321, pipeline_t54
from .structures import (
    dumps_structure,
    loads_structure,
    make_equiv,
    make_fcp_expansion,
    make_half_graph,
    make_linear_order,
    make_powerset,
    make_random_graph,
)

GLOBAL_DEFAULTS = {"seed": 0, "budget": DEFAULT_BUDGET, "out": None, "format": "json"}
DETECT_KINDS = {"order": ORDER, "ip": INDEPENDENCE, "fcp": FCP}


class InputError(ValueError):
    pass


# -- argument helpers -----------------------------------------------------------

def _names(text: str) -> tuple:
    return tuple(p.strip() for p in text.split(",") if p.strip()) if text else ()


def _ints(text: str) -> list:
    try:
        return [int(p) for p in text.split(",") if p.strip()] if text else []
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _bindings(items) -> dict:
    """name=value pairs, from repeated flags and/or comma lists."""
    out = {}
    for item in items or ():
        for part in item.split(","):
            if not part.strip():
                continue
            name, sep, value = part.partition("=")
            if not sep:
                raise InputError(f"expected name=value, got {part!r}")
            try:
                out[name.strip()] = int(value)
            except ValueError:
                raise InputError(f"value for {name.strip()} is not an integer") from None
    return out


class _Inputs:
    """Reads input files and records their digests."""

    def __init__(self):
        self.digests: dict = {}

    def text(self, key: str, path: str) -> str:
        data = Path(path).read_bytes()
        self.digests[key] = digest(data)
        return data.decode("utf-8")

    def json(self, key: str, path: str):
        try:
            return json.loads(self.text(key, path))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from None

    def structure(self, key: str, path: str):
        return loads_structure(self.text(key, path))

    def formula(self, text: str, key: str = "formula"):
        """Inline formula text, or the path of a file holding one."""
        if Path(text).is_file():
            text = self.text(key, text)
        return parse_formula(text)


# -- command handlers ------------------------------------------------------------------
# Each returns (payload, verdict, artifacts) and fills ``inp`` with input digests.

def cmd_eval(args, inp: _Inputs):
    s = inp.structure("structure", args.structure)
    f = inp.formula(args.formula)
    env = _bindings(args.assign)
    value = evaluate(s, f, env)
    return {"formula": to_text(f), "assignment": env, "value": value}, value, {}


def cmd_solve(args, inp: _Inputs):
    s = inp.structure("structure", args.structure)
    f = inp.formula(args.formula)
    variables = _names(args.vars)
    env = _bindings(args.assign)
    sols = sorted(solution_set(s, f, variables, env))
    payload = {
        "formula": to_text(f),
        "variables": list(variables),
        "assignment": env,
        "count": len(sols),
        "solutions": [list(t) for t in sols],
    }
    return payload, bool(sols), {}


def cmd_detect(args, inp: _Inputs):
    s = inp.structure("structure", args.structure)
    pf = PartitionedFormula(inp.formula(args.formula), _names(args.obj), _names(args.params))
    budget = None if args.exhaustive else args.budget
    if args.kind == "config":
        result = find_config_family(s, pf, args.level, args.config_kind, budget, args.reserve)
        problems = certify_config(s, pf, result.witness) if result.found else []
    else:
        if len(args.level) != 1:
            raise InputError("order, ip and fcp take a single --level")
        result = FINDERS[DETECT_KINDS[args.kind]](s, pf, args.level[0], budget)
        problems = certify_witness(s, pf, result.witness) if result.found else []
    payload = {
        "kind": args.kind,
        "formula": str(pf),
        "status": result.status(),
        "examined": result.examined,
        "witness": result.witness.to_dict() if result.found else None,
        "problems": problems,
    }
    return payload, result.found and not problems, {}


def cmd_ma(args, inp: _Inputs):
    s = inp.structure("structure", args.structure)
    if args.ma_command == "union-check":
        s2 = inp.structure("structure2", args.structure2)
        check = union_multiplicity_check(s, s2)
        return check.to_dict(), check.ok, {}
    if args.relation not in s:
        raise InputError(f"no relation {args.relation!r} in the structure")
    Y = s[args.relation]
    if args.ma_command == "mult":
        payload = {"relation": args.relation, "arity": Y.arity, "size": len(Y), "multiplicity": multiplicity(Y)}
        return payload, True, {}
    if args.ma_command == "family":
        fam = extract_disjoint_family(Y, Y.arity, closed=args.closed)
        problems = certify_family(Y, fam, closed=args.closed)
        bound = greedy_size_bound(Y, Y.arity)
        payload = {
            "relation": args.relation,
            "closed": args.closed,
            "family": fam.to_dict(),
            "size": len(fam.members),
            "greedy_bound": bound,
            "problems": problems,
        }
        ok = not problems and (args.closed or len(fam.members) >= bound)
        return payload, ok, {}
    pres = canonical_monadic_presentation(Y, Y.arity)
    ok = check_presentation(Y, s.universe_size, pres)
    payload = {
        "relation": args.relation,
        "predicates": [{"name": p.name, "members": sorted(p.members)} for p in pres.predicates],
        "variables": list(pres.variables),
        "formula": pres.text(),
        "excess": pres.excess,
        "verified": ok,
    }
    return payload, ok, {}


def _triple_from_doc(doc: dict) -> CodingTriple:
    try:
        variables = tuple(doc.get("vars", ("x", "y", "z")))
        params = doc.get("params", {})
        pf = PartitionedFormula(parse_formula(doc["formula"]), variables, tuple(params))
        return CodingTriple(doc["A"], doc["B"], doc["C"], pf, tuple(params.values()))
    except KeyError as exc:
        raise InputError(f"triple document missing field {exc}") from None


def cmd_code(args, inp: _Inputs):
    if args.code_command == "embed-equiv":
        emb = embed_equiv_in_order(args.classes, args.size)
        problems = check_order_embedding(emb)
        classes: dict = {}
        for u, v in sorted(emb.defined_relation()):
            classes.setdefault(u, set()).add(v)
        blocks = sorted({tuple(sorted(c)) for c in classes.values()})
        payload = {
            "universe": emb.structure.universe_size,
            "A": list(emb.domain),
            "formula": to_text(emb.formula),
            "variables": list(emb.variables),
            "classes": [list(b) for b in blocks],
            "isomorphism": [[a, b] for a, b in sorted(emb.isomorphism.items())],
            "problems": problems,
        }
        return payload, not problems, {"structure.json": dumps_structure(emb.structure)}
    s = inp.structure("structure", args.structure)
    if args.code_command == "verify":
        params = _bindings(args.param)
        pf = PartitionedFormula(inp.formula(args.formula), _names(args.vars), tuple(params))
        triple = CodingTriple(args.A, args.B, args.C, pf, tuple(params.values()))
        check = verify_coding(s, triple)
        payload = {
            "ok": check.ok,
            "diagnosis": check.diagnosis,
            "mapping": [[a, b, c] for (a, b), c in sorted(check.mapping.items())],
        }
        return payload, check.ok, {}
    triple = _triple_from_doc(inp.json("triple", args.triple))
    vertices, edges = load_graph(inp.json("graph", args.graph))
    if not set(vertices) <= set(triple.A):
        raise InputError("graph vertices must be elements of A")
    enc = encode_graph(s, triple, symmetric_closure(edges), args.d_name, args.e_name)
    problems = check_encoding(enc, triple)
    defined = sorted({tuple(sorted(t)) for t in enc.defined_relation(triple)})
    text = dumps_structure(enc.structure)
    payload = {
        "D": sorted(enc.D.members),
        "E": sorted(enc.E.members),
        "witnesses": [[a1, a2, b] for (a1, a2), b in sorted(enc.pair_assignment.items())],
        "edge_formula": to_text(enc.edge_formula),
        "edge_variables": list(enc.variables),
        "defined_edges": [list(e) for e in defined],
        "problems": problems,
        "structure_sha256": digest(text),
    }
    return payload, not problems, {"structure.json": text}


def _overlay_payload(plan: OverlayPlan, report, expanded) -> tuple:
    text = dumps_structure(expanded)
    problems = plan.constraint_problems()
    payload = {
        "variant": plan.variant,
        "sigma": list(plan.sigma.mapping),
        "constraint_problems": problems,
        "theta": to_text(report.theta),
        "report": report.to_dict(),
        "combined_sha256": digest(text),
    }
    artifacts = {"combined.json": text, "plan.json": canonical_json(plan.to_dict())}
    return payload, report.verdict and not problems, artifacts


def cmd_overlay(args, inp: _Inputs):
    if args.overlay_command == "roundtrip":
        plan = OverlayPlan.from_dict(inp.json("plan", args.plan))
        trip = roundtrip_inverse(plan)
        return trip.to_dict(), trip.ok, {"restored.json": dumps_structure(trip.structure)}
    left_s = inp.structure("left_structure", args.left_structure)
    left = ConfigFamily.from_dict(inp.json("left_config", args.left_config))
    right_s = inp.structure("right_structure", args.right_structure)
    if args.overlay_command == "prop1":
        right = ConfigFamily.from_dict(inp.json("right_config", args.right_config))
        plan = plan_prop1(left_s, left, right_s, right)
        report, expanded = run_overlay(plan, args.level)
    else:
        if args.family:
            fam = DisjointFamily.from_dict(inp.json("family", args.family))
        else:
            if args.relation not in right_s:
                raise InputError(f"no relation {args.relation!r} in the right structure")
            fam = extract_disjoint_family(right_s[args.relation], right_s.arity(args.relation), closed=True)
        plan = plan_prop2(left_s, left, right_s, args.relation, fam)
        report, expanded = run_overlay(plan, args.level, args.split)
    return _overlay_payload(plan, report, expanded)


def cmd_pipeline(args, inp: _Inputs):
    if args.pipeline_command == "t321":
        vertices, edges = load_graph(inp.json("graph", args.graph))
        rep = pipeline_t321(vertices, edges, args.size_b)
    elif args.pipeline_command == "t54-1":
        rep = pipeline_t54(
            1, args.level, args.classes, args.class_size, order_size=args.order_size, budget=args.budget
        )
    else:
        rep = pipeline_t54(
            2, args.level, args.classes, args.class_size, pairs=args.pairs, split=args.split, budget=args.budget
        )
    inp.digests.update({f"generated:{k}": v for k, v in rep.inputs.items()})
    return rep.payload, rep.verdict, rep.artifacts


def cmd_gen(args, inp: _Inputs):
    g = args.gen_command
    if g == "order":
        s = make_linear_order(args.n)
    elif g == "equiv":
        s = make_equiv(args.classes, args.size)
    elif g == "rg":
        s = make_random_graph(args.n, args.p, args.seed)
    elif g == "fcp":
        s = make_fcp_expansion(args.classes)
    elif g == "powerset":
        s = make_powerset(args.n)
    else:
        s = make_half_graph(args.n)
    return None, True, {"structure.json": dumps_structure(s)}


# -- parser ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for random generators")
    common.add_argument("--budget", type=int, default=argparse.SUPPRESS, help="search node budget")
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS, help="write the report and produced files here")
    common.add_argument("--format", choices=("json", "text"), default=argparse.SUPPRESS)
    p = argparse.ArgumentParser(
        prog="monadic-coding", description=__doc__.split("\n\n")[0], parents=[common]
    )
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="truth value of a formula under an assignment", parents=[common])
    e.add_argument("--structure", required=True)
    e.add_argument("--formula", required=True)
    e.add_argument("--assign", action="append", metavar="VAR=ELEM")
    e.set_defaults(handler=cmd_eval)

    s = sub.add_parser("solve", help="solution set of a formula", parents=[common])
    s.add_argument("--structure", required=True)
    s.add_argument("--formula", required=True)
    s.add_argument("--vars", required=True, help="comma-separated variables to solve for")
    s.add_argument("--assign", action="append", metavar="VAR=ELEM")
    s.set_defaults(handler=cmd_solve)

    d = sub.add_parser(
        "detect", help="order / independence / FCP witnesses, configuration families", parents=[common]
    )
    d.add_argument("kind", choices=("order", "ip", "fcp", "config"))
    d.add_argument("--structure", required=True)
    d.add_argument("--formula", required=True)
    d.add_argument("--obj", required=True, help="object variables, comma-separated")
    d.add_argument("--params", required=True, help="parameter variables, comma-separated")
    d.add_argument("--level", type=_ints, required=True, help="level n (config: comma-separated levels)")
    d.add_argument("--exhaustive", action="store_true", help="ignore the budget")
    d.add_argument("--config-kind", choices=(STABLE, UNSTABLE), default=STABLE)
    d.add_argument("--reserve", type=int, default=0, help="config: minimum exceptional set size")
    d.set_defaults(handler=cmd_detect)

    m = sub.add_parser("ma", help="mutual algebraicity tools", parents=[common])
    msub = m.add_subparsers(dest="ma_command", required=True)
    for name in ("mult", "family", "present"):
        q = msub.add_parser(name, parents=[common])
        q.add_argument("--structure", required=True)
        q.add_argument("--relation", required=True)
        if name == "family":
            q.add_argument("--closed", action="store_true", help="no other tuple inside the support")
    q = msub.add_parser("union-check", parents=[common])
    q.add_argument("--structure", required=True)
    q.add_argument("--structure2", required=True)
    m.set_defaults(handler=cmd_ma)

    c = sub.add_parser("code", help="coding triples and graph encodings", parents=[common])
    csub = c.add_subparsers(dest="code_command", required=True)
    q = csub.add_parser("verify", parents=[common])
    q.add_argument("--structure", required=True)
    q.add_argument("--A", type=_ints, required=True)
    q.add_argument("--B", type=_ints, required=True)
    q.add_argument("--C", type=_ints, required=True)
    q.add_argument("--formula", required=True)
    q.add_argument("--vars", default="x,y,z", help="the three object variables")
    q.add_argument("--param", action="append", metavar="VAR=ELEM")
    q = csub.add_parser("encode-graph", parents=[common])
    q.add_argument("--structure", required=True)
    q.add_argument("--triple", required=True, help="JSON with A, B, C, formula, vars, params")
    q.add_argument("--graph", required=True)
    q.add_argument("--d-name", default="D")
    q.add_argument("--e-name", default="E")
    q = csub.add_parser("embed-equiv", parents=[common])
    q.add_argument("--classes", type=int, required=True)
    q.add_argument("--size", type=int, required=True)
    c.set_defaults(handler=cmd_code)

    o = sub.add_parser("overlay", help="permutation overlays", parents=[common])
    osub = o.add_subparsers(dest="overlay_command", required=True)
    for name in ("prop1", "prop2"):
        q = osub.add_parser(name, parents=[common])
        q.add_argument("--left-structure", required=True)
        q.add_argument("--left-config", required=True)
        q.add_argument("--right-structure", required=True)
        q.add_argument("--level", type=int, required=True)
        if name == "prop1":
            q.add_argument("--right-config", required=True)
        else:
            q.add_argument("--relation", required=True)
            q.add_argument("--family", help="disjoint family JSON (default: extract a closed one)")
            q.add_argument("--split", type=int)
    q = osub.add_parser("roundtrip", parents=[common])
    q.add_argument("--plan", required=True)
    o.set_defaults(handler=cmd_overlay)

    pl = sub.add_parser("pipeline", help="end-to-end constructions", parents=[common])
    psub = pl.add_subparsers(dest="pipeline_command", required=True)
    q = psub.add_parser("t321", parents=[common])
    q.add_argument("--graph", required=True)
    q.add_argument("--size-b", type=int)
    for name in ("t54-1", "t54-2"):
        q = psub.add_parser(name, parents=[common])
        q.add_argument("--level", type=int, required=True)
        q.add_argument("--classes", type=int, default=4)
        q.add_argument("--class-size", type=int, default=5)
        if name == "t54-1":
            q.add_argument("--order-size", type=int, default=60)
        else:
            q.add_argument("--pairs", type=int, default=10)
            q.add_argument("--split", type=int)
    pl.set_defaults(handler=cmd_pipeline)

    g = sub.add_parser("gen", help="paradigm structures", parents=[common])
    gsub = g.add_subparsers(dest="gen_command", required=True)
    for name in ("order", "powerset", "half"):
        gsub.add_parser(name, parents=[common]).add_argument("n", type=int)
    q = gsub.add_parser("equiv", parents=[common])
    q.add_argument("classes", type=int)
    q.add_argument("size", type=int)
    q = gsub.add_parser("rg", parents=[common])
    q.add_argument("n", type=int)
    q.add_argument("p", type=float)
    gsub.add_parser("fcp", parents=[common]).add_argument("classes", type=int)
    g.set_defaults(handler=cmd_gen)
    return p


# -- output -------------------------------------------------------------------------------

def _text_summary(report: RunReport) -> str:
    lines = [f"command: {' '.join(report.command)}", f"verdict: {'true' if report.verdict else 'false'}"]
    for key, value in sorted(report.payload.items()):
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True, separators=(",", ":"))
            if len(value) > 200:
                value = value[:197] + "..."
        lines.append(f"{key}: {value}")
    lines.append(f"wall_time: {report.wall_time:.3f}s")
    return "\n".join(lines) + "\n"


def _write_artifacts(out: str | None, files: dict) -> None:
    if not out:
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        with open(d / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    # the flag actions are shared between parsers, so defaults are filled in here
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    inp = _Inputs()
    start = time.perf_counter()
    try:
        payload, verdict, artifacts = args.handler(args, inp)
    except (ValueError, OSError, KeyError, FormulaSyntaxError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    if args.command == "gen":
        text = artifacts["structure.json"]
        _write_artifacts(args.out, artifacts)
        if not args.out:
            sys.stdout.write(text)
        return 0
    report = RunReport(argv, inp.digests, payload, bool(verdict), time.perf_counter() - start)
    doc = canonical_json(report.to_dict())
    _write_artifacts(args.out, {**artifacts, "report.json": doc})
    if args.format == "text":
        sys.stdout.write(_text_summary(report))
    else:
        sys.stdout.write(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
    return 0 if report.verdict else 1


if __name__ == "__main__":
    raise SystemExit(main())
