"""End-to-end runs: generator, search, construction and verification in one call."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from math import comb

from .coding import check_encoding, encode_graph, explicit_triple, symmetric_closure, verify_coding
from .detectors import DEFAULT_BUDGET, STABLE, UNSTABLE, certify_config, find_config_family
from .logic import PartitionedFormula, parse_formula, to_text
from .mutual_algebraicity import certify_family, extract_disjoint_family
from .overlay import PROP1, OverlayError, plan_prop1, plan_prop2, roundtrip_inverse, run_overlay
from .structures import FiniteStructure, dumps_structure, make_equiv, make_linear_order


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def digest(data) -> str:
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunReport:
    command: list
    inputs: dict  # name -> sha256 of the input's canonical bytes
    payload: dict
    verdict: bool
    wall_time: float = 0.0
    artifacts: dict = field(default_factory=dict)  # file name -> text, written by the CLI

    def to_dict(self) -> dict:
        return {
            "command": list(self.command),
            "inputs": dict(sorted(self.inputs.items())),
            "payload": self.payload,
            "verdict": self.verdict,
            "wall_time": round(self.wall_time, 6),
        }


# -- graphs -----------------------------------------------------------------------

def load_graph(doc: dict) -> tuple:
    """(vertices, edges) from a graph document; edges as (u, v) with u < v.

    ``vertices`` is either a list of integers or a count m, meaning 0..m-1.
    """
    if not isinstance(doc, dict) or "vertices" not in doc or "edges" not in doc:
        raise ValueError("graph document needs 'vertices' and 'edges'")
    raw = doc["vertices"]
    if isinstance(raw, int) and not isinstance(raw, bool):
        vertices = list(range(raw))
    elif isinstance(raw, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in raw):
        vertices = list(raw)
    else:
        raise ValueError("'vertices' must be a count or a list of integers")
    if not isinstance(doc["edges"], list):
        raise ValueError("'edges' must be a list")
    if len(set(vertices)) != len(vertices):
        raise ValueError("repeated vertex")
    vset = set(vertices)
    edges = []
    for e in doc["edges"]:
        if not isinstance(e, list) or len(e) != 2:
            raise ValueError(f"edge {e} is not a pair")
        u, v = e
        if u not in vset or v not in vset:
            raise ValueError(f"edge {e} mentions an unknown vertex")
        if not u < v:
            raise ValueError(f"edge {e} must be written with u < v")
        edges.append((u, v))
    if len(set(edges)) != len(edges):
        raise ValueError("repeated edge")
    return vertices, edges


def graph_doc(vertices, edges) -> dict:
    return {"vertices": list(vertices), "edges": [list(e) for e in sorted(edges)]}


def pipeline_t321(vertices, edges, size_b: int | None = None) -> RunReport:
    """Code a graph into a monadic expansion of a fresh coding triple."""
    vertices = sorted(vertices)
    m = len(vertices)
    if m < 1:
        raise ValueError("the graph needs at least one vertex")
    needed = comb(m, 2)
    size_b = max(needed, 1) if size_b is None else size_b
    if size_b < needed:
        raise ValueError(f"|B| = {size_b} is below the {needed} pairs of vertices")
    s, triple = explicit_triple(m, size_b)
    to_a = dict(zip(vertices, triple.A))
    G = symmetric_closure((to_a[u], to_a[v]) for u, v in edges)
    check = verify_coding(s, triple)
    enc = encode_graph(s, triple, G)
    problems = check_encoding(enc, triple)
    back = {a: v for v, a in to_a.items()}
    defined = sorted(
        {tuple(sorted((back[a], back[b]))) for a, b in enc.defined_relation(triple)}
    )
    structure_text = dumps_structure(enc.structure)
    verdict = check.ok and not problems and defined == sorted(tuple(sorted(e)) for e in edges)
    payload = {
        "sizes": {"A": m, "B": size_b, "C": len(triple.C)},
        "vertex_map": [[v, to_a[v]] for v in vertices],
        "coding_ok": check.ok,
        "D": sorted(enc.D.members),
        "E": sorted(enc.E.members),
        "edge_formula": to_text(enc.edge_formula),
        "edge_variables": list(enc.variables),
        "defined_edges": [list(e) for e in defined],
        "problems": problems,
        "structure_sha256": digest(structure_text),
    }
    report = RunReport(["pipeline", "t321"], {"graph": digest(canonical_json(graph_doc(vertices, edges)))}, payload, verdict)
    report.artifacts["structure.json"] = structure_text
    return report


# -- overlays ------------------------------------------------------------------------

def _pf(text: str) -> PartitionedFormula:
    return PartitionedFormula(parse_formula(text), ("x",), ("y",))


def matching_structure(pairs: int, relation: str = "Y") -> FiniteStructure:
    """2*pairs elements with Y = {(2t, 2t+1)}: every element in exactly one tuple."""
    if pairs < 1:
        raise ValueError("pairs must be positive")
    return FiniteStructure(2 * pairs, {relation: (2, [(2 * t, 2 * t + 1) for t in range(pairs)])})


def _search_failure(side: str, result) -> dict:
    return {"stage": f"{side} configuration search", "status": result.status(), "examined": result.examined}


def pipeline_t54(
    case: int,
    level: int,
    classes: int = 4,
    class_size: int = 5,
    order_size: int = 60,
    pairs: int = 10,
    split: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> RunReport:
    """Overlay an equivalence relation with a linear order (case 1) or with a
    matching relation Y (case 2), certify theta and undo sigma."""
    if case not in (1, 2):
        raise ValueError("case must be 1 or 2")
    if level < 1:
        raise ValueError("level must be >= 1")
    left_s = make_equiv(classes, class_size)
    phi = _pf("E(x, y)")
    command = ["pipeline", f"t54-{case}", f"--level={level}"]
    inputs = {"left_structure": digest(dumps_structure(left_s))}
    payload: dict = {"level": level}
    left = find_config_family(left_s, phi, [level], STABLE, budget, reserve=level if case == 1 else 0)
    if not left.found:
        payload["failure"] = _search_failure("left", left)
        return RunReport(command, inputs, payload, False)
    left_fam = left.witness
    payload["left_config"] = left_fam.to_dict()
    try:
        if case == 1:
            right_s = make_linear_order(order_size)
            inputs["right_structure"] = digest(dumps_structure(right_s))
            right = find_config_family(right_s, _pf("LE(x, y)"), [level], UNSTABLE, budget)
            if not right.found:
                payload["failure"] = _search_failure("right", right)
                return RunReport(command, inputs, payload, False)
            payload["right_config"] = right.witness.to_dict()
            plan = plan_prop1(left_s, left_fam, right_s, right.witness)
        else:
            right_s = matching_structure(pairs)
            inputs["right_structure"] = digest(dumps_structure(right_s))
            fam = extract_disjoint_family(right_s["Y"], closed=True)
            payload["family"] = fam.to_dict()
            plan = plan_prop2(left_s, left_fam, right_s, "Y", fam)
        report, expanded = run_overlay(plan, level, split)
    except OverlayError as exc:
        payload["failure"] = {"stage": "overlay", "error": str(exc)}
        return RunReport(command, inputs, payload, False)
    trip = roundtrip_inverse(plan)
    constraint_problems = plan.constraint_problems()
    config_problems = certify_config(plan.left_structure, left_fam.formula, plan.left)
    if plan.variant == PROP1:
        config_problems += certify_config(plan.right_structure, plan.right.formula, plan.right)
    else:
        config_problems += certify_family(plan.right_structure["Y"], plan.right, closed=True)
    combined_text = dumps_structure(expanded)
    payload.update(
        {
            "variant": plan.variant,
            "sigma": list(plan.sigma.mapping),
            "constraint_problems": constraint_problems,
            "certificate_problems": config_problems,
            "theta": report.to_dict(),
            "roundtrip": trip.to_dict(),
            "combined_sha256": digest(combined_text),
        }
    )
    verdict = report.verdict and trip.ok and not constraint_problems and not config_problems
    out = RunReport(command, inputs, payload, verdict)
    out.artifacts["combined.json"] = combined_text
    out.artifacts["plan.json"] = canonical_json(plan.to_dict())
    return out


__all__ = [
    "RunReport",
    "canonical_json",
    "digest",
    "graph_doc",
    "load_graph",
    "matching_structure",
    "pipeline_t321",
    "pipeline_t54",
]
