"""Acceptance suite: twelve end-to-end criteria, each with a time limit.

Every criterion prints one line, ``criterion N: PASS|FAIL (...)``, straight to
the terminal, so the lines appear in a plain ``pytest -v`` log.
"""
import itertools
import json
import random
import time
from collections import Counter
from contextlib import contextmanager

import pytest
from oracles import VARS, is_bijection_graph, naive_eval, naive_solutions, random_formula, relation_sets

from monadic_coding.coding import check_order_embedding, definable_order, embed_equiv_in_order, encode_graph, explicit_triple
from monadic_coding.detectors import certify_witness, find_fcp_witness, find_independence_witness, find_order_witness
from monadic_coding.logic import PartitionedFormula, evaluate, parse_formula
from monadic_coding.mutual_algebraicity import (
    canonical_monadic_presentation,
    certify_family,
    check_presentation,
    extract_disjoint_family,
    greedy_size_bound,
    multiplicity,
    union_multiplicity_check,
)
from monadic_coding.pipelines import pipeline_t54
from monadic_coding.structures import (
    FiniteStructure,
    make_equiv,
    make_fcp_expansion,
    make_half_graph,
    make_linear_order,
    make_powerset,
    overlay_union,
)


@contextmanager
def criterion(capsys, number: int, title: str, limit: float | None):
    start = time.perf_counter()
    failure = None
    try:
        yield
    except Exception as exc:  # reported, then re-raised
        failure = exc
    elapsed = time.perf_counter() - start
    if failure is None and limit is not None and elapsed > limit:
        failure = AssertionError(f"took {elapsed:.1f}s, limit {limit:.0f}s")
    verdict = "PASS" if failure is None else "FAIL"
    budget = f" / {limit:.0f}s" if limit is not None else ""
    with capsys.disabled():
        print(f"\ncriterion {number:2d}: {verdict} {title} ({elapsed:.2f}s{budget})")
    if failure is not None:
        raise failure


def pf(text, obj=("x",), params=("y",)):
    return PartitionedFormula(parse_formula(text), obj, params)


# -- 1 -------------------------------------------------------------------------------------

def test_criterion_01_evaluator_oracle(capsys):
    with criterion(capsys, 1, "evaluator agrees with the naive evaluator", 60):
        disagreements = 0
        cases = 0
        for seed in range(10_000):
            rng = random.Random(seed)
            n = rng.randint(1, 3)
            R = {(a, b) for a in range(n) for b in range(n) if rng.random() < 0.5}
            s = FiniteStructure(n, {"R": (2, R)})
            f = random_formula(rng, rng.randint(0, 3), size=rng.randint(1, 12))
            env = {v: rng.randrange(n) for v in VARS}
            cases += 1
            if evaluate(s, f, env) != naive_eval(n, {"R": R}, f, env):
                disagreements += 1
        assert cases >= 10_000
        assert disagreements == 0, f"{disagreements} disagreements"


# -- 2 -------------------------------------------------------------------------------------

def test_criterion_02_order_property(capsys):
    with criterion(capsys, 2, "order witnesses on orders, none on the equivalence", 60):
        phi = pf("LE(y, x) & !(x = y)")
        for n in range(1, 11):
            s = make_linear_order(2 * n)
            res = find_order_witness(s, phi, n, budget=None)
            assert res.found, f"no order witness at level {n}"
            assert certify_witness(s, phi, res.witness) == []
        res = find_order_witness(make_equiv(5, 5), pf("E(x, y)"), 3, budget=None)
        assert not res.found and res.exhaustive


# -- 3 -------------------------------------------------------------------------------------

def test_criterion_03_independence_property(capsys):
    with criterion(capsys, 3, "IP witnesses on the powerset, none on the order", 120):
        phi = pf("IN(y, x)")
        for n in range(1, 5):
            s = make_powerset(n)
            res = find_independence_witness(s, phi, n, budget=None)
            assert res.found and certify_witness(s, phi, res.witness) == []
        res = find_independence_witness(make_linear_order(20), pf("LE(x, y)"), 2, budget=None)
        assert not res.found and res.exhaustive


# -- 4 -------------------------------------------------------------------------------------

def test_criterion_04_fcp(capsys):
    with criterion(capsys, 4, "FCP witnesses on the marked equivalence", 30):
        s = make_fcp_expansion(5)
        phi = pf("E(x, y) & P(x) & !(x = y)")
        for n in range(2, 6):
            res = find_fcp_witness(s, phi, n, budget=None)
            assert res.found, f"no FCP witness at level {n}"
            assert certify_witness(s, phi, res.witness) == []


# -- 5 -------------------------------------------------------------------------------------

def test_criterion_05_monadic_presentation(capsys):
    with criterion(capsys, 5, "monadic presentations define Y exactly", 30):
        rng = random.Random(505)
        failures = 0
        for _ in range(200):
            n, k = rng.randint(1, 12), rng.choice([2, 3])
            Y = {tuple(rng.randrange(n) for _ in range(k)) for _ in range(rng.randint(0, 15))}
            pres = canonical_monadic_presentation(Y, k)
            s = pres.structure(n)
            got = naive_solutions(n, relation_sets(s), pres.formula, pres.variables)
            if got != frozenset(Y) or not check_presentation(Y, n, pres):
                failures += 1
        assert failures == 0, f"{failures} failures"


# -- 6 -------------------------------------------------------------------------------------

def _ma_relation(rng, n, k, m):
    counts = Counter()
    Y = set()
    for _ in range(60):
        t = tuple(rng.randrange(n) for _ in range(k))
        if t in Y or any(counts[a] >= m for a in set(t)):
            continue
        Y.add(t)
        counts.update(set(t))
    return Y


def test_criterion_06_disjoint_family(capsys):
    with criterion(capsys, 6, "disjoint families certify and meet the size bound", 30):
        rng = random.Random(606)
        checked = 0
        while checked < 200:
            n, k, m = rng.randint(2, 15), rng.choice([2, 3]), rng.randint(1, 3)
            Y = _ma_relation(rng, n, k, m)
            if not any(len(set(t)) > 1 for t in Y):
                continue
            assert multiplicity(Y) <= 3
            fam = extract_disjoint_family(Y, k)
            assert certify_family(Y, fam) == [], Y
            assert len(fam.members) >= greedy_size_bound(Y, k), Y
            checked += 1


# -- 7 -------------------------------------------------------------------------------------

def _defined_edges(s, triple, E):
    """The coded graph read off by hand: a1 ~ a2 iff some b sends both into E."""
    image = {(a, b): c for a, b, c in s["F"].tuples}
    out = set()
    for a1, a2 in itertools.permutations(triple.A, 2):
        if any(image[(a1, b)] in E and image[(a2, b)] in E for b in triple.B):
            out.add((a1, a2))
    return out


def test_criterion_07_all_graphs_on_five_vertices(capsys):
    with criterion(capsys, 7, "every graph on 5 vertices is coded exactly", 120):
        s, triple = explicit_triple(5, 10)
        pairs = list(itertools.combinations(range(5), 2))
        count = 0
        for mask in range(1 << len(pairs)):
            edges = {p for i, p in enumerate(pairs) if mask >> i & 1}
            G = edges | {(v, u) for u, v in edges}
            enc = encode_graph(s, triple, G)
            assert enc.defined_relation(triple) == G, sorted(edges)
            assert _defined_edges(s, triple, set(enc.E.members)) == G
            count += 1
        assert count == 1024


# -- 8 -------------------------------------------------------------------------------------

def test_criterion_08_half_graph_order(capsys):
    with criterion(capsys, 8, "half graphs reconstruct the index order", None):
        HALF = pf("H(x, y)")
        for n in range(1, 9):
            res = definable_order(make_half_graph(n), "A", "B", HALF)
            assert res.is_total
            assert res.relation == {(i, j) for i in range(n) for j in range(n) if i <= j}
            assert res.sequence == tuple(range(n))


# -- 9 -------------------------------------------------------------------------------------

def test_criterion_09_equivalence_in_order(capsys):
    with criterion(capsys, 9, "equivalences embed into orders tuple for tuple", None):
        for c, size in itertools.product(range(1, 6), repeat=2):
            emb = embed_equiv_in_order(c, size)
            assert check_order_embedding(emb) == []
            iso = emb.isomorphism
            carried = {(iso[a], iso[b]) for a, b in emb.defined_relation()}
            assert carried == set(make_equiv(c, size)["E"].tuples), (c, size)


# -- 10, 11 ----------------------------------------------------------------------------------

def _undo_sigma_by_hand(plan_doc):
    """Apply the inverse of sigma to the combined structure with plain dicts."""
    sigma = plan_doc["sigma"]
    inv = {b: a for a, b in enumerate(sigma)}
    out = {}
    for name, rel in plan_doc["combined"]["relations"].items():
        out[name] = {tuple(inv[a] for a in t) for t in rel["tuples"]}
    return out


def _check_overlay_report(rep, size):
    theta = rep.payload["theta"]
    assert rep.payload["constraint_problems"] == []
    assert rep.payload["certificate_problems"] == []
    solution = {tuple(t) for t in theta["solution"]}
    assert len(solution) == size
    assert is_bijection_graph(
        solution,
        set(theta["domain_left"]["members"]),
        set(theta["domain_right"]["members"]),
        set(theta["target"]["members"]),
    )
    assert rep.payload["roundtrip"]["ok"]
    plan = json.loads(rep.artifacts["plan.json"])
    back = _undo_sigma_by_hand(plan)
    for name, rel in plan["right_structure"]["relations"].items():
        assert back[name] == {tuple(t) for t in rel["tuples"]}, name
    assert rep.verdict


def test_criterion_10_prop1_end_to_end(capsys):
    with criterion(capsys, 10, "equivalence over order: theta codes a 9-element bijection", 60):
        rep = pipeline_t54(1, 3, classes=4, class_size=5, order_size=60)
        _check_overlay_report(rep, 9)
        plan = json.loads(rep.artifacts["plan.json"])
        sigma = plan["sigma"]
        left = plan["left"]["levels"][0]
        right = plan["right"]["levels"][0]
        X = set(plan["left"]["exceptional"])
        for i, j in itertools.product(range(3), repeat=2):
            assert sigma[right["A"][i][j]] == left["A"][j][i]
        assert all(sigma[d] in X for d in right["B"])


def test_criterion_11_prop2_end_to_end(capsys):
    with criterion(capsys, 11, "equivalence over a matching: theta codes a 4-element bijection", 60):
        rep = pipeline_t54(2, 4, classes=4, class_size=5, pairs=10)
        _check_overlay_report(rep, 4)
        plan = json.loads(rep.artifacts["plan.json"])
        Y = {tuple(t) for t in plan["right_structure"]["relations"]["Y"]["tuples"]}
        assert multiplicity(Y) == 1
        # the pairing is a formula: theta mentions the relation Y itself
        assert "Y(" in rep.payload["theta"]["theta"]


# -- 12 --------------------------------------------------------------------------------------

def _oracle_multiplicity(tuples):
    counts = Counter(a for t in tuples for a in set(t))
    return max(counts.values(), default=0)


def test_criterion_12_union_multiplicities(capsys):
    with criterion(capsys, 12, "multiplicities are unchanged by disjoint unions", None):
        rng = random.Random(1212)
        n = 20
        for trial in range(100):
            rels1, rels2 = {}, {}
            for rels, prefix in ((rels1, "R"), (rels2, "S")):
                for idx in range(rng.randint(1, 3)):
                    k = rng.randint(1, 3)
                    rels[f"{prefix}{idx}"] = (k, {tuple(rng.randrange(n) for _ in range(k)) for _ in range(rng.randint(0, 25))})
            s1, s2 = FiniteStructure(n, rels1), FiniteStructure(n, rels2)
            check = union_multiplicity_check(s1, s2)
            assert check.ok, trial
            union = overlay_union(s1, s2)
            for name, (_, tuples) in {**rels1, **rels2}.items():
                assert _oracle_multiplicity(union[name].tuples) == _oracle_multiplicity(tuples)
                assert check.multiplicities[name][0] == _oracle_multiplicity(tuples)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
