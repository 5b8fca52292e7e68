import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import naive_solutions, relation_sets

from monadic_coding.coding import (
    CodingTriple,
    check_encoding,
    check_order_embedding,
    definable_equivalence,
    definable_order,
    embed_equiv_in_order,
    encode_graph,
    explicit_triple,
    is_equivalence,
    is_total_order,
    symmetric_closure,
    verify_coding,
)
from monadic_coding.logic import PartitionedFormula, parse_formula
from monadic_coding.structures import (
    FiniteStructure,
    NamedSubset,
    Permutation,
    apply_permutation,
    expand_many,
    make_equiv,
    make_half_graph,
)

F = PartitionedFormula(parse_formula("F(x, y, z)"), ("x", "y", "z"), ())


def small_triple(drop=None):
    tuples = [(0, 2, 4), (0, 3, 5), (1, 2, 6), (1, 3, 7)]
    if drop:
        tuples.remove(drop)
    s = FiniteStructure(8, {"F": (3, tuples)})
    return s, CodingTriple([0, 1], [2, 3], [4, 5, 6, 7], F)


# -- verify_coding ----------------------------------------------------------------------

def test_verify_explicit_graph():
    s, t = small_triple()
    check = verify_coding(s, t)
    assert check.ok and check.mapping == {(0, 2): 4, (0, 3): 5, (1, 2): 6, (1, 3): 7}


def test_verify_reports_missing_image():
    s, t = small_triple(drop=(1, 3, 7))
    check = verify_coding(s, t)
    assert not check.ok and check.diagnosis == "pair (1,3) has no image"


def test_verify_counting_failure():
    s, _ = small_triple()
    check = verify_coding(s, CodingTriple([0, 1], [2, 3], [4, 5, 6], F))
    assert not check.ok and "|C|" in check.diagnosis


def test_verify_functionality_and_collision():
    s = FiniteStructure(8, {"F": (3, [(0, 2, 4), (0, 2, 5), (0, 3, 5), (1, 2, 6), (1, 3, 7)])})
    assert "several images" in verify_coding(s, CodingTriple([0, 1], [2, 3], [4, 5, 6, 7], F)).diagnosis
    s = FiniteStructure(8, {"F": (3, [(0, 2, 4), (0, 3, 4), (1, 2, 6), (1, 3, 7)])})
    assert "share the image" in verify_coding(s, CodingTriple([0, 1], [2, 3], [4, 5, 6, 7], F)).diagnosis


def test_verify_rejects_overlap():
    s, _ = small_triple()
    with pytest.raises(ValueError):
        verify_coding(s, CodingTriple([0, 1], [1, 3], [4, 5, 6, 7], F))


def test_verify_agrees_with_enumeration():
    rng = random.Random(3)
    for _ in range(30):
        s, t = explicit_triple(3, 3)
        tuples = set(s["F"].tuples)
        for _ in range(rng.randint(0, 2)):
            tuples.symmetric_difference_update({(rng.choice(t.A), rng.choice(t.B), rng.choice(t.C))})
        s = FiniteStructure(s.universe_size, {"F": (3, tuples)})
        sols = naive_solutions(s.universe_size, relation_sets(s), F.formula, ("x", "y", "z"))
        graph = [(a, b, c) for a, b, c in sols if a in t.A and b in t.B and c in t.C]
        pairs = [(a, b) for a, b, _ in graph]
        expected = (
            len(set(pairs)) == len(pairs) == 9 and sorted(c for *_, c in graph) == list(t.C)
        )
        assert verify_coding(s, t).ok == expected


# -- graph encoding --------------------------------------------------------------------------

def test_path_example():
    s, t = explicit_triple(3, 3)
    enc = encode_graph(s, t, symmetric_closure([(0, 1), (1, 2)]))
    assert len(enc.D.members) == 6 and len(enc.E.members) == 4
    assert enc.defined_relation(t) == {(0, 1), (1, 0), (1, 2), (2, 1)}
    assert check_encoding(enc, t) == []


def test_empty_and_complete_graphs():
    s, t = explicit_triple(4, 6)
    empty = encode_graph(s, t, set())
    assert not empty.E.members and empty.defined_relation(t) == frozenset()
    complete = encode_graph(s, t, symmetric_closure(itertools.combinations(range(4), 2)))
    assert complete.E.members == complete.D.members
    assert complete.defined_relation(t) == {(a, b) for a in range(4) for b in range(4) if a != b}


def test_encoding_errors():
    s, t = explicit_triple(4, 5)
    with pytest.raises(ValueError):
        encode_graph(s, t, set())  # |B| = 5 < 6 pairs
    s, t = explicit_triple(3, 3)
    with pytest.raises(ValueError):
        encode_graph(s, t, {(0, 1)})
    with pytest.raises(ValueError):
        encode_graph(s, t, {(0, 0)})
    with pytest.raises(ValueError):
        encode_graph(s, t, symmetric_closure([(0, 5)]))


@settings(max_examples=25, deadline=None)
@given(st.sets(st.sampled_from(list(itertools.combinations(range(6), 2)))))
def test_random_graphs_on_six_vertices(edges):
    s, t = explicit_triple(6, 15)
    assert len(t.C) == 90
    G = symmetric_closure(edges)
    enc = encode_graph(s, t, G)
    assert enc.defined_relation(t) == G
    assert check_encoding(enc, t) == []


def test_witnesses_are_lexicographic():
    s, t = explicit_triple(3, 4)
    enc = encode_graph(s, t, set())
    assert enc.pair_assignment == {(0, 1): 3, (0, 2): 4, (1, 2): 5}


def test_encoding_over_a_parameterised_triple():
    # F(x, y, z) & P(w) with the parameter w fixed to a P-element
    s0, t0 = explicit_triple(3, 3)
    s = expand_many(FiniteStructure(s0.universe_size + 1, s0.relations), [NamedSubset("P", [s0.universe_size])])
    pf = PartitionedFormula(parse_formula("F(x, y, z) & P(w)"), ("x", "y", "z"), ("w",))
    t = CodingTriple(t0.A, t0.B, t0.C, pf, (s0.universe_size,))
    enc = encode_graph(s, t, symmetric_closure([(0, 2)]))
    assert enc.defined_relation(t) == {(0, 2), (2, 0)}


# -- definable order --------------------------------------------------------------------------

HALF = PartitionedFormula(parse_formula("H(x, y)"), ("x",), ("y",))


@pytest.mark.parametrize("n", range(1, 9))
def test_half_graph_order(n):
    res = definable_order(make_half_graph(n), "A", "B", HALF)
    assert res.is_total
    assert res.sequence == tuple(range(n))
    assert res.relation == {(i, j) for i in range(n) for j in range(n) if i <= j}


def test_empty_b_gives_universal_relation():
    s = expand_many(FiniteStructure(3, {"H": (2, [])}), [NamedSubset("A", [0, 1]), NamedSubset("B", [])])
    res = definable_order(s, "A", "B", HALF)
    assert res.relation == {(a, b) for a in (0, 1) for b in (0, 1)}
    assert not res.is_total


def test_single_element_is_total():
    s = expand_many(FiniteStructure(2, {"H": (2, [])}), [NamedSubset("A", [0]), NamedSubset("B", [1])])
    assert definable_order(s, "A", "B", HALF).is_total


def test_order_is_isomorphism_invariant():
    rng = random.Random(2)
    s = make_half_graph(5)
    base = definable_order(s, "A", "B", HALF)
    for _ in range(5):
        perm = list(range(10))
        rng.shuffle(perm)
        moved = definable_order(apply_permutation(s, Permutation(perm)), "A", "B", HALF)
        assert moved.relation == {(perm[a], perm[b]) for a, b in base.relation}


def test_order_helpers():
    assert is_total_order({(0, 0), (1, 1), (0, 1)}, [0, 1])
    assert not is_total_order({(0, 0), (1, 1)}, [0, 1])
    assert not is_total_order({(0, 0), (1, 1), (0, 1), (1, 0)}, [0, 1])
    assert is_equivalence({(0, 0), (1, 1), (0, 1), (1, 0), (2, 2)}, [0, 1, 2])
    assert not is_equivalence({(0, 0), (1, 1), (0, 1)}, [0, 1])


# -- definable equivalence ----------------------------------------------------------------------

EQ = PartitionedFormula(parse_formula("E(x, y)"), ("x",), ("y",))


def test_equivalence_recovers_classes():
    s = expand_many(
        make_equiv(3, 3),
        [NamedSubset("A", [1, 2, 4, 5, 7, 8]), NamedSubset("B", [0, 3, 6])],
    )
    res = definable_equivalence(s, "A", "B", EQ)
    assert res.is_equivalence
    assert res.classes == ((1, 2), (4, 5), (7, 8))


def test_equivalence_unsatisfiable():
    s = expand_many(FiniteStructure(4, {"E": (2, [])}), [NamedSubset("A", [0, 1]), NamedSubset("B", [2])])
    res = definable_equivalence(s, "A", "B", EQ)
    assert res.relation == frozenset() and not res.is_equivalence


def test_equivalence_single_class():
    s = expand_many(make_equiv(1, 4), [NamedSubset("A", [1, 2, 3]), NamedSubset("B", [0])])
    res = definable_equivalence(s, "A", "B", EQ)
    assert res.is_equivalence and res.classes == ((1, 2, 3),)


# -- embedding into an order --------------------------------------------------------------------

def test_embed_example():
    emb = embed_equiv_in_order(2, 3)
    assert emb.structure.universe_size == 7
    assert emb.domain == (0, 1, 2, 4, 5, 6)
    rel = emb.defined_relation()
    assert {a for a, b in rel if b == 0} == {0, 1, 2}
    assert {a for a, b in rel if b == 5} == {4, 5, 6}
    assert all((a, a) in rel for a in emb.domain)


@pytest.mark.parametrize("c,s", [(1, 1), (1, 4), (3, 1), (4, 5)])
def test_embed_carries_relation(c, s):
    emb = embed_equiv_in_order(c, s)
    assert check_order_embedding(emb) == []
    if c == 1:
        assert emb.defined_relation() == {(a, b) for a in emb.domain for b in emb.domain}


def test_embed_rejects_bad_sizes():
    with pytest.raises(ValueError):
        embed_equiv_in_order(0, 3)
