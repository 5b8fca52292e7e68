"""Coding triples, graphs defined through them, and the definable order,
equivalence and embedding constructions."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np

from .logic import (
    And,
    Atom,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    PartitionedFormula,
    conj,
    exists,
    fresh_var,
    solution_array,
    solution_set,
)
from .structures import (
    FiniteStructure,
    NamedSubset,
    expand_many,
    make_equiv,
    make_linear_order,
)


@dataclass(frozen=True)
class CodingTriple:
    """Sets A, B, C and phi(x, y, z) (object block of length 3) with values
    for phi's parameter block."""

    A: tuple
    B: tuple
    C: tuple
    phi: PartitionedFormula
    params: tuple = ()

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, tuple(sorted(int(v) for v in getattr(self, name))))
        if len(self.phi.object_vars) != 3:
            raise ValueError("a coding formula needs exactly three object variables")
        if len(self.params) != len(self.phi.param_vars):
            raise ValueError("parameter values do not match the parameter block")

    @property
    def partial(self) -> dict:
        return dict(zip(self.phi.param_vars, self.params))

    def check_disjoint(self) -> None:
        A, B, C = map(set, (self.A, self.B, self.C))
        if A & B or A & C or B & C:
            raise ValueError("A, B and C must be pairwise disjoint")

    def instantiate(self, x: str, y: str, z: str) -> Formula:
        return self.phi.instantiate((x, y, z), self.phi.param_vars)


@dataclass
class CodingCheck:
    ok: bool
    diagnosis: str | None
    mapping: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def _image_table(s: FiniteStructure, triple: CodingTriple) -> np.ndarray:
    x, y, z = triple.phi.object_vars
    arr = solution_array(s, triple.phi.formula, (x, y, z), triple.partial)
    A, B, C = (np.array(v, dtype=np.intp) for v in (triple.A, triple.B, triple.C))
    return arr[np.ix_(A, B, C)]


def verify_coding(s: FiniteStructure, triple: CodingTriple) -> CodingCheck:
    """Whether phi restricted to A x B x C is the graph of a bijection A x B -> C.

    The diagnosis names the first violation: a pair with no image, a pair
    with several images, two pairs sharing an image, or an element of C
    that is never hit.
    """
    triple.check_disjoint()
    A, B, C = triple.A, triple.B, triple.C
    if any(not 0 <= v < s.universe_size for v in A + B + C):
        raise ValueError("A, B, C must be subsets of the universe")
    if len(A) * len(B) != len(C):
        return CodingCheck(False, f"|A|*|B| = {len(A) * len(B)} but |C| = {len(C)}")
    table = _image_table(s, triple)
    mapping: dict = {}
    hit: dict = {}
    for ia, a in enumerate(A):
        for ib, b in enumerate(B):
            images = [C[ic] for ic in np.flatnonzero(table[ia, ib])]
            if not images:
                return CodingCheck(False, f"pair ({a},{b}) has no image")
            if len(images) > 1:
                return CodingCheck(False, f"pair ({a},{b}) has several images {images}")
            c = images[0]
            if c in hit:
                a0, b0 = hit[c]
                return CodingCheck(False, f"pairs ({a0},{b0}) and ({a},{b}) share the image {c}")
            hit[c] = (a, b)
            mapping[(a, b)] = c
    for c in C:
        if c not in hit:
            return CodingCheck(False, f"element {c} of C is not hit")
    return CodingCheck(True, None, mapping)


def explicit_triple(size_a: int, size_b: int, relation: str = "F") -> tuple:
    """A fresh structure whose ternary relation is an explicit bijection
    A x B -> C, with A, B, C consecutive blocks.  Returns (structure, triple)."""
    if size_a < 1 or size_b < 1:
        raise ValueError("A and B must be nonempty")
    A = list(range(size_a))
    B = list(range(size_a, size_a + size_b))
    start = size_a + size_b
    tuples = []
    C = []
    for ia, a in enumerate(A):
        for ib, b in enumerate(B):
            c = start + ia * size_b + ib
            tuples.append((a, b, c))
            C.append(c)
    s = FiniteStructure(start + len(C), {relation: (3, tuples)})
    phi = PartitionedFormula(Atom(relation, ("x", "y", "z")), ("x", "y", "z"), ())
    return s, CodingTriple(A, B, C, phi)


# -- graphs through a coding triple ----------------------------------------------

def _normalize_graph(edges: Iterable, vertices: Iterable[int]) -> frozenset:
    verts = set(vertices)
    G = frozenset((int(u), int(v)) for u, v in edges)
    for u, v in G:
        if u == v:
            raise ValueError(f"graph has a loop at {u}")
        if u not in verts or v not in verts:
            raise ValueError(f"edge ({u},{v}) mentions a vertex outside A")
        if (v, u) not in G:
            raise ValueError(f"graph is not symmetric: ({u},{v}) without ({v},{u})")
    return G


def symmetric_closure(edges: Iterable) -> frozenset:
    out = set()
    for u, v in edges:
        out.add((int(u), int(v)))
        out.add((int(v), int(u)))
    return frozenset(out)


@dataclass(frozen=True)
class GraphEncoding:
    structure: FiniteStructure
    D: NamedSubset
    E: NamedSubset
    pair_assignment: dict  # (a1, a2) with a1 < a2 -> dedicated b
    edge_formula: Formula
    pair_formula: Formula
    variables: tuple
    graph: frozenset

    def defined_relation(self, triple: CodingTriple) -> frozenset:
        sols = solution_set(self.structure, self.edge_formula, self.variables, triple.partial)
        A = set(triple.A)
        return frozenset(t for t in sols if t[0] in A and t[1] in A)


def _graph_formulas(triple: CodingTriple, pred: str, avoid: Iterable[str]) -> tuple:
    """(a1, a2), and the formula
    exists y z1 z2 (P(z1) & P(z2) & phi(a1, y, z1) & phi(a2, y, z2))."""
    taken = set(avoid) | set(triple.phi.param_vars)
    names = []
    for base in ("a1", "a2", "y", "z1", "z2"):
        v = fresh_var(taken, base)
        taken.add(v)
        names.append(v)
    a1, a2, y, z1, z2 = names
    body = conj(
        Atom(pred, (z1,)),
        Atom(pred, (z2,)),
        triple.instantiate(a1, y, z1),
        triple.instantiate(a2, y, z2),
    )
    return (a1, a2), y, exists((y, z1, z2), body)


def encode_graph(
    s: FiniteStructure,
    triple: CodingTriple,
    edges: Iterable,
    d_name: str = "D",
    e_name: str = "E",
) -> GraphEncoding:
    """Expand ``s`` by D and E so that the edge formula defines ``edges`` on A.

    Unordered pairs of A, in lexicographic order, get the elements of B in
    increasing order as dedicated witnesses.  D holds the images of every pair
    under its witness and E those of the edges.
    """
    check = verify_coding(s, triple)
    if not check:
        raise ValueError(f"not a coding triple: {check.diagnosis}")
    G = _normalize_graph(edges, triple.A)
    pairs = list(combinations(triple.A, 2))
    if len(triple.B) < len(pairs):
        raise ValueError(f"|B| = {len(triple.B)} is smaller than the {len(pairs)} pairs of A")
    f = check.mapping
    assignment = dict(zip(pairs, triple.B))
    D, E = set(), set()
    for (a1, a2), b in assignment.items():
        D |= {f[(a1, b)], f[(a2, b)]}
        if (a1, a2) in G:
            E |= {f[(a1, b)], f[(a2, b)]}
    Dp, Ep = NamedSubset(d_name, D), NamedSubset(e_name, E)
    expanded = expand_many(s, [Dp, Ep])
    variables, _, body = _graph_formulas(triple, e_name, ())
    edge_formula = conj(Not(Eq(*variables)), body)
    _, _, pair_formula = _graph_formulas(triple, d_name, ())
    return GraphEncoding(expanded, Dp, Ep, assignment, edge_formula, pair_formula, variables, G)


def check_encoding(enc: GraphEncoding, triple: CodingTriple) -> list:
    """Re-derive the encoding's invariants by evaluation (empty list if sound)."""
    problems = []
    s = enc.structure
    A = triple.A
    f = verify_coding(s, triple).mapping
    # exactly one witness b per pair, counted through the D-formula with y free
    a1, a2 = enc.variables
    taken = {a1, a2}
    b = fresh_var(taken | set(triple.phi.param_vars), "b")
    z1 = fresh_var(taken | {b}, "z1")
    z2 = fresh_var(taken | {b, z1}, "z2")
    body = exists(
        (z1, z2),
        conj(
            Atom(enc.D.name, (z1,)),
            Atom(enc.D.name, (z2,)),
            triple.instantiate(a1, b, z1),
            triple.instantiate(a2, b, z2),
        ),
    )
    arr = solution_array(s, body, (a1, a2, b), triple.partial)
    Bidx = np.array(triple.B, dtype=np.intp)
    for u, v in combinations(A, 2):
        count = int(arr[u, v, Bidx].sum())
        if count != 1:
            problems.append(f"pair ({u},{v}) has {count} witnesses in B")
    expected_E = set()
    for (u, v), w in enc.pair_assignment.items():
        if (u, v) in enc.graph:
            expected_E |= {f[(u, w)], f[(v, w)]}
    if set(enc.E.members) != expected_E:
        problems.append("E is not the set of edge images")
    if not set(enc.E.members) <= set(enc.D.members) <= set(triple.C):
        problems.append("E, D, C are not nested")
    if enc.defined_relation(triple) != enc.graph:
        problems.append("the edge formula does not define the graph")
    return problems


# -- definable order and equivalence ----------------------------------------------

def is_total_order(rel: frozenset, domain: Iterable[int]) -> bool:
    dom = list(domain)
    for a in dom:
        if (a, a) not in rel:
            return False
    for a, b in combinations(dom, 2):
        if ((a, b) in rel) == ((b, a) in rel):
            return False  # incomparable or not antisymmetric
    for a in dom:
        for b in dom:
            if (a, b) not in rel:
                continue
            for c in dom:
                if (b, c) in rel and (a, c) not in rel:
                    return False
    return True


def is_equivalence(rel: frozenset, domain: Iterable[int]) -> bool:
    dom = list(domain)
    if any((a, a) not in rel for a in dom):
        return False
    if any((b, a) not in rel for a, b in rel):
        return False
    for a, b in rel:
        for c in dom:
            if (b, c) in rel and (a, c) not in rel:
                return False
    return True


def _pair_vars(pf: PartitionedFormula) -> tuple:
    taken = set(pf.param_vars) | set(pf.object_vars)
    u = fresh_var(taken, "u")
    v = fresh_var(taken | {u}, "v")
    b = fresh_var(taken | {u, v}, "b")
    return u, v, b


def _split_binary(pf: PartitionedFormula) -> tuple:
    if len(pf.object_vars) != 1 or len(pf.param_vars) < 1:
        raise ValueError("expected one object variable and a parameter block starting with the B-variable")
    return pf.object_vars[0], pf.param_vars[0], pf.param_vars[1:]


def _binary(pf: PartitionedFormula, a: str, b: str) -> Formula:
    _, _, rest = _split_binary(pf)
    return pf.instantiate((a,), (b,) + rest)


@dataclass(frozen=True)
class DefinedOrder:
    relation: frozenset
    is_total: bool
    sequence: tuple  # elements of A in increasing order, when total


def order_formula(pf: PartitionedFormula, b_name: str) -> tuple:
    """((u, v), forall b in B. (psi(v, b) -> psi(u, b))): u below v."""
    u, v, b = _pair_vars(pf)
    body = Forall(b, Implies(Atom(b_name, (b,)), Implies(_binary(pf, v, b), _binary(pf, u, b))))
    return (u, v), body


def definable_order(
    s: FiniteStructure, a_name: str, b_name: str, psi: PartitionedFormula, params: Iterable[int] = ()
) -> DefinedOrder:
    """{(a, a') in A^2 : every b in B with psi(a', b) has psi(a, b)}."""
    _, _, rest = _split_binary(psi)
    variables, f = order_formula(psi, b_name)
    A = sorted(s.members(a_name))
    s.members(b_name)
    sols = solution_set(s, f, variables, dict(zip(rest, params)))
    Aset = set(A)
    rel = frozenset(t for t in sols if t[0] in Aset and t[1] in Aset)
    total = is_total_order(rel, A)
    seq = ()
    if total:
        seq = tuple(sorted(A, key=lambda a: sum(1 for c in A if (c, a) in rel)))
    return DefinedOrder(rel, total, seq)


@dataclass(frozen=True)
class DefinedEquivalence:
    relation: frozenset
    is_equivalence: bool
    classes: tuple


def equivalence_formula(pf: PartitionedFormula, b_name: str) -> tuple:
    """((u, v), exists b in B. (phi(u, b) & phi(v, b)))."""
    u, v, b = _pair_vars(pf)
    body = Exists(b, And(Atom(b_name, (b,)), _binary(pf, u, b), _binary(pf, v, b)))
    return (u, v), body


def definable_equivalence(
    s: FiniteStructure, a_name: str, b_name: str, phi: PartitionedFormula, params: Iterable[int] = ()
) -> DefinedEquivalence:
    _, _, rest = _split_binary(phi)
    variables, f = equivalence_formula(phi, b_name)
    A = sorted(s.members(a_name))
    s.members(b_name)
    sols = solution_set(s, f, variables, dict(zip(rest, params)))
    Aset = set(A)
    rel = frozenset(t for t in sols if t[0] in Aset and t[1] in Aset)
    ok = bool(A) and is_equivalence(rel, A)
    classes: tuple = ()
    if ok:
        seen: set = set()
        out = []
        for a in A:
            if a in seen:
                continue
            cls = tuple(sorted(c for c in A if (a, c) in rel))
            seen |= set(cls)
            out.append(cls)
        classes = tuple(out)
    return DefinedEquivalence(rel, ok, classes)


# -- equivalence relation inside an expanded linear order ---------------------------

@dataclass(frozen=True)
class OrderEmbedding:
    structure: FiniteStructure
    formula: Formula
    variables: tuple
    domain: tuple
    isomorphism: dict  # element of the order -> element of make_equiv(c, s)
    classes: int
    size: int

    def defined_relation(self) -> frozenset:
        sols = solution_set(self.structure, self.formula, self.variables)
        dom = set(self.domain)
        return frozenset(t for t in sols if t[0] in dom and t[1] in dom)

    def target(self) -> FiniteStructure:
        return make_equiv(self.classes, self.size)


def between_formula(a: str, b: str, x: str, le: str = "LE") -> Formula:
    """a < x < b, with < the strict part of ``le``."""
    return And(Atom(le, (a, x)), Not(Eq(a, x)), Atom(le, (x, b)), Not(Eq(x, b)))


def embed_equiv_in_order(c: int, s: int, marker: str = "A") -> OrderEmbedding:
    """c blocks of s marked points separated by single unmarked points in a
    linear order; E(a, a') iff every point strictly between them is marked."""
    if c < 1 or s < 1:
        raise ValueError("c and s must be positive")
    size = c * s + c - 1
    domain = [i * (s + 1) + p for i in range(c) for p in range(s)]
    structure = expand_many(make_linear_order(size), [NamedSubset(marker, domain)])
    formula = Forall(
        "x",
        Implies(Or(between_formula("a", "b", "x"), between_formula("b", "a", "x")), Atom(marker, ("x",))),
    )
    iso = {i * (s + 1) + p: i * s + p for i in range(c) for p in range(s)}
    return OrderEmbedding(structure, formula, ("a", "b"), tuple(domain), iso, c, s)


def check_order_embedding(emb: OrderEmbedding) -> list:
    problems = []
    iso = emb.isomorphism
    target = emb.target()
    if sorted(iso) != sorted(emb.domain) or sorted(iso.values()) != list(range(target.universe_size)):
        problems.append("the map is not a bijection from A onto the equivalence structure")
        return problems
    carried = frozenset((iso[u], iso[v]) for u, v in emb.defined_relation())
    if carried != target["E"].tuples:
        missing = sorted(target["E"].tuples - carried)[:3]
        extra = sorted(carried - target["E"].tuples)[:3]
        problems.append(f"relation not carried onto E (missing {missing}, extra {extra})")
    return problems
