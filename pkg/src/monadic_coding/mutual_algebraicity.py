"""Multiplicity of relations, monadic presentations of nearly-diagonal
relations, and extraction of disjoint families from off-diagonal ones."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from .logic import And, Atom, Eq, Formula, disj, solution_set, to_text
from .structures import (
    FiniteStructure,
    NamedSubset,
    Relation,
    element_index,
    expand_many,
    overlay_union,
)


def _as_tuples(Y) -> frozenset:
    if isinstance(Y, Relation):
        return Y.tuples
    return frozenset(tuple(int(v) for v in t) for t in Y)


def _arity(Y: frozenset, k: int | None) -> int:
    if k is not None:
        return k
    if not Y:
        raise ValueError("arity of an empty relation must be given")
    arities = {len(t) for t in Y}
    if len(arities) != 1:
        raise ValueError("tuples of mixed arity")
    return arities.pop()


def multiplicity(Y) -> int:
    """Largest number of tuples of Y that any single element occurs in."""
    counts = Counter(a for t in _as_tuples(Y) for a in set(t))
    return max(counts.values(), default=0)


def is_constant(t: tuple) -> bool:
    return all(v == t[0] for v in t)


def diagonal_excess(Y, k: int | None = None) -> frozenset:
    """Y minus its constant tuples."""
    Y = _as_tuples(Y)
    if _arity(Y, k) < 2:
        raise ValueError("unary relations have no diagonal excess: every unary set is monadic")
    return frozenset(t for t in Y if not is_constant(t))


@dataclass(frozen=True)
class MonadicPresentation:
    """Unary predicates and a formula in x1..xk over them defining Y."""

    predicates: tuple
    variables: tuple
    formula: Formula
    excess: int

    def structure(self, n: int) -> FiniteStructure:
        """The expansion of the edgeless structure on n elements by the predicates."""
        return expand_many(FiniteStructure(n), self.predicates)

    def text(self) -> str:
        return to_text(self.formula)


def singleton_name(a: int) -> str:
    return f"U_{a}"


def canonical_monadic_presentation(Y, k: int | None = None, diagonal_name: str = "Z") -> MonadicPresentation:
    """One singleton predicate per element of the off-diagonal support, plus
    the set of constant-tuple values, and the formula

        OR over off-diagonal t of  U_{t1}(x1) & ... & U_{tk}(xk)
        | (x1 = x2 & ... & x1 = xk & Z(x1))
    """
    Y = _as_tuples(Y)
    k = _arity(Y, k)
    excess = sorted(diagonal_excess(Y, k))
    support = sorted({a for t in excess for a in t})
    diag = sorted(t[0] for t in Y if is_constant(t))
    preds = tuple(NamedSubset(singleton_name(a), [a]) for a in support)
    preds += (NamedSubset(diagonal_name, diag),)
    xs = tuple(f"x{i + 1}" for i in range(k))
    parts = [And(*(Atom(singleton_name(a), (x,)) for a, x in zip(t, xs))) for t in excess]
    if diag:
        parts.append(And(*[Eq(xs[0], x) for x in xs[1:]], Atom(diagonal_name, (xs[0],))))
    return MonadicPresentation(preds, xs, disj(*parts), len(excess))


def check_presentation(Y, n: int, pres: MonadicPresentation) -> bool:
    """Whether the presentation's formula defines exactly Y on n elements."""
    got = solution_set(pres.structure(n), pres.formula, pres.variables)
    return got == _as_tuples(Y)


@dataclass(frozen=True)
class DisjointFamily:
    """Pairwise disjoint off-diagonal tuples of Y, coordinates permuted so
    that positions 0 and 1 differ.

    ``coordinate_permutation[p]`` is the original coordinate moved to
    position p, so member[p] == original[coordinate_permutation[p]].
    """

    arity: int
    coordinate_permutation: tuple
    members: tuple

    @property
    def support(self) -> frozenset:
        return frozenset(a for t in self.members for a in t)

    @property
    def firsts(self) -> tuple:
        return tuple(t[0] for t in self.members)

    @property
    def pairing(self) -> dict:
        return {t[0]: t[1] for t in self.members}

    def original(self, member: tuple) -> tuple:
        out = [0] * self.arity
        for p, c in enumerate(self.coordinate_permutation):
            out[c] = member[p]
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "arity": self.arity,
            "coordinate_permutation": list(self.coordinate_permutation),
            "members": [list(t) for t in self.members],
            "support": sorted(self.support),
            "pairing": [[a, b] for a, b in self.pairing.items()],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> DisjointFamily:
        return cls(
            int(doc["arity"]),
            tuple(doc["coordinate_permutation"]),
            tuple(tuple(t) for t in doc["members"]),
        )


def best_coordinate_pair(excess: Iterable[tuple], k: int) -> tuple:
    """(i, j), i < j, maximizing |{t : t_i != t_j}|; ties go to the smallest pair."""
    excess = list(excess)
    best, best_count = (0, 1), -1
    for i, j in combinations(range(k), 2):
        count = sum(1 for t in excess if t[i] != t[j])
        if count > best_count:
            best, best_count = (i, j), count
    return best


def _permutation_for(i: int, j: int, k: int) -> tuple:
    return (i, j) + tuple(c for c in range(k) if c not in (i, j))


def extract_disjoint_family(Y, k: int | None = None, closed: bool = False) -> DisjointFamily:
    """Greedy disjoint family inside Y minus the diagonal.

    Candidates are the tuples unequal at the chosen coordinate pair, scanned
    in lexicographic order of their permuted form; each is taken when it is
    disjoint from the support so far.  This picks at least
    ``greedy_size_bound(Y)`` members.

    With ``closed=True`` a candidate is also skipped if some other
    non-constant tuple of Y would then lie inside the support.  Closed
    families make "the member containing x" definable from Y and a predicate
    for the support, but carry no size guarantee.
    """
    Y = _as_tuples(Y)
    k = _arity(Y, k)
    excess = diagonal_excess(Y, k)
    if not excess:
        raise ValueError("relation has no off-diagonal tuples")
    i, j = best_coordinate_pair(excess, k)
    perm = _permutation_for(i, j, k)
    candidates = sorted((tuple(t[c] for c in perm), t) for t in excess if t[i] != t[j])
    index = element_index(excess)
    support: set = set()
    members = []
    for permuted, t in candidates:
        elems = set(t)
        if elems & support:
            continue
        if closed:
            inside = support | elems
            if any(
                other != t and set(other) <= inside for a in elems for other in index.get(a, ())
            ):
                continue
        members.append(permuted)
        support |= elems
    return DisjointFamily(k, perm, tuple(members))


def greedy_size_bound(Y, k: int | None = None) -> int:
    """max(1, |X'| // (k*m)) with X' the off-diagonal tuples unequal at the best pair."""
    Y = _as_tuples(Y)
    k = _arity(Y, k)
    excess = diagonal_excess(Y, k)
    i, j = best_coordinate_pair(excess, k)
    size = sum(1 for t in excess if t[i] != t[j])
    m = multiplicity(Y)
    return max(1, size // (k * m)) if m else 0


def certify_family(Y, family: DisjointFamily, closed: bool = False) -> list:
    """Problems with ``family`` relative to Y (empty if all invariants hold).

    Checked: members are non-constant with differing first two coordinates,
    pairwise disjoint, members of Y once the coordinate permutation is undone,
    and every support element lies in exactly one member.  ``closed`` adds
    that the members are the only non-constant tuples of Y inside the support.
    """
    Y = _as_tuples(Y)
    problems = []
    seen: set = set()
    for t in family.members:
        if len(t) != family.arity:
            problems.append(f"member {t} has the wrong arity")
            continue
        if is_constant(t):
            problems.append(f"member {t} is constant")
        if t[0] == t[1]:
            problems.append(f"member {t}: first two coordinates agree")
        if set(t) & seen:
            problems.append(f"member {t} meets an earlier member")
        seen |= set(t)
        if family.original(t) not in Y:
            problems.append(f"member {t} is not in Y after undoing the coordinate permutation")
    support = family.support
    for a in sorted(support):
        owners = [t for t in family.members if a in t]
        if len(owners) != 1:
            problems.append(f"element {a} lies in {len(owners)} members")
    if closed:
        originals = {family.original(t) for t in family.members}
        for t in sorted(Y):
            if not is_constant(t) and set(t) <= support and t not in originals:
                problems.append(f"non-member tuple {t} of Y lies inside the support")
    return problems


@dataclass(frozen=True)
class UnionCheck:
    multiplicities: dict  # relation -> (in operand, in union)

    @property
    def ok(self) -> bool:
        return all(a == b for a, b in self.multiplicities.values())

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "relations": {
                name: {"operand": a, "union": b} for name, (a, b) in sorted(self.multiplicities.items())
            },
        }


def union_multiplicity_check(s1: FiniteStructure, s2: FiniteStructure) -> UnionCheck:
    """Per-relation multiplicity in each operand versus in their union."""
    union = overlay_union(s1, s2)
    out = {}
    for s in (s1, s2):
        for name in s.names:
            out[name] = (multiplicity(s[name]), multiplicity(union[name]))
    return UnionCheck(out)
