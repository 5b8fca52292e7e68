"""Finite relational structures on the universe {0..n-1}.

A structure is a universe size plus named relations of fixed arity.  Unary
relations double as monadic predicates.  Structures are immutable; every
operation here returns a new one.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Iterator, Mapping

import numpy as np


class StructureError(ValueError):
    """Raised for malformed structures, permutations or structure files."""


@dataclass(frozen=True)
class Relation:
    arity: int
    tuples: frozenset

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.tuples)

    def __contains__(self, t) -> bool:
        return tuple(t) in self.tuples

    def sorted(self) -> list[tuple]:
        return sorted(self.tuples)


@dataclass(frozen=True)
class NamedSubset:
    name: str
    members: frozenset

    def __init__(self, name: str, members: Iterable[int]):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "members", frozenset(int(m) for m in members))


class Permutation:
    """A bijection on {0..n-1}, stored as its image array."""

    __slots__ = ("mapping",)

    def __init__(self, mapping: Iterable[int]):
        mapping = tuple(int(v) for v in mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise StructureError("mapping is not a bijection on {0..n-1}")
        self.mapping = mapping

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(range(n))

    @classmethod
    def from_pairs(cls, n: int, pairs: Mapping[int, int]) -> Permutation:
        mapping = list(range(n))
        for src, dst in pairs.items():
            mapping[src] = dst
        return cls(mapping)

    def __len__(self) -> int:
        return len(self.mapping)

    def __call__(self, x: int) -> int:
        return self.mapping[x]

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and self.mapping == other.mapping

    def __hash__(self) -> int:
        return hash(self.mapping)

    def __repr__(self) -> str:
        return f"Permutation({list(self.mapping)})"

    def inverse(self) -> Permutation:
        inv = [0] * len(self.mapping)
        for i, v in enumerate(self.mapping):
            inv[v] = i
        return Permutation(inv)

    def compose(self, other: Permutation) -> Permutation:
        """self after other: x -> self(other(x))."""
        if len(other) != len(self):
            raise StructureError("cannot compose permutations of different length")
        return Permutation(self.mapping[v] for v in other.mapping)

    def is_identity(self) -> bool:
        return all(i == v for i, v in enumerate(self.mapping))


def _check_name(name: str) -> None:
    if not isinstance(name, str) or not name.isidentifier():
        raise StructureError(f"invalid relation name {name!r}")


class FiniteStructure:
    """Universe {0..n-1} with named relations.

    ``relations`` maps a name to a ``Relation`` or to a pair
    ``(arity, iterable of tuples)``.  Duplicate tuples are rejected, since the
    file format treats them as errors too.
    """

    def __init__(self, universe_size: int, relations: Mapping[str, object] | None = None):
        if not isinstance(universe_size, (int, np.integer)) or universe_size < 1:
            raise StructureError(f"universe size must be a positive integer, got {universe_size!r}")
        self.universe_size = int(universe_size)
        rels: dict[str, Relation] = {}
        for name, spec in (relations or {}).items():
            _check_name(name)
            if isinstance(spec, Relation):
                arity, raw = spec.arity, spec.tuples
            else:
                arity, raw = spec
            rels[name] = self._make_relation(name, arity, raw)
        self._relations = dict(sorted(rels.items()))
        self._dense: dict[str, np.ndarray] = {}
        self._index: dict[str, dict[int, list[tuple]]] = {}

    def _make_relation(self, name: str, arity: int, raw) -> Relation:
        if not isinstance(arity, (int, np.integer)) or arity < 1:
            raise StructureError(f"relation {name}: arity must be >= 1")
        if isinstance(raw, frozenset):
            tuples = raw
            items = raw
        else:
            items = [tuple(int(v) for v in t) for t in raw]
            tuples = frozenset(items)
            if len(tuples) != len(items):
                raise StructureError(f"relation {name}: duplicate tuples")
        n = self.universe_size
        for t in items:
            if len(t) != arity:
                raise StructureError(f"relation {name}: tuple {t} does not have arity {arity}")
            for v in t:
                if not 0 <= v < n:
                    raise StructureError(f"relation {name}: entry {v} out of range for universe {n}")
        return Relation(int(arity), tuples)

    @property
    def relations(self) -> Mapping[str, Relation]:
        return dict(self._relations)

    @property
    def names(self) -> list[str]:
        return list(self._relations)

    def __contains__(self, name: str) -> bool:
        return name in self._relations

    def __getitem__(self, name: str) -> Relation:
        return self._relations[name]

    def arity(self, name: str) -> int:
        return self._relations[name].arity

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteStructure):
            return NotImplemented
        return self.universe_size == other.universe_size and self._relations == other._relations

    def __hash__(self) -> int:
        return hash((self.universe_size, tuple(self._relations.items())))

    def __repr__(self) -> str:
        sig = ", ".join(f"{k}/{r.arity}:{len(r)}" for k, r in self._relations.items())
        return f"FiniteStructure(n={self.universe_size}, {{{sig}}})"

    @property
    def universe(self) -> range:
        return range(self.universe_size)

    def dense(self, name: str) -> np.ndarray:
        """Boolean array of shape (n,)*arity marking the tuples of ``name``."""
        arr = self._dense.get(name)
        if arr is None:
            rel = self._relations[name]
            arr = np.zeros((self.universe_size,) * rel.arity, dtype=bool)
            if rel.tuples:
                idx = np.array(sorted(rel.tuples), dtype=np.intp)
                arr[tuple(idx.T)] = True
            arr.setflags(write=False)
            self._dense[name] = arr
        return arr

    def tuples_containing(self, name: str, element: int) -> list[tuple]:
        """Tuples of ``name`` that mention ``element`` (per-element index)."""
        index = self._index.get(name)
        if index is None:
            index = element_index(self._relations[name].tuples)
            self._index[name] = index
        return index.get(element, [])

    def members(self, name: str) -> frozenset:
        rel = self._relations[name]
        if rel.arity != 1:
            raise StructureError(f"{name} is not unary")
        return frozenset(t[0] for t in rel.tuples)

    def reduct(self, names: Iterable[str]) -> FiniteStructure:
        names = list(names)
        missing = [k for k in names if k not in self._relations]
        if missing:
            raise StructureError(f"unknown relations {missing}")
        return FiniteStructure(self.universe_size, {k: self._relations[k] for k in names})

    def without(self, names: Iterable[str]) -> FiniteStructure:
        drop = set(names)
        return FiniteStructure(
            self.universe_size, {k: r for k, r in self._relations.items() if k not in drop}
        )

    def rename(self, mapping: Mapping[str, str]) -> FiniteStructure:
        rels = {mapping.get(k, k): r for k, r in self._relations.items()}
        if len(rels) != len(self._relations):
            raise StructureError("renaming merges two relations")
        return FiniteStructure(self.universe_size, rels)


def element_index(tuples: Iterable[tuple]) -> dict[int, list[tuple]]:
    """Map each element to the (sorted) tuples that contain it, each tuple once."""
    index: dict[int, list[tuple]] = {}
    for t in sorted(tuples):
        for a in set(t):
            index.setdefault(a, []).append(t)
    return index


def expand(s: FiniteStructure, p: NamedSubset) -> FiniteStructure:
    """Monadic expansion of ``s`` by the unary predicate ``p``."""
    if p.name in s:
        raise StructureError(f"relation {p.name!r} already exists")
    bad = [m for m in p.members if not 0 <= m < s.universe_size]
    if bad:
        raise StructureError(f"predicate {p.name}: members {sorted(bad)} out of range")
    rels = s.relations
    rels[p.name] = Relation(1, frozenset((m,) for m in p.members))
    return FiniteStructure(s.universe_size, rels)


def expand_many(s: FiniteStructure, predicates: Iterable[NamedSubset]) -> FiniteStructure:
    for p in predicates:
        s = expand(s, p)
    return s


def apply_permutation(s: FiniteStructure, sigma: Permutation) -> FiniteStructure:
    """Transport every relation along ``sigma``; sigma is then an isomorphism."""
    if len(sigma) != s.universe_size:
        raise StructureError(
            f"permutation has length {len(sigma)}, universe has size {s.universe_size}"
        )
    m = sigma.mapping
    rels = {
        name: Relation(r.arity, frozenset(tuple(m[v] for v in t) for t in r.tuples))
        for name, r in s.relations.items()
    }
    return FiniteStructure(s.universe_size, rels)


def overlay_union(s1: FiniteStructure, s2: FiniteStructure) -> FiniteStructure:
    """Union of two structures on the same universe in disjoint signatures."""
    if s1.universe_size != s2.universe_size:
        raise StructureError(
            f"universe mismatch: {s1.universe_size} vs {s2.universe_size}"
        )
    clash = set(s1.names) & set(s2.names)
    if clash:
        raise StructureError(f"relation names collide: {sorted(clash)}")
    rels = s1.relations
    rels.update(s2.relations)
    return FiniteStructure(s1.universe_size, rels)


def pad(s: FiniteStructure, n: int) -> FiniteStructure:
    """Same relations on the larger universe {0..n-1}; new elements are in no tuple."""
    if n < s.universe_size:
        raise StructureError(f"cannot pad universe {s.universe_size} down to {n}")
    return FiniteStructure(n, s.relations)


# -- generators for the paradigm structures ---------------------------------

def make_linear_order(n: int) -> FiniteStructure:
    """The reflexive order LE on {0..n-1}."""
    _positive(n=n)
    return FiniteStructure(n, {"LE": (2, [(a, b) for a in range(n) for b in range(a, n)])})


def make_equiv(c: int, s: int) -> FiniteStructure:
    """Equivalence relation E with c classes {i*s .. i*s+s-1} of size s."""
    _positive(c=c, s=s)
    tuples = [
        (i * s + a, i * s + b) for i in range(c) for a in range(s) for b in range(s)
    ]
    return FiniteStructure(c * s, {"E": (2, tuples)})


def make_random_graph(n: int, p: float, seed: int) -> FiniteStructure:
    """Symmetric irreflexive E; each pair kept with probability p."""
    _positive(n=n)
    if not 0.0 <= p <= 1.0:
        raise StructureError(f"edge probability {p} not in [0, 1]")
    rng = random.Random(seed)
    tuples = []
    for a, b in combinations(range(n), 2):
        if rng.random() < p:
            tuples += [(a, b), (b, a)]
    return FiniteStructure(n, {"E": (2, tuples)})


def make_fcp_expansion(c: int) -> FiniteStructure:
    """make_equiv(c, c+1) plus P marking the first i+1 elements of class i."""
    _positive(c=c)
    base = make_equiv(c, c + 1)
    marked = [i * (c + 1) + j for i in range(c) for j in range(i + 1)]
    return expand(base, NamedSubset("P", marked))


def make_powerset(n: int) -> FiniteStructure:
    """n atoms followed by 2**n codes; IN(atom, code) iff the atom is in the coded set.

    Code ``n + mask`` codes the subset whose bits are set in ``mask``.
    ATOM and CODE name the two sorts.
    """
    if n < 0:
        raise StructureError("powerset size must be >= 0")
    size = n + 2**n
    tuples = [(i, n + mask) for mask in range(2**n) for i in range(n) if mask >> i & 1]
    return FiniteStructure(
        size,
        {
            "IN": (2, tuples),
            "ATOM": (1, [(i,) for i in range(n)]),
            "CODE": (1, [(n + m,) for m in range(2**n)]),
        },
    )


def make_half_graph(n: int) -> FiniteStructure:
    """Half-graph H_n: alpha_i = i, beta_j = n + j, H(alpha_i, beta_j) iff i <= j."""
    _positive(n=n)
    return FiniteStructure(
        2 * n,
        {
            "H": (2, [(i, n + j) for i in range(n) for j in range(i, n)]),
            "A": (1, [(i,) for i in range(n)]),
            "B": (1, [(n + j,) for j in range(n)]),
        },
    )


def _positive(**params: int) -> None:
    for key, value in params.items():
        if not isinstance(value, (int, np.integer)) or value < 1:
            raise StructureError(f"{key} must be a positive integer, got {value!r}")


# -- canonical JSON file format ---------------------------------------------

def structure_to_dict(s: FiniteStructure) -> dict:
    return {
        "universe": s.universe_size,
        "relations": {
            name: {"arity": r.arity, "tuples": [list(t) for t in r.sorted()]}
            for name, r in sorted(s.relations.items())
        },
    }


def structure_from_dict(doc: Mapping) -> FiniteStructure:
    try:
        n = doc["universe"]
        raw = doc["relations"]
    except (KeyError, TypeError) as exc:
        raise StructureError(f"structure document missing field: {exc}") from None
    if isinstance(n, bool) or not isinstance(n, int):
        raise StructureError("universe must be an integer")
    rels = {}
    for name, body in raw.items():
        try:
            arity, tuples = body["arity"], body["tuples"]
        except (KeyError, TypeError):
            raise StructureError(f"relation {name}: needs 'arity' and 'tuples'") from None
        for t in tuples:
            if not isinstance(t, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in t):
                raise StructureError(f"relation {name}: tuple {t!r} is not an integer array")
        rels[name] = (arity, tuples)
    return FiniteStructure(n, rels)


def dumps_structure(s: FiniteStructure) -> str:
    """Canonical text: sorted names, sorted tuples, fixed separators."""
    return json.dumps(structure_to_dict(s), sort_keys=True, separators=(",", ":")) + "\n"


def loads_structure(text: str) -> FiniteStructure:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructureError(f"invalid JSON: {exc}") from None
    return structure_from_dict(doc)


def read_structure(path) -> FiniteStructure:
    with open(path, encoding="utf-8") as fh:
        return loads_structure(fh.read())


def write_structure(s: FiniteStructure, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_structure(s))


def all_tuples(n: int, k: int) -> Iterator[tuple]:
    return product(range(n), repeat=k)
