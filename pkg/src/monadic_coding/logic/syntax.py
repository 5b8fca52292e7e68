"""First-order syntax trees over a purely relational signature."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Union


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple

    def __init__(self, rel: str, args: Iterable[str]):
        object.__setattr__(self, "rel", rel)
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple

    def __init__(self, *args: "Formula"):
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Or:
    args: tuple

    def __init__(self, *args: "Formula"):
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Formula = Union[Atom, Eq, Const, Not, And, Or, Implies, Iff, Exists, Forall]
TRUE = Const(True)
FALSE = Const(False)


def conj(*parts: Formula) -> Formula:
    """Conjunction that flattens nested conjunctions and drops ``true``."""
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.args)
        elif p != TRUE:
            flat.append(p)
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(*flat)


def disj(*parts: Formula) -> Formula:
    flat = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.args)
        elif p != FALSE:
            flat.append(p)
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(*flat)


def exists(variables: Iterable[str], body: Formula) -> Formula:
    for v in reversed(list(variables)):
        body = Exists(v, body)
    return body


def forall(variables: Iterable[str], body: Formula) -> Formula:
    for v in reversed(list(variables)):
        body = Forall(v, body)
    return body


def children(f: Formula) -> tuple:
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, (Implies, Iff)):
        return (f.left, f.right)
    if isinstance(f, (Not, Exists, Forall)):
        return (f.body,)
    return ()


def free_vars(f: Formula) -> frozenset:
    if isinstance(f, Atom):
        return frozenset(f.args)
    if isinstance(f, Eq):
        return frozenset((f.left, f.right))
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {f.var}
    out = frozenset()
    for c in children(f):
        out |= free_vars(c)
    return out


def all_vars(f: Formula) -> frozenset:
    if isinstance(f, Atom):
        return frozenset(f.args)
    if isinstance(f, Eq):
        return frozenset((f.left, f.right))
    out = frozenset((f.var,)) if isinstance(f, (Exists, Forall)) else frozenset()
    for c in children(f):
        out |= all_vars(c)
    return out


def relations_used(f: Formula) -> dict[str, int]:
    """Relation name -> arity, for every atom in ``f``."""
    out: dict[str, int] = {}
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            out.setdefault(g.rel, len(g.args))
        stack.extend(children(g))
    return out


def depth(f: Formula) -> int:
    """Quantifier depth."""
    inner = max((depth(c) for c in children(f)), default=0)
    return inner + 1 if isinstance(f, (Exists, Forall)) else inner


def fresh_var(avoid: Iterable[str], base: str = "v") -> str:
    avoid = set(avoid)
    if base not in avoid:
        return base
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def substitute(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename free variables by ``mapping``, renaming bound variables to avoid capture."""
    mapping = {k: v for k, v in mapping.items() if k != v}
    if not mapping:
        return f
    return _subst(f, mapping)


def _subst(f: Formula, m: Mapping[str, str]) -> Formula:
    if isinstance(f, Atom):
        return Atom(f.rel, (m.get(a, a) for a in f.args))
    if isinstance(f, Eq):
        return Eq(m.get(f.left, f.left), m.get(f.right, f.right))
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        return Not(_subst(f.body, m))
    if isinstance(f, And):
        return And(*(_subst(c, m) for c in f.args))
    if isinstance(f, Or):
        return Or(*(_subst(c, m) for c in f.args))
    if isinstance(f, Implies):
        return Implies(_subst(f.left, m), _subst(f.right, m))
    if isinstance(f, Iff):
        return Iff(_subst(f.left, m), _subst(f.right, m))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in m.items() if k != f.var}
        body_free = free_vars(f.body)
        inner = {k: v for k, v in inner.items() if k in body_free}
        if not inner:
            return f
        var = f.var
        if var in inner.values():
            var = fresh_var(all_vars(f.body) | set(inner.values()) | set(inner), f.var)
            inner[f.var] = var
        return type(f)(var, _subst(f.body, inner))
    raise TypeError(f"not a formula: {f!r}")


def rename_bound(f: Formula, avoid: Iterable[str]) -> Formula:
    """Alpha-rename every bound variable to a name outside ``avoid``."""
    taken = set(avoid) | all_vars(f)
    return _rename_bound(f, taken)


def _rename_bound(f: Formula, taken: set) -> Formula:
    if isinstance(f, (Exists, Forall)):
        new = fresh_var(taken, f.var + "_")
        taken.add(new)
        body = substitute(f.body, {f.var: new})
        return type(f)(new, _rename_bound(body, taken))
    if isinstance(f, Not):
        return Not(_rename_bound(f.body, taken))
    if isinstance(f, And):
        return And(*(_rename_bound(c, taken) for c in f.args))
    if isinstance(f, Or):
        return Or(*(_rename_bound(c, taken) for c in f.args))
    if isinstance(f, Implies):
        return Implies(_rename_bound(f.left, taken), _rename_bound(f.right, taken))
    if isinstance(f, Iff):
        return Iff(_rename_bound(f.left, taken), _rename_bound(f.right, taken))
    return f


# -- printing -----------------------------------------------------------------

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}


def _prec(f: Formula) -> int:
    if isinstance(f, (Exists, Forall)):
        return 0
    return _PREC.get(type(f), 6)


def _wrap(f: Formula, paren: bool) -> str:
    text = to_text(f)
    return f"({text})" if paren else text


def to_text(f: Formula) -> str:
    """Print in the concrete grammar; parsing the result gives back ``f``."""
    if isinstance(f, Atom):
        return f"{f.rel}({', '.join(f.args)})"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return "!" + _wrap(f.body, _prec(f.body) < 5)
    if isinstance(f, And):
        return " & ".join(_wrap(c, _prec(c) <= 4) for c in f.args)
    if isinstance(f, Or):
        return " | ".join(_wrap(c, _prec(c) <= 3) for c in f.args)
    if isinstance(f, Implies):
        return f"{_wrap(f.left, _prec(f.left) <= 2)} -> {_wrap(f.right, _prec(f.right) < 2)}"
    if isinstance(f, Iff):
        return f"{_wrap(f.left, _prec(f.left) < 1)} <-> {_wrap(f.right, _prec(f.right) <= 1)}"
    if isinstance(f, Exists):
        return f"exists {f.var}. {to_text(f.body)}"
    if isinstance(f, Forall):
        return f"forall {f.var}. {to_text(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class PartitionedFormula:
    """A formula with its free variables split into an object block and a parameter block."""

    formula: Formula
    object_vars: tuple
    param_vars: tuple

    def __init__(self, formula: Formula, object_vars: Iterable[str], param_vars: Iterable[str]):
        object_vars, param_vars = tuple(object_vars), tuple(param_vars)
        if set(object_vars) & set(param_vars):
            raise ValueError("object and parameter variables overlap")
        if len(set(object_vars)) != len(object_vars) or len(set(param_vars)) != len(param_vars):
            raise ValueError("repeated variable in a block")
        missing = free_vars(formula) - set(object_vars) - set(param_vars)
        if missing:
            raise ValueError(f"free variables {sorted(missing)} are in neither block")
        object.__setattr__(self, "formula", formula)
        object.__setattr__(self, "object_vars", object_vars)
        object.__setattr__(self, "param_vars", param_vars)

    @property
    def variables(self) -> tuple:
        return self.object_vars + self.param_vars

    def instantiate(self, object_names: Iterable[str], param_names: Iterable[str]) -> Formula:
        """The formula with its blocks renamed to the given variable names."""
        object_names, param_names = tuple(object_names), tuple(param_names)
        if len(object_names) != len(self.object_vars) or len(param_names) != len(self.param_vars):
            raise ValueError("block length mismatch")
        return substitute(
            self.formula,
            dict(zip(self.object_vars + self.param_vars, object_names + param_names)),
        )

    def __str__(self) -> str:
        return f"{to_text(self.formula)}  [{', '.join(self.object_vars)} ; {', '.join(self.param_vars)}]"
