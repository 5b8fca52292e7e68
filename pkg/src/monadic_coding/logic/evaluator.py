"""Tarski semantics on finite structures.

Every subformula is evaluated to a boolean array indexed by its unassigned
free variables (one axis of length n per variable, or length 1 where the value
does not depend on it).  Quantifiers reduce an axis with any/all.  Before
evaluation, quantifiers are pushed inward past conjuncts and disjuncts that do
not mention the bound variable, which keeps the arrays low-dimensional for the
existential-conjunctive formulas this package builds.

Results for a subformula under a given assignment to its free variables are
memoized for the duration of one call.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from ..structures import FiniteStructure
from .syntax import (
    And,
    Atom,
    Const,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    free_vars,
    relations_used,
)


class EvaluationError(ValueError):
    """Missing assignment, unknown relation, arity mismatch or bad element."""


# -- preprocessing ------------------------------------------------------------

def _flatten(cls, parts):
    out = []
    for p in parts:
        if isinstance(p, cls):
            out.extend(p.args)
        else:
            out.append(p)
    return out


def _make(cls, parts):
    parts = _flatten(cls, parts)
    return parts[0] if len(parts) == 1 else cls(*parts)


def miniscope(f: Formula) -> Formula:
    """Equivalent formula with implications expanded and quantifiers pushed inward."""
    if isinstance(f, (Atom, Eq, Const)):
        return f
    if isinstance(f, Not):
        return Not(miniscope(f.body))
    if isinstance(f, And):
        return _make(And, [miniscope(c) for c in f.args])
    if isinstance(f, Or):
        return _make(Or, [miniscope(c) for c in f.args])
    if isinstance(f, Implies):
        return _make(Or, [Not(miniscope(f.left)), miniscope(f.right)])
    if isinstance(f, Iff):
        return Iff(miniscope(f.left), miniscope(f.right))
    if isinstance(f, (Exists, Forall)):
        return _push(type(f), f.var, miniscope(f.body))
    raise TypeError(f"not a formula: {f!r}")


def _push(q, var: str, body: Formula) -> Formula:
    if var not in free_vars(body):
        return body  # the universe is nonempty
    # exists distributes over |, forall over &
    spread, split = (Or, And) if q is Exists else (And, Or)
    if isinstance(body, spread):
        return _make(spread, [_push(q, var, c) for c in body.args])
    if isinstance(body, split):
        dep = [c for c in body.args if var in free_vars(c)]
        indep = [c for c in body.args if var not in free_vars(c)]
        if indep:
            inner = _make(split, dep)
            return _make(split, indep + [_push(q, var, inner)])
    return q(var, body)


# -- evaluation -----------------------------------------------------------------

class _Run:
    def __init__(self, s: FiniteStructure):
        self.s = s
        self.n = s.universe_size
        self.memo: dict = {}
        self.fv: dict[int, frozenset] = {}
        self.aranges: dict = {}

    def free(self, f: Formula) -> frozenset:
        key = id(f)
        out = self.fv.get(key)
        if out is None:
            out = free_vars(f)
            self.fv[key] = out
        return out

    def axis(self, pos: int, ndim: int) -> np.ndarray:
        key = (pos, ndim)
        arr = self.aranges.get(key)
        if arr is None:
            shape = [1] * ndim
            shape[pos] = self.n
            arr = np.arange(self.n).reshape(shape)
            self.aranges[key] = arr
        return arr

    def eval(self, f: Formula, env: Mapping[str, int]) -> tuple[tuple, np.ndarray]:
        fv = self.free(f)
        key = (id(f), tuple(sorted((v, env[v]) for v in fv if v in env)))
        hit = self.memo.get(key)
        if hit is None:
            hit = self._eval(f, env)
            self.memo[key] = hit
        return hit

    def _eval(self, f: Formula, env: Mapping[str, int]) -> tuple[tuple, np.ndarray]:
        if isinstance(f, Atom):
            return self._atom(f, env)
        if isinstance(f, Eq):
            return self._eq(f, env)
        if isinstance(f, Const):
            return (), np.array(f.value)
        if isinstance(f, Not):
            vs, arr = self.eval(f.body, env)
            return vs, ~arr
        if isinstance(f, And):
            return self._junction(f.args, env, conj=True)
        if isinstance(f, Or):
            return self._junction(f.args, env, conj=False)
        if isinstance(f, Iff):
            lv, la = self.eval(f.left, env)
            rv, ra = self.eval(f.right, env)
            target = _union(lv, rv)
            return target, _align(lv, la, target) == _align(rv, ra, target)
        if isinstance(f, Implies):
            lv, la = self.eval(f.left, env)
            rv, ra = self.eval(f.right, env)
            target = _union(lv, rv)
            return target, ~_align(lv, la, target) | _align(rv, ra, target)
        if isinstance(f, (Exists, Forall)):
            inner = env
            if f.var in env:
                inner = {k: v for k, v in env.items() if k != f.var}
            vs, arr = self.eval(f.body, inner)
            if f.var not in vs:
                return vs, arr
            ax = vs.index(f.var)
            red = arr.any(axis=ax) if isinstance(f, Exists) else arr.all(axis=ax)
            return vs[:ax] + vs[ax + 1:], red
        raise TypeError(f"not a formula: {f!r}")

    def _atom(self, f: Atom, env):
        if f.rel not in self.s:
            raise EvaluationError(f"unknown relation {f.rel!r}")
        arity = self.s.arity(f.rel)
        if arity != len(f.args):
            raise EvaluationError(
                f"relation {f.rel} has arity {arity}, used with {len(f.args)} arguments"
            )
        dense = self.s.dense(f.rel)
        out_vars = []
        for a in f.args:
            if a not in env and a not in out_vars:
                out_vars.append(a)
        m = len(out_vars)
        if m == 0:
            return (), np.array(dense[tuple(env[a] for a in f.args)])
        if m == arity and tuple(out_vars) == f.args:
            return tuple(out_vars), dense
        index = tuple(env[a] if a in env else self.axis(out_vars.index(a), m) for a in f.args)
        return tuple(out_vars), dense[index]

    def _eq(self, f: Eq, env):
        a, b = f.left, f.right
        if a in env and b in env:
            return (), np.array(env[a] == env[b])
        if a == b:
            return (), np.array(True)
        if a in env:
            return (b,), np.arange(self.n) == env[a]
        if b in env:
            return (a,), np.arange(self.n) == env[b]
        return (a, b), np.eye(self.n, dtype=bool)

    def _junction(self, parts, env, conj: bool):
        results = []
        for p in parts:
            vs, arr = self.eval(p, env)
            if conj and not arr.any():
                return (), np.array(False)
            if not conj and arr.all():
                return (), np.array(True)
            results.append((vs, arr))
        target = ()
        for vs, _ in results:
            target = _union(target, vs)
        acc = None
        for vs, arr in results:
            aligned = _align(vs, arr, target)
            if acc is None:
                acc = aligned
            else:
                acc = (acc & aligned) if conj else (acc | aligned)
        return target, acc


def _union(a: tuple, b: tuple) -> tuple:
    return a + tuple(v for v in b if v not in a)


def _align(vs: tuple, arr: np.ndarray, target: tuple) -> np.ndarray:
    """View ``arr`` (axes ``vs``) as broadcastable against axes ``target``."""
    if vs == target[: len(vs)]:
        return arr.reshape(arr.shape + (1,) * (len(target) - len(vs)))
    order = sorted(range(len(vs)), key=lambda i: target.index(vs[i]))
    arr = arr.transpose(order)
    placed = [vs[i] for i in order]
    shape = [1] * len(target)
    for v, size in zip(placed, arr.shape):
        shape[target.index(v)] = size
    return arr.reshape(shape)


def _check(s: FiniteStructure, f: Formula, assignment: Mapping[str, int]) -> None:
    for name, arity in relations_used(f).items():
        if name not in s:
            raise EvaluationError(f"unknown relation {name!r}")
        if s.arity(name) != arity:
            raise EvaluationError(
                f"relation {name} has arity {s.arity(name)}, used with {arity} arguments"
            )
    for v, a in assignment.items():
        if isinstance(a, bool) or not isinstance(a, (int, np.integer)) or not 0 <= a < s.universe_size:
            raise EvaluationError(f"value {a!r} for {v} is not an element of the universe")


def evaluate(s: FiniteStructure, f: Formula, assignment: Mapping[str, int] | None = None) -> bool:
    """Whether ``s`` satisfies ``f`` under ``assignment``."""
    assignment = dict(assignment or {})
    missing = free_vars(f) - set(assignment)
    if missing:
        raise EvaluationError(f"no value for free variables {sorted(missing)}")
    _check(s, f, assignment)
    env = {k: int(v) for k, v in assignment.items()}
    _, arr = _Run(s).eval(miniscope(f), env)
    return bool(arr)


def solution_array(
    s: FiniteStructure,
    f: Formula,
    variables: Sequence[str],
    partial: Mapping[str, int] | None = None,
) -> np.ndarray:
    """Boolean array of shape (n,)*len(variables): entry t is true iff f holds at variables=t."""
    partial = dict(partial or {})
    variables = tuple(variables)
    if len(set(variables)) != len(variables):
        raise EvaluationError("repeated variable in solution variables")
    overlap = set(variables) & set(partial)
    if overlap:
        raise EvaluationError(f"variables {sorted(overlap)} are both solved for and assigned")
    missing = free_vars(f) - set(variables) - set(partial)
    if missing:
        raise EvaluationError(f"no value for free variables {sorted(missing)}")
    _check(s, f, partial)
    env = {k: int(v) for k, v in partial.items()}
    vs, arr = _Run(s).eval(miniscope(f), env)
    arr = _align(vs, arr, variables)
    return np.broadcast_to(arr, (s.universe_size,) * len(variables))


def solution_set(
    s: FiniteStructure,
    f: Formula,
    variables: Sequence[str],
    partial: Mapping[str, int] | None = None,
) -> frozenset:
    """All tuples over the universe that satisfy ``f`` at ``variables`` (given ``partial``)."""
    arr = solution_array(s, f, variables, partial)
    if arr.ndim == 0:
        return frozenset({()}) if bool(arr) else frozenset()
    return frozenset(tuple(int(v) for v in row) for row in np.argwhere(arr))


def restrict(solutions: Iterable[tuple], *domains: Iterable[int]) -> frozenset:
    """Keep the tuples whose i-th entry lies in the i-th domain."""
    doms = [frozenset(d) for d in domains]
    return frozenset(t for t in solutions if all(x in d for x, d in zip(t, doms)))
