"""Finite witnesses for the order property, the independence property, the
finite cover property, and the stable/unstable configuration families.

All searches work on a truth table of the partitioned formula, computed once:
row r is an object tuple x, column c a parameter tuple y, and T[r, c] says
whether phi(x, y) holds.  Rows are packed into Python ints so that the set of
object tuples meeting a partial pattern is a single bitmask.  Certificates are
then re-checked with the evaluator, never taken from search state.

``budget`` bounds the number of search nodes (candidate extensions of a
partial sequence, plus one per parameter tuple tried in the configuration
search).  A search that finishes under budget without a witness is a proof
that none exists at that level.  ``budget=None`` removes the bound.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .logic import PartitionedFormula, evaluate, parse_formula, solution_array, to_text
from .structures import FiniteStructure

ORDER = "ORDER"
INDEPENDENCE = "INDEPENDENCE"
FCP = "FCP"
STABLE = "stable"
UNSTABLE = "unstable"

DEFAULT_BUDGET = 10**7


class BudgetExhausted(Exception):
    pass


@dataclass(frozen=True)
class WitnessReport:
    """A witness at ``level``.

    ``certificates`` maps cut k (ORDER), subset as a sorted index tuple
    (INDEPENDENCE) or omitted index l (FCP) to the object tuple solving the
    corresponding conjunction.
    """

    kind: str
    level: int
    parameter_tuples: tuple
    certificates: dict

    def to_dict(self) -> dict:
        if self.kind == INDEPENDENCE:
            certs = [
                {"subset": list(k), "x": list(v)}
                for k, v in sorted(self.certificates.items(), key=lambda kv: (len(kv[0]), kv[0]))
            ]
        else:
            certs = [{"index": k, "x": list(v)} for k, v in sorted(self.certificates.items())]
        return {
            "kind": self.kind,
            "level": self.level,
            "parameter_tuples": [list(t) for t in self.parameter_tuples],
            "certificates": certs,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> WitnessReport:
        kind = doc["kind"]
        if kind == INDEPENDENCE:
            certs = {tuple(c["subset"]): tuple(c["x"]) for c in doc["certificates"]}
        else:
            certs = {int(c["index"]): tuple(c["x"]) for c in doc["certificates"]}
        return cls(kind, int(doc["level"]), tuple(tuple(t) for t in doc["parameter_tuples"]), certs)

    def truncate(self, level: int) -> WitnessReport:
        """The induced witness on the first ``level`` parameter tuples.

        Only meaningful for ORDER and INDEPENDENCE; certificates are carried
        over from the longer witness (cut k < level, or the subset of
        [level] padded with nothing).
        """
        if not 0 <= level <= self.level:
            raise ValueError(f"cannot truncate level {self.level} to {level}")
        if self.kind == ORDER:
            certs = {k: self.certificates[k] for k in range(level)}
        elif self.kind == INDEPENDENCE:
            certs = {k: v for k, v in self.certificates.items() if all(i < level for i in k)}
        else:
            raise ValueError("FCP witnesses do not truncate")
        return WitnessReport(self.kind, level, self.parameter_tuples[:level], certs)


@dataclass
class SearchResult:
    """Outcome of a search.  ``exhaustive`` means the whole space was covered."""

    witness: object | None
    exhaustive: bool
    examined: int

    @property
    def found(self) -> bool:
        return self.witness is not None

    def status(self) -> str:
        if self.found:
            return "found"
        return "none (exhaustive)" if self.exhaustive else "none (budget)"


# -- truth tables ------------------------------------------------------------------

@dataclass
class _Table:
    n: int
    obj_arity: int
    par_arity: int
    cols: list  # column c -> int bitmask over rows
    full: int

    def row(self, r: int) -> tuple:
        return _unflatten(r, self.n, self.obj_arity)

    def col(self, c: int) -> tuple:
        return _unflatten(c, self.n, self.par_arity)


def _unflatten(i: int, n: int, k: int) -> tuple:
    return tuple(int(v) for v in np.unravel_index(i, (n,) * k)) if k else ()


def _pack_columns(mat: np.ndarray) -> list:
    """Column c of a 2-d bool array as an int with bit r set iff mat[r, c]."""
    rows = mat.shape[0]
    packed = np.packbits(mat, axis=0, bitorder="little")
    nbytes = (rows + 7) // 8
    return [int.from_bytes(packed[:nbytes, c].tobytes(), "little") for c in range(mat.shape[1])]


def truth_table(s: FiniteStructure, pf: PartitionedFormula) -> _Table:
    n = s.universe_size
    p, q = len(pf.object_vars), len(pf.param_vars)
    arr = solution_array(s, pf.formula, pf.object_vars + pf.param_vars)
    mat = np.ascontiguousarray(arr).reshape(n**p, n**q)
    return _Table(n, p, q, _pack_columns(mat), (1 << n**p) - 1)


def _lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


class _Counter:
    def __init__(self, budget: int | None):
        self.budget = float("inf") if budget is None else budget
        self.count = 0

    def tick(self) -> None:
        self.count += 1
        if self.count > self.budget:
            raise BudgetExhausted


# -- order property --------------------------------------------------------------

def find_order_witness(
    s: FiniteStructure, pf: PartitionedFormula, n: int, budget: int = DEFAULT_BUDGET
) -> SearchResult:
    """Parameter tuples a_0..a_{n-1} such that every cut k < n is realized:
    some x has phi(x, a_i) exactly for i < k."""
    if n < 0:
        raise ValueError("level must be >= 0")
    table = truth_table(s, pf)
    counter = _Counter(budget)
    cols = table.cols

    def dfs(seq: list, masks: list):
        m = len(seq)
        if m == n:
            return seq, masks
        for c in range(len(cols)):
            if c in seq:
                continue
            counter.tick()
            col = cols[c]
            new = [mk & ~col for mk in masks]
            if not all(new):
                continue
            top = masks[-1] & col
            if m + 1 < n and not top:
                continue
            found = dfs(seq + [c], new + [top])
            if found:
                return found
        return None

    try:
        found = dfs([], [table.full])
    except BudgetExhausted:
        return SearchResult(None, False, counter.count)
    if found is None:
        return SearchResult(None, True, counter.count)
    seq, masks = found
    certs = {k: table.row(_lowest(masks[k])) for k in range(n)}
    report = WitnessReport(ORDER, n, tuple(table.col(c) for c in seq), certs)
    return SearchResult(report, True, counter.count)


# -- independence property -------------------------------------------------------

def find_independence_witness(
    s: FiniteStructure, pf: PartitionedFormula, n: int, budget: int = DEFAULT_BUDGET
) -> SearchResult:
    """Parameter tuples a_0..a_{n-1} shattered by phi: every subset s of [n]
    is {i : phi(x, a_i)} for some x.  The condition is symmetric in the order
    of the a_i, so only increasing sequences are searched."""
    if n < 0:
        raise ValueError("level must be >= 0")
    table = truth_table(s, pf)
    counter = _Counter(budget)
    cols = table.cols

    def dfs(seq: list, masks: list):
        m = len(seq)
        if m == n:
            return seq, masks
        start = seq[-1] + 1 if seq else 0
        for c in range(start, len(cols)):
            counter.tick()
            col = cols[c]
            new = [mk & ~col for mk in masks] + [mk & col for mk in masks]
            if not all(new):
                continue
            found = dfs(seq + [c], new)
            if found:
                return found
        return None

    try:
        found = dfs([], [table.full])
    except BudgetExhausted:
        return SearchResult(None, False, counter.count)
    if found is None:
        return SearchResult(None, True, counter.count)
    seq, masks = found
    certs = {}
    for pattern, mk in enumerate(masks):
        subset = tuple(i for i in range(n) if pattern >> i & 1)
        certs[subset] = table.row(_lowest(mk))
    report = WitnessReport(INDEPENDENCE, n, tuple(table.col(c) for c in seq), certs)
    return SearchResult(report, True, counter.count)


# -- finite cover property -------------------------------------------------------

def find_fcp_witness(
    s: FiniteStructure, pf: PartitionedFormula, n: int, budget: int = DEFAULT_BUDGET
) -> SearchResult:
    """Parameter tuples whose n-fold conjunction is inconsistent while every
    (n-1)-fold sub-conjunction is consistent.  Increasing sequences only."""
    if n < 0:
        raise ValueError("level must be >= 0")
    table = truth_table(s, pf)
    counter = _Counter(budget)
    cols = table.cols
    if n == 0:
        return SearchResult(None, True, 0)

    def dfs(seq: list, omit: list, total: int):
        m = len(seq)
        start = seq[-1] + 1 if seq else 0
        for c in range(start, len(cols)):
            counter.tick()
            col = cols[c]
            new_total = total & col
            last = m + 1 == n
            if last and new_total:
                continue
            if not last and not new_total:
                continue
            new_omit = [mk & col for mk in omit] + [total]
            if not all(new_omit):
                continue
            if last:
                return seq + [c], new_omit
            found = dfs(seq + [c], new_omit, new_total)
            if found:
                return found
        return None

    try:
        found = dfs([], [], table.full)
    except BudgetExhausted:
        return SearchResult(None, False, counter.count)
    if found is None:
        return SearchResult(None, True, counter.count)
    seq, omit = found
    certs = {l: table.row(_lowest(mk)) for l, mk in enumerate(omit)}
    report = WitnessReport(FCP, n, tuple(table.col(c) for c in seq), certs)
    return SearchResult(report, True, counter.count)


FINDERS = {
    ORDER: find_order_witness,
    INDEPENDENCE: find_independence_witness,
    FCP: find_fcp_witness,
}


# -- re-certification ------------------------------------------------------------

def certify_witness(s: FiniteStructure, pf: PartitionedFormula, report: WitnessReport) -> list:
    """Problems found when re-evaluating ``report`` from scratch (empty if sound)."""
    problems = []
    n = report.level
    params = [tuple(t) for t in report.parameter_tuples]
    if len(params) != n:
        problems.append(f"expected {n} parameter tuples, got {len(params)}")
        return problems
    if len(set(params)) != n:
        problems.append("parameter tuples are not pairwise distinct")
    for t in params:
        if len(t) != len(pf.param_vars):
            problems.append(f"parameter tuple {t} has the wrong length")
            return problems

    def holds(x: tuple, a: tuple) -> bool:
        env = dict(zip(pf.object_vars, x))
        env.update(zip(pf.param_vars, a))
        return evaluate(s, pf.formula, env)

    if report.kind == ORDER:
        for k in range(n):
            x = report.certificates.get(k)
            if x is None:
                problems.append(f"no certificate for cut {k}")
                continue
            for i, a in enumerate(params):
                if holds(x, a) != (i < k):
                    problems.append(f"cut {k}: x={x} fails at index {i}")
                    break
    elif report.kind == INDEPENDENCE:
        for r in range(n + 1):
            for subset in itertools.combinations(range(n), r):
                x = report.certificates.get(subset)
                if x is None:
                    problems.append(f"no certificate for subset {subset}")
                    continue
                for i, a in enumerate(params):
                    if holds(x, a) != (i in subset):
                        problems.append(f"subset {subset}: x={x} fails at index {i}")
                        break
    elif report.kind == FCP:
        p = len(pf.object_vars)
        n_univ = s.universe_size
        for x in itertools.product(range(n_univ), repeat=p):
            if all(holds(x, a) for a in params):
                problems.append(f"the full conjunction is satisfied by x={x}")
                break
        for l in range(n):
            x = report.certificates.get(l)
            if x is None:
                problems.append(f"no certificate for omitted index {l}")
                continue
            bad = [i for i, a in enumerate(params) if i != l and not holds(x, a)]
            if bad:
                problems.append(f"omitting {l}: x={x} fails at index {bad[0]}")
    else:
        problems.append(f"unknown witness kind {report.kind!r}")
    return problems


# -- configuration families -------------------------------------------------------

@dataclass(frozen=True)
class ConfigLevel:
    """One level: parameters d for the z-block, spine B = (b_0..b_{n-1}) and
    matrix A with A[i][j] = a_ij."""

    n: int
    params: tuple
    B: tuple
    A: tuple

    def elements(self) -> frozenset:
        return frozenset(self.B) | frozenset(a for row in self.A for a in row)

    def restrict(self, indices: Sequence[int]) -> ConfigLevel:
        """Sub-configuration on an index subset (kept in increasing order)."""
        idx = sorted(set(indices))
        if any(not 0 <= i < self.n for i in idx):
            raise ValueError("index out of range")
        return ConfigLevel(
            len(idx),
            self.params,
            tuple(self.B[i] for i in idx),
            tuple(tuple(self.A[i][j] for j in idx) for i in idx),
        )

    def to_dict(self) -> dict:
        return {"n": self.n, "params": list(self.params), "B": list(self.B), "A": [list(r) for r in self.A]}

    @classmethod
    def from_dict(cls, doc: dict) -> ConfigLevel:
        return cls(
            int(doc["n"]),
            tuple(doc["params"]),
            tuple(doc["B"]),
            tuple(tuple(r) for r in doc["A"]),
        )


@dataclass(frozen=True)
class ConfigFamily:
    kind: str
    levels: tuple
    exceptional: frozenset
    formula: PartitionedFormula | None = field(default=None, compare=False)

    def level(self, n: int) -> ConfigLevel:
        for lv in self.levels:
            if lv.n == n:
                return lv
        raise KeyError(f"no level {n} in family")

    def to_dict(self) -> dict:
        doc = {
            "kind": self.kind,
            "levels": [lv.to_dict() for lv in self.levels],
            "exceptional": sorted(self.exceptional),
        }
        if self.formula is not None:
            doc["formula"] = to_text(self.formula.formula)
            doc["object_vars"] = list(self.formula.object_vars)
            doc["param_vars"] = list(self.formula.param_vars)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> ConfigFamily:
        pf = None
        if "formula" in doc:
            pf = PartitionedFormula(parse_formula(doc["formula"]), doc["object_vars"], doc["param_vars"])
        return cls(
            doc["kind"],
            tuple(ConfigLevel.from_dict(d) for d in doc["levels"]),
            frozenset(doc["exceptional"]),
            pf,
        )


def _pattern(kind: str, k: int, i: int) -> bool:
    return k == i if kind == STABLE else k <= i


def _config_split(pf: PartitionedFormula) -> tuple:
    if len(pf.object_vars) != 1 or len(pf.param_vars) < 1:
        raise ValueError("configuration formulas need one object variable and at least one parameter")
    return pf.object_vars[0], pf.param_vars[0], pf.param_vars[1:]


def _bits(mask: int) -> list:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _search_level(rows: list, n: int, kind: str, avail: int, counter: _Counter):
    """Spine/matrix for one level among the elements of ``avail``.

    rows[b] is the bitmask of a with phi(b, a).  For a partial spine
    b_0..b_{m-1}, cand[i] (i < m) holds the elements whose pattern against
    the spine so far is the one row i needs; ``rest`` holds those matching
    the shared prefix pattern of every row i >= m.
    """
    size = len(rows)

    def dfs(spine: list, cand: list, rest: int):
        m = len(spine)
        if m == n:
            return spine, cand
        for b in range(size):
            if not avail >> b & 1 or b in spine:
                continue
            counter.tick()
            r = rows[b]
            keep = ~(1 << b)
            new = [c & ~r & keep for c in cand]
            new.append(rest & r & keep)
            if any(c.bit_count() < n for c in new):
                continue
            new_rest = (rest & ~r if kind == STABLE else rest & r) & keep
            if new_rest.bit_count() < n * (n - m - 1):
                continue
            found = dfs(spine + [b], new, new_rest)
            if found:
                return found
        return None

    return dfs([], [], avail)


def find_config_family(
    s: FiniteStructure,
    pf: PartitionedFormula,
    levels: Iterable[int],
    kind: str,
    budget: int = DEFAULT_BUDGET,
    reserve: int = 0,
) -> SearchResult:
    """Configuration family phi(b_k, a_ij, d) iff k = i (stable) / k <= i
    (unstable), one level per requested n, pairwise disjoint across levels.

    Levels are searched largest first; each level avoids the elements taken
    by the levels before it.  ``reserve`` is the minimum size of the
    exceptional set left over.
    """
    if kind not in (STABLE, UNSTABLE):
        raise ValueError(f"kind must be {STABLE!r} or {UNSTABLE!r}")
    x, y, zs = _config_split(pf)
    levels = sorted(set(int(n) for n in levels), reverse=True)
    if any(n < 1 for n in levels):
        raise ValueError("levels must be >= 1")
    N = s.universe_size
    counter = _Counter(budget)
    used = 0
    found_levels = []
    exhaustive = True
    try:
        for n in levels:
            hit = None
            for d in itertools.product(range(N), repeat=len(zs)):
                counter.tick()
                arr = solution_array(s, pf.formula, (x, y), dict(zip(zs, d)))
                rows = _pack_columns(np.ascontiguousarray(arr.T))
                avail = ((1 << N) - 1) & ~used
                got = _search_level(rows, n, kind, avail, counter)
                if got:
                    spine, cand = got
                    matrix = tuple(tuple(_bits(c)[:n]) for c in cand)
                    hit = ConfigLevel(n, tuple(d), tuple(spine), matrix)
                    break
            if hit is None:
                # Later levels were searched with elements removed by earlier
                # greedy choices, so "none" is only a proof for the first level.
                exhaustive = not found_levels
                return SearchResult(None, exhaustive, counter.count)
            found_levels.append(hit)
            for e in hit.elements():
                used |= 1 << e
    except BudgetExhausted:
        return SearchResult(None, False, counter.count)
    exceptional = frozenset(range(N)) - frozenset(_bits(used))
    if len(exceptional) < reserve:
        return SearchResult(None, False, counter.count)
    found_levels.sort(key=lambda lv: lv.n)
    family = ConfigFamily(kind, tuple(found_levels), exceptional, pf)
    return SearchResult(family, True, counter.count)


def certify_config_level(
    s: FiniteStructure, pf: PartitionedFormula, kind: str, level: ConfigLevel
) -> list:
    problems = []
    x, y, zs = _config_split(pf)
    n = level.n
    flat = [a for row in level.A for a in row]
    if len(level.B) != n or len(level.A) != n or any(len(r) != n for r in level.A):
        return [f"level {n}: wrong shape"]
    if len(set(level.B)) != n:
        problems.append(f"level {n}: spine has repetitions")
    if len(set(flat)) != n * n:
        problems.append(f"level {n}: matrix has repetitions")
    if set(level.B) & set(flat):
        problems.append(f"level {n}: spine and matrix intersect")
    base = dict(zip(zs, level.params))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                env = dict(base)
                env[x] = level.B[k]
                env[y] = level.A[i][j]
                if evaluate(s, pf.formula, env) != _pattern(kind, k, i):
                    problems.append(f"level {n}: pattern fails at k={k}, i={i}, j={j}")
    return problems


def certify_config(s: FiniteStructure, pf: PartitionedFormula, family: ConfigFamily) -> list:
    """Problems with ``family`` found by direct re-evaluation (empty if sound)."""
    problems = []
    seen: set = set()
    for level in family.levels:
        problems += certify_config_level(s, pf, family.kind, level)
        elems = level.elements()
        if seen & elems:
            problems.append(f"level {level.n} shares elements with another level")
        seen |= elems
    expected = frozenset(range(s.universe_size)) - seen
    if family.exceptional != expected:
        problems.append("exceptional set is not the complement of the levels")
    return problems
