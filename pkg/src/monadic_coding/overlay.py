"""Permutation overlays: combine two structures on one universe so that a
single formula codes a bijection, then undo the permutation.

Two variants are supported.  ``prop1`` overlays two configuration families,
sending the right-hand matrix onto the transposed left-hand matrix and the
right-hand spine into the left's exceptional set.  ``prop2`` overlays a
configuration family with a relation Y carrying a disjoint family, sending
each member's first two coordinates onto a transposed pair (a_ij, a_ji).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .coding import is_total_order
from .detectors import STABLE, UNSTABLE, ConfigFamily, ConfigLevel, certify_config
from .logic import (
    And,
    Atom,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    PartitionedFormula,
    conj,
    exists,
    fresh_var,
    solution_set,
    substitute,
    to_text,
)
from .mutual_algebraicity import DisjointFamily, certify_family
from .structures import (
    FiniteStructure,
    NamedSubset,
    Permutation,
    apply_permutation,
    expand_many,
    overlay_union,
    pad,
    structure_from_dict,
    structure_to_dict,
)

PROP1 = "prop1"
PROP2 = "prop2"

# unary predicate names added to the combined structure
A_NAME, B_NAME, D_NAME, V_NAME = "A", "B", "D", "V"
BMINUS, BPLUS, ASTAR = "Bminus", "Bplus", "Astar"
PREDICATE_NAMES = (A_NAME, B_NAME, D_NAME, V_NAME, BMINUS, BPLUS, ASTAR)


class OverlayError(ValueError):
    """A constraint or invariant of an overlay plan does not hold."""


# -- sigma --------------------------------------------------------------------

def _common_size(*structures: FiniteStructure) -> int:
    return max(s.universe_size for s in structures)


def _complete(n: int, fixed: dict) -> Permutation:
    """Extend the partial injection ``fixed`` to a permutation of {0..n-1},
    matching free sources to free targets in increasing order."""
    if len(set(fixed.values())) != len(fixed):
        raise OverlayError("constraint conflict: two elements sent to the same target")
    for src, dst in fixed.items():
        if not (0 <= src < n and 0 <= dst < n):
            raise OverlayError(f"constraint {src} -> {dst} leaves the universe")
    free_src = [v for v in range(n) if v not in fixed]
    used = set(fixed.values())
    free_dst = [v for v in range(n) if v not in used]
    mapping = dict(fixed)
    mapping.update(zip(free_src, free_dst))
    return Permutation(mapping[v] for v in range(n))


def _matched_levels(left: ConfigFamily, right_sizes: list) -> list:
    left_sizes = sorted(lv.n for lv in left.levels)
    if left_sizes != sorted(right_sizes):
        raise OverlayError(f"level mismatch: left has {left_sizes}, right has {sorted(right_sizes)}")
    return left_sizes


def build_sigma_prop1(left: ConfigFamily, right: ConfigFamily, size: int | None = None) -> Permutation:
    """sigma(gamma^n_ij) = alpha^n_ji and sigma(D_n) inside the exceptional set.

    Spine elements go to the smallest exceptional elements still free.
    ``size`` defaults to one past the largest element mentioned.
    """
    levels = _matched_levels(left, [lv.n for lv in right.levels])
    if size is None:
        mentioned = set(left.exceptional)
        for fam in (left, right):
            for lv in fam.levels:
                mentioned |= lv.elements()
        size = max(mentioned, default=-1) + 1
    fixed: dict = {}
    for n in levels:
        alpha, gamma = left.level(n), right.level(n)
        for i in range(n):
            for j in range(n):
                fixed[gamma.A[i][j]] = alpha.A[j][i]
    images = set(fixed.values())
    room = sorted(x for x in left.exceptional if x not in images)
    needed = [d for n in levels for d in right.level(n).B]
    if len(room) < len(needed):
        raise OverlayError(
            f"insufficient exceptional room: {len(room)} free elements for {len(needed)} spine elements"
        )
    for d, x in zip(needed, room):
        if d in fixed:
            raise OverlayError(f"element {d} is constrained twice")
        fixed[d] = x
    return _complete(size, fixed)


def check_sigma_prop1(left: ConfigFamily, right: ConfigFamily, sigma: Permutation) -> list:
    problems = []
    for lv in right.levels:
        alpha = left.level(lv.n)
        for i in range(lv.n):
            for j in range(lv.n):
                if sigma(lv.A[i][j]) != alpha.A[j][i]:
                    problems.append(f"level {lv.n}: gamma_{i}{j} not sent to alpha_{j}{i}")
        for k, d in enumerate(lv.B):
            if sigma(d) not in left.exceptional:
                problems.append(f"level {lv.n}: delta_{k} not sent into the exceptional set")
    return problems


def prop2_positions(levels) -> list:
    """(n, i, j) for i < j < n, levels increasing, lexicographic."""
    return [(n, i, j) for n in sorted(levels) for i in range(n) for j in range(i + 1, n)]


def build_sigma_prop2(left: ConfigFamily, fam: DisjointFamily, size: int | None = None) -> Permutation:
    """Member l's first two coordinates go to (alpha^n_ij, alpha^n_ji), with
    positions taken in (n, i, j) order and members in family order."""
    positions = prop2_positions(lv.n for lv in left.levels)
    if len(fam.members) < len(positions):
        raise OverlayError(f"family has {len(fam.members)} members, {len(positions)} needed")
    if size is None:
        mentioned = set(left.exceptional) | set(fam.support)
        for lv in left.levels:
            mentioned |= lv.elements()
        size = max(mentioned, default=-1) + 1
    fixed: dict = {}
    for (n, i, j), member in zip(positions, fam.members):
        alpha = left.level(n)
        for src, dst in ((member[0], alpha.A[i][j]), (member[1], alpha.A[j][i])):
            if src in fixed:
                raise OverlayError(f"constraint conflict at element {src}")
            fixed[src] = dst
    return _complete(size, fixed)


def check_sigma_prop2(left: ConfigFamily, fam: DisjointFamily, sigma: Permutation) -> list:
    problems = []
    used: set = set()
    members = {(sigma(t[0]), sigma(t[1])): ell for ell, t in enumerate(fam.members)}
    for n, i, j in prop2_positions(lv.n for lv in left.levels):
        alpha = left.level(n)
        ell = members.get((alpha.A[i][j], alpha.A[j][i]))
        if ell is None:
            problems.append(f"level {n}: no member sent to (alpha_{i}{j}, alpha_{j}{i})")
        elif ell in used:
            problems.append(f"member {ell} used twice")
        else:
            used.add(ell)
    return problems


# -- phi* -----------------------------------------------------------------------

@dataclass(frozen=True)
class PhiStar:
    """phi*(x, y) with its parameter variables and their values."""

    formula: Formula
    x: str
    y: str
    partial: dict

    def text(self) -> str:
        return to_text(self.formula)


def _fresh(taken: set, base: str) -> str:
    v = fresh_var(taken, base)
    taken.add(v)
    return v


def synthesize_phi_star(
    combined: FiniteStructure,
    spine: NamedSubset,
    matrix: NamedSubset,
    pf: PartitionedFormula,
    params,
    kind: str,
    x: str = "x",
    y: str = "y",
    avoid=(),
) -> PhiStar:
    """Formula whose row at the spine's i-th element is the i-th matrix row.

    Stable kind: B(x) & A(y) & phi(x, y).  Unstable kind adds
    forall x' (succ(x, x') -> !phi(x', y)), with succ the successor of the
    order u <= v :<-> forall y' ((A(y') & phi(v, y')) -> phi(u, y')) on B.
    For the top element the universal is vacuous.
    """
    if len(pf.object_vars) != 1 or len(pf.param_vars) < 1:
        raise ValueError("expected one object variable and a parameter block starting with the matrix variable")
    for p in (spine, matrix):
        if p.name not in combined:
            raise ValueError(f"predicate {p.name} is not in the structure")
    rest = pf.param_vars[1:]
    params = tuple(params)
    if len(params) != len(rest):
        raise ValueError("parameter values do not match the parameter block")
    taken = {x, y} | set(avoid)
    zs = tuple(_fresh(taken, "z") for _ in rest)

    def phi(a: str, b: str) -> Formula:
        return pf.instantiate((a,), (b,) + zs)

    Bp = lambda v: Atom(spine.name, (v,))  # noqa: E731
    Ap = lambda v: Atom(matrix.name, (v,))  # noqa: E731
    base = conj(Bp(x), Ap(y), phi(x, y))
    partial = dict(zip(zs, params))
    if kind == STABLE:
        return PhiStar(base, x, y, partial)
    if kind != UNSTABLE:
        raise ValueError(f"unknown kind {kind!r}")

    def le(u: str, v: str) -> Formula:
        t = _fresh(taken, "t")
        return Forall(t, Implies(And(Ap(t), phi(v, t)), phi(u, t)))

    def lt(u: str, v: str) -> Formula:
        return And(le(u, v), Not(Eq(u, v)))

    # the definable order on the spine must be total
    u, v = _fresh(taken, "u"), _fresh(taken, "v")
    rel = solution_set(combined, conj(Bp(u), Bp(v), le(u, v)), (u, v), partial)
    if not is_total_order(rel, sorted(spine.members)):
        raise OverlayError("the definable order on the spine is not total")

    x2, w = _fresh(taken, "x"), _fresh(taken, "w")
    succ = conj(Bp(x), Bp(x2), lt(x, x2), Not(Exists(w, conj(Bp(w), lt(x, w), lt(w, x2)))))
    formula = conj(base, Forall(x2, Implies(succ, Not(phi(x2, y)))))
    return PhiStar(formula, x, y, partial)


def phi_star_rows(combined: FiniteStructure, star: PhiStar, spine) -> dict:
    """Row of phi* at each spine element."""
    sols = solution_set(combined, star.formula, (star.x, star.y), star.partial)
    rows: dict = {b: set() for b in spine}
    for b, a in sols:
        rows.setdefault(b, set()).add(a)
    return {b: frozenset(r) for b, r in rows.items()}


def check_phi_star(combined: FiniteStructure, star: PhiStar, level: ConfigLevel) -> list:
    rows = phi_star_rows(combined, star, level.B)
    problems = []
    for i, b in enumerate(level.B):
        if rows.get(b, frozenset()) != frozenset(level.A[i]):
            problems.append(f"row {i} of phi* differs from the matrix row")
    extra = set(rows) - set(level.B)
    if extra:
        problems.append(f"phi* holds off the spine at {sorted(extra)}")
    return problems


# -- plans and theta -----------------------------------------------------------------

@dataclass
class OverlayPlan:
    variant: str
    left_structure: FiniteStructure
    left: ConfigFamily
    right_structure: FiniteStructure
    right: object  # ConfigFamily (prop1) or DisjointFamily (prop2)
    sigma: Permutation
    combined: FiniteStructure
    relation: str | None = None  # Y, for prop2

    @property
    def size(self) -> int:
        return self.combined.universe_size

    def constraint_problems(self) -> list:
        if self.variant == PROP1:
            return check_sigma_prop1(self.left, self.right, self.sigma)
        return check_sigma_prop2(self.left, self.right, self.sigma)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "left_structure": structure_to_dict(self.left_structure),
            "left": self.left.to_dict(),
            "right_structure": structure_to_dict(self.right_structure),
            "right": self.right.to_dict(),
            "relation": self.relation,
            "sigma": list(self.sigma.mapping),
            "combined": structure_to_dict(self.combined),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> OverlayPlan:
        variant = doc["variant"]
        right = ConfigFamily.from_dict(doc["right"]) if variant == PROP1 else DisjointFamily.from_dict(doc["right"])
        return cls(
            variant,
            structure_from_dict(doc["left_structure"]),
            ConfigFamily.from_dict(doc["left"]),
            structure_from_dict(doc["right_structure"]),
            right,
            Permutation(doc["sigma"]),
            structure_from_dict(doc["combined"]),
            doc.get("relation"),
        )


def _padded(left_s: FiniteStructure, left: ConfigFamily, right_s: FiniteStructure) -> tuple:
    """Both operands on a common universe; padding elements join the exceptional set."""
    N = _common_size(left_s, right_s)
    extra = frozenset(range(left_s.universe_size, N))
    left = ConfigFamily(left.kind, left.levels, left.exceptional | extra, left.formula)
    return pad(left_s, N), left, pad(right_s, N), N


def _check_signatures(s1: FiniteStructure, s2: FiniteStructure) -> None:
    clash = set(s1.names) & set(s2.names)
    if clash:
        raise OverlayError(f"operands share relation names {sorted(clash)}")
    reserved = (set(s1.names) | set(s2.names)) & set(PREDICATE_NAMES)
    if reserved:
        raise OverlayError(f"relation names {sorted(reserved)} are reserved for overlay predicates")


def _require_formula(fam: ConfigFamily, side: str) -> PartitionedFormula:
    if fam.formula is None:
        raise OverlayError(f"the {side} configuration family carries no formula")
    return fam.formula


def plan_prop1(
    left_structure: FiniteStructure,
    left: ConfigFamily,
    right_structure: FiniteStructure,
    right: ConfigFamily,
) -> OverlayPlan:
    _check_signatures(left_structure, right_structure)
    for s, fam, side in ((left_structure, left, "left"), (right_structure, right, "right")):
        problems = certify_config(s, _require_formula(fam, side), fam)
        if problems:
            raise OverlayError(f"{side} configuration family fails: {problems[0]}")
    N1, left, N2, N = _padded(left_structure, left, right_structure)
    sigma = build_sigma_prop1(left, right, N)
    problems = check_sigma_prop1(left, right, sigma)
    if problems:
        raise OverlayError(problems[0])
    combined = overlay_union(N1, apply_permutation(N2, sigma))
    return OverlayPlan(PROP1, N1, left, N2, right, sigma, combined)


def plan_prop2(
    left_structure: FiniteStructure,
    left: ConfigFamily,
    right_structure: FiniteStructure,
    relation: str,
    fam: DisjointFamily,
) -> OverlayPlan:
    _check_signatures(left_structure, right_structure)
    problems = certify_config(left_structure, _require_formula(left, "left"), left)
    if problems:
        raise OverlayError(f"left configuration family fails: {problems[0]}")
    if relation not in right_structure:
        raise OverlayError(f"no relation {relation!r} in the right structure")
    if right_structure.arity(relation) < 2:
        raise OverlayError("the paired relation must have arity at least 2")
    problems = certify_family(right_structure[relation], fam, closed=True)
    if problems:
        raise OverlayError(f"disjoint family fails: {problems[0]}")
    N1, left, N2, N = _padded(left_structure, left, right_structure)
    sigma = build_sigma_prop2(left, fam, N)
    problems = check_sigma_prop2(left, fam, sigma)
    if problems:
        raise OverlayError(problems[0])
    combined = overlay_union(N1, apply_permutation(N2, sigma))
    return OverlayPlan(PROP2, N1, left, N2, fam, sigma, combined, relation)


@dataclass
class ThetaReport:
    theta: Formula
    variables: tuple
    domain_left: NamedSubset
    domain_right: NamedSubset
    target: NamedSubset
    solution: frozenset
    verdict: bool
    problems: list = field(default_factory=list)
    boundary_exclusions: tuple = ()
    partial: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theta": to_text(self.theta),
            "variables": list(self.variables),
            "parameters": {k: v for k, v in sorted(self.partial.items())},
            "domain_left": {"name": self.domain_left.name, "members": sorted(self.domain_left.members)},
            "domain_right": {"name": self.domain_right.name, "members": sorted(self.domain_right.members)},
            "target": {"name": self.target.name, "members": sorted(self.target.members)},
            "solution": [list(t) for t in sorted(self.solution)],
            "size": len(self.solution),
            "verdict": self.verdict,
            "problems": list(self.problems),
            "boundary_exclusions": list(self.boundary_exclusions),
        }


def bijection_problems(solution, left, right, target) -> list:
    """Explicit totality, functionality, injectivity and surjectivity counts."""
    left, right, target = set(left), set(right), set(target)
    problems = []
    images: dict = {}
    for u, v, y in solution:
        if u not in left or v not in right or y not in target:
            problems.append(f"tuple ({u},{v},{y}) leaves the domains")
            continue
        images.setdefault((u, v), []).append(y)
    for u in sorted(left):
        for v in sorted(right):
            got = images.get((u, v), [])
            if len(got) != 1:
                problems.append(f"pair ({u},{v}) has {len(got)} images")
    hits: dict = {}
    for ys in images.values():
        for y in ys:
            hits[y] = hits.get(y, 0) + 1
    for y in sorted(target):
        if hits.get(y, 0) != 1:
            problems.append(f"target element {y} is hit {hits.get(y, 0)} times")
    return problems


def _pairing_formula(fam: DisjointFamily, relation: str, y: str, y2: str, taken: set) -> Formula:
    """V(y) & V(y2) & !(y = y2) & exists rest (V(rest) & Y(...)) with y, y2 at
    the family's first two (permuted) coordinates."""
    rest = [_fresh(taken, "r") for _ in range(fam.arity - 2)]
    by_position = [y, y2] + rest
    args = [""] * fam.arity
    for p, c in enumerate(fam.coordinate_permutation):
        args[c] = by_position[p]
    body = conj(*[Atom(V_NAME, (r,)) for r in rest], Atom(relation, tuple(args)))
    return conj(Atom(V_NAME, (y,)), Atom(V_NAME, (y2,)), Not(Eq(y, y2)), exists(rest, body))


def run_overlay(plan: OverlayPlan, n: int, split: int | None = None) -> tuple:
    """Synthesize theta at level n and verify its solution set.

    Returns (report, expanded combined structure).
    """
    problems = plan.constraint_problems()
    if problems:
        raise OverlayError(f"sigma constraint fails: {problems[0]}")
    sigma = plan.sigma
    alpha = plan.left.level(n)
    A = NamedSubset(A_NAME, [a for row in alpha.A for a in row])
    B = NamedSubset(B_NAME, alpha.B)
    phi = _require_formula(plan.left, "left")
    taken = {"u", "v", "y"}
    if plan.variant == PROP1:
        gamma = plan.right.level(n)
        psi = _require_formula(plan.right, "right")
        D = NamedSubset(D_NAME, [sigma(d) for d in gamma.B])
        s = expand_many(plan.combined, [A, B, D])
        phi_star = synthesize_phi_star(s, B, A, phi, alpha.params, plan.left.kind, "u", "y", taken)
        taken |= set(phi_star.partial)
        psi_star = synthesize_phi_star(
            s, D, A, psi, [sigma(w) for w in gamma.params], plan.right.kind, "v", "y", taken
        )
        theta = conj(
            Atom(B_NAME, ("u",)), Atom(D_NAME, ("v",)), Atom(A_NAME, ("y",)), phi_star.formula, psi_star.formula
        )
        partial = {**phi_star.partial, **psi_star.partial}
        left_dom, right_dom, target = B, D, A
    else:
        fam: DisjointFamily = plan.right
        h = n // 2 if split is None else split
        if not 0 <= h <= n:
            raise OverlayError(f"split {h} outside 0..{n}")
        V = NamedSubset(V_NAME, [sigma(a) for a in fam.support])
        Bm = NamedSubset(BMINUS, alpha.B[:h])
        Bp = NamedSubset(BPLUS, alpha.B[h:])
        As = NamedSubset(ASTAR, [alpha.A[i][j] for i in range(h) for j in range(h, n)])
        s = expand_many(plan.combined, [A, B, V, Bm, Bp, As])
        y2 = _fresh(taken, "y")
        phi_u = synthesize_phi_star(s, B, A, phi, alpha.params, plan.left.kind, "u", "y", taken)
        taken |= set(phi_u.partial)
        phi_v = substitute_star(phi_u, "v", y2)
        pair = _pairing_formula(fam, plan.relation, "y", y2, taken)
        theta = conj(
            Atom(BMINUS, ("u",)),
            Atom(BPLUS, ("v",)),
            Atom(ASTAR, ("y",)),
            phi_u.formula,
            Exists(y2, conj(pair, phi_v)),
        )
        partial = dict(phi_u.partial)
        left_dom, right_dom, target = Bm, Bp, As
    variables = ("u", "v", "y")
    solution = solution_set(s, theta, variables, partial)
    problems = bijection_problems(solution, left_dom.members, right_dom.members, target.members)
    report = ThetaReport(
        theta, variables, left_dom, right_dom, target, solution, not problems, problems, (), partial
    )
    return report, s


def substitute_star(star: PhiStar, x: str, y: str) -> Formula:
    return substitute(star.formula, {star.x: x, star.y: y})


# -- round trip ------------------------------------------------------------------------

@dataclass
class RoundTrip:
    structure: FiniteStructure
    right_restored: dict  # relation -> bool
    left_transported: dict  # relation -> bool

    @property
    def ok(self) -> bool:
        return all(self.right_restored.values()) and all(self.left_transported.values())

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "right_restored": dict(sorted(self.right_restored.items())),
            "left_transported": dict(sorted(self.left_transported.items())),
        }


def roundtrip_inverse(plan: OverlayPlan) -> RoundTrip:
    """Apply sigma^-1 to the combined structure and compare relation by relation."""
    inv = plan.sigma.inverse()
    back = apply_permutation(plan.combined, inv)
    left_back = apply_permutation(plan.left_structure, inv)
    right = {name: back[name] == plan.right_structure[name] for name in plan.right_structure.names}
    left = {name: back[name] == left_back[name] for name in plan.left_structure.names}
    return RoundTrip(back, right, left)
