import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monadic_coding.detectors import (
    FCP,
    ORDER,
    STABLE,
    UNSTABLE,
    ConfigFamily,
    WitnessReport,
    certify_config,
    certify_config_level,
    certify_witness,
    find_config_family,
    find_fcp_witness,
    find_independence_witness,
    find_order_witness,
)
from monadic_coding.logic import PartitionedFormula, parse_formula
from monadic_coding.structures import (
    FiniteStructure,
    make_equiv,
    make_fcp_expansion,
    make_linear_order,
    make_powerset,
)


def pf(text, obj=("x",), params=("y",)):
    return PartitionedFormula(parse_formula(text), obj, params)


STRICT_BELOW = pf("LE(y, x) & !(x = y)")


# -- order property ---------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 4, 10])
def test_order_witness_on_linear_order(n):
    s = make_linear_order(2 * n)
    res = find_order_witness(s, STRICT_BELOW, n)
    assert res.found and res.status() == "found"
    assert certify_witness(s, STRICT_BELOW, res.witness) == []


def test_order_none_on_edgeless():
    s = FiniteStructure(4, {"E": (2, [])})
    res = find_order_witness(s, pf("E(x, y)"), 2)
    assert not res.found and res.exhaustive


def test_order_level_one_on_two_elements():
    res = find_order_witness(make_linear_order(2), pf("LE(y, x)"), 1)
    assert res.witness.parameter_tuples == ((1,),)
    assert res.witness.certificates == {0: (0,)}


def test_budget_exhaustion_is_flagged():
    res = find_order_witness(make_linear_order(6), STRICT_BELOW, 3, budget=2)
    assert not res.found and not res.exhaustive
    assert res.status() == "none (budget)"


def test_truncation_recertifies():
    s = make_linear_order(16)
    w = find_order_witness(s, STRICT_BELOW, 8).witness
    for m in range(9):
        assert certify_witness(s, STRICT_BELOW, w.truncate(m)) == []


def test_certifier_catches_tampering():
    s = make_linear_order(8)
    w = find_order_witness(s, STRICT_BELOW, 4).witness
    bad = WitnessReport(ORDER, 4, w.parameter_tuples, {**w.certificates, 2: (7,)})
    assert certify_witness(s, STRICT_BELOW, bad)
    dup = WitnessReport(ORDER, 2, ((1,), (1,)), {0: (0,), 1: (2,)})
    assert certify_witness(s, STRICT_BELOW, dup)


def test_report_serialization_round_trip():
    s = make_powerset(3)
    w = find_independence_witness(s, pf("IN(y, x)"), 3).witness
    assert WitnessReport.from_dict(w.to_dict()) == w


def test_order_determinism():
    s = make_linear_order(12)
    assert find_order_witness(s, STRICT_BELOW, 5) == find_order_witness(s, STRICT_BELOW, 5)


# -- independence ----------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_powerset_shattered(n):
    s = make_powerset(n)
    res = find_independence_witness(s, pf("IN(y, x)"), n)
    assert res.found
    assert certify_witness(s, pf("IN(y, x)"), res.witness) == []
    assert len(res.witness.certificates) == 2**n


def test_ip_none_on_small_equivalence():
    res = find_independence_witness(make_equiv(2, 2), pf("E(x, y)"), 2)
    assert not res.found and res.exhaustive


def test_ip_level_zero_is_vacuous():
    res = find_independence_witness(make_equiv(2, 2), pf("E(x, y)"), 0)
    assert res.found and res.witness.parameter_tuples == ()


def test_ip_none_on_order():
    res = find_independence_witness(make_linear_order(20), pf("LE(x, y)"), 2)
    assert not res.found and res.exhaustive


# -- FCP ---------------------------------------------------------------------------------------

FCP_FORMULA = pf("E(x, y) & P(x) & !(x = y)")


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_fcp_expansion(n):
    s = make_fcp_expansion(5)
    res = find_fcp_witness(s, FCP_FORMULA, n)
    assert res.found
    assert certify_witness(s, FCP_FORMULA, res.witness) == []


def test_fcp_witness_uses_marked_elements_of_one_class():
    s = make_fcp_expansion(5)
    w = find_fcp_witness(s, FCP_FORMULA, 3).witness
    assert w.parameter_tuples == ((12,), (13,), (14,))


@pytest.mark.parametrize("n", [2, 3])
def test_fcp_none_on_order(n):
    res = find_fcp_witness(make_linear_order(10), pf("LE(x, y)"), n)
    assert not res.found and res.exhaustive


def test_fcp_level_one_none_when_rows_nonempty():
    res = find_fcp_witness(make_equiv(2, 2), pf("E(x, y)"), 1)
    assert not res.found and res.exhaustive


def test_fcp_certifier_rejects_satisfiable_total():
    s = make_linear_order(5)
    bogus = WitnessReport(FCP, 2, ((1,), (2,)), {0: (0,), 1: (0,)})
    assert certify_witness(s, pf("LE(x, y)"), bogus)


# -- brute-force cross-check of the searches ------------------------------------------------------

def _brute_order(table, n):
    params = range(table.shape[1])
    for seq in itertools.permutations(params, n):
        if all(any(all(table[x, a] == (i < k) for i, a in enumerate(seq)) for x in range(table.shape[0])) for k in range(n)):
            return True
    return False


def _brute_ip(table, n):
    params = range(table.shape[1])
    for seq in itertools.combinations(params, n):
        ok = True
        for mask in range(2**n):
            if not any(all(table[x, a] == bool(mask >> i & 1) for i, a in enumerate(seq)) for x in range(table.shape[0])):
                ok = False
                break
        if ok:
            return True
    return False


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.integers(1, 3), st.data())
def test_searches_match_brute_force(n, level, data):
    import numpy as np

    edges = data.draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))))
    s = FiniteStructure(n, {"R": (2, edges)})
    table = np.zeros((n, n), dtype=bool)
    for a, b in edges:
        table[a, b] = True
    f = pf("R(x, y)")
    assert find_order_witness(s, f, level).found == _brute_order(table, level)
    assert find_independence_witness(s, f, level).found == _brute_ip(table, level)


# -- configuration families -----------------------------------------------------------------------

def test_stable_config_on_equivalence():
    s = make_equiv(5, 5)
    res = find_config_family(s, pf("E(x, y)"), [3], STABLE)
    fam = res.witness
    assert certify_config(s, pf("E(x, y)"), fam) == []
    level = fam.level(3)
    assert level.B == (0, 5, 10)
    assert level.A == ((1, 2, 3), (6, 7, 8), (11, 12, 13))


def test_unstable_config_on_order():
    s = make_linear_order(40)
    res = find_config_family(s, pf("LE(x, y)"), [3], UNSTABLE)
    assert res.found
    assert certify_config(s, pf("LE(x, y)"), res.witness) == []


def test_stable_config_none_on_edgeless():
    s = FiniteStructure(6, {"E": (2, [])})
    res = find_config_family(s, pf("E(x, y)"), [2], STABLE)
    assert not res.found and res.exhaustive


def test_multi_level_disjoint_and_reserve():
    s = make_linear_order(60)
    f = pf("LE(x, y)")
    res = find_config_family(s, f, [2, 3], UNSTABLE, reserve=5)
    fam = res.witness
    assert certify_config(s, f, fam) == []
    assert len(fam.exceptional) >= 5
    assert not find_config_family(make_equiv(3, 3), pf("E(x, y)"), [2], STABLE, reserve=100).found


def test_config_restriction_recertifies():
    s = make_equiv(5, 6)
    f = pf("E(x, y)")
    level = find_config_family(s, f, [4], STABLE).witness.level(4)
    for size in range(1, 5):
        for idx in itertools.combinations(range(4), size):
            assert certify_config_level(s, f, STABLE, level.restrict(idx)) == []


def test_config_with_parameter_block():
    s = make_linear_order(30)
    f = pf("LE(x, y) & LE(y, z)", params=("y", "z"))
    res = find_config_family(s, f, [2], UNSTABLE)
    assert res.found and certify_config(s, f, res.witness) == []


def test_config_family_serialization():
    s = make_equiv(4, 5)
    fam = find_config_family(s, pf("E(x, y)"), [3], STABLE).witness
    back = ConfigFamily.from_dict(fam.to_dict())
    assert back == fam and back.formula.formula == fam.formula.formula


def test_kind_validation():
    with pytest.raises(ValueError):
        find_config_family(make_equiv(2, 2), pf("E(x, y)"), [1], "neither")
