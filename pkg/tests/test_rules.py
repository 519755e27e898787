import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibdpv.num import TAU, ZERO
from fibdpv.rules import (
    AREA,
    ALL_RULES,
    DP_RULE,
    M,
    MAX_STEPS,
    Decomposition,
    InvalidDecomposition,
    Patch,
    RuleId,
    Tile,
    build_rule,
    count_vector,
    inflate_patch,
    substitution_matrix,
    supertile_patch,
    verify_decomposition,
    verify_stone,
)

rules = st.sampled_from(ALL_RULES)


def test_catalog_size_and_ids():
    assert len(ALL_RULES) == 48 == len(set(ALL_RULES))
    assert RuleId.parse("(1, 0, 11)") == RuleId(1, 0, 11)
    with pytest.raises(ValueError):
        RuleId(0, 2, 0)
    with pytest.raises(ValueError):
        RuleId.parse("1,2")


@pytest.mark.parametrize("rid", ALL_RULES, ids=str)
def test_stone_partition(rid):
    rep = verify_stone(rid)
    assert rep.ok, rep.problems
    assert substitution_matrix(rid) == [list(r) for r in M]


def test_rules_are_distinct():
    sigs = {tuple(frozenset(k) for k in build_rule(r).children) for r in ALL_RULES}
    assert len(sigs) == 48


def test_broken_decomposition_is_reported():
    dec = build_rule(DP_RULE)
    kids = list(dec.children)
    kids[3] = kids[3][:-1] + ((kids[3][-1][0], kids[3][0][1]),)  # move last child onto the first
    rep = verify_decomposition(Decomposition(None, tuple(kids)))
    assert not rep.ok and any("overlap" in p for p in rep.problems)


def test_matrix_power_counts():
    # total tiles after n steps from one T3; n = 7 gives 1156
    assert sum(count_vector(7)) == 1156
    for n in range(8):
        p, _ = supertile_patch(DP_RULE, n)
        assert p.type_counts() == count_vector(n)


@given(rules, st.integers(0, 6))
def test_supertile_fills_its_box(rid, n):
    p, (x0, y0, x1, y1) = supertile_patch(rid, n)
    area = sum((AREA[t.type] for t in p), ZERO)
    assert area == (x1 - x0) * (y1 - y0) == TAU ** (2 * n + 2)
    assert p.bbox() == (x0, y0, x1, y1)
    assert p.type_counts() == count_vector(n)


@given(rules, st.integers(0, 5))
def test_inflation_never_overlaps(rid, n):
    p, _ = supertile_patch(rid, n)
    assert p.find_overlap() is None
    inflate_patch(p, rid, check=True)


def test_overlap_detection():
    p = Patch([Tile(3, supertile_patch(DP_RULE, 0)[0].tiles[0].pos), Tile(0, supertile_patch(DP_RULE, 0)[0].tiles[0].pos)])
    with pytest.raises(InvalidDecomposition):
        inflate_patch(p, DP_RULE, check=True)


def test_step_limits():
    with pytest.raises(ValueError):
        supertile_patch(DP_RULE, -1)
    with pytest.raises(ValueError):
        supertile_patch(DP_RULE, MAX_STEPS + 1)


def test_patch_order_is_deterministic():
    a, _ = supertile_patch(RuleId(1, 1, 7), 5)
    b = Patch(reversed(a.tiles))
    assert a.tiles == b.tiles
