import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibdpv.fib1d import (
    LEGAL_SEEDS,
    fib_tiling,
    matching_convention,
    substitute_word,
    verify_fib_projection,
)
from fibdpv.num import TAU


def test_word_lengths_are_fibonacci():
    fib = [1, 2]
    for _ in range(12):
        fib.append(fib[-1] + fib[-2])
    for n in range(10):
        assert len(substitute_word("a", n)) == fib[n]


def test_tiling_is_contiguous():
    t = fib_tiling("a|a", 4)
    for (c, x), x2 in zip(zip(t.letters, t.lefts), t.lefts[1:]):
        assert x2 - x == (TAU if c == "a" else 1)
    assert 0 in [float(x) for x in t.lefts]


@pytest.mark.parametrize("seed", LEGAL_SEEDS)
def test_each_seed_has_exactly_one_convention(seed):
    conv = matching_convention(seed, 6)
    assert conv in ("A", "B")
    other = "B" if conv == "A" else "A"
    assert not verify_fib_projection(fib_tiling(seed, 6), other).ok


def test_illegal_seed():
    with pytest.raises(ValueError):
        fib_tiling("b|b", 2)


@given(st.integers(0, 5))
def test_projection_holds_at_every_level(n):
    for seed in LEGAL_SEEDS:
        conv = matching_convention(seed, 6)
        assert verify_fib_projection(fib_tiling(seed, n), conv).ok
