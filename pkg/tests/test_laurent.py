import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robbakit.corpus import random_laurent, random_polynomial
from robbakit.laurent import (
    BudgetExhausted,
    CoordinateMismatch,
    LaurentElement,
    Window,
    change_coords,
    gauss_valuation,
    interval_valuation,
    lp_add,
    lp_mul,
)
from robbakit.padic import INF, CoeffRing

R3 = CoeffRing(3, 12)


def L(terms, ring=R3, coords="T", window=None):
    return LaurentElement.from_terms(ring, {(e,) if isinstance(e, int) else e: c for e, c in terms.items()}, coords=coords, window=window)


def same(f, g):
    return f.agrees_with(g) and g.agrees_with(f)


def test_products():
    assert same(lp_mul(L({1: 1, 0: 1}), L({1: 1, 0: -1})), L({2: 1, 0: -1}))
    f = L({-1: 1, 0: 3})
    assert same(lp_mul(f, L({0: 1})), f)
    w = Window.uniform(1, -2, 2)
    prod = lp_mul(L({-1: 1, 0: 3}, window=w), L({1: 1, 0: 1}, window=w))
    assert same(prod, L({0: 4, -1: 1, 1: 3}, window=w))


def test_window_truncation_is_reported():
    w = Window.uniform(1, -2, 2)
    f = L({2: 1, 0: 1}, window=w)
    sq = f * f
    assert sq.known_hi[0] <= 2
    assert not sq.is_certified((3,))


def test_gauss_examples():
    f = L({-1: 3, 2: 1})
    assert gauss_valuation(f, Fraction(1, 2)) == Fraction(1, 2)
    assert gauss_valuation(LaurentElement.zero(R3, 1), 1) == INF
    g = LaurentElement.from_terms(CoeffRing(2, 8), {(1, -3): 1})
    assert gauss_valuation(g, (1, Fraction(1, 3))) == 0
    assert interval_valuation(f, (Fraction(1, 2), 2)) == -1
    assert interval_valuation(L({0: 9}), (Fraction(1, 3), 1)) == 2


def test_gauss_rejects_bad_input():
    f = L({1: 1})
    with pytest.raises(ValueError):
        gauss_valuation(f, 0)
    with pytest.raises(ValueError):
        interval_valuation(f, (2, 1))
    with pytest.raises(CoordinateMismatch):
        gauss_valuation(change_coords(f, "U"), 1)
    with pytest.raises(CoordinateMismatch):
        f + change_coords(f, "U")


def test_change_coords_examples():
    u = change_coords(L({2: 1}), "U")
    assert same(u, L({2: 1, 1: -2, 0: 1}, coords="U"))
    inv = change_coords(L({-1: 1}, coords="U", window=Window.uniform(1, -4, 3)), "T")
    assert inv.known_hi == (3,)
    assert same(inv, L({0: 1, 1: -1, 2: 1, 3: -1}, window=Window.uniform(1, -4, 3)))
    with pytest.raises(BudgetExhausted):
        change_coords(L({-1: 1}), "U")


def test_json_roundtrip():
    f = random_laurent(random.Random(1), R3, 2, -3, 3)
    assert same(LaurentElement.from_json(R3, f.to_json()), f)


seeds = st.integers(0, 10**6)


@settings(max_examples=150, deadline=None)
@given(seeds, st.sampled_from([2, 3, 5]))
def test_gauss_additive_on_products(seed, p):
    rng = random.Random(seed)
    ring = CoeffRing(p, 30)
    f, g = random_polynomial(rng, ring, 2), random_polynomial(rng, ring, 2)
    t = (Fraction(rng.randint(1, 9), 10), Fraction(rng.randint(1, 9), 7))
    assert gauss_valuation(f * g, t) == gauss_valuation(f, t) + gauss_valuation(g, t)
    s = f + g
    vf, vg = gauss_valuation(f, t), gauss_valuation(g, t)
    if not s.is_zero():
        assert gauss_valuation(s, t) >= min(vf, vg)
        if vf != vg:
            assert gauss_valuation(s, t) == min(vf, vg)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_mul_associative_commutative(seed):
    rng = random.Random(seed)
    f, g, h = (random_laurent(rng, R3, 2, -3, 3, 4) for _ in range(3))
    assert same(lp_mul(f, g), lp_mul(g, f))
    assert same(lp_mul(lp_mul(f, g), h), lp_mul(f, lp_mul(g, h)))
    assert same(lp_mul(f, lp_add(g, h)), lp_add(lp_mul(f, g), lp_mul(f, h)))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_coordinate_roundtrip_on_polynomials(seed):
    f = random_laurent(random.Random(seed), R3, 2, 0, 5, 5)
    back = change_coords(change_coords(f, "U"), "T")
    assert same(back, f)
