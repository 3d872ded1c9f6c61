import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robbakit.corpus import random_laurent, random_polynomial
from robbakit.laurent import LaurentElement, interval_valuation
from robbakit.operators import phi_apply
from robbakit.padic import INF, CoeffRing
from robbakit.robba import (
    DecorationError,
    IntervalError,
    IntervalVector,
    PerfectionTag,
    RingFamily,
    RobbaElement,
    SlackValue,
    align_levels,
    frechet_seminorm,
    norm_le,
    plain_element,
    radius_cap,
    restrict_interval,
    upgrade_tag,
)

R3 = CoeffRing(3, 12)
HALF = Fraction(1, 2)


def T(power=1, ring=R3):
    return LaurentElement.monomial(ring, (power,))


def test_interval_validation():
    with pytest.raises(IntervalError):
        IntervalVector.of(2, 1)
    with pytest.raises(ValueError):
        IntervalVector.of(0, 1)
    iv = IntervalVector.of(Fraction(1, 6), HALF)
    assert iv.admissible(3) and not IntervalVector.of(Fraction(1, 4), HALF).admissible(3)
    assert IntervalVector.from_json(iv.to_json()) == iv


def test_restriction():
    x = plain_element(T(-1) + T(2), IntervalVector.of(HALF, 2))
    y = restrict_interval(x, IntervalVector.of(1, 2))
    assert y.body is x.body and y.interval == IntervalVector.of(1, 2)
    assert restrict_interval(x, x.interval).interval == x.interval
    small = IntervalVector.of(Fraction(3, 2), 2)
    assert restrict_interval(y, small).interval == restrict_interval(x, small).interval
    with pytest.raises(IntervalError):
        restrict_interval(y, x.interval)
    assert interval_valuation(x.body, small) >= x.valuation()


def test_tags():
    assert PerfectionTag.plain(2).is_plain()
    with pytest.raises(DecorationError):
        PerfectionTag(("plain",), (1,))
    with pytest.raises(DecorationError):
        PerfectionTag(("breve",), (0,), Fraction(1, 9))
    tag = PerfectionTag.for_decoration(("breve", "plain"), [0], 2)
    assert tag.decoration([0]) == ("breve", "plain")
    merged = tag.merge(PerfectionTag(("tilde", "plain"), (2, 0), Fraction(1, 27)))
    assert merged.kinds == ("tilde", "plain") and merged.levels == (2, 0) and merged.eps == Fraction(1, 27)
    assert PerfectionTag.from_json(merged.to_json()) == merged


def test_align_levels():
    iv = IntervalVector.of(Fraction(1, 12), Fraction(1, 4))
    breve = PerfectionTag(("breve",), (0,))
    x = RobbaElement(T(1), iv, breve)
    y = RobbaElement(T(1), iv, PerfectionTag(("breve",), (1,)))
    xa, ya = align_levels(x, y)
    assert xa.tag.levels == (1,) and ya.body is y.body
    assert xa.body.agrees_with(phi_apply(0, plain_element(T(1), iv)).body)
    assert align_levels(x, x)[0].body.agrees_with(x.body)
    with pytest.raises(DecorationError):
        upgrade_tag(RobbaElement(T(1), iv, breve), PerfectionTag.plain(1))


def test_seminorm_examples():
    iv = IntervalVector.of(Fraction(1, 12), HALF)
    x = plain_element(T(-1).scale(3) + T(2), iv)
    assert frechet_seminorm(x, Fraction(1, 4)) == interval_valuation(x.body, (Fraction(1, 4), Fraction(1, 4)))
    lifted = RobbaElement(T(1), iv, PerfectionTag(("breve",), (1,)))
    assert frechet_seminorm(lifted, Fraction(1, 4)) == Fraction(1, 12)
    assert frechet_seminorm(plain_element(LaurentElement.zero(R3, 1), iv), HALF) == INF
    with pytest.raises(IntervalError):
        frechet_seminorm(x, 1)
    tilde = RobbaElement(T(1), iv, PerfectionTag(("tilde",), (0,), Fraction(1, 9)))
    assert isinstance(frechet_seminorm(tilde, HALF), SlackValue)


def test_tilde_equality_is_up_to_slack():
    iv = IntervalVector.of(Fraction(1, 12), HALF)
    tag = PerfectionTag(("tilde",), (0,), Fraction(1, 9))
    a = RobbaElement(T(1), iv, tag)
    b = RobbaElement(T(1) + T(0).scale(27), iv, tag)
    c = RobbaElement(T(1) + T(0).scale(3), iv, tag)
    assert a.agrees_with(b) and not a.agrees_with(c)
    assert norm_le(3, Fraction(1, 27), 3) and not norm_le(2, Fraction(1, 27), 3)


def test_ring_family():
    f = T(1) + T(-1)
    ivs = [IntervalVector.of(Fraction(1, 8), HALF), IntervalVector.of(Fraction(1, 4), 1)]
    fam = RingFamily({iv: plain_element(f, iv) for iv in ivs})
    assert fam.check_compatibility() == []
    assert fam.restrict(IntervalVector.of(Fraction(1, 4), HALF)).body is f
    bad = RingFamily({ivs[0]: plain_element(f, ivs[0]), ivs[1]: plain_element(T(1), ivs[1])})
    assert len(bad.check_compatibility()) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3, 5]))
def test_phi_scales_seminorm(seed, p):
    rng = random.Random(seed)
    ring = CoeffRing(p, 30)
    cap = radius_cap(p)
    f = random_polynomial(rng, ring)
    f = LaurentElement.from_terms(ring, {e: c for e, c in f.terms.items() if e[0] >= 0} or {(0,): 1}, 1)
    x = plain_element(f, IntervalVector.of(cap / p, cap))
    y = phi_apply(0, x)
    t = cap / p * Fraction(rng.randint(1, 100), 100)
    t = max(t, y.interval.s[0])
    assert frechet_seminorm(y, t) == frechet_seminorm(x, p * t)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_tower_coherence(seed):
    rng = random.Random(seed)
    iv = IntervalVector.of(Fraction(1, 54), Fraction(1, 18))
    f, g = (random_laurent(rng, R3, 1, 0, 3, 3) for _ in range(2))
    x = RobbaElement(f, iv, PerfectionTag(("breve",), (0,)))
    y = RobbaElement(g, iv, PerfectionTag(("breve",), (1,)))
    s1 = x + y
    hi = PerfectionTag(("breve",), (2,))
    s2 = upgrade_tag(x, hi) + upgrade_tag(y, hi)
    assert s1.agrees_with(s2) and (x * y).agrees_with(upgrade_tag(x, hi) * upgrade_tag(y, hi))
