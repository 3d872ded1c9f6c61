import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robbakit.corpus import random_laurent
from robbakit.laurent import BudgetExhausted, LaurentElement, Window, change_coords
from robbakit.operators import (
    GammaElement,
    OperatorSpec,
    check_commutation,
    gamma_apply,
    gamma_laurent,
    phi_apply,
    phi_laurent,
    psi_apply,
    psi_laurent,
)
from robbakit.padic import CoeffRing, PadicScalar
from robbakit.phigamma import default_chi
from robbakit.robba import DecorationError, IntervalError, IntervalVector, PerfectionTag, RobbaElement, plain_element

R2, R3 = CoeffRing(2, 12), CoeffRing(3, 12)


def L(ring, terms, coords="T", nvars=1):
    return LaurentElement.from_terms(ring, {(e,) if isinstance(e, int) else e: c for e, c in terms.items()}, nvars, coords)


def wide(f):
    return LaurentElement.from_terms(f.ring, f.terms, f.nvars, f.coords)


def same(f, g):
    return f.agrees_with(g) and g.agrees_with(f)


def test_phi_examples():
    assert same(phi_laurent(L(R2, {1: 1}), 0), L(R2, {2: 1, 1: 2}))
    one = L(R3, {0: 1})
    assert same(phi_laurent(one, 0), one)
    assert same(phi_laurent(L(R3, {-1: 1}, "U"), 0), L(R3, {-3: 1}, "U"))


def test_psi_examples():
    assert same(psi_laurent(L(R3, {0: 1}), 0), L(R3, {0: 1}))
    assert psi_laurent(L(R3, {1: 1}, "U"), 0).is_zero()
    assert same(psi_laurent(L(R3, {3: 1}, "U"), 0), L(R3, {1: 1}, "U"))
    T = L(R3, {1: 1})
    assert same(psi_laurent(phi_laurent(T, 0), 0), T)


def test_gamma_examples():
    T = L(R3, {1: 1})
    assert same(gamma_laurent(T, GammaElement(0, 4)), L(R3, {1: 4, 2: 6, 3: 4, 4: 1}))
    assert same(gamma_laurent(T, GammaElement(0, 1)), T)
    assert same(gamma_laurent(L(R3, {1: 1}, "U"), GammaElement(0, -1)), L(R3, {-1: 1}, "U"))
    with pytest.raises(ValueError):
        GammaElement(0, PadicScalar.from_rational(3, 3, 8))


def test_padic_chi_matches_integer_chi():
    chi = PadicScalar.from_rational(3, 4, 10)
    T = LaurentElement.from_terms(R3, {(1,): 1}, 1, "T", Window.uniform(1, -4, 6))
    a = gamma_laurent(T, GammaElement(0, chi))
    b = gamma_laurent(T, GammaElement(0, 4))
    assert same(a, b)


def test_interval_routing():
    iv = IntervalVector.of(Fraction(1, 6), Fraction(1, 2))
    x = plain_element(L(R3, {1: 1}), iv)
    assert phi_apply(0, x).interval == IntervalVector.of(Fraction(1, 18), Fraction(1, 6))
    assert psi_apply(0, x).interval == IntervalVector.of(Fraction(1, 2), Fraction(1, 2))
    assert gamma_apply(GammaElement(0, 2), x).interval == iv
    with pytest.raises(IntervalError):
        psi_apply(0, plain_element(x.body, IntervalVector.of(Fraction(1, 4), Fraction(1, 2))))
    breve = RobbaElement(x.body, iv, PerfectionTag(("breve",), (1,)))
    lowered = phi_apply(0, breve)
    assert lowered.tag.levels == (0,) and lowered.body is breve.body
    with pytest.raises(DecorationError):
        psi_apply(0, breve)


def test_commutation_examples():
    T12 = L(R3, {(1, 1): 1}, nvars=2)
    rep = check_commutation([OperatorSpec("phi", 0), OperatorSpec("phi", 1)], [T12])
    assert rep.passed and rep.checked == 1
    U = [L(R3, {(j, 0): 1}, "U", 2) for j in range(-3, 4)]
    assert check_commutation([OperatorSpec("phi", 0), OperatorSpec("gamma", 0, 2)], U).passed


def test_psi_needs_certified_tail():
    f = gamma_laurent(L(R3, {-1: 1}), GammaElement(0, 2))
    with pytest.raises(BudgetExhausted):
        psi_laurent(f, 0)


seeds = st.integers(0, 10**6)
primes = st.sampled_from([2, 3, 5])


@settings(max_examples=80, deadline=None)
@given(seeds, primes)
def test_psi_phi_identity(seed, p):
    f = random_laurent(random.Random(seed), CoeffRing(p, 8), 2, -8, 8)
    for a in (0, 1):
        assert same(psi_laurent(phi_laurent(f, a), a), f)


@settings(max_examples=80, deadline=None)
@given(seeds, primes)
def test_phi_psi_idempotent(seed, p):
    f = random_laurent(random.Random(seed), CoeffRing(p, 8), 1, -6, 6, coords="U")
    proj = phi_laurent(psi_laurent(f, 0), 0)
    assert same(phi_laurent(psi_laurent(proj, 0), 0), proj)
    assert all(e[0] % p == 0 for e in proj.terms)


@settings(max_examples=60, deadline=None)
@given(seeds, primes)
def test_t_coordinates_match_u_rule(seed, p):
    # cross-check the binomial T-coordinate kernels against the monomial U rule
    f = random_laurent(random.Random(seed), CoeffRing(p, 8), 1, 0, 6, 4)
    u = change_coords(f, "U")
    g = GammaElement(0, default_chi(p))
    assert same(phi_laurent(f, 0), change_coords(phi_laurent(u, 0), "T"))
    assert same(psi_laurent(f, 0), change_coords(psi_laurent(u, 0), "T"))
    assert same(gamma_laurent(f, g), change_coords(gamma_laurent(u, g), "T"))


@settings(max_examples=60, deadline=None)
@given(seeds, primes)
def test_projection_formula(seed, p):
    rng = random.Random(seed)
    ring = CoeffRing(p, 8)
    f = wide(random_laurent(rng, ring, 1, 0, 3, 3))
    g = wide(random_laurent(rng, ring, 1, 0, 6, 4))
    assert same(psi_laurent(phi_laurent(f, 0) * g, 0), f * psi_laurent(g, 0))
