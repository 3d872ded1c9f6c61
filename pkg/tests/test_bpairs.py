import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glue_oracle import monomial_glue_dims

from robbakit.bpairs import (
    BPairTriple,
    DeRhamSkeleton,
    PolarOverflow,
    TripleInvariantError,
    bpair_from_rank1,
    fundamental_sequence_check,
    glue_complex,
    rank_of,
    skeleton_localize,
    skeleton_mul,
    weight_of,
)
from robbakit.corpus import base_interval, rank1_corpus
from robbakit.padic import CoeffRing
from robbakit.phigamma import rank1_constructor

F = CoeffRing(3, 10)
SK = DeRhamSkeleton.uniform(F, 1, 3, 2)


def test_skeleton_arithmetic():
    one, t = SK.one(), SK.t(0)
    assert skeleton_mul(one + t, one - t) == one - t * t
    assert skeleton_mul(t, SK.t(0, -1)) == one
    assert t * t * t == SK.element()
    u = SK.t(0, 2)
    assert skeleton_localize(u).polar == u.polar
    with pytest.raises(PolarOverflow):
        SK.t(0, -3)
    assert not SK.t(0, -1).is_integral() and t.is_integral()


def test_rank_of():
    assert rank_of([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]]) == 1
    assert rank_of([]) == 0


def test_fundamental_sequence():
    assert fundamental_sequence_check(1, 1).exact
    assert fundamental_sequence_check(2, 2, 2).exact
    broken = fundamental_sequence_check(2, 2, drop_constants=True)
    assert not broken.middle_exact and not broken.exact
    assert broken.to_json()["exact"] is False
    with pytest.raises(ValueError):
        fundamental_sequence_check(0, 1)


def test_triple_validation():
    with pytest.raises(TripleInvariantError):
        BPairTriple(SK, 1, ((SK.element(),),))
    with pytest.raises(TripleInvariantError):
        BPairTriple(SK, 1, ((SK.t(0, 3),),))  # truncates to zero
    with pytest.raises(TripleInvariantError):
        BPairTriple(SK, 2, ((SK.one(), SK.one()), (SK.one(), SK.one())))


def test_staircase_one_variable():
    got = [glue_complex(BPairTriple(SK, 1, ((SK.element({(w,): 1}),),))).as_tuple() for w in range(-2, 3)]
    assert got == [(3, 2), (2, 1), (1, 0), (0, 0), (0, 1)]
    assert got == [monomial_glue_dims((3,), (2,), (w,)) for w in range(-2, 3)]


def test_staircase_mixed_truncations():
    sk = DeRhamSkeleton(F, (2, 3), (1, 2))
    for w in itertools.product(range(-1, 2), range(-2, 3)):
        T = BPairTriple(sk, 1, ((sk.element({w: 1}),),))
        assert glue_complex(T).as_tuple() == monomial_glue_dims((2, 3), (1, 2), w)


def test_from_rank1():
    iv = base_interval(3)
    triv = bpair_from_rank1(rank1_constructor([1], [1], iv, F))
    assert triv.gluing[0][0] == triv.skeleton.one()
    twisted = bpair_from_rank1(rank1_constructor([3], [1], iv, F))
    assert twisted.gluing[0][0] == twisted.skeleton.t(0)
    assert weight_of(twisted) == 1
    # the Euler characteristic drops by the valuation of the Frobenius constant
    h = glue_complex(triv)
    g = glue_complex(twisted)
    assert (h.h0 - h.h1) - (g.h0 - g.h1) == 1
    for M in rank1_corpus(3, F):
        assert weight_of(bpair_from_rank1(M)) == 0


def test_json_roundtrip():
    T = BPairTriple(SK, 2, ((SK.t(0), SK.one()), (SK.const(0), SK.one() + SK.t(0, -1))))
    back = BPairTriple.from_json(F, T.to_json())
    assert back.to_json() == T.to_json()
    assert glue_complex(back) == glue_complex(T)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_unimodular_basis_change_invariance(seed):
    rng = random.Random(seed)
    sk = DeRhamSkeleton.uniform(F, 1, rng.randint(2, 4), rng.randint(1, 3))
    w1 = rng.randint(-sk.m[0], sk.k[0] - 1)
    w2 = rng.randint(-sk.m[0], min(sk.k[0] - 1, sk.k[0] - 1 - w1))  # the determinant must survive truncation
    T = BPairTriple(sk, 2, ((sk.element({(w1,): 1}), sk.const(rng.randint(-3, 3))), (sk.const(0), sk.element({(w2,): 1}))))
    while True:
        A = [[rng.randint(-4, 4) for _ in range(2)] for _ in range(2)]
        if abs(A[0][0] * A[1][1] - A[0][1] * A[1][0]) == 1:
            break
    assert glue_complex(T.change_basis(A)).as_tuple() == glue_complex(T).as_tuple()
    assert weight_of(T.change_basis(A)) == weight_of(T)
