"""Seeded sample generators and the rank-1 module corpus used by the check suites."""

from __future__ import annotations

import random
from fractions import Fraction

from .laurent import LaurentElement, Window
from .padic import CoeffRing
from .phigamma import PhiGammaModule, default_chi, rank1_constructor
from .robba import IntervalVector, radius_cap


def random_laurent(rng: random.Random, ring: CoeffRing, nvars: int = 1, lo: int = -16, hi: int = 16, max_terms: int = 8, coords: str = "T") -> LaurentElement:
    """Exact Laurent polynomial with integer coefficients of size below p^N."""
    q = ring.p**ring.N
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        e = tuple(rng.randint(lo, hi) for _ in range(nvars))
        terms[e] = rng.randrange(-q + 1, q)
    return LaurentElement.from_terms(ring, terms, nvars, coords, Window.uniform(nvars, lo, hi))


def random_polynomial(rng: random.Random, ring: CoeffRing, nvars: int = 1, hi: int = 4, max_terms: int = 4) -> LaurentElement:
    """Exact polynomial (no negative powers) with rational coefficients."""
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        e = tuple(rng.randint(-hi, hi) for _ in range(nvars))
        num = rng.randint(-ring.p**3, ring.p**3) or 1
        den = rng.choice([1, 1, ring.p, ring.p**2, 2 if ring.p != 2 else 3])
        terms[e] = Fraction(num, den)
    return LaurentElement.from_terms(ring, terms, nvars)


def base_interval(p: int, nvars: int = 1) -> IntervalVector:
    """[r_cap/p, r_cap] in every variable."""
    cap = radius_cap(p)
    return IntervalVector((cap / p,) * nvars, (cap,) * nvars)


def admissible_intervals(p: int, nvars: int = 1) -> list[IntervalVector]:
    """Three distinct intervals with s <= r/p, used for interval-independence sweeps."""
    cap = radius_cap(p)
    out = []
    for s, r in ((cap / p, cap), (cap / p**2, cap / 2), (cap / (3 * p**2), cap / (2 * p))):
        out.append(IntervalVector((s,) * nvars, (r,) * nvars))
    return out


def _unit_pairs(p: int) -> list[tuple[int, int]]:
    chi = default_chi(p)
    small = [u for u in range(2, 4 * p) if u % p][:6]
    pairs = [(1, 1), (1, chi), (small[0], 1), (1, small[1]), (small[2], chi), (1 + p, 1), (1, 1 + p), (small[3], small[4])]
    extra = [(-1, 1), (1, -1), (small[5], small[0]), (p - 1, 1), (small[1], small[5]), (1, small[3]), (small[4], 1)]
    seen, out = set(), []
    for c, d in pairs + extra:
        key = (c % p**6, d % p**6)
        if key not in seen:
            seen.add(key)
            out.append((c, d))
    return out


def rank1_corpus(p: int, ring: CoeffRing | None = None, interval_1: IntervalVector | None = None, interval_2: IntervalVector | None = None) -> list[PhiGammaModule]:
    """Twenty constant rank-1 modules: twelve in one variable, eight in two."""
    ring = ring or CoeffRing(p, 20)
    iv1 = interval_1 or base_interval(p, 1)
    iv2 = interval_2 or base_interval(p, 2)
    pairs = _unit_pairs(p)
    one_var = [rank1_constructor([c], [d], iv1, ring) for c, d in pairs[:12]]
    chi = default_chi(p)
    two_var_data = [
        ((1, 1), (1, 1)),
        ((1, 1), (chi, 1)),
        ((2, 1), (1, 1)),
        ((1, 1 + p), (1, 1)),
        ((1, 1), (1, chi)),
        ((-1, 1), (1, 1)),
        ((1, 2), (chi, 1)),
        ((1 + p, 1), (1, 1 + p)),
    ]
    two_var = [rank1_constructor(list(c), list(d), iv2, ring) for c, d in two_var_data]
    return one_var + two_var


def expected_rank1_dims(M: PhiGammaModule) -> tuple[int, ...]:
    """Herr-type dims of a constant rank-1 module (per-variable (1,2,0), (0,2,1) or (0,1,0), convolved).

    Used only as a cross-check; the acceptance tests derive dims from the
    independent oracle.
    """
    p = M.p
    zero = (0,) * M.nvars
    q = p**8
    out = [1]
    for a in range(M.nvars):
        c = M.phi[a][0][0].coeff(zero).residue(8) % q
        d = M.gamma[a][0][0].coeff(zero).residue(8) % q
        chi = M.chi[a] % q
        if c == 1 and d == 1:
            dims = (1, 2, 0)
        elif c == 1 and d == chi:
            dims = (0, 2, 1)
        else:
            dims = (0, 1, 0)
        new = [0] * (len(out) + 2)
        for i, x in enumerate(out):
            for j, y in enumerate(dims):
                new[i + j] += x * y
        out = new
    return tuple(out)
