"""Truncated de Rham skeletons, B-pair triples and their gluing complex.

The period rings are replaced by finite models over an exact field K
(rationals standing in for the coefficient field):

* skeleton ``S_k``: polynomials in ``t_1..t_n`` truncated at ``t_a^{k_a}``;
* localized truncation ``L``: Laurent monomials with exponents in
  ``[-m_a, k_a - 1]``;
* polar model ``P_m``: constants plus the monomials of ``L`` carrying at
  least one pole, so that ``P_m ∩ S_k = K`` and ``P_m + S_k = L``.

Galois actions are trivial, so the gluing complex is the two-term map
``(x, y) -> x - g y``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .padic import CoeffRing
from .phigamma import PhiGammaModule


class PolarOverflow(ValueError):
    """A product or localization left the polar window."""


class TripleInvariantError(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact linear algebra over K


def rank_of(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank of a matrix of Fractions by Gaussian elimination."""
    M = [list(map(Fraction, r)) for r in rows]
    if not M:
        return 0
    rank, ncols = 0, len(M[0])
    for c in range(ncols):
        piv = next((r for r in range(rank, len(M)) if M[r][c] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = 1 / M[rank][c]
        for r in range(len(M)):
            if r != rank and M[r][c] != 0:
                f = M[r][c] * inv
                M[r] = [a - f * b for a, b in zip(M[r], M[rank])]
        rank += 1
        if rank == len(M):
            break
    return rank


def _det(A: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(A)
    M = [list(map(Fraction, r)) for r in A]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return det


# ---------------------------------------------------------------------------
# skeleton


@dataclass(frozen=True)
class DeRhamSkeleton:
    """``K[[t_1..t_n]] / (t_a^{k_a})`` with polar window ``t_a^{-m_a}``."""

    field: CoeffRing
    k: tuple[int, ...]
    m: tuple[int, ...]

    def __post_init__(self):
        if len(self.k) != len(self.m):
            raise ValueError("k and m need one entry per variable")
        if any(x < 1 for x in self.k) or any(x < 0 for x in self.m):
            raise ValueError("truncation orders must be >= 1 and polar bounds >= 0")

    @classmethod
    def uniform(cls, field: CoeffRing, nvars: int, k: int, m: int) -> "DeRhamSkeleton":
        return cls(field, (k,) * nvars, (m,) * nvars)

    @property
    def nvars(self) -> int:
        return len(self.k)

    def element(self, terms: dict | None = None, polar: Sequence[int] | None = None) -> "SkeletonElement":
        return SkeletonElement(self, dict(terms or {}), tuple(polar) if polar is not None else (0,) * self.nvars)

    def one(self) -> "SkeletonElement":
        return self.element({(0,) * self.nvars: Fraction(1)})

    def t(self, alpha: int, power: int = 1) -> "SkeletonElement":
        e = [0] * self.nvars
        e[alpha] = power
        polar = [0] * self.nvars
        polar[alpha] = max(0, -power)
        return self.element({tuple(e): Fraction(1)}, polar)

    def const(self, c) -> "SkeletonElement":
        return self.element({(0,) * self.nvars: Fraction(c)})

    # monomial bases ----------------------------------------------------------
    def skeleton_basis(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*[range(k) for k in self.k]))

    def localized_basis(self, top: Sequence[int] | None = None) -> list[tuple[int, ...]]:
        top = tuple(top) if top is not None else tuple(k - 1 for k in self.k)
        return list(itertools.product(*[range(-m, h + 1) for m, h in zip(self.m, top)]))

    def polar_basis(self, with_constants: bool = True) -> list[tuple[int, ...]]:
        zero = (0,) * self.nvars
        out = [e for e in self.localized_basis() if min(e) < 0]
        return ([zero] if with_constants else []) + out


@dataclass(frozen=True)
class SkeletonElement:
    skeleton: DeRhamSkeleton
    terms: dict = field(hash=False)
    polar: tuple[int, ...] = ()

    def __post_init__(self):
        sk = self.skeleton
        clean = {}
        for e, c in self.terms.items():
            e = tuple(e)
            c = Fraction(c)
            if c == 0 or any(x >= k for x, k in zip(e, sk.k)):
                continue
            if any(x < -m for x, m in zip(e, sk.m)):
                raise PolarOverflow(f"exponent {e} below the polar window {sk.m}")
            clean[e] = c
        object.__setattr__(self, "terms", clean)
        polar = self.polar or (0,) * sk.nvars
        need = tuple(max([0] + [-e[a] for e in clean]) for a in range(sk.nvars))
        object.__setattr__(self, "polar", tuple(max(x, y) for x, y in zip(polar, need)))

    def _check(self, other: "SkeletonElement"):
        if self.skeleton != other.skeleton:
            raise ValueError("elements live in different skeletons")

    def __add__(self, other: "SkeletonElement") -> "SkeletonElement":
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return SkeletonElement(self.skeleton, out, tuple(map(max, self.polar, other.polar)))

    def __neg__(self) -> "SkeletonElement":
        return SkeletonElement(self.skeleton, {e: -c for e, c in self.terms.items()}, self.polar)

    def __sub__(self, other: "SkeletonElement") -> "SkeletonElement":
        return self + (-other)

    def __mul__(self, other: "SkeletonElement") -> "SkeletonElement":
        self._check(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return SkeletonElement(self.skeleton, out)

    def localize(self) -> "SkeletonElement":
        """The same element viewed in the localized truncation; the polar bound is kept."""
        return SkeletonElement(self.skeleton, self.terms, self.polar)

    def is_integral(self) -> bool:
        return all(min(e) >= 0 for e in self.terms)

    def coeff(self, e: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(e), Fraction(0))

    def top_shift(self) -> tuple[int, ...]:
        """Largest exponent per variable (0 for constants)."""
        n = self.skeleton.nvars
        return tuple(max([0] + [e[a] for e in self.terms]) for a in range(n))

    def __eq__(self, other) -> bool:
        return isinstance(other, SkeletonElement) and self.skeleton == other.skeleton and self.terms == other.terms

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items()):
            mono = "*".join(f"t{a + 1}^{x}" for a, x in enumerate(e) if x)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def skeleton_add(a: SkeletonElement, b: SkeletonElement) -> SkeletonElement:
    return a + b


def skeleton_mul(a: SkeletonElement, b: SkeletonElement) -> SkeletonElement:
    return a * b


def skeleton_localize(a: SkeletonElement) -> SkeletonElement:
    return a.localize()


# ---------------------------------------------------------------------------
# triples and the gluing complex


@dataclass(frozen=True)
class BPairTriple:
    """Rank-r triple ``(M_e, M_dR^+, g)`` with ``g`` an r x r matrix over the localized truncation."""

    skeleton: DeRhamSkeleton
    rank: int
    gluing: tuple[tuple[SkeletonElement, ...], ...]
    codomain_top: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.codomain_top:
            sk = self.skeleton
            shift = [0] * sk.nvars
            for row in self.gluing:
                for g in row:
                    shift = [max(a, b) for a, b in zip(shift, g.top_shift())]
            object.__setattr__(self, "codomain_top", tuple(k - 1 + s for k, s in zip(sk.k, shift)))
        self.validate()

    def validate(self) -> None:
        if len(self.gluing) != self.rank or any(len(r) != self.rank for r in self.gluing):
            raise TripleInvariantError("gluing matrix must be rank x rank")
        if self.rank and not gluing_invertible(self.gluing, self.skeleton):
            raise TripleInvariantError("gluing matrix is not invertible over the localized truncation")

    def change_basis(self, A: Sequence[Sequence[int]]) -> "BPairTriple":
        """Conjugate the gluing matrix by a constant unimodular change of both bases."""
        sk = self.skeleton
        Af = [[Fraction(x) for x in row] for row in A]
        Ainv = _inverse_fraction(Af)
        r = self.rank

        def const(c):
            return sk.const(c)

        AG = [[_sum_elems(sk, [const(Af[i][t]) * self.gluing[t][j] for t in range(r)]) for j in range(r)] for i in range(r)]
        G2 = [[_sum_elems(sk, [AG[i][t] * const(Ainv[t][j]) for t in range(r)]) for j in range(r)] for i in range(r)]
        return BPairTriple(sk, r, tuple(tuple(row) for row in G2), self.codomain_top)

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "k": list(self.skeleton.k),
            "polar_bound": list(self.skeleton.m),
            "gluing": [[{",".join(map(str, e)): str(c) for e, c in sorted(g.terms.items())} for g in row] for row in self.gluing],
        }

    @classmethod
    def from_json(cls, field_ring: CoeffRing, data: dict) -> "BPairTriple":
        sk = DeRhamSkeleton(field_ring, tuple(data["k"]), tuple(data["polar_bound"]))
        rows = []
        for row in data["gluing"]:
            rows.append(tuple(sk.element({tuple(int(x) for x in key.split(",")): Fraction(v) for key, v in g.items()}) for g in row))
        return cls(sk, int(data["rank"]), tuple(rows))


def _sum_elems(sk: DeRhamSkeleton, elems: Iterable[SkeletonElement]) -> SkeletonElement:
    out = sk.element()
    for x in elems:
        out = out + x
    return out


def _inverse_fraction(A):
    n = len(A)
    M = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(A)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return [row[n:] for row in M]


def gluing_invertible(G, sk: DeRhamSkeleton) -> bool:
    """A matrix over the localized truncation is invertible when its determinant has a unit leading monomial.

    Leading means the lowest total degree part; in a truncated Laurent ring
    the determinant is a unit exactly when that part is a single monomial.
    """
    if len(G) == 0:
        return True
    det = _det_terms(G, sk)
    if not det:
        return False
    low = min(sum(e) for e in det)
    leading = [e for e in det if sum(e) == low]
    return len(leading) == 1


def _det_terms(G, sk: DeRhamSkeleton) -> dict:
    """Determinant as an exponent -> coefficient map.

    Powers at or above the truncation order vanish; negative powers are kept
    even below the polar window, since products of polar entries may leave it.
    """
    r = len(G)
    if r == 1:
        return dict(G[0][0].terms)
    out: dict = {}
    for j in range(r):
        minor = [row[:j] + row[j + 1 :] for row in G[1:]]
        sign = 1 if j % 2 == 0 else -1
        sub = _det_terms(minor, sk)
        for e1, c1 in G[0][j].terms.items():
            for e2, c2 in sub.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                if any(x >= k for x, k in zip(e, sk.k)):
                    continue
                out[e] = out.get(e, 0) + sign * c1 * c2
    return {e: c for e, c in out.items() if c}


@dataclass(frozen=True)
class GlueDims:
    h0: int
    h1: int
    source_dim: int
    target_dim: int

    def as_tuple(self) -> tuple[int, int]:
        return (self.h0, self.h1)


def glue_matrix(T: BPairTriple) -> tuple[list[list[Fraction]], int, int]:
    """Matrix of ``(x, y) -> x - g y`` from ``P_m^r ⊕ S_k^r`` to the localized truncation ``L^r``."""
    sk = T.skeleton
    r = T.rank
    target = sk.localized_basis(T.codomain_top)
    tpos = {e: i for i, e in enumerate(target)}
    P = sk.polar_basis()
    S = sk.skeleton_basis()
    rows = r * len(target)
    cols = []
    for j in range(r):
        for e in P:
            col = [Fraction(0)] * rows
            col[j * len(target) + tpos[e]] = Fraction(1)
            cols.append(col)
    for j in range(r):
        for e in S:
            col = [Fraction(0)] * rows
            mono = sk.element({e: 1})
            for i in range(r):
                prod = _mul_untruncated(T.gluing[i][j], mono)
                for f, c in prod.items():
                    if f not in tpos:
                        raise PolarOverflow(f"g * y leaves the localized window at {f}")
                    col[i * len(target) + tpos[f]] -= c
            cols.append(col)
    matrix = [[cols[c][rr] for c in range(len(cols))] for rr in range(rows)]
    return matrix, len(cols), rows


def _mul_untruncated(g: SkeletonElement, mono: SkeletonElement) -> dict:
    out: dict = {}
    for e1, c1 in g.terms.items():
        for e2, c2 in mono.terms.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c}


def glue_complex(T: BPairTriple) -> GlueDims:
    """Kernel and cokernel dimensions of ``(x, y) -> x - g y`` over K.

    The target window is widened by the largest exponent appearing in ``g``
    so that ``g S_k`` fits without truncation.
    """
    if T.rank == 0:
        return GlueDims(0, 0, 0, 0)
    matrix, ncols, nrows = glue_matrix(T)
    rk = rank_of(matrix)
    return GlueDims(ncols - rk, nrows - rk, ncols, nrows)


@dataclass
class SequenceReport:
    k: tuple[int, ...]
    m: tuple[int, ...]
    injective: bool
    is_complex: bool
    middle_exact: bool
    surjective: bool

    @property
    def exact(self) -> bool:
        return self.injective and self.is_complex and self.middle_exact and self.surjective

    def to_json(self) -> dict:
        return {
            "k": list(self.k),
            "m": list(self.m),
            "injective": self.injective,
            "complex": self.is_complex,
            "middle_exact": self.middle_exact,
            "surjective": self.surjective,
            "exact": self.exact,
        }


def fundamental_sequence_check(k, m, nvars: int = 1, field_ring: CoeffRing | None = None, drop_constants: bool = False) -> SequenceReport:
    """Check ``0 -> K -> P_m ⊕ S_k -> L -> 0`` by linear algebra on monomial bases.

    ``drop_constants`` removes the constant monomial from ``P_m`` (a
    deliberately broken variant).
    """
    kk = (k,) * nvars if isinstance(k, int) else tuple(k)
    mm = (m,) * nvars if isinstance(m, int) else tuple(m)
    if any(x < 1 for x in kk + mm):
        raise ValueError("k and m must be >= 1")
    sk = DeRhamSkeleton(field_ring or CoeffRing(2, 8), kk, mm)
    L = sk.localized_basis()
    lpos = {e: i for i, e in enumerate(L)}
    P = sk.polar_basis(with_constants=not drop_constants)
    S = sk.skeleton_basis()
    zero = (0,) * sk.nvars
    # first map K -> P ⊕ S, c -> (c, c) projected to the available summands
    first = [Fraction(1 if e == zero else 0) for e in P] + [Fraction(1 if e == zero else 0) for e in S]
    # second map P ⊕ S -> L, (x, y) -> x - y
    second = [[Fraction(0)] * (len(P) + len(S)) for _ in L]
    for j, e in enumerate(P):
        second[lpos[e]][j] = Fraction(1)
    for j, e in enumerate(S):
        second[lpos[e]][len(P) + j] = Fraction(-1)
    injective = any(first)
    composite = [sum(row[j] * first[j] for j in range(len(first))) for row in second]
    is_complex = not any(composite)
    rk2 = rank_of(second)
    ker_dim = len(P) + len(S) - rk2
    image_dim = 1 if injective else 0
    middle_exact = is_complex and ker_dim == image_dim
    surjective = rk2 == len(L)
    return SequenceReport(kk, mm, injective, is_complex, middle_exact, surjective)


def bpair_from_rank1(M: PhiGammaModule, k: int = 3, m: int = 2) -> BPairTriple:
    """Rank-1 triple whose gluing ``prod_a t_a^{v_p(c_a)}`` records the valuations of the Frobenius constants."""
    if M.rank != 1 or not M.is_constant():
        raise ValueError("bpair_from_rank1 needs a constant rank-1 module")
    n = M.nvars
    zero = (0,) * n
    weights = []
    for a in range(n):
        c = M.phi[a][0][0].coeff(zero)
        weights.append(c.valuation())
    sk = DeRhamSkeleton.uniform(M.ring, n, k, m)
    if any(w < -m for w in weights):
        raise PolarOverflow("negative weight exceeds the polar window")
    g = sk.element({tuple(weights): Fraction(1)})
    return BPairTriple(sk, 1, ((g,),))


def weight_of(T: BPairTriple) -> int:
    """Total degree of the (monomial) determinant of the gluing matrix."""
    det = _det_terms(T.gluing, T.skeleton) if T.rank else {(0,) * T.skeleton.nvars: 1}
    low = min(sum(e) for e in det)
    return low
