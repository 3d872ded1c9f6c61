"""Finite free (phi_I, Gamma_I)-modules, Frobenius interval covers and gluing.

Matrices act on coordinate columns: ``phi_M(e_j) = sum_i Phi[i][j] e_i``, so
``phi_M(e x) = e Phi phi(x)`` and ``gamma_M(e x) = e G gamma(x)``.  Entries
are :class:`~robbakit.laurent.LaurentElement` bodies in T-coordinates over
the module's interval and decoration.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .laurent import LaurentElement, Window, change_coords, gauss_valuation, ring_const
from .operators import GammaElement, gamma_laurent, phi_laurent
from .padic import INF, CoeffElement, CoeffRing, PadicScalar, is_prime
from .robba import DecorationError, IntervalVector, PerfectionTag, RobbaElement, radius_cap

Matrix = tuple[tuple[LaurentElement, ...], ...]


class ModuleInvariantError(ValueError):
    """A module's matrices violate invertibility or commutation at precision."""

    def __init__(self, invariant: str, detail: str = ""):
        super().__init__(f"{invariant}: {detail}" if detail else invariant)
        self.invariant = invariant


def default_chi(p: int) -> int:
    """Least integer generating Z_p^x topologically.

    For odd p this is the least primitive root modulo p^2; for p = 2 it is 5,
    which generates 1 + 4Z_2 only.
    """
    if p == 2:
        return 5
    q = p * p
    order = p * (p - 1)
    factors = _prime_factors(order)
    for g in range(2, q):
        if g % p and all(pow(g, order // f, q) != 1 for f in factors):
            return g
    raise AssertionError("no primitive root found")  # pragma: no cover


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# matrices of Laurent elements


def const_element(ring: CoeffRing, nvars: int, value: Any) -> LaurentElement:
    return LaurentElement.from_terms(ring, {(0,) * nvars: value}, nvars)


def identity_matrix(ring: CoeffRing, nvars: int, d: int) -> Matrix:
    return tuple(tuple(const_element(ring, nvars, 1 if i == j else 0) for j in range(d)) for i in range(d))


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    n, m, k = len(A), len(B), len(B[0]) if B else 0
    out = []
    for i in range(n):
        row = []
        for j in range(k):
            acc = A[i][0] * B[0][j]
            for t in range(1, m):
                acc = acc + A[i][t] * B[t][j]
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def mat_map(A: Matrix, fn) -> Matrix:
    return tuple(tuple(fn(x) for x in row) for row in A)


def mat_agree(A: Matrix, B: Matrix) -> bool:
    return all(a.agrees_with(b) and b.agrees_with(a) for ra, rb in zip(A, B) for a, b in zip(ra, rb))


def mat_det(A: Matrix) -> LaurentElement:
    d = len(A)
    if d == 1:
        return A[0][0]
    total = None
    for j in range(d):
        minor = tuple(tuple(A[i][c] for c in range(d) if c != j) for i in range(1, d))
        term = A[0][j] * mat_det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


def difference_valuation(A: Matrix, B: Matrix) -> float:
    """Minimal coefficient valuation of A - B on the common certified region."""
    best = INF
    for ra, rb in zip(A, B):
        for a, b in zip(ra, rb):
            diff = a - b
            for e, c in diff.terms.items():
                if diff.is_certified(e):
                    best = min(best, c.valuation())
    return best


def is_laurent_unit(f: LaurentElement, interval: IntervalVector) -> bool:
    """Sufficient unit test: one monomial strictly dominates at every corner."""
    if f.coords != "T":
        f = change_coords(f, "T")
    if not f.is_exact() or f.is_zero():
        return False
    winner = None
    for corner in interval.corners():
        vals = sorted((c.valuation() + sum(x * t for x, t in zip(e, corner)), e) for e, c in f.terms.items())
        if len(vals) > 1 and vals[0][0] == vals[1][0]:
            return False
        if winner is None:
            winner = vals[0][1]
        elif winner != vals[0][1]:
            return False
    return True


def _as_matrix(rows, ring: CoeffRing, nvars: int) -> Matrix:
    out = []
    for row in rows:
        r = []
        for x in row:
            if isinstance(x, RobbaElement):
                x = x.body
            if not isinstance(x, LaurentElement):
                x = const_element(ring, nvars, x)
            if x.coords != "T":
                x = change_coords(x, "T")
            r.append(x)
        out.append(tuple(r))
    return tuple(out)


# ---------------------------------------------------------------------------
# modules


@dataclass(frozen=True, eq=False)
class PhiGammaModule:
    ring: CoeffRing
    nvars: int
    rank: int
    interval: IntervalVector
    phi: tuple[Matrix, ...]
    gamma: tuple[Matrix, ...]
    chi: tuple[Any, ...] = ()
    tag: PerfectionTag | None = None
    validate: bool = True

    def __post_init__(self) -> None:
        if not self.chi:
            object.__setattr__(self, "chi", (default_chi(self.p),) * self.nvars)
        if self.tag is None:
            object.__setattr__(self, "tag", PerfectionTag.plain(self.nvars))
        object.__setattr__(self, "phi", tuple(_as_matrix(m, self.ring, self.nvars) for m in self.phi))
        object.__setattr__(self, "gamma", tuple(_as_matrix(m, self.ring, self.nvars) for m in self.gamma))
        if len(self.phi) != self.nvars or len(self.gamma) != self.nvars or len(self.chi) != self.nvars:
            raise ValueError("one Frobenius matrix, Gamma matrix and chi per variable")
        for m in self.phi + self.gamma:
            if len(m) != self.rank or any(len(r) != self.rank for r in m):
                raise ValueError("matrices must be rank x rank")
        if self.interval.nvars != self.nvars:
            raise ValueError("interval has the wrong number of variables")
        if self.validate:
            failures = self.check_invariants()
            if failures:
                raise ModuleInvariantError(failures[0][0], failures[0][1])

    @property
    def p(self) -> int:
        return self.ring.p

    def gamma_element(self, alpha: int) -> GammaElement:
        return GammaElement(alpha, self.chi[alpha])

    def phi_entries(self, alpha: int, M: Matrix) -> Matrix:
        return mat_map(M, lambda x: phi_laurent(x, alpha))

    def gamma_entries(self, alpha: int, M: Matrix) -> Matrix:
        g = self.gamma_element(alpha)
        return mat_map(M, lambda x: gamma_laurent(x, g))

    def check_invariants(self) -> list[tuple[str, str]]:
        """List of (invariant, detail) pairs that fail at precision."""
        out = []
        if self.rank == 0:
            return out
        for a in range(self.nvars):
            for name, M in (("Phi", self.phi[a]), ("G", self.gamma[a])):
                if not is_laurent_unit(mat_det(M), self.interval):
                    out.append(("invertibility", f"det {name}_{a} is not a unit on {self.interval}"))
        for a in range(self.nvars):
            for b in range(self.nvars):
                if a < b:
                    lhs = mat_mul(self.phi[a], self.phi_entries(a, self.phi[b]))
                    rhs = mat_mul(self.phi[b], self.phi_entries(b, self.phi[a]))
                    if not mat_agree(lhs, rhs):
                        out.append(("frobenius commutation", f"alpha={a}, beta={b}"))
                lhs = mat_mul(self.gamma[b], self.gamma_entries(b, self.phi[a]))
                rhs = mat_mul(self.phi[a], self.phi_entries(a, self.gamma[b]))
                if not mat_agree(lhs, rhs):
                    out.append(("mixed commutation", f"phi_{a} with gamma_{b}"))
                if a < b:
                    lhs = mat_mul(self.gamma[a], self.gamma_entries(a, self.gamma[b]))
                    rhs = mat_mul(self.gamma[b], self.gamma_entries(b, self.gamma[a]))
                    if not mat_agree(lhs, rhs):
                        out.append(("gamma commutation", f"alpha={a}, beta={b}"))
        return out

    def is_constant(self) -> bool:
        zero = (0,) * self.nvars
        return all(set(x.terms) <= {zero} for m in self.phi + self.gamma for row in m for x in row)

    def with_interval(self, interval: IntervalVector) -> "PhiGammaModule":
        return PhiGammaModule(self.ring, self.nvars, self.rank, interval, self.phi, self.gamma, self.chi, self.tag, validate=False)

    def constant_entries(self, which: str, alpha: int) -> list[list[Any]]:
        mats = self.phi if which == "phi" else self.gamma
        zero = (0,) * self.nvars
        return [[x.coeff(zero) for x in row] for row in mats[alpha]]

    def to_json(self) -> dict:
        def mat_json(M):
            return [[x.to_json() for x in row] for row in M]

        return {
            "version": 1,
            "prime": self.p,
            "precision": self.ring.N,
            "I": self.nvars,
            "rank": self.rank,
            "interval": self.interval.to_json(),
            "decoration": self.tag.to_json(),
            "coeff_ring": self.ring.to_json(),
            "chi": [c if isinstance(c, int) else c.to_json() for c in self.chi],
            "phi_matrices": [mat_json(m) for m in self.phi],
            "gamma_matrices": [mat_json(m) for m in self.gamma],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any], prime: int | None = None, precision: int | None = None, validate: bool = True) -> "PhiGammaModule":
        """Read a module spec.

        Matrix entries may be a rational string, a ``{"e1,e2": coeff}`` term
        map, or a serialized Laurent element; extension coefficients are
        lists of rational strings.  ``prime``/``precision`` fill in missing
        fields.
        """
        p = int(data.get("prime", prime or 0))
        if not is_prime(p):
            raise ValueError("module spec needs a prime")
        N = int(data.get("precision", precision or 16))
        n = int(data["I"])
        ring = CoeffRing.from_json(p, N, data.get("coeff_ring"))
        interval = IntervalVector.from_json(data["interval"])
        deco = data.get("decoration")
        if isinstance(deco, Mapping):
            tag = PerfectionTag.from_json(deco)
        elif deco is None:
            tag = PerfectionTag.plain(n)
        else:
            kinds = (deco,) * n if isinstance(deco, str) else tuple(deco)
            tag = PerfectionTag(kinds, (0,) * n, Fraction(0))

        def coeff(c):
            if isinstance(c, list):
                return ring.element([Fraction(x) for x in c])
            return ring_const(ring, Fraction(c))

        def entry(x):
            if isinstance(x, Mapping) and "terms" in x:
                return LaurentElement.from_json(ring, x)
            if isinstance(x, Mapping):
                terms = {tuple(int(v) for v in str(k).split(",")): coeff(c) for k, c in x.items()}
                return LaurentElement.from_terms(ring, terms, n)
            return const_element(ring, n, coeff(x))

        def matrices(key):
            return tuple(tuple(tuple(entry(x) for x in row) for row in m) for m in data[key])

        chi = tuple(c if isinstance(c, int) else PadicScalar.from_json(p, c) for c in data.get("chi", ())) or ()
        return cls(ring, n, int(data["rank"]), interval, matrices("phi_matrices"), matrices("gamma_matrices"), chi, tag, validate)


def zero_module(ring: CoeffRing, nvars: int, interval: IntervalVector) -> PhiGammaModule:
    return PhiGammaModule(ring, nvars, 0, interval, ((),) * nvars, ((),) * nvars)


def rank1_constructor(
    c: Sequence[Any],
    d: Sequence[Any],
    interval: IntervalVector,
    ring: CoeffRing,
    chi: Sequence[Any] | None = None,
) -> PhiGammaModule:
    """Rank-1 module with constant Phi_alpha = c_alpha and G_alpha = d_alpha."""
    n = interval.nvars
    if len(c) != n or len(d) != n:
        raise ValueError("one c and one d per variable")
    vals = [ring_const(ring, x) for x in list(c) + list(d)]
    for v in vals:
        unit = (not v.is_zero()) if isinstance(v, PadicScalar) else v.is_unit()
        if not unit:
            raise ValueError("rank-1 data must be units of the coefficient ring")
    phi = tuple(((const_element(ring, n, v),),) for v in vals[:n])
    gamma = tuple(((const_element(ring, n, v),),) for v in vals[n:])
    return PhiGammaModule(ring, n, 1, interval, phi, gamma, tuple(chi) if chi else ())


def base_change_decoration(M: PhiGammaModule, target: PerfectionTag) -> PhiGammaModule:
    """Forward base change to a refined decoration; entries stay at level 0."""
    if not M.tag.refines(target):
        raise DecorationError("decorations only move upward (plain -> breve -> tilde)")
    if any(target.levels):
        raise DecorationError("base change re-tags at tower level 0")
    out = PhiGammaModule(M.ring, M.nvars, M.rank, M.interval, M.phi, M.gamma, M.chi, target, validate=False)
    failures = out.check_invariants()
    if failures:
        raise ModuleInvariantError(*failures[0])
    return out


def enforce_small_radius(interval: IntervalVector, p: int, override: bool = False) -> None:
    cap = radius_cap(p)
    if any(r > cap for r in interval.r):
        if not override:
            raise ValueError(f"radii must be <= 1/(p-1) = {cap}")
        warnings.warn("radius above 1/(p-1): phi no longer scales Gauss norms by p", stacklevel=2)


# ---------------------------------------------------------------------------
# Frobenius covers


def frobenius_cover(r0, depth, p: int) -> list[IntervalVector]:
    """All products of blocks [r0/p^k, r0/p^(k-1)], 1 <= k <= depth_alpha."""
    if not isinstance(r0, (list, tuple)):
        r0 = (r0,)
    r0 = tuple(Fraction(x) for x in r0)
    if not isinstance(depth, (list, tuple)):
        depth = (depth,) * len(r0)
    if len(depth) != len(r0) or any(k < 1 for k in depth):
        raise ValueError("depth must be >= 1 per variable")
    out = []
    for ks in itertools.product(*[range(1, k + 1) for k in depth]):
        s = tuple(r / Fraction(p) ** k for r, k in zip(r0, ks))
        r = tuple(r / Fraction(p) ** (k - 1) for r, k in zip(r0, ks))
        out.append(IntervalVector(s, r))
    return out


def cover_multiplicity(cover: Sequence[IntervalVector], point: Sequence[Fraction]) -> int:
    return sum(1 for iv in cover if iv.contains_radius(point))


# ---------------------------------------------------------------------------
# sheaf families


Block = tuple[int, ...]


@dataclass
class SheafFamily:
    """Modules on blocks of a Frobenius cover with transitions on overlaps.

    ``transitions[(u, v)]`` (u <= v componentwise, overlapping blocks) maps
    coordinates on block v to coordinates on block u.  Constructors store
    adjacent steps and the canonical-path composites for the other pairs.
    """

    ring: CoeffRing
    nvars: int
    rank: int
    blocks: dict[Block, IntervalVector]
    modules: dict[Block, PhiGammaModule | None]
    transitions: dict[tuple[Block, Block], Matrix]

    def overlapping(self, u: Block, v: Block) -> bool:
        return self.blocks[u].intersect(self.blocks[v]) is not None

    def transition(self, u: Block, v: Block) -> Matrix:
        """Composite transition along the canonical monotone path u -> v (u <= v)."""
        if (u, v) in self.transitions:
            return self.transitions[(u, v)]
        if u == v:
            return identity_matrix(self.ring, self.nvars, self.rank)
        a = next(i for i in range(self.nvars) if u[i] < v[i])
        step = u[:a] + (u[a] + 1,) + u[a + 1 :]
        return mat_mul(self.transitions[(u, step)], self.transition(step, v))


def _block_intervals(r0, depth, p: int) -> dict[Block, IntervalVector]:
    cover = frobenius_cover(r0, depth, p)
    keys = list(itertools.product(*[range(1, k + 1) for k in (depth if isinstance(depth, (list, tuple)) else (depth,) * len(cover[0].s))]))
    return dict(zip(keys, cover))


def _adjacent_pairs(blocks: Iterable[Block]) -> list[tuple[Block, Block]]:
    bset = set(blocks)
    out = []
    for u in sorted(bset):
        for a in range(len(u)):
            v = u[:a] + (u[a] + 1,) + u[a + 1 :]
            if v in bset:
                out.append((u, v))
    return out


def _complete_transitions(F: SheafFamily) -> SheafFamily:
    """Store the canonical-path composite for every overlapping ordered pair."""
    for u in sorted(F.blocks):
        for v in sorted(F.blocks):
            if u != v and all(a <= b for a, b in zip(u, v)) and F.overlapping(u, v):
                F.transitions[(u, v)] = F.transition(u, v)
    return F


def identity_family(ring: CoeffRing, nvars: int, rank: int, r0, depth) -> SheafFamily:
    if not isinstance(r0, (list, tuple)):
        r0 = (r0,) * nvars
    blocks = _block_intervals(r0, depth, ring.p)
    ident = identity_matrix(ring, nvars, rank)
    trans = {pair: ident for pair in _adjacent_pairs(blocks)}
    return _complete_transitions(SheafFamily(ring, nvars, rank, blocks, {b: None for b in blocks}, trans))


def spread_module(M: PhiGammaModule, depth) -> SheafFamily:
    """Spread M from the base block [r0/p, r0] to the depth-k Frobenius cover.

    The module on block k is the phi^(k-1)-pullback; the transition from
    block k + e_alpha to block k is phi^(k-1)(Phi_alpha).
    """
    p = M.p
    r0 = M.interval.r
    blocks = _block_intervals(r0, depth, p)
    base = tuple(1 for _ in range(M.nvars))
    if M.interval.s != blocks[base].s:
        raise ValueError("module must live on the base block [r0/p, r0]")

    def pulled(A: Matrix, k: Block) -> Matrix:
        for a, n in enumerate(k):
            for _ in range(n - 1):
                A = mat_map(A, lambda x, a=a: phi_laurent(x, a))
        return A

    modules = {}
    for k, iv in blocks.items():
        modules[k] = PhiGammaModule(
            M.ring, M.nvars, M.rank, iv,
            tuple(pulled(m, k) for m in M.phi), tuple(pulled(m, k) for m in M.gamma),
            M.chi, M.tag, validate=False,
        )
    trans = {}
    for u, v in _adjacent_pairs(blocks):
        a = next(i for i in range(M.nvars) if u[i] < v[i])
        T = pulled(M.phi[a], u)
        if not is_laurent_unit(mat_det(T), blocks[u].intersect(blocks[v])):
            raise ModuleInvariantError("invertibility", f"transition {u}->{v} is not invertible")
        trans[(u, v)] = T
    return _complete_transitions(SheafFamily(M.ring, M.nvars, M.rank, blocks, modules, trans))


@dataclass
class CocycleReport:
    passed: bool
    precision: int
    min_defect_valuation: float
    failures: list[tuple[Block, Block, Block]]
    checked: int


def check_cocycle(F: SheafFamily, precision: int | None = None) -> CocycleReport:
    """Verify g(u, w) = g(u, v) g(v, w) on all monotone triples with common overlap."""
    N = F.ring.N if precision is None else precision
    blocks = sorted(F.blocks)
    failures = []
    worst = INF
    checked = 0
    for u in blocks:
        for v in blocks:
            if v == u or not all(a <= b for a, b in zip(u, v)):
                continue
            for w in blocks:
                if w == v or not all(a <= b for a, b in zip(v, w)):
                    continue
                common = F.blocks[u].intersect(F.blocks[v])
                common = common.intersect(F.blocks[w]) if common else None
                if common is None:
                    continue
                direct = _direct_transition(F, u, w)
                composed = mat_mul(_direct_transition(F, u, v), _direct_transition(F, v, w))
                defect = difference_valuation(direct, composed)
                worst = min(worst, defect)
                checked += 1
                if defect < N:
                    failures.append((u, v, w))
    return CocycleReport(not failures, N, worst, failures, checked)


def _direct_transition(F: SheafFamily, u: Block, v: Block) -> Matrix:
    if (u, v) in F.transitions or u == v:
        return F.transition(u, v)
    raise ValueError(f"no transition stored for {u} -> {v}")


@dataclass
class GlueResult:
    rank: int  # generator count of the projection onto the base block's constants
    generators: np.ndarray
    free: bool
    projective: bool
    defects: dict[Block, int]  # block -> length of the cokernel of the projection
    window: int
    precision: int


def glue_global(F: SheafFamily, window: int = 1, precision: int = 6) -> GlueResult:
    """Compatible sections over the family, solved in truncated linear algebra over Z/p^N.

    Unknowns are, per block, Laurent vectors with exponents in
    [-window, window]^I; constraints are x_u = g(u, v) x_v for adjacent
    blocks.  The result reports the generator count of the projection of
    the solution module onto the constant terms of the base block and
    whether the projection onto every block's constants is surjective.
    """
    check = check_cocycle(F, min(precision, F.ring.N))
    if not check.passed:
        raise ModuleInvariantError("cocycle", f"fails on {check.failures[:3]}")
    p, N = F.ring.p, precision
    q = p**N
    deg = F.ring.degree
    D = F.rank * deg
    blocks = sorted(F.blocks)
    if D == 0:
        return GlueResult(0, np.zeros((0, 0), dtype=np.int64), True, True, {b: 0 for b in blocks}, window, N)
    mono = list(itertools.product(range(-window, window + 1), repeat=F.nvars))
    mono_index = {e: i for i, e in enumerate(mono)}
    per_block = D * len(mono)
    offset = {b: i * per_block for i, b in enumerate(blocks)}
    ncols = per_block * len(blocks)

    rows: list[dict[int, int]] = []
    for u, v in _adjacent_pairs(blocks):
        g = _integral_blocks(F.transitions[(u, v)], F.ring, N)
        # x_u - g x_v = 0 coefficientwise
        eqs: dict[tuple, dict[int, int]] = {}
        for e in mono:
            for i in range(D):
                eqs.setdefault((i, e), {})[offset[u] + mono_index[e] * D + i] = 1
        for (i, j), poly in g.items():
            for shift, c in poly.items():
                for e in mono:
                    tgt = tuple(a + b for a, b in zip(e, shift))
                    key = (i, tgt)
                    col = offset[v] + mono_index[e] * D + j
                    row = eqs.setdefault(key, {})
                    row[col] = (row.get(col, 0) - c) % q
        rows.extend(eqs.values())
    A = np.zeros((len(rows), ncols), dtype=np.int64 if q < _kernels.INT64_MODULUS_LIMIT else object)
    for r, row in enumerate(rows):
        for c, val in row.items():
            A[r, c] = val % q
    K = _kernels.kernel_basis(A, p, N) if rows else _kernels.as_matrix(np.eye(ncols, dtype=np.int64), q)
    zero = mono_index[(0,) * F.nvars]
    defects = {}
    gens = None
    for b in blocks:
        sel = [offset[b] + zero * D + i for i in range(D)]
        proj = K[sel, :] if K.size else np.zeros((D, 0), dtype=np.int64)
        length = _kernels.span_length(proj, p, N) if proj.size else 0
        defects[b] = D * N - length
        if b == blocks[0]:
            gens = proj
    base_vals = _kernels.pivot_valuations(gens, p, N) if gens.size else []
    count = len(base_vals)
    projective = all(v == 0 for v in defects.values())
    free = projective and count == D
    return GlueResult(count // deg if count % deg == 0 else count, gens, free, projective, defects, window, N)


def _integral_blocks(M: Matrix, ring: CoeffRing, N: int) -> dict[tuple[int, int], dict[tuple, int]]:
    """Regular representation of M over Z/p^N: (row, col) -> {exponent: residue}."""
    p = ring.p
    q = p**N
    deg = ring.degree
    out: dict[tuple[int, int], dict[tuple, int]] = {}
    for i, row in enumerate(M):
        for j, x in enumerate(row):
            for e, c in x.terms.items():
                if isinstance(c, PadicScalar):
                    blocks = [[c.to_fraction()]]
                else:
                    blocks = c.multiplication_matrix()
                for a in range(deg):
                    for b in range(deg):
                        val = Fraction(blocks[a][b])
                        if val.denominator % p == 0:
                            raise ValueError("transition matrices must be integral for the gluing solve")
                        res = val.numerator * pow(val.denominator, -1, q) % q
                        if res:
                            cell = out.setdefault((i * deg + a, j * deg + b), {})
                            cell[e] = (cell.get(e, 0) + res) % q
    return out
